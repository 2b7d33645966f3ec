"""Multi-label scoring: flat F-beta reports, or-aware and graph-aware
variants, run-to-run deviation, and threshold sweeps.

Counts for the flat reports are plain integers and every float reduction
runs over samples in ascending id order through ``math.fsum``, so a report
is byte-identical across repeated runs and thread counts.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import pstdev
from typing import IO, Callable, Iterable, Sequence

from .catalog import AnnotationSet, LabelCatalog
from .cleanse import OrGroup
from .errors import EvalError, ParseError
from .relgraph import RelationGraph

NAN = float("nan")

DEFAULT_BETA = 2.0
DEFAULT_DECISION_THRESHOLD = 0.1


# ---------------------------------------------------------------------------
# Scores and thresholding


class ScoreSet:
    """Per-sample, per-label prediction scores in [0, 1]."""

    def __init__(
        self,
        samples: Iterable[tuple[str, dict[int, float]]],
        known_labels: Iterable[int],
    ):
        self.known_labels = frozenset(known_labels)
        self._samples: list[tuple[str, dict[int, float]]] = []
        self._index: dict[str, dict[int, float]] = {}
        for sample_id, scores in samples:
            if sample_id in self._index:
                raise ValueError(f"duplicate sample id {sample_id!r}")
            for label_id, score in scores.items():
                if label_id not in self.known_labels:
                    raise ValueError(
                        f"sample {sample_id!r} scores unknown label id {label_id}"
                    )
                if not 0.0 <= score <= 1.0:
                    raise ValueError(
                        f"sample {sample_id!r} label {label_id} score {score!r} "
                        "outside [0, 1]"
                    )
            held = dict(scores)
            self._samples.append((sample_id, held))
            self._index[sample_id] = held

    def __len__(self) -> int:
        return len(self._samples)

    def __iter__(self):
        return iter(self._samples)

    def sample_ids(self) -> list[str]:
        return [sid for sid, _ in self._samples]

    def scores_for(self, sample_id: str) -> dict[int, float]:
        return self._index[sample_id]

    def __contains__(self, sample_id: str) -> bool:
        return sample_id in self._index


def parse_scores(stream: IO[str], catalog: LabelCatalog) -> ScoreSet:
    """Read a score file with header id,attribute_id,score. Rows for one
    sample need not be contiguous; a repeated (sample, label) cell is a hard
    error because silently keeping either value would hide a producer bug."""
    source = getattr(stream, "name", "<scores>")
    reader = csv.DictReader(stream)
    required = {"id", "attribute_id", "score"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise ParseError(
            "expected header with columns id, attribute_id, score", source=source
        )
    known = catalog.ids()
    order: list[str] = []
    acc: dict[str, dict[int, float]] = {}
    for lineno, row in enumerate(reader, start=2):
        sid = row["id"]
        try:
            label_id = int(row["attribute_id"])
        except (TypeError, ValueError):
            raise ParseError(
                f"bad attribute id {row['attribute_id']!r}", source=source, line=lineno
            ) from None
        if label_id not in known:
            raise ParseError(
                f"unknown label id {label_id}", source=source, line=lineno
            )
        try:
            score = float(row["score"])
        except (TypeError, ValueError):
            raise ParseError(
                f"bad score {row['score']!r}", source=source, line=lineno
            ) from None
        if not 0.0 <= score <= 1.0 or math.isnan(score):
            raise ParseError(
                f"score {score!r} outside [0, 1]", source=source, line=lineno
            )
        if sid not in acc:
            order.append(sid)
            acc[sid] = {}
        elif label_id in acc[sid]:
            raise ParseError(
                f"duplicate score for sample {sid!r}, label {label_id}",
                source=source,
                line=lineno,
            )
        acc[sid][label_id] = score
    return ScoreSet(((sid, acc[sid]) for sid in order), known)


def threshold(
    scores: ScoreSet,
    decision_threshold: float,
    sample_ids: Iterable[str] | None = None,
) -> AnnotationSet:
    """Binarize scores into predictions; a label is on when its score is at
    least the threshold (inclusive, so threshold 0.0 predicts every scored
    label)."""
    if not 0.0 <= decision_threshold <= 1.0:
        raise ValueError(f"decision threshold {decision_threshold!r} outside [0, 1]")
    if sample_ids is None:
        wanted = scores.sample_ids()
    else:
        wanted = list(sample_ids)
        missing = [sid for sid in wanted if sid not in scores]
        if missing:
            raise EvalError(
                f"score set has no rows for {len(missing)} requested samples "
                f"(first: {missing[0]!r})"
            )
    samples = (
        (
            sid,
            frozenset(
                label
                for label, score in scores.scores_for(sid).items()
                if score >= decision_threshold
            ),
        )
        for sid in wanted
    )
    return AnnotationSet(samples, scores.known_labels)


def enforce_exclusion(
    predictions: AnnotationSet,
    scores: ScoreSet | None,
    groups: Sequence[frozenset[int]],
) -> AnnotationSet:
    """Keep at most one label per mutual-exclusion group per sample: the one
    with the highest score, ties to the lowest id. Without scores every
    candidate ties. Applying the result again changes nothing."""
    seen: set[int] = set()
    for group in groups:
        if not group:
            raise EvalError("empty exclusion group")
        clash = seen & group
        if clash:
            raise EvalError(f"label {min(clash)} appears in two exclusion groups")
        seen |= group

    def prune(sample_id: str, labels: frozenset[int]) -> frozenset[int]:
        row_scores = scores.scores_for(sample_id) if scores and sample_id in scores else {}
        dropped: set[int] = set()
        for group in groups:
            hits = labels & group
            if len(hits) < 2:
                continue
            keep = max(hits, key=lambda i: (row_scores.get(i, 0.0), -i))
            dropped |= hits - {keep}
        return labels - dropped if dropped else labels

    return AnnotationSet(
        ((sid, prune(sid, labels)) for sid, labels in predictions),
        predictions.known_labels,
    )


# ---------------------------------------------------------------------------
# Reports


@dataclass
class MetricReport:
    """One evaluation's scores and the counts behind them.

    ``micro_f`` and friends are NaN when undefined (no true or predicted
    instance anywhere). Graph-based reports have no per-class decomposition,
    so their per-class fields stay empty and ``macro_f``/``micro_accuracy``
    are None.
    """

    kind: str
    beta: float
    micro_f: float
    macro_f: float | None
    micro_accuracy: float | None
    totals: dict[str, float]
    n_samples: int
    n_classes: int
    per_class_f: dict[int, float] = field(default_factory=dict)
    per_class_counts: dict[int, tuple[int, int, int]] = field(default_factory=dict)
    classes_nan: int = 0
    classes_zero: int = 0
    classes_positive: int = 0
    fp_mode: str | None = None

    def as_dict(self) -> dict:
        doc = {
            "kind": self.kind,
            "beta": self.beta,
            "micro_f": self.micro_f,
            "macro_f": self.macro_f,
            "micro_accuracy": self.micro_accuracy,
            "totals": dict(self.totals),
            "n_samples": self.n_samples,
            "n_classes": self.n_classes,
            "classes_nan": self.classes_nan,
            "classes_zero": self.classes_zero,
            "classes_positive": self.classes_positive,
            "per_class": {
                str(c): {
                    "f": self.per_class_f.get(c),
                    "tp": self.per_class_counts[c][0],
                    "fp": self.per_class_counts[c][1],
                    "fn": self.per_class_counts[c][2],
                }
                for c in sorted(self.per_class_counts)
            },
        }
        if self.fp_mode is not None:
            doc["fp_mode"] = self.fp_mode
        return doc


def fbeta(tp: float, fp: float, fn: float, beta: float) -> float:
    """F-beta from counts; NaN when nothing was true or predicted."""
    b2 = beta * beta
    denom = (1.0 + b2) * tp + b2 * fn + fp
    if denom == 0.0:
        return NAN
    return (1.0 + b2) * tp / denom


def _aligned_sample_ids(
    predictions: AnnotationSet,
    truth: AnnotationSet,
    sample_filter: Callable[[str], bool] | None,
) -> list[str]:
    truth_ids = truth.sample_ids()
    pred_set = set(predictions.sample_ids())
    truth_set = set(truth_ids)
    if pred_set != truth_set:
        missing = len(truth_set - pred_set)
        extra = len(pred_set - truth_set)
        raise EvalError(
            "prediction and truth sample ids differ "
            f"({missing} missing from predictions, {extra} extra)"
        )
    ids = sorted(truth_ids)
    if sample_filter is not None:
        ids = [sid for sid in ids if sample_filter(sid)]
    return ids


def _class_universe(
    predictions: AnnotationSet,
    truth: AnnotationSet,
    scope: Iterable[int] | None,
) -> list[int]:
    if scope is not None:
        classes = frozenset(scope)
        known = predictions.known_labels | truth.known_labels
        unknown = classes - known
        if unknown:
            raise EvalError(f"scope references unknown label ids {sorted(unknown)}")
        return sorted(classes)
    return sorted(predictions.known_labels | truth.known_labels)


def _finish_flat_report(
    kind: str,
    beta: float,
    classes: list[int],
    tp: dict[int, int],
    fp: dict[int, int],
    fn: dict[int, int],
    n_samples: int,
) -> MetricReport:
    per_class_f: dict[int, float] = {}
    per_class_counts: dict[int, tuple[int, int, int]] = {}
    defined: list[float] = []
    n_nan = n_zero = n_pos = 0
    for c in classes:
        f = fbeta(tp[c], fp[c], fn[c], beta)
        per_class_f[c] = f
        per_class_counts[c] = (tp[c], fp[c], fn[c])
        if math.isnan(f):
            n_nan += 1
        else:
            defined.append(f)
            if f > 0.0:
                n_pos += 1
            else:
                n_zero += 1
    macro = math.fsum(defined) / len(defined) if defined else NAN
    total_tp = sum(tp.values())
    total_fp = sum(fp.values())
    total_fn = sum(fn.values())
    micro = fbeta(total_tp, total_fp, total_fn, beta)
    cells = n_samples * len(classes)
    accuracy = (cells - total_fp - total_fn) / cells if cells else NAN
    return MetricReport(
        kind=kind,
        beta=beta,
        micro_f=micro,
        macro_f=macro,
        micro_accuracy=accuracy,
        totals={"tp": total_tp, "fp": total_fp, "fn": total_fn},
        n_samples=n_samples,
        n_classes=len(classes),
        per_class_f=per_class_f,
        per_class_counts=per_class_counts,
        classes_nan=n_nan,
        classes_zero=n_zero,
        classes_positive=n_pos,
    )


def fbeta_report(
    predictions: AnnotationSet,
    truth: AnnotationSet,
    beta: float = DEFAULT_BETA,
    scope: Iterable[int] | None = None,
    sample_filter: Callable[[str], bool] | None = None,
) -> MetricReport:
    """Flat per-class F-beta over exactly matching sample ids.

    ``scope`` restricts the class universe (labels outside it are ignored on
    both sides); ``sample_filter`` keeps only sample ids it accepts.
    """
    ids = _aligned_sample_ids(predictions, truth, sample_filter)
    classes = _class_universe(predictions, truth, scope)
    class_set = frozenset(classes)
    tp = {c: 0 for c in classes}
    fp = {c: 0 for c in classes}
    fn = {c: 0 for c in classes}
    for sid in ids:
        t = truth.labels_for(sid) & class_set
        p = predictions.labels_for(sid) & class_set
        for c in t & p:
            tp[c] += 1
        for c in p - t:
            fp[c] += 1
        for c in t - p:
            fn[c] += 1
    return _finish_flat_report("flat", beta, classes, tp, fp, fn, len(ids))


def or_aware_report(
    predictions: AnnotationSet,
    truth: AnnotationSet,
    or_groups: Sequence[OrGroup],
    beta: float = DEFAULT_BETA,
    scope: Iterable[int] | None = None,
    sample_filter: Callable[[str], bool] | None = None,
) -> MetricReport:
    """Flat report, except a true disjunctive label is satisfied by
    predicting the label itself or any of its alternatives. False positives
    are unchanged: predicting a disjunction nothing supports still costs."""
    ids = _aligned_sample_ids(predictions, truth, sample_filter)
    classes = _class_universe(predictions, truth, scope)
    class_set = frozenset(classes)
    satisfiers = {g.source: frozenset(g.members) | {g.source} for g in or_groups}
    tp = {c: 0 for c in classes}
    fp = {c: 0 for c in classes}
    fn = {c: 0 for c in classes}
    for sid in ids:
        t = truth.labels_for(sid) & class_set
        p_raw = predictions.labels_for(sid)
        p = p_raw & class_set
        for c in t:
            accepted = satisfiers.get(c)
            hit = c in p if accepted is None else bool(p_raw & accepted)
            if hit:
                tp[c] += 1
            else:
                fn[c] += 1
        for c in p - t:
            fp[c] += 1
    return _finish_flat_report("or_aware", beta, classes, tp, fp, fn, len(ids))


def deviation_report(reports: Sequence[MetricReport]) -> dict:
    """Run-to-run spread of repeated evaluations (population standard
    deviation, so two runs scoring 0 and 1 deviate by exactly 0.5).

    Per-class spread is only meaningful for classes defined in every run;
    classes undefined somewhere are counted, not averaged.
    """
    if len(reports) < 2:
        raise EvalError("deviation needs at least two runs")
    kinds = {r.kind for r in reports}
    if len(kinds) > 1:
        raise EvalError(f"cannot mix report kinds {sorted(kinds)}")

    def spread(values: list[float]) -> float | None:
        usable = [v for v in values if v is not None and not math.isnan(v)]
        if len(usable) < 2:
            return None
        return pstdev(usable)

    micro_std = spread([r.micro_f for r in reports])
    macro_std = spread([r.macro_f for r in reports])

    per_class_std: dict[int, float] = {}
    skipped = 0
    shared = set(reports[0].per_class_f)
    for r in reports[1:]:
        shared &= set(r.per_class_f)
    for c in sorted(shared):
        values = [r.per_class_f[c] for r in reports]
        if any(math.isnan(v) for v in values):
            skipped += 1
            continue
        per_class_std[c] = pstdev(values)
    mean_class_std = (
        math.fsum(per_class_std.values()) / len(per_class_std) if per_class_std else None
    )
    return {
        "runs": len(reports),
        "kind": reports[0].kind,
        "micro_f_std": micro_std,
        "macro_f_std": macro_std,
        "mean_class_std": mean_class_std,
        "classes_compared": len(per_class_std),
        "classes_skipped": skipped,
        "per_class_std": {str(c): v for c, v in sorted(per_class_std.items())},
    }


# ---------------------------------------------------------------------------
# Graph-aware report


def _graph_sample_counts(
    t: frozenset[int],
    p: frozenset[int],
    graph: RelationGraph,
    fp_mode: str,
) -> tuple[float, float, float]:
    tp = 0.0
    for label in sorted(t):
        best = 0.0
        for pred in p:
            credit = 1.0 / (graph.distance(label, pred) + 1.0)
            if credit > best:
                best = credit
                if best == 1.0:
                    break
        tp += best
    fn = len(t) - tp
    matched = 0.0
    for pred in sorted(p):
        best = 0.0
        for label in t:
            credit = 1.0 / (graph.distance(pred, label) + 1.0)
            if credit > best:
                best = credit
                if best == 1.0:
                    break
        matched += best
    fp = matched if fp_mode == "literal" else len(p) - matched
    return tp, fp, fn


def graph_fbeta_report(
    predictions: AnnotationSet,
    truth: AnnotationSet,
    graph: RelationGraph,
    beta: float = DEFAULT_BETA,
    fp_mode: str = "literal",
    scope: Iterable[int] | None = None,
    sample_filter: Callable[[str], bool] | None = None,
    threads: int = 1,
) -> MetricReport:
    """F-beta with graph partial credit: a true label earns 1/(d+1) for the
    nearest prediction, so an adjacent guess is worth half a hit.

    ``fp_mode`` picks how predictions are charged: "literal" charges each
    prediction its best credit toward any true label (a historical reading
    under which even a perfect prediction pays), "complement" charges the
    credit shortfall, which reduces to the flat report on an edgeless graph.

    Per-sample tuples are reduced in ascending sample-id order with
    ``math.fsum``, so the totals do not depend on ``threads``.
    """
    if fp_mode not in ("literal", "complement"):
        raise EvalError(f"unknown fp_mode {fp_mode!r}")
    if threads < 1:
        raise EvalError(f"threads must be positive, got {threads}")
    ids = _aligned_sample_ids(predictions, truth, sample_filter)
    classes = _class_universe(predictions, truth, scope)
    class_set = frozenset(classes)

    def one(sid: str) -> tuple[float, float, float]:
        t = truth.labels_for(sid) & class_set
        p = predictions.labels_for(sid) & class_set
        return _graph_sample_counts(t, p, graph, fp_mode)

    if threads == 1 or len(ids) < 2:
        rows = [one(sid) for sid in ids]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, ids, chunksize=64))

    total_tp = math.fsum(r[0] for r in rows)
    total_fp = math.fsum(r[1] for r in rows)
    total_fn = math.fsum(r[2] for r in rows)
    micro = fbeta(total_tp, total_fp, total_fn, beta)
    return MetricReport(
        kind="graph",
        beta=beta,
        micro_f=micro,
        macro_f=None,
        micro_accuracy=None,
        totals={"tp": total_tp, "fp": total_fp, "fn": total_fn},
        n_samples=len(ids),
        n_classes=len(classes),
        fp_mode=fp_mode,
    )


# ---------------------------------------------------------------------------
# Threshold sweeps


def default_threshold_grid(
    n: int = 64, lo: float = 0.0025, hi: float = 0.5
) -> list[float]:
    """Log-spaced decision thresholds from lo to hi inclusive."""
    if n < 2 or not 0.0 < lo < hi <= 1.0:
        raise ValueError("need n >= 2 and 0 < lo < hi <= 1")
    ratio = hi / lo
    grid = [lo * ratio ** (i / (n - 1)) for i in range(n - 1)]
    grid.append(hi)
    return grid


def sweep(
    scores: ScoreSet,
    truth: AnnotationSet,
    thresholds: Sequence[float] | None = None,
    graph: RelationGraph | None = None,
    beta: float = DEFAULT_BETA,
    fp_mode: str = "literal",
    scope: Iterable[int] | None = None,
    threads: int = 1,
) -> list[dict]:
    """Evaluate a score set at each decision threshold.

    Each row carries the flat micro/macro scores and, when a graph is given,
    the graph micro score, so metric families for consistency comparison can
    be read straight off the sweep.
    """
    grid = sorted(thresholds) if thresholds is not None else default_threshold_grid()
    truth_ids = truth.sample_ids()
    rows: list[dict] = []
    for t in grid:
        predictions = threshold(scores, t, truth_ids)
        flat = fbeta_report(predictions, truth, beta=beta, scope=scope)
        row = {
            "threshold": t,
            "flat_micro_f": flat.micro_f,
            "flat_macro_f": flat.macro_f,
            "micro_accuracy": flat.micro_accuracy,
        }
        if graph is not None:
            g = graph_fbeta_report(
                predictions,
                truth,
                graph,
                beta=beta,
                fp_mode=fp_mode,
                scope=scope,
                threads=threads,
            )
            row["graph_micro_f"] = g.micro_f
        rows.append(row)
    return rows


def write_sweep(rows: Sequence[dict], stream: IO[str]) -> None:
    if not rows:
        raise EvalError("empty sweep")
    fields = list(rows[0].keys())
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([repr(row[f]) if isinstance(row[f], float) else row[f] for f in fields])
