#!/usr/bin/env python3
"""Compare the compiled edit-distance kernel against the pure-Python twin.

Both kernels run the same workloads: a raw distance batch over random word
pairs and the capped all-pairs scan the duplicate finder performs. Reports
the best wall time of several repeats and the speedup. If the compiled
extension is not built, the script still runs and reports the Python kernel
alone.

Usage: python3 benchmarks/bench_editdist.py [--labels N] [--repeats K]
"""

from __future__ import annotations

import argparse
import random
import time

from labelkit import _editdist_py

try:
    from labelkit import _editdist
except ImportError:
    _editdist = None

WORDS = [
    "silver", "gilt", "bronze", "copper", "iron", "gold", "brass", "wool",
    "silk", "linen", "cotton", "velvet", "paper", "chalk", "ink", "oil",
    "canvas", "panel", "walnut", "oak", "ivory", "glass", "enamel", "pearl",
    "black", "white", "red", "blue", "green", "brown", "watercolor",
    "graphite", "charcoal", "tempera", "gouache", "parchment", "vellum",
]


def make_labels(rng: random.Random, count: int) -> list[str]:
    """Label-like strings: one to four words, occasional hyphen or typo."""
    labels = []
    for _ in range(count):
        words = [rng.choice(WORDS) for _ in range(rng.randrange(1, 5))]
        name = " ".join(words)
        roll = rng.random()
        if roll < 0.15 and " " in name:
            head, _, tail = name.partition(" ")
            name = f"{head}-{tail}"
        elif roll < 0.25:
            pos = rng.randrange(len(name))
            name = name[:pos] + rng.choice("aeiou") + name[pos:]
        labels.append(name)
    return labels


def raw_batch(kernel, pairs) -> int:
    total = 0
    for a, b in pairs:
        total += kernel.distance(a, b)
    return total


def capped_scan(kernel, labels, threshold: float) -> int:
    """The duplicate-finder inner loop: all pairs, cap from the longer name."""
    hits = 0
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            longest = max(len(a), len(b))
            if longest == 0:
                continue
            cap = min(longest, int((1.0 - threshold) * longest) + 1)
            d = kernel.distance_capped(a, b, cap)
            if d <= cap and 1.0 - d / longest >= threshold:
                hits += 1
    return hits


def best_time(fn, repeats: int) -> tuple[float, object]:
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--labels", type=int, default=600, help="vocabulary size")
    parser.add_argument("--pairs", type=int, default=20000, help="raw batch size")
    parser.add_argument("--repeats", type=int, default=3, help="timing repeats")
    parser.add_argument("--threshold", type=float, default=0.9)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    labels = make_labels(rng, args.labels)
    pairs = [(rng.choice(labels), rng.choice(labels)) for _ in range(args.pairs)]

    kernels = [("python", _editdist_py)]
    if _editdist is not None:
        kernels.append(("cython", _editdist))
    else:
        print("compiled extension not available; timing the Python kernel only")

    workloads = [
        (f"raw distance x{args.pairs}", lambda k: raw_batch(k, pairs)),
        (
            f"capped all-pairs scan, {args.labels} labels",
            lambda k: capped_scan(k, labels, args.threshold),
        ),
    ]

    print(f"{'workload':<42} {'backend':<8} {'seconds':>10} {'speedup':>9}")
    for title, work in workloads:
        baseline = None
        results = {}
        for name, kernel in kernels:
            seconds, value = best_time(lambda: work(kernel), args.repeats)
            results[name] = value
            if baseline is None:
                baseline = seconds
                speedup = ""
            else:
                speedup = f"{baseline / seconds:8.1f}x"
            print(f"{title:<42} {name:<8} {seconds:>10.4f} {speedup:>9}")
        if len(results) == 2 and results["python"] != results["cython"]:
            print(f"  MISMATCH: kernels disagree on {title!r}")
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
