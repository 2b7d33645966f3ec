"""String algorithms behind label cleaning.

Edit distance and similarity ratio drive duplicate detection; connective
splitting ("and" / "or") and word tokenization drive label decomposition and
hierarchy candidate search.

The Levenshtein kernel comes from the compiled extension when it was built,
otherwise from the pure-Python twin. Set ``LABELKIT_PURE_PYTHON=1`` to force
the fallback (used by the benchmark and for debugging).
"""

from __future__ import annotations

import enum
import os
import re
from dataclasses import dataclass
from typing import TYPE_CHECKING

if os.environ.get("LABELKIT_PURE_PYTHON"):
    from . import _editdist_py as _kernel
else:
    try:
        from . import _editdist as _kernel  # type: ignore[no-redef]
    except ImportError:
        from . import _editdist_py as _kernel  # type: ignore[no-redef]

if TYPE_CHECKING:
    from .catalog import LabelCatalog

EDITDIST_BACKEND: str = _kernel.BACKEND

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)


class Connective(enum.Enum):
    AND = "and"
    OR = "or"


class SplitClass(enum.Enum):
    ALL_RESOLVED = "all_resolved"
    NONE_RESOLVED = "none_resolved"
    PARTIAL = "partial"


@dataclass(frozen=True)
class ConnectiveSplit:
    """Decomposition of one label name at a connective word.

    ``resolution`` holds, per token, the id of the same-category label whose
    canonical form equals the token, or None when no such label exists.
    """

    source: int
    connective: Connective
    tokens: tuple[str, ...]
    resolution: tuple[int | None, ...]

    def __post_init__(self) -> None:
        if len(self.tokens) < 2:
            raise ValueError("a connective split needs at least two tokens")
        if len(self.tokens) != len(self.resolution):
            raise ValueError("tokens and resolution must align")

    @property
    def split_class(self) -> SplitClass:
        resolved = sum(1 for r in self.resolution if r is not None)
        if resolved == len(self.resolution):
            return SplitClass.ALL_RESOLVED
        if resolved == 0:
            return SplitClass.NONE_RESOLVED
        return SplitClass.PARTIAL

    @property
    def resolved_ids(self) -> tuple[int, ...]:
        return tuple(r for r in self.resolution if r is not None)


def edit_distance(a: str, b: str) -> int:
    """Standard Levenshtein distance over Unicode code points.

    Insertions, deletions and substitutions all cost 1.
    """
    return _kernel.distance(a, b)


def edit_distance_capped(a: str, b: str, cap: int) -> int:
    """Like :func:`edit_distance`, but returns ``cap + 1`` once the distance
    provably exceeds ``cap``. Used by pairwise scans to skip hopeless pairs."""
    return _kernel.distance_capped(a, b, cap)


def similarity_ratio(a: str, b: str) -> float:
    """Edit-distance similarity in [0, 1].

    Defined as ``1 - d(a, b) / max(len(a), len(b))``; two empty strings score
    1.0. Symmetric, and exactly 1.0 iff the strings are equal.
    """
    if a == b:
        return 1.0
    longest = max(len(a), len(b))
    return 1.0 - _kernel.distance(a, b) / longest


def split_connective(name: str, connective: Connective) -> list[str]:
    """Split a label name at a standalone connective word.

    Splits on the whitespace-delimited word (" and " / " or "), so "sand"
    never splits. Commas act as additional separators, but only when the
    connective word itself occurs in the name (serial constructions like
    "a, b and c"); otherwise commas are left alone. Returns the name as a
    single token when no connective occurs.
    """
    word = connective.value
    pattern = re.compile(rf"\s+{word}\s+")
    if not pattern.search(name):
        return [name]
    tokens: list[str] = []
    for part in pattern.split(name):
        for token in part.split(","):
            token = token.strip()
            if token:
                tokens.append(token)
    return tokens


def resolve_split(
    tokens: list[str],
    category: str,
    catalog: LabelCatalog,
    *,
    source_id: int,
    connective: Connective,
) -> ConnectiveSplit:
    """Look each split token up as a same-category label.

    Tokens are matched by canonical form within ``category``.
    """
    if len(tokens) < 2:
        raise ValueError("resolve_split needs at least two tokens")
    resolution = []
    for token in tokens:
        record = catalog.find(category, token)
        resolution.append(None if record is None else record.id)
    return ConnectiveSplit(
        source=source_id,
        connective=connective,
        tokens=tuple(tokens),
        resolution=tuple(resolution),
    )


def tokenize(name: str) -> list[str]:
    """Lowercase word tokens, split on whitespace and punctuation, in order."""
    return _WORD_RE.findall(name.lower())
