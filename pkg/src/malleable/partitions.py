"""Set partitions of the X-support, encoded as restricted-growth strings.

A partition U = f(X) is a deterministic quotient of X. Its canonical form
is the restricted-growth string (RGS) read along the support order: the
first symbol gets cell 0 and every later symbol gets either an existing
cell or the next unused index.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator
from dataclasses import dataclass

from .errors import ResourceLimitError, ValidationError

EXACT_SEARCH_LIMIT = 12


def _is_rgs(rgs) -> bool:
    top = -1
    for v in rgs:
        if v < 0 or v > top + 1:
            return False
        top = max(top, v)
    return True


@dataclass(frozen=True, order=True)
class Partition:
    rgs: tuple[int, ...]
    support: tuple[int, ...]

    def __post_init__(self):
        rgs = tuple(int(v) for v in self.rgs)
        support = tuple(int(v) for v in self.support)
        object.__setattr__(self, "rgs", rgs)
        object.__setattr__(self, "support", support)
        if len(rgs) != len(support):
            raise ValidationError(f"RGS length {len(rgs)} does not match support size {len(support)}")
        if len(set(support)) != len(support):
            raise ValidationError("support indices must be distinct")
        if not _is_rgs(rgs):
            raise ValidationError(f"{rgs} is not a restricted-growth string")

    @classmethod
    def from_labels(cls, support: Iterable[int], labels: Iterable) -> "Partition":
        """Canonicalize an arbitrary labeling (one label per support symbol)."""
        seen: dict = {}
        rgs = []
        for lab in labels:
            if lab not in seen:
                seen[lab] = len(seen)
            rgs.append(seen[lab])
        return cls(tuple(rgs), tuple(support))

    @classmethod
    def from_cells(cls, support: Iterable[int], cells: Iterable[Iterable[int]]) -> "Partition":
        support = tuple(support)
        owner: dict[int, int] = {}
        for c, cell in enumerate(cells):
            cell = list(cell)
            if not cell:
                raise ValidationError("partition cells must be nonempty")
            for x in cell:
                if x in owner:
                    raise ValidationError(f"symbol {x} appears in two cells")
                owner[x] = c
        if set(owner) != set(support):
            raise ValidationError("cells do not cover the support exactly")
        return cls.from_labels(support, [owner[x] for x in support])

    @classmethod
    def from_canonical(cls, support: Iterable[int], text: str) -> "Partition":
        try:
            rgs = tuple(int(t) for t in text.split("-")) if text else ()
        except ValueError:
            raise ValidationError(f"malformed canonical form {text!r}") from None
        return cls(rgs, tuple(support))

    @classmethod
    def trivial(cls, support: Iterable[int]) -> "Partition":
        support = tuple(support)
        return cls((0,) * len(support), support)

    @classmethod
    def identity(cls, support: Iterable[int]) -> "Partition":
        support = tuple(support)
        return cls(tuple(range(len(support))), support)

    @property
    def num_cells(self) -> int:
        return max(self.rgs) + 1 if self.rgs else 0

    @property
    def cells(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.num_cells)]
        for x, c in zip(self.support, self.rgs):
            out[c].append(x)
        return tuple(tuple(c) for c in out)

    @property
    def canonical_form(self) -> str:
        return "-".join(str(v) for v in self.rgs)

    def label_map(self) -> dict[int, int]:
        return dict(zip(self.support, self.rgs))

    def cell_of(self, x: int) -> int:
        return self.rgs[self.support.index(x)]

    def merge(self, a: int, b: int) -> "Partition":
        """Partition obtained by merging cells ``a`` and ``b``."""
        if a == b:
            return self
        lo, hi = min(a, b), max(a, b)
        labels = [lo if c == hi else c for c in self.rgs]
        return Partition.from_labels(self.support, labels)

    def refines(self, other: "Partition") -> bool:
        """True if every cell of ``self`` lies inside a cell of ``other``."""
        if set(self.support) != set(other.support):
            return False
        theirs = other.label_map()
        image: dict[int, int] = {}
        for x, c in zip(self.support, self.rgs):
            if image.setdefault(c, theirs[x]) != theirs[x]:
                return False
        return True

    def __str__(self):
        return "{" + ", ".join("{" + ",".join(map(str, c)) + "}" for c in self.cells) + "}"


def enumerate_rgs(n: int, max_cells: int | None = None) -> Iterator[tuple[int, ...]]:
    """All restricted-growth strings of length ``n`` in lexicographic order."""
    if n == 0:
        yield ()
        return
    cap = n if max_cells is None else max(1, min(max_cells, n))
    a = [0] * n
    # b[i] = max(a[:i]) + 1, the largest value a[i] may take
    b = [1] * n
    while True:
        yield tuple(a)
        i = n - 1
        while i > 0 and (a[i] >= b[i] or a[i] + 1 >= cap):
            i -= 1
        if i == 0:
            return
        a[i] += 1
        nxt = max(b[i], a[i] + 1)
        for k in range(i + 1, n):
            a[k] = 0
            b[k] = nxt


def check_exact_limit(size: int, limit: int = EXACT_SEARCH_LIMIT):
    if size > limit:
        raise ResourceLimitError(
            f"support size {size} exceeds the exact-search limit {limit}; "
            "use heuristic mode (heuristic_curve / --heuristic) or raise the limit")


def enumerate_partitions(support_size: int, max_cells: int | None = None,
                         limit: int = EXACT_SEARCH_LIMIT,
                         support: Iterable[int] | None = None) -> Iterator[Partition]:
    """Every set partition of a ``support_size``-element support, once each."""
    check_exact_limit(support_size, limit)
    support = tuple(range(support_size)) if support is None else tuple(support)
    if len(support) != support_size:
        raise ValidationError("support does not match support_size")
    for rgs in enumerate_rgs(support_size, max_cells):
        yield Partition(rgs, support)
