"""Finite joint distributions p(x, y) and their information functionals.

Every quantity is reported in units of the distribution's ``log_base``.
Setting ``log_base`` to the storage alphabet size gives rates in storage
symbols per source letter.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import UndefinedRowError, ValidationError

NORMALIZATION_TOL = 1e-9
ZERO_THRESHOLD = 1e-12


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple[str, ...]

    def __post_init__(self):
        symbols = tuple(str(s) for s in self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if len(symbols) < 1:
            raise ValidationError("alphabet must contain at least one symbol")
        if len(set(symbols)) != len(symbols):
            raise ValidationError(f"alphabet labels are not unique: {list(symbols)}")

    @property
    def size(self) -> int:
        return len(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def index(self, label) -> int:
        try:
            return self.symbols.index(str(label))
        except ValueError:
            raise ValidationError(f"unknown symbol {label!r}") from None

    @classmethod
    def of_size(cls, k: int) -> "Alphabet":
        return cls(tuple(str(i) for i in range(k)))


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Joint pmf ``pxy[x, y]`` over ``alphabet_x`` times ``alphabet_y``.

    Inputs are validated and never renormalized: entries must be
    nonnegative and sum to one within ``1e-9``.
    """

    alphabet_x: Alphabet
    alphabet_y: Alphabet
    pxy: np.ndarray
    log_base: float = 2.0

    def __post_init__(self):
        ax, ay = self.alphabet_x, self.alphabet_y
        if not isinstance(ax, Alphabet):
            ax = Alphabet(tuple(ax))
            object.__setattr__(self, "alphabet_x", ax)
        if not isinstance(ay, Alphabet):
            ay = Alphabet(tuple(ay))
            object.__setattr__(self, "alphabet_y", ay)
        try:
            arr = np.array(self.pxy, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"pxy is not a numeric matrix: {exc}") from None
        if arr.shape != (ax.size, ay.size):
            raise ValidationError(
                f"pxy has shape {arr.shape}, expected ({ax.size}, {ay.size})")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("pxy contains non-finite entries")
        if np.any(arr < 0):
            raise ValidationError("pxy has a negative entry")
        total = arr.sum()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"pxy sums to {float(total)!r}, not 1 within {NORMALIZATION_TOL}")
        base = float(self.log_base)
        if not base > 1.0:
            raise ValidationError(f"log_base must exceed 1, got {self.log_base!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "pxy", arr)
        object.__setattr__(self, "log_base", base)

    @classmethod
    def from_matrix(cls, pxy, log_base: float = 2.0, labels_x=None, labels_y=None):
        arr = np.asarray(pxy, dtype=float)
        if arr.ndim != 2:
            raise ValidationError("pxy must be a 2-d matrix")
        ax = Alphabet(tuple(labels_x)) if labels_x is not None else Alphabet.of_size(arr.shape[0])
        ay = Alphabet(tuple(labels_y)) if labels_y is not None else Alphabet.of_size(arr.shape[1])
        return cls(ax, ay, arr, log_base)

    def with_base(self, log_base: float) -> "JointDistribution":
        return JointDistribution(self.alphabet_x, self.alphabet_y, self.pxy, log_base)

    @property
    def shape(self):
        return self.pxy.shape

    def support_x(self) -> tuple[int, ...]:
        """Indices of X symbols with positive marginal probability."""
        px = marginal_x(self)
        return tuple(int(i) for i in np.flatnonzero(px > ZERO_THRESHOLD))

    def support_y(self) -> tuple[int, ...]:
        py = marginal_y(self)
        return tuple(int(i) for i in np.flatnonzero(py > ZERO_THRESHOLD))


@dataclass(frozen=True, eq=False)
class ConditionalKernel:
    """Rows p(y | x), defined only on the X-support."""

    support: tuple[int, ...]
    matrix: np.ndarray = field(repr=False)

    def row(self, x: int) -> np.ndarray:
        if x not in self.support:
            raise UndefinedRowError(f"p(Y | X={x}) is undefined: p_X({x}) = 0")
        return self.matrix[self.support.index(x)]

    @property
    def rows(self) -> dict[int, np.ndarray]:
        return {x: self.matrix[i] for i, x in enumerate(self.support)}


def _log(values, base):
    return np.log(values) / math.log(base)


def entropy(p, base: float = 2.0) -> float:
    """Shannon entropy with the convention 0 log 0 = 0."""
    p = np.asarray(p, dtype=float).ravel()
    nz = p[p > 0]
    if nz.size == 0:
        return 0.0
    h = -float(np.sum(nz * np.log(nz))) / math.log(base)
    return h if h > 0 else 0.0


def kl_divergence(p, q, base: float = math.e) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask]))) / math.log(base)


def marginal_x(d: JointDistribution) -> np.ndarray:
    return d.pxy.sum(axis=1)


def marginal_y(d: JointDistribution) -> np.ndarray:
    return d.pxy.sum(axis=0)


def conditional_y_given_x(d: JointDistribution) -> ConditionalKernel:
    support = d.support_x()
    px = marginal_x(d)
    rows = d.pxy[list(support)] / px[list(support), None]
    rows.setflags(write=False)
    return ConditionalKernel(support, rows)


def joint_entropy(d: JointDistribution) -> float:
    return entropy(d.pxy, d.log_base)


def entropy_x(d: JointDistribution) -> float:
    return entropy(marginal_x(d), d.log_base)


def entropy_y(d: JointDistribution) -> float:
    return entropy(marginal_y(d), d.log_base)


def conditional_entropy_y_given_x(d: JointDistribution) -> float:
    # Computed row by row rather than as H(X,Y) - H(X) so the chain rule is a real check.
    px = marginal_x(d)
    total = 0.0
    for x in d.support_x():
        total += px[x] * entropy(d.pxy[x] / px[x], d.log_base)
    return total


def conditional_entropy_x_given_y(d: JointDistribution) -> float:
    py = marginal_y(d)
    total = 0.0
    for y in d.support_y():
        total += py[y] * entropy(d.pxy[:, y] / py[y], d.log_base)
    return total


def mutual_information(d: JointDistribution) -> float:
    """I(X;Y) as the divergence between p(x,y) and p(x)p(y)."""
    prod = np.outer(marginal_x(d), marginal_y(d))
    return max(kl_divergence(d.pxy.ravel(), prod.ravel(), d.log_base), 0.0)


def _labels_of(d: JointDistribution, f) -> dict[int, object]:
    if hasattr(f, "label_map"):
        return dict(f.label_map())
    if isinstance(f, Mapping):
        return {int(k): v for k, v in f.items()}
    if isinstance(f, Sequence) or isinstance(f, np.ndarray):
        if len(f) != d.alphabet_x.size:
            raise ValidationError(
                f"labeling has {len(f)} entries for {d.alphabet_x.size} X symbols")
        return {i: v for i, v in enumerate(f) if v is not None}
    raise ValidationError(f"cannot interpret {type(f).__name__} as a function of X")


def pushforward(d: JointDistribution, f) -> dict[object, float]:
    """Distribution of f(X), keyed by label (insertion order follows X order)."""
    labels = _labels_of(d, f)
    px = marginal_x(d)
    out: dict[object, float] = {}
    for x in d.support_x():
        if x not in labels:
            raise ValidationError(
                f"function is undefined on symbol {d.alphabet_x.symbols[x]!r} "
                f"with probability {px[x]:.3g}")
        lab = labels[x]
        out[lab] = out.get(lab, 0.0) + float(px[x])
    return out


def entropy_of_function(d: JointDistribution, f) -> float:
    """H(f(X)) for a partition or labeling of the X-support."""
    return entropy(list(pushforward(d, f).values()), d.log_base)


def joint_with_function(d: JointDistribution, f) -> tuple[list[object], np.ndarray]:
    """The joint pmf of (f(X), Y) as (labels, matrix)."""
    labels = _labels_of(d, f)
    order: list[object] = []
    rows: dict[object, np.ndarray] = {}
    for x in d.support_x():
        if x not in labels:
            raise ValidationError(f"function is undefined on symbol {d.alphabet_x.symbols[x]!r}")
        lab = labels[x]
        if lab not in rows:
            order.append(lab)
            rows[lab] = np.zeros(d.alphabet_y.size)
        rows[lab] = rows[lab] + d.pxy[x]
    return order, np.array([rows[lab] for lab in order])


def conditional_entropy_y_given_function(d: JointDistribution, f) -> float:
    """H(Y | f(X))."""
    _, puy = joint_with_function(d, f)
    pu = puy.sum(axis=1)
    return sum(float(pu[i]) * entropy(puy[i] / pu[i], d.log_base)
               for i in range(len(pu)) if pu[i] > 0)
