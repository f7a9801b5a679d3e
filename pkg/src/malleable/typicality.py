"""Strong typicality: exact membership tests, typical-set enumeration and the
size/probability checks that the code construction relies on.

Membership compares integer counts against rational probabilities, so there
is no floating-point tolerance in deciding whether a sequence is typical.
Set sizes and probabilities are computed by summing over type classes, which
is exact and covers every sequence without listing them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .dist import (
    JointDistribution, conditional_entropy_y_given_x, entropy, joint_entropy, marginal_x,
    marginal_y,
)
from .errors import ResourceLimitError, ValidationError
from .partitions import Partition

ENUMERATION_LIMIT = 2 ** 24
MAX_DENOMINATOR = 10 ** 12


def to_fraction(p: float) -> Fraction:
    """Nearest rational with denominator <= 1e12 (recovers 0.11 -> 11/100, 1/3 -> 1/3)."""
    return Fraction(p).limit_denominator(MAX_DENOMINATOR)


@dataclass(frozen=True)
class TypicalSpec:
    n: int
    delta: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"blocklength must be a positive integer, got {self.n!r}")
        # delta = 0 is exact-type membership
        if not self.delta >= 0:
            raise ValidationError(f"delta must be nonnegative, got {self.delta!r}")


class Criterion:
    """Exact test  sum_a |N_a / n - p_a| <= delta  on integer count vectors."""

    def __init__(self, p, delta):
        fr = [to_fraction(float(v)) for v in np.asarray(p, dtype=float).ravel()]
        dl = delta if isinstance(delta, Fraction) else to_fraction(float(delta))
        self.size = len(fr)
        self.den = math.lcm(*(f.denominator for f in fr), dl.denominator)
        self.num = [f.numerator * (self.den // f.denominator) for f in fr]
        self.delta_num = dl.numerator * (self.den // dl.denominator)
        self.delta = dl

    def distance_scaled(self, counts, n: int) -> int:
        """n * den * L1 distance, as an integer."""
        return sum(abs(c * self.den - n * q) for c, q in zip(counts, self.num))

    def accepts(self, counts, n: int) -> bool:
        return self.distance_scaled(counts, n) <= n * self.delta_num

    def scaled(self, factor) -> "Criterion":
        out = Criterion.__new__(Criterion)
        out.size, out.den, out.num = self.size, self.den, self.num
        out.delta = self.delta * factor
        out.den = math.lcm(self.den, out.delta.denominator)
        out.num = [q * (out.den // self.den) for q in self.num]
        out.delta_num = out.delta.numerator * (out.den // out.delta.denominator)
        return out


def _counts(seq, k: int) -> tuple[int, ...]:
    arr = np.asarray(seq, dtype=np.int64).ravel()
    if arr.size and (arr.min() < 0 or arr.max() >= k):
        raise ValidationError(f"sequence has symbols outside an alphabet of size {k}")
    return tuple(int(c) for c in np.bincount(arr, minlength=k))


def is_strongly_typical(seq, p, spec: TypicalSpec) -> bool:
    seq = list(seq)
    if len(seq) != spec.n:
        raise ValidationError(f"sequence length {len(seq)} differs from n = {spec.n}")
    crit = Criterion(p, spec.delta)
    return crit.accepts(_counts(seq, crit.size), spec.n)


def joint_counts(xs, ys, kx: int, ky: int) -> tuple[int, ...]:
    xs = np.asarray(xs, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    return _counts(xs * ky + ys, kx * ky)


def is_jointly_typical(pair, d: JointDistribution, spec: TypicalSpec) -> bool:
    xs, ys = pair
    if len(xs) != spec.n or len(ys) != spec.n:
        raise ValidationError("pair lengths must equal n")
    kx, ky = d.shape
    return Criterion(d.pxy, spec.delta).accepts(joint_counts(xs, ys, kx, ky), spec.n)


def compositions(n: int, k: int):
    """All k-tuples of nonnegative integers summing to n, in lexicographic order."""
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in compositions(n - first, k - 1):
            yield (first,) + rest


def multinomial(counts) -> int:
    out, total = 1, 0
    for c in counts:
        total += c
        out *= math.comb(total, c)
    return out


def num_types(n: int, k: int) -> int:
    return math.comb(n + k - 1, k - 1)


@dataclass(frozen=True)
class TypicalSet:
    n: int
    delta: float
    alphabet_size: int
    types: tuple[tuple[int, ...], ...]
    size: int
    probability: float
    log_base: float
    sequences: frozenset | None = None

    @property
    def log_size(self) -> float:
        return math.log(self.size, self.log_base) if self.size else -math.inf

    @property
    def exponent(self) -> float:
        """log-size per letter."""
        return self.log_size / self.n


def _type_prob(counts, p) -> float:
    logp = 0.0
    for c, q in zip(counts, p):
        if c:
            if q <= 0:
                return 0.0
            logp += c * math.log(q)
    return multinomial(counts) * math.exp(logp)


def _sequences_of_type(counts):
    """All sequences with the given symbol counts, lexicographic order."""
    n = sum(counts)
    counts = list(counts)
    out = []
    seq = []

    def rec():
        if len(seq) == n:
            out.append(tuple(seq))
            return
        for a, c in enumerate(counts):
            if c:
                counts[a] -= 1
                seq.append(a)
                rec()
                seq.pop()
                counts[a] += 1

    rec()
    return out


def enumerate_typical(source, spec: TypicalSpec, limit: int = ENUMERATION_LIMIT,
                      materialize: bool = False, log_base: float | None = None) -> TypicalSet:
    """Exact strongly typical set of a pmf vector or of a joint distribution.

    Type classes are enumerated (their number is checked against ``limit``);
    with ``materialize`` the member sequences are listed too, which requires
    |alphabet|^n <= limit. For a joint distribution the members are pairs
    (xs, ys).
    """
    if isinstance(source, JointDistribution):
        p = source.pxy.ravel()
        base = source.log_base if log_base is None else log_base
        shape = source.shape
    else:
        p = np.asarray(source, dtype=float).ravel()
        base = 2.0 if log_base is None else log_base
        shape = None
    k = len(p)
    n = spec.n
    if num_types(n, k) > limit:
        raise ResourceLimitError(
            f"{num_types(n, k)} type classes exceed the enumeration limit {limit}; "
            "use Monte-Carlo estimation instead")
    if materialize and k ** n > limit:
        raise ResourceLimitError(
            f"{k}^{n} sequences exceed the enumeration limit {limit}; use Monte-Carlo estimation")
    crit = Criterion(p, spec.delta)
    types = tuple(t for t in compositions(n, k) if crit.accepts(t, n))
    size = sum(multinomial(t) for t in types)
    prob = sum(_type_prob(t, p) for t in types)
    seqs = None
    if materialize:
        members = []
        for t in types:
            for s in _sequences_of_type(t):
                if shape is None:
                    members.append(s)
                else:
                    members.append((tuple(a // shape[1] for a in s), tuple(a % shape[1] for a in s)))
        seqs = frozenset(members)
    return TypicalSet(n, spec.delta, k, types, size, min(prob, 1.0), base, seqs)


def typical_probability(p, spec: TypicalSpec) -> float:
    return enumerate_typical(p, spec).probability


def conditional_typical_set(x_seq, d: JointDistribution, spec: TypicalSpec,
                            limit: int = ENUMERATION_LIMIT) -> frozenset:
    """{y in T_[Y]delta : (x, y) in T_[XY]delta}, listed exhaustively."""
    x_seq = tuple(int(v) for v in x_seq)
    kx, ky = d.shape
    if len(x_seq) != spec.n:
        raise ValidationError("x sequence length differs from n")
    if ky ** spec.n > limit:
        raise ResourceLimitError(f"{ky}^{spec.n} candidate sequences exceed the enumeration limit")
    crit_y = Criterion(marginal_y(d), spec.delta)
    crit_xy = Criterion(d.pxy, spec.delta)
    xs = np.array(x_seq)
    out = []
    for ys in itertools.product(range(ky), repeat=spec.n):
        if crit_y.accepts(_counts(ys, ky), spec.n) and \
                crit_xy.accepts(joint_counts(xs, ys, kx, ky), spec.n):
            out.append(ys)
    return frozenset(out)


def conditional_typical_size(x_counts, d: JointDistribution, spec: TypicalSpec) -> int:
    """|T_[Y|X]delta(x)| for any x with symbol counts ``x_counts``.

    The size depends on x only through its type, so this sums over joint
    count matrices whose row sums equal ``x_counts``.
    """
    kx, ky = d.shape
    crit_y = Criterion(marginal_y(d), spec.delta)
    crit_xy = Criterion(d.pxy, spec.delta)
    n = spec.n
    rows_choices = [list(compositions(c, ky)) for c in x_counts]
    total = 0
    for rows in itertools.product(*rows_choices):
        flat = tuple(v for r in rows for v in r)
        col = tuple(sum(r[y] for r in rows) for y in range(ky))
        if crit_y.accepts(col, n) and crit_xy.accepts(flat, n):
            total += math.prod(multinomial(r) for r in rows)
    return total


def slack(delta: float, alphabet_size: int) -> float:
    """Concrete slack delta * log2(|A| / delta) in bits."""
    if delta == 0:
        return 0.0
    return delta * math.log2(alphabet_size / delta)


def _slack_in(base: float, delta: float, alphabet_size: int) -> float:
    return slack(delta, alphabet_size) / math.log2(base)


@dataclass(frozen=True)
class BoundCheck:
    name: str
    passed: bool
    details: dict


def check_typical_size(p, spec: TypicalSpec, base: float = 2.0) -> BoundCheck:
    """|T_[X]delta| <= base^(n (H(X) + eta))."""
    p = np.asarray(p, dtype=float)
    ts = enumerate_typical(p, spec, log_base=base)
    h = entropy(p, base)
    eta = _slack_in(base, spec.delta, len(p))
    bound = spec.n * (h + eta)
    return BoundCheck("typical_size", ts.log_size <= bound + 1e-12, {
        "n": spec.n, "delta": spec.delta, "size": ts.size, "exponent": ts.exponent,
        "entropy": h, "eta": eta, "log_upper_bound": bound, "probability": ts.probability})


def check_joint_typical_set(d: JointDistribution, spec: TypicalSpec) -> BoundCheck:
    """Pr[T_[XY]delta] > 1 - delta and the two-sided size bound."""
    ts = enumerate_typical(d, spec)
    h = joint_entropy(d)
    lam = _slack_in(d.log_base, spec.delta, d.shape[0] * d.shape[1])
    lo = math.log(1 - spec.delta, d.log_base) + spec.n * (h - lam) if spec.delta < 1 else -math.inf
    hi = spec.n * (h + lam)
    prob_ok = ts.probability > 1 - spec.delta
    size_ok = lo - 1e-12 <= ts.log_size <= hi + 1e-12
    return BoundCheck("joint_typical_set", prob_ok and size_ok, {
        "n": spec.n, "delta": spec.delta, "probability": ts.probability,
        "probability_ok": prob_ok, "size": ts.size, "exponent": ts.exponent,
        "entropy": h, "lambda": lam, "log_lower_bound": lo, "log_upper_bound": hi,
        "size_ok": size_ok})


def check_conditional_sizes(d: JointDistribution, spec: TypicalSpec) -> BoundCheck:
    """Every nonempty T_[Y|X]delta(x) has size within base^(n (H(Y|X) +- nu))."""
    px = marginal_x(d)
    h = conditional_entropy_y_given_x(d)
    nu = _slack_in(d.log_base, spec.delta, d.shape[0] * d.shape[1])
    crit_x = Criterion(px, spec.delta)
    rows = []
    ok = True
    for t in compositions(spec.n, d.shape[0]):
        if not crit_x.accepts(t, spec.n):
            continue
        size = conditional_typical_size(t, d, spec)
        if size == 0:
            continue
        ls = math.log(size, d.log_base)
        good = spec.n * (h - nu) - 1e-12 <= ls <= spec.n * (h + nu) + 1e-12
        ok = ok and good
        rows.append({"x_type": list(t), "size": size, "exponent": ls / spec.n, "ok": good})
    return BoundCheck("conditional_sizes", ok and bool(rows), {
        "n": spec.n, "delta": spec.delta, "conditional_entropy": h, "nu": nu,
        "log_lower_bound": spec.n * (h - nu), "log_upper_bound": spec.n * (h + nu),
        "nonempty_sets": len(rows), "per_type": rows})


@dataclass(frozen=True)
class MarkovLemmaResult:
    estimate: float
    conditioning_events: int
    joint_events: int
    trials: int
    delta: float
    conclusion_delta: float

    @property
    def passed(self) -> bool:
        return self.estimate > 1 - self.delta


def trial_rng(seed: int, *index: int) -> np.random.Generator:
    """Independent PCG64 stream for (seed, index...), portable across platforms."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *index])))


def block_sampler(d: JointDistribution):
    """Return draw(n, rng) -> (xs, ys), an i.i.d. block of length n from d."""
    kx, ky = d.shape
    px = marginal_x(d)
    pyx = np.zeros_like(d.pxy)
    for x in d.support_x():
        pyx[x] = d.pxy[x] / px[x]
    cum = np.cumsum(pyx, axis=1)

    def draw(n, rng):
        xs = rng.choice(kx, size=n, p=px)
        r = rng.random(n)
        ys = np.minimum((r[:, None] > cum[xs]).sum(axis=1), ky - 1)
        return xs, ys

    return draw


def verify_markov_lemma(d: JointDistribution, partition: Partition, spec: TypicalSpec,
                        trials: int = 10000, seed: int = 0) -> MarkovLemmaResult:
    """Monte-Carlo estimate of Pr[(U^n, Y^n) typical | (U^n, X^n) typical].

    The chain is U = f(X) -- X -- Y. The conclusion uses the slack scaled by
    |Y|, matching the lemma's |alphabet| * delta. Trial t draws from its own
    stream seeded by (seed, t).
    """
    kx, ky = d.shape
    labels = partition.label_map()
    ku = partition.num_cells
    f = np.array([labels.get(x, 0) for x in range(kx)])
    px = marginal_x(d)
    pux = np.zeros((ku, kx))
    puy = np.zeros((ku, ky))
    for x in d.support_x():
        pux[f[x], x] += px[x]
        puy[f[x]] += d.pxy[x]
    crit_ux = Criterion(pux, spec.delta)
    crit_uy = Criterion(puy, spec.delta).scaled(ky)
    draw = block_sampler(d)
    n = spec.n
    cond = joint = 0
    for t in range(trials):
        xs, ys = draw(n, trial_rng(seed, t))
        us = f[xs]
        if crit_ux.accepts(joint_counts(us, xs, ku, kx), n):
            cond += 1
            if crit_uy.accepts(joint_counts(us, ys, ku, ky), n):
                joint += 1
    if cond == 0:
        raise ValidationError(
            "no trial satisfied the conditioning event; increase n, delta or the trial count")
    return MarkovLemmaResult(joint / cond, cond, joint, trials, spec.delta, spec.delta * ky)
