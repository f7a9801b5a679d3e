"""Finite-blocklength codec with a shared bin-label prefix.

The X-encoder writes [prefix(u), index of x within the bin of u] where
u = f(x). The Y-encoder receives the prefix, recovers u, and writes the
index of y among the sequences typical together with u, so a common decoder
reads either codeword from its own symbols alone. Random codebooks are
replaced by lexicographic ranking over typical sets. Blocks that fall
outside the sets are stored raw behind an escape flag and counted as errors.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dist import (
    JointDistribution, conditional_entropy_y_given_function, conditional_entropy_y_given_x,
    entropy, entropy_x, marginal_x, marginal_y,
)
from .enumerative import (
    JointAccept, MarginalAccept, TypeFamily, digits_needed, from_digits, to_digits,
)
from .errors import DecodeError, ResourceLimitError, ValidationError
from .partitions import Partition
from .typicality import ENUMERATION_LIMIT, Criterion, block_sampler, trial_rng

ROUND_SLACK = 1e-9
# stream index for the baseline's bin assignment, kept apart from trial streams
_BINNING_STREAM = 2 ** 32 - 1


@dataclass(frozen=True, eq=False)
class CodecConfig:
    d: JointDistribution
    partition: Partition
    n: int
    delta: float
    storage_base: int = 2
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"blocklength must be a positive integer, got {self.n!r}")
        if not self.delta > 0:
            raise ValidationError(f"delta must be positive, got {self.delta!r}")
        if int(self.storage_base) != self.storage_base or self.storage_base < 2:
            raise ValidationError(f"storage base must be an integer >= 2, got {self.storage_base!r}")
        if tuple(self.partition.support) != tuple(self.d.support_x()):
            raise ValidationError("partition must cover exactly the X-support of the distribution")

    @property
    def h_u(self) -> float:
        """H(U) in storage symbols."""
        return entropy(list(_cell_probs(self.d, self.partition)), self.storage_base)

    @property
    def prefix_length(self) -> int:
        return max(0, math.ceil(self.n * self.h_u - ROUND_SLACK))


@dataclass(frozen=True)
class EncodedRecord:
    prefix: tuple[int, ...]
    suffix: tuple[int, ...]
    escape: bool
    kind: str  # "x" or "y"

    @property
    def length(self) -> int:
        return len(self.prefix) + len(self.suffix)


def _cell_probs(d: JointDistribution, partition: Partition) -> np.ndarray:
    px = marginal_x(d)
    out = np.zeros(partition.num_cells)
    for x, c in partition.label_map().items():
        out[c] += px[x]
    return out


def _raw_record(seq, k: int, base: int, kind: str) -> EncodedRecord:
    n = len(seq)
    value = from_digits(seq, k) if n else 0
    return EncodedRecord((), to_digits(value, base, digits_needed(k ** n, base)), True, kind)


def _raw_decode(rec: EncodedRecord, k: int, n: int, base: int) -> tuple[int, ...]:
    if len(rec.suffix) != digits_needed(k ** n, base):
        raise DecodeError("raw block has the wrong length")
    value = from_digits(rec.suffix, base)
    if value >= k ** n:
        raise DecodeError("raw block value exceeds the source alphabet range")
    return to_digits(value, k, n)


class Codec:
    """Structured codec for U = f(X) given by ``cfg.partition``."""

    scheme = "structured"

    def __init__(self, cfg: CodecConfig):
        d = cfg.d
        self.cfg = cfg
        self.n = cfg.n
        self.base = int(cfg.storage_base)
        self.kx, self.ky = d.shape
        labels = cfg.partition.label_map()
        self.ku = cfg.partition.num_cells
        self.f = tuple(labels.get(x, -1) for x in range(self.kx))
        pu = _cell_probs(d, cfg.partition)
        puy = np.zeros((self.ku, self.ky))
        for x, c in labels.items():
            puy[c] += d.pxy[x]
        crit_x = Criterion(marginal_x(d), cfg.delta)
        crit_y = Criterion(marginal_y(d), cfg.delta)
        self.fam_u = TypeFamily([[True] * self.ku], MarginalAccept(Criterion(pu, cfg.delta)))
        self.fam_x = TypeFamily([[self.f[x] == c for x in range(self.kx)] for c in range(self.ku)],
                                MarginalAccept(crit_x))
        self.fam_y = TypeFamily([[True] * self.ky for _ in range(self.ku)],
                                JointAccept(crit_y, Criterion(puy, cfg.delta)))
        self._u_ctx = (0,) * self.n
        self.num_u = self.fam_u.size(self._u_ctx)
        self.prefix_length = cfg.prefix_length
        self.capacity = self.base ** self.prefix_length

    def x_bin_size(self, u) -> int:
        return self.fam_x.size(u)

    def y_set_size(self, u) -> int:
        return self.fam_y.size(u)

    def prefix_to_u(self, prefix) -> tuple[int, ...]:
        if len(prefix) != self.prefix_length:
            raise DecodeError(f"prefix has {len(prefix)} symbols, expected {self.prefix_length}")
        r = from_digits(prefix, self.base)
        if r >= self.num_u:
            raise DecodeError(f"prefix value {r} does not index a typical U-sequence")
        return self.fam_u.unrank(self._u_ctx, r)

    def encode_x(self, x_seq) -> EncodedRecord:
        x = tuple(int(v) for v in x_seq)
        if len(x) != self.n:
            raise ValidationError(f"block length {len(x)} differs from n = {self.n}")
        u = tuple(self.f[v] if 0 <= v < self.kx else -1 for v in x)
        if -1 in u or not self.fam_x.contains(u, x) or not self.fam_u.contains(self._u_ctx, u):
            return _raw_record(x, self.kx, self.base, "x")
        r_u = self.fam_u.rank(self._u_ctx, u)
        if r_u >= self.capacity:
            return _raw_record(x, self.kx, self.base, "x")
        size = self.fam_x.size(u)
        suffix = to_digits(self.fam_x.rank(u, x), self.base, digits_needed(size, self.base))
        return EncodedRecord(to_digits(r_u, self.base, self.prefix_length), suffix, False, "x")

    def encode_y(self, y_seq, prefix) -> EncodedRecord:
        """Encode y reusing ``prefix`` from the X-encoder (None when X escaped)."""
        y = tuple(int(v) for v in y_seq)
        if len(y) != self.n:
            raise ValidationError(f"block length {len(y)} differs from n = {self.n}")
        if prefix is None:
            return _raw_record(y, self.ky, self.base, "y")
        try:
            u = self.prefix_to_u(prefix)
        except DecodeError:
            return _raw_record(y, self.ky, self.base, "y")
        if not self.fam_y.contains(u, y):
            return _raw_record(y, self.ky, self.base, "y")
        size = self.fam_y.size(u)
        suffix = to_digits(self.fam_y.rank(u, y), self.base, digits_needed(size, self.base))
        return EncodedRecord(tuple(prefix), suffix, False, "y")

    def decode(self, rec: EncodedRecord) -> tuple[int, ...]:
        k = self.kx if rec.kind == "x" else self.ky
        if rec.escape:
            return _raw_decode(rec, k, self.n, self.base)
        u = self.prefix_to_u(rec.prefix)
        fam = self.fam_x if rec.kind == "x" else self.fam_y
        size = fam.size(u)
        if len(rec.suffix) != digits_needed(size, self.base):
            raise DecodeError("suffix length does not match the bin size")
        r = from_digits(rec.suffix, self.base)
        if r >= size:
            raise DecodeError(f"suffix value {r} exceeds the bin size {size}")
        return fam.unrank(u, r)


class UniformBinningCodec:
    """Baseline: typical x are spread over the prefix values by a seeded random
    balanced assignment that ignores p(y|x). The Y-bin of a prefix is the union
    of the sequences conditionally typical with some member of the X-bin.
    """

    scheme = "uniform_binning"

    def __init__(self, cfg: CodecConfig, limit: int = ENUMERATION_LIMIT):
        d = cfg.d
        self.cfg = cfg
        self.n = cfg.n
        self.base = int(cfg.storage_base)
        self.kx, self.ky = d.shape
        self.limit = limit
        crit_x = Criterion(marginal_x(d), cfg.delta)
        crit_y = Criterion(marginal_y(d), cfg.delta)
        self._ctx = (0,) * self.n
        self.fam_x = TypeFamily([[True] * self.kx], MarginalAccept(crit_x))
        self.fam_cond = TypeFamily([[True] * self.ky for _ in range(self.kx)],
                                   JointAccept(crit_y, Criterion(d.pxy, cfg.delta)))
        self.num_x = self.fam_x.size(self._ctx)
        if self.num_x > limit:
            raise ResourceLimitError(f"{self.num_x} typical sequences exceed the limit {limit}")
        self.prefix_length = cfg.prefix_length
        self.capacity = self.base ** self.prefix_length
        self.members = list(self.fam_x.iterate(self._ctx))
        perm = trial_rng(cfg.seed, _BINNING_STREAM).permutation(self.num_x)
        # balanced: the i-th shuffled member goes to bin i mod capacity
        self.bin_of = np.empty(self.num_x, dtype=np.int64)
        self.bin_of[perm] = np.arange(self.num_x) % min(self.capacity, max(self.num_x, 1))
        self._bins: dict[int, list[int]] = {}
        for r in range(self.num_x):
            self._bins.setdefault(int(self.bin_of[r]), []).append(r)
        self._pos = {r: i for members in self._bins.values() for i, r in enumerate(members)}
        self._ybins: dict[int, tuple[tuple[int, ...], dict]] = {}

    def x_bin(self, b: int) -> list[int]:
        return self._bins.get(b, [])

    def y_bin(self, b: int):
        hit = self._ybins.get(b)
        if hit is not None:
            return hit
        members = self.x_bin(b)
        total = sum(self.fam_cond.size(self.members[r]) for r in members)
        if total > self.limit:
            raise ResourceLimitError(f"Y-bin listing of {total} sequences exceeds the limit")
        ys = set()
        for r in members:
            ys.update(self.fam_cond.iterate(self.members[r]))
        ordered = tuple(sorted(ys))
        hit = (ordered, {y: i for i, y in enumerate(ordered)})
        self._ybins[b] = hit
        return hit

    def y_set_size(self, b: int) -> int:
        return len(self.y_bin(b)[0])

    def _prefix_to_bin(self, prefix) -> int:
        if len(prefix) != self.prefix_length:
            raise DecodeError(f"prefix has {len(prefix)} symbols, expected {self.prefix_length}")
        b = from_digits(prefix, self.base)
        if b not in self._bins:
            raise DecodeError(f"prefix value {b} names an empty bin")
        return b

    def encode_x(self, x_seq) -> EncodedRecord:
        x = tuple(int(v) for v in x_seq)
        if not self.fam_x.contains(self._ctx, x):
            return _raw_record(x, self.kx, self.base, "x")
        r = self.fam_x.rank(self._ctx, x)
        b = int(self.bin_of[r])
        size = len(self._bins[b])
        return EncodedRecord(to_digits(b, self.base, self.prefix_length),
                             to_digits(self._pos[r], self.base, digits_needed(size, self.base)),
                             False, "x")

    def encode_y(self, y_seq, prefix) -> EncodedRecord:
        y = tuple(int(v) for v in y_seq)
        if prefix is None:
            return _raw_record(y, self.ky, self.base, "y")
        try:
            b = self._prefix_to_bin(prefix)
        except DecodeError:
            return _raw_record(y, self.ky, self.base, "y")
        ordered, index = self.y_bin(b)
        if y not in index:
            return _raw_record(y, self.ky, self.base, "y")
        return EncodedRecord(tuple(prefix),
                             to_digits(index[y], self.base, digits_needed(len(ordered), self.base)),
                             False, "y")

    def decode(self, rec: EncodedRecord) -> tuple[int, ...]:
        k = self.kx if rec.kind == "x" else self.ky
        if rec.escape:
            return _raw_decode(rec, k, self.n, self.base)
        b = self._prefix_to_bin(rec.prefix)
        pool = [self.members[r] for r in self._bins[b]] if rec.kind == "x" else self.y_bin(b)[0]
        if len(rec.suffix) != digits_needed(len(pool), self.base):
            raise DecodeError("suffix length does not match the bin size")
        i = from_digits(rec.suffix, self.base)
        if i >= len(pool):
            raise DecodeError(f"suffix value {i} exceeds the bin size {len(pool)}")
        return pool[i]


def build_codec(cfg: CodecConfig) -> Codec:
    return Codec(cfg)


def encode_x(codec, x_seq) -> EncodedRecord:
    return codec.encode_x(x_seq)


def encode_y(codec, y_seq, prefix) -> EncodedRecord:
    return codec.encode_y(y_seq, prefix)


def decode(codec, rec: EncodedRecord) -> tuple[int, ...]:
    return codec.decode(rec)


@dataclass(frozen=True)
class TrialOutcome:
    trial: int
    escape_x: bool
    escape_y: bool
    prefix_match: bool
    x_suffix: int
    y_suffix: int
    roundtrip_ok: bool
    decode_error: bool

    def as_dict(self) -> dict:
        return {"trial": self.trial, "escape_x": self.escape_x, "escape_y": self.escape_y,
                "prefix_match": self.prefix_match, "x_suffix_len": self.x_suffix,
                "y_suffix_len": self.y_suffix, "roundtrip_ok": self.roundtrip_ok}


def run_trial(codec, draw, t: int) -> TrialOutcome:
    xs, ys = draw(codec.n, trial_rng(codec.cfg.seed, t))
    x = tuple(int(v) for v in xs)
    y = tuple(int(v) for v in ys)
    rx = codec.encode_x(x)
    ry = codec.encode_y(y, None if rx.escape else rx.prefix)
    decode_error = False
    try:
        ok = codec.decode(rx) == x and codec.decode(ry) == y
    except DecodeError:
        ok, decode_error = False, True
    # raw records carry an empty prefix, so a joint escape is not a prefix disagreement
    match = rx.prefix == ry.prefix
    return TrialOutcome(t, rx.escape, ry.escape, match, len(rx.suffix), len(ry.suffix),
                        ok, decode_error)


def _run_chunk(args):
    codec, lo, hi = args
    draw = block_sampler(codec.cfg.d)
    return [run_trial(codec, draw, t) for t in range(lo, hi)]


@dataclass(frozen=True)
class SimReport:
    scheme: str
    trials: int
    delta_x: float
    delta_y: float
    delta_u: float
    k_emp: float | None
    l_emp: float | None
    j_emp: float
    x_suffix_rate: float | None
    y_suffix_rate: float | None
    roundtrip_failures: int
    decode_errors: int
    theory: dict
    outcomes: tuple[TrialOutcome, ...] = field(default=(), repr=False)

    @property
    def delta(self) -> float:
        return max(self.delta_x, self.delta_y)

    def stderr(self, rate: float) -> float:
        """Binomial standard error of an estimated rate."""
        return math.sqrt(rate * (1 - rate) / self.trials)

    def as_dict(self) -> dict:
        return {
            "scheme": self.scheme, "trials": self.trials,
            "delta_x": self.delta_x, "delta_y": self.delta_y, "delta_u": self.delta_u,
            "delta": self.delta,
            "stderr": {"delta_x": self.stderr(self.delta_x), "delta_y": self.stderr(self.delta_y),
                       "delta_u": self.stderr(self.delta_u)},
            "k_emp": self.k_emp, "l_emp": self.l_emp, "j_emp": self.j_emp,
            "x_suffix_rate": self.x_suffix_rate, "y_suffix_rate": self.y_suffix_rate,
            "roundtrip_failures": self.roundtrip_failures, "decode_errors": self.decode_errors,
            "theory": dict(self.theory),
        }


def _theory(cfg: CodecConfig) -> dict:
    d = cfg.d.with_base(cfg.storage_base)
    h_x = float(entropy_x(d))
    j = float(cfg.h_u)
    return {
        "h_x": h_x, "j": j,
        "h_y_given_u": float(conditional_entropy_y_given_function(d, cfg.partition)),
        "prefix_length": cfg.prefix_length,
        "prefix_overhead": cfg.prefix_length / cfg.n - j,
        "uniform_binning_y_rate": h_x - j + float(conditional_entropy_y_given_x(d)),
    }


def _simulate(codec, trials: int, workers: int, keep: bool) -> SimReport:
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    if workers > 1:
        step = math.ceil(trials / workers)
        chunks = [(codec, lo, min(lo + step, trials)) for lo in range(0, trials, step)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            outcomes = [o for part in ex.map(_run_chunk, chunks) for o in part]
    else:
        outcomes = _run_chunk((codec, 0, trials))
    n = codec.n
    esc_x = sum(o.escape_x for o in outcomes)
    esc_y = sum(o.escape_y for o in outcomes)
    mismatch = sum(not o.prefix_match for o in outcomes)
    xs = [o.x_suffix for o in outcomes if not o.escape_x]
    ys = [o.y_suffix for o in outcomes if not o.escape_y]
    j_emp = codec.prefix_length / n
    x_rate = sum(xs) / len(xs) / n if xs else None
    y_rate = sum(ys) / len(ys) / n if ys else None
    failures = sum(not o.roundtrip_ok for o in outcomes)
    return SimReport(
        codec.scheme, trials, esc_x / trials, esc_y / trials, mismatch / trials,
        None if x_rate is None else j_emp + x_rate,
        None if y_rate is None else j_emp + y_rate,
        j_emp, x_rate, y_rate, failures, sum(o.decode_error for o in outcomes),
        _theory(codec.cfg), tuple(outcomes) if keep else ())


def simulate(cfg: CodecConfig, trials: int, workers: int = 1, keep_trace: bool = False,
             codec: Codec | None = None) -> SimReport:
    """Monte-Carlo error rates and storage rates of the structured codec.

    Trial t draws its block from the stream seeded by (cfg.seed, t), so the
    report does not depend on ``workers``.
    """
    return _simulate(codec or Codec(cfg), trials, workers, keep_trace)


def simulate_uniform_binning(cfg: CodecConfig, trials: int, workers: int = 1,
                             keep_trace: bool = False) -> SimReport:
    return _simulate(UniformBinningCodec(cfg), trials, workers, keep_trace)
