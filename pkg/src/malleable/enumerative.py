"""Lexicographic rank/unrank over sets of sequences defined by symbol counts.

A set is described by a context sequence c_1..c_n (known to both encoder and
decoder), a mask of symbols allowed under each context, and a predicate on
the final count matrix N[c, a]. Typical sets, bins of a function of X, and
sequences conditionally typical with a given sequence are all of this form.

Completion counts depend only on the context totals and the counts so far,
so they are memoized and shared across every sequence with the same context
type.
"""

from __future__ import annotations

import itertools
import math

from .errors import ResourceLimitError, ValidationError
from .typicality import Criterion, compositions, multinomial

CANDIDATE_LIMIT = 2 ** 20


class MarginalAccept:
    """Column sums (symbol counts ignoring context) pass ``crit``."""

    def __init__(self, crit: Criterion):
        self.crit = crit

    def __call__(self, rows, n):
        cols = [sum(col) for col in zip(*rows)]
        return self.crit.accepts(cols, n)


class JointAccept:
    """Column sums pass ``marginal`` and the full (context, symbol) counts pass ``joint``."""

    def __init__(self, marginal: Criterion, joint: Criterion):
        self.marginal = marginal
        self.joint = joint

    def __call__(self, rows, n):
        cols = [sum(col) for col in zip(*rows)]
        flat = [v for r in rows for v in r]
        return self.marginal.accepts(cols, n) and self.joint.accepts(flat, n)


class TypeFamily:
    """Rank/unrank for every context sequence under one mask and predicate."""

    def __init__(self, allowed, accept, candidate_limit: int = CANDIDATE_LIMIT):
        self.allowed = tuple(tuple(bool(v) for v in row) for row in allowed)
        self.num_contexts = len(self.allowed)
        self.k = len(self.allowed[0])
        self.accept = accept
        self.candidate_limit = candidate_limit
        self._symbols = tuple(tuple(a for a in range(self.k) if row[a]) for row in self.allowed)
        self._finals: dict = {}
        self._final_sets: dict = {}
        self._counts: dict = {}

    def totals_of(self, contexts) -> tuple[int, ...]:
        t = [0] * self.num_contexts
        for c in contexts:
            t[c] += 1
        return tuple(t)

    def finals(self, totals: tuple[int, ...]):
        """Accepted final count matrices (flattened) for a context type."""
        hit = self._finals.get(totals)
        if hit is not None:
            return hit
        per_ctx = []
        n_cand = 1
        for c, t in enumerate(totals):
            syms = self._symbols[c]
            if not syms:
                if t:
                    per_ctx.append([])
                    n_cand = 0
                    continue
                per_ctx.append([(0,) * self.k])
                continue
            rows = []
            for comp in compositions(t, len(syms)):
                row = [0] * self.k
                for a, v in zip(syms, comp):
                    row[a] = v
                rows.append(tuple(row))
            per_ctx.append(rows)
            n_cand *= len(rows)
        if n_cand > self.candidate_limit:
            raise ResourceLimitError(
                f"{n_cand} candidate count matrices exceed the limit {self.candidate_limit}")
        n = sum(totals)
        out = []
        for rows in itertools.product(*per_ctx):
            if self.accept(rows, n):
                out.append(tuple(v for r in rows for v in r))
        out = tuple(out)
        self._finals[totals] = out
        self._final_sets[totals] = frozenset(out)
        return out

    def count(self, totals: tuple[int, ...], cur: tuple[int, ...]) -> int:
        """Number of completions of a prefix with counts ``cur``."""
        key = (totals, cur)
        hit = self._counts.get(key)
        if hit is not None:
            return hit
        k = self.k
        total = 0
        for m in self.finals(totals):
            if any(a < b for a, b in zip(m, cur)):
                continue
            w = 1
            for c in range(self.num_contexts):
                w *= multinomial([m[c * k + a] - cur[c * k + a] for a in range(k)])
            total += w
        self._counts[key] = total
        return total

    def size(self, contexts) -> int:
        totals = self.totals_of(contexts)
        return self.count(totals, (0,) * (self.num_contexts * self.k))

    def contains(self, contexts, seq) -> bool:
        if len(seq) != len(contexts):
            return False
        cur = [0] * (self.num_contexts * self.k)
        for c, a in zip(contexts, seq):
            if not (0 <= a < self.k) or not self.allowed[c][a]:
                return False
            cur[c * self.k + a] += 1
        totals = self.totals_of(contexts)
        self.finals(totals)
        return tuple(cur) in self._final_sets[totals]

    def rank(self, contexts, seq) -> int:
        if not self.contains(contexts, seq):
            raise ValidationError("sequence is not a member of the set")
        totals = self.totals_of(contexts)
        k = self.k
        cur = [0] * (self.num_contexts * k)
        r = 0
        for c, s in zip(contexts, seq):
            for a in self._symbols[c]:
                if a >= s:
                    break
                cur[c * k + a] += 1
                r += self.count(totals, tuple(cur))
                cur[c * k + a] -= 1
            cur[c * k + s] += 1
        return r

    def unrank(self, contexts, r: int) -> tuple[int, ...]:
        totals = self.totals_of(contexts)
        k = self.k
        cur = [0] * (self.num_contexts * k)
        if not 0 <= r < self.count(totals, tuple(cur)):
            raise ValidationError(f"rank {r} is out of range")
        out = []
        for c in contexts:
            for a in self._symbols[c]:
                cur[c * k + a] += 1
                cnt = self.count(totals, tuple(cur))
                if r < cnt:
                    out.append(a)
                    break
                r -= cnt
                cur[c * k + a] -= 1
        return tuple(out)

    def iterate(self, contexts):
        """Members in lexicographic order (depth-first, dead branches pruned)."""
        totals = self.totals_of(contexts)
        k = self.k
        n = len(contexts)
        cur = [0] * (self.num_contexts * k)
        seq: list[int] = []

        def rec(i):
            if i == n:
                yield tuple(seq)
                return
            c = contexts[i]
            for a in self._symbols[c]:
                cur[c * k + a] += 1
                if self.count(totals, tuple(cur)):
                    seq.append(a)
                    yield from rec(i + 1)
                    seq.pop()
                cur[c * k + a] -= 1

        if self.count(totals, tuple(cur)):
            yield from rec(0)


def digits_needed(size: int, base: int) -> int:
    """Smallest L with base**L >= size (0 for a singleton or empty set)."""
    length, cap = 0, 1
    while cap < size:
        cap *= base
        length += 1
    return length


def to_digits(value: int, base: int, length: int) -> tuple[int, ...]:
    if value < 0 or value >= base ** length:
        raise ValidationError(f"value {value} does not fit in {length} base-{base} digits")
    out = [0] * length
    for i in range(length - 1, -1, -1):
        value, out[i] = divmod(value, base)
    return tuple(out)


def from_digits(digits, base: int) -> int:
    v = 0
    for dgt in digits:
        if not 0 <= dgt < base:
            raise ValidationError(f"digit {dgt} outside base {base}")
        v = v * base + dgt
    return v


def log_size(size: int, base: float) -> float:
    return math.log(size, base) if size > 0 else -math.inf
