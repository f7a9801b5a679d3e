import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from malleable import sources
from malleable.dist import JointDistribution, marginal_x, marginal_y
from malleable.errors import ResourceLimitError, ValidationError
from malleable.partitions import Partition
from malleable.typicality import (
    Criterion, TypicalSpec, check_conditional_sizes, check_joint_typical_set, check_typical_size,
    compositions, conditional_typical_set, conditional_typical_size, enumerate_typical,
    is_jointly_typical, is_strongly_typical, multinomial, num_types, slack,
    typical_probability, verify_markov_lemma,
)

from oracles import l1_typical, typical_list


# ---- parameters ----

@pytest.mark.parametrize("n, delta", [(0, 0.1), (-1, 0.1), (2.5, 0.1), (4, -0.01), (4, float("nan"))])
def test_spec_rejects_bad_values(n, delta):
    with pytest.raises(ValidationError):
        TypicalSpec(n, delta)


# ---- membership ----

def test_exact_type_membership():
    spec = TypicalSpec(4, 0)
    assert is_strongly_typical([0, 1, 0, 1], [0.5, 0.5], spec)
    assert not is_strongly_typical([0, 0, 0, 1], [0.5, 0.5], spec)


@pytest.mark.parametrize("delta", [0, 0.01, 1.0])
def test_point_mass_all_zero_sequence(delta):
    assert is_strongly_typical([0] * 5, [1.0, 0.0], TypicalSpec(5, delta))


def test_membership_boundary_is_exact():
    # L1 distance of 0001 from uniform is exactly 0.5
    assert is_strongly_typical([0, 0, 0, 1], [0.5, 0.5], TypicalSpec(4, 0.5))
    assert not is_strongly_typical([0, 0, 0, 1], [0.5, 0.5], TypicalSpec(4, 0.4999999))
    # 0.11 is not binary-representable; the rational view puts 11 of 100 exactly on target
    seq = [1] * 11 + [0] * 89
    assert is_strongly_typical(seq, [0.89, 0.11], TypicalSpec(100, 1e-15))


def test_membership_errors():
    with pytest.raises(ValidationError):
        is_strongly_typical([0, 1], [0.5, 0.5], TypicalSpec(3, 0.1))
    with pytest.raises(ValidationError):
        is_strongly_typical([0, 2, 1], [0.5, 0.5], TypicalSpec(3, 0.1))


def test_joint_membership_examples():
    copy = sources.copy_source(2)
    s = (0, 1, 1, 0)
    assert is_jointly_typical((s, s), copy, TypicalSpec(4, 0.1))
    comp = tuple(1 - v for v in s)
    assert not is_jointly_typical((s, comp), copy, TypicalSpec(4, 0.1))
    indep = sources.uniform_independent(2, 2)
    spec = TypicalSpec(2, 2)
    for xs in itertools.product(range(2), repeat=2):
        for ys in itertools.product(range(2), repeat=2):
            assert is_jointly_typical((xs, ys), indep, spec)
    with pytest.raises(ValidationError):
        is_jointly_typical(((0, 1), (0,)), indep, spec)


@given(st.lists(st.integers(0, 2), min_size=1, max_size=9),
       st.lists(st.integers(1, 9), min_size=3, max_size=3),
       st.sampled_from([0, 0.05, 0.1, 0.25, 1 / 3, 0.5, 1.0]))
def test_membership_matches_rational_oracle(seq, w, delta):
    p = [v / sum(w) for v in w]
    assert is_strongly_typical(seq, p, TypicalSpec(len(seq), delta)) == l1_typical(seq, p, delta)


# ---- counting helpers ----

@given(st.integers(0, 7), st.integers(1, 4))
def test_compositions_count_and_order(n, k):
    comps = list(compositions(n, k))
    assert len(comps) == num_types(n, k) == len(set(comps))
    assert comps == sorted(comps)
    assert all(sum(c) == n and len(c) == k for c in comps)
    assert sum(multinomial(c) for c in comps) == k ** n


# ---- enumeration ----

def test_enumeration_examples():
    ts = enumerate_typical([0.5, 0.5], TypicalSpec(4, 0), materialize=True)
    assert ts.size == 6 == math.comb(4, 2)
    assert ts.sequences == frozenset(typical_list([0.5, 0.5], 4, 0))
    # one stray symbol costs 2/n in L1, so a point mass has a single typical sequence below that
    for delta in (0.01, 0.3):
        pm = enumerate_typical([1.0, 0.0], TypicalSpec(6, delta), materialize=True)
        assert pm.size == 1 and pm.sequences == {(0,) * 6}
        assert pm.probability == pytest.approx(1.0)
    wide = enumerate_typical([1.0, 0.0], TypicalSpec(6, 0.5), materialize=True)
    assert wide.size == 7 and wide.probability == pytest.approx(1.0)


def test_uniform_n16_size_frozen():
    ts = enumerate_typical([0.5, 0.5], TypicalSpec(16, 0.25))
    assert ts.size == 51766
    assert ts.probability == pytest.approx(51766 / 2 ** 16)


@pytest.mark.parametrize("p, n, delta", [
    ([0.5, 0.5], 8, 0.25), ([0.89, 0.11], 9, 0.3), ([0.2, 0.3, 0.5], 6, 0.4), ([0.25] * 4, 5, 0.5),
])
def test_enumeration_matches_brute_force(p, n, delta):
    ts = enumerate_typical(p, TypicalSpec(n, delta), materialize=True)
    brute = typical_list(p, n, delta)
    assert ts.sequences == frozenset(brute)
    assert ts.size == len(brute)
    direct = sum(math.prod(p[a] for a in s) for s in brute)
    assert ts.probability == pytest.approx(direct, rel=1e-12)


def test_joint_enumeration_lists_pairs():
    d = sources.dsbs(0.11)
    spec = TypicalSpec(4, 0.5)
    ts = enumerate_typical(d, spec, materialize=True)
    brute = {(xs, ys) for xs in itertools.product(range(2), repeat=4)
             for ys in itertools.product(range(2), repeat=4)
             if is_jointly_typical((xs, ys), d, spec)}
    assert ts.sequences == brute and ts.size == len(brute)


def test_enumeration_limits():
    with pytest.raises(ResourceLimitError, match="Monte-Carlo"):
        enumerate_typical([0.5, 0.5], TypicalSpec(30, 0.1), materialize=True)
    with pytest.raises(ResourceLimitError):
        enumerate_typical([0.25] * 4, TypicalSpec(60, 0.1), limit=1000)
    # type-class counting still works where listing would not
    assert enumerate_typical([0.5, 0.5], TypicalSpec(40, 0.1)).size > 0


def test_log_size_and_exponent():
    ts = enumerate_typical([0.5, 0.5], TypicalSpec(8, 0.25))
    assert ts.log_size == pytest.approx(math.log2(ts.size))
    assert ts.exponent == pytest.approx(ts.log_size / 8)


# ---- probability trend ----

@pytest.mark.parametrize("p, ns", [
    ([0.5, 0.5], [8, 16]),
    ([0.89, 0.11], [4, 8, 12, 16]),
    ([0.89, 0.11], [5, 9, 13]),
])
def test_probability_nondecreasing_on_aligned_blocklengths(p, ns):
    probs = [typical_probability(p, TypicalSpec(n, 0.25)) for n in ns]
    assert all(b >= a - 1e-12 for a, b in zip(probs, probs[1:]))
    assert probs[-1] > 0.75


def test_probability_not_monotone_between_lattice_points():
    # the set of admissible counts shrinks when n*delta/2 loses its integer part
    p8 = typical_probability([0.5, 0.5], TypicalSpec(8, 0.25))
    p9 = typical_probability([0.5, 0.5], TypicalSpec(9, 0.25))
    assert p9 < p8


# ---- conditional sets ----

def test_conditional_set_copy_source():
    d = sources.copy_source(2)
    spec = TypicalSpec(6, 0.1)
    x = (0, 1, 1, 0, 1, 0)
    assert conditional_typical_set(x, d, spec) == {x}
    assert conditional_typical_set((0,) * 6, d, spec) == frozenset()


def test_conditional_set_independent_matches_double_filter():
    d = sources.independent([0.5, 0.5], [0.75, 0.25])
    spec = TypicalSpec(8, 0.3)
    x = (0, 1, 0, 1, 1, 0, 0, 1)
    py = marginal_y(d)
    direct = {ys for ys in itertools.product(range(2), repeat=8)
              if l1_typical(ys, py, 0.3) and is_jointly_typical((x, ys), d, spec)}
    assert conditional_typical_set(x, d, spec) == direct


@settings(max_examples=25)
@given(st.lists(st.integers(1, 9), min_size=4, max_size=4),
       st.lists(st.integers(0, 1), min_size=6, max_size=6),
       st.sampled_from([0.2, 0.3, 0.5]))
def test_conditional_set_consistency(w, x, delta):
    d = JointDistribution.from_matrix(np.array(w, dtype=float).reshape(2, 2) / sum(w))
    spec = TypicalSpec(6, delta)
    cs = conditional_typical_set(x, d, spec)
    py = marginal_y(d)
    for ys in itertools.product(range(2), repeat=6):
        want = is_jointly_typical((x, ys), d, spec) and is_strongly_typical(ys, py, spec)
        assert (ys in cs) == want
    counts = tuple(int(c) for c in np.bincount(x, minlength=2))
    assert conditional_typical_size(counts, d, spec) == len(cs)


def test_conditional_set_limit():
    with pytest.raises(ResourceLimitError):
        conditional_typical_set((0,) * 30, sources.dsbs(0.11), TypicalSpec(30, 0.1))
    with pytest.raises(ValidationError):
        conditional_typical_set((0, 1), sources.dsbs(0.11), TypicalSpec(3, 0.1))


# ---- bound checks ----

def test_slack_values():
    assert slack(0, 4) == 0.0
    assert slack(0.25, 2) == pytest.approx(0.25 * 3)
    assert slack(0.5, 4) == pytest.approx(1.5)


@pytest.mark.parametrize("p", [[0.5, 0.5], [0.89, 0.11], [0.2, 0.3, 0.5]])
def test_typical_size_bound(p):
    res = check_typical_size(p, TypicalSpec(12, 0.25))
    assert res.passed
    assert res.details["exponent"] <= res.details["entropy"] + res.details["eta"]


def test_typical_size_uniform_n8_example():
    res = check_typical_size([0.5, 0.5], TypicalSpec(8, 0.25))
    eta = res.details["eta"]
    assert 2 ** (8 * (1 - eta)) <= res.details["size"] <= 2 ** (8 * (1 + eta))


def test_joint_set_copy_source_passes():
    res = check_joint_typical_set(sources.copy_source(2), TypicalSpec(16, 0.25))
    assert res.passed and res.details["probability_ok"] and res.details["size_ok"]


def test_joint_set_dsbs_size_bounds():
    res = check_joint_typical_set(sources.dsbs(0.11), TypicalSpec(16, 0.25))
    assert res.details["size_ok"]
    # joint probability at this blocklength is about one half; the strong law has not set in
    assert res.details["probability"] == pytest.approx(0.514, abs=5e-3)


@pytest.mark.parametrize("d", [sources.dsbs(0.11), sources.independent([0.5, 0.5], [0.7, 0.3]),
                               sources.copy_source(2)])
def test_conditional_size_bounds(d):
    res = check_conditional_sizes(d, TypicalSpec(12, 0.25))
    assert res.passed and res.details["nonempty_sets"] >= 1
    for row in res.details["per_type"]:
        assert row["size"] > 0 and row["ok"]


def test_conditional_sizes_match_brute_force():
    d = sources.dsbs(0.11)
    spec = TypicalSpec(8, 0.25)
    res = check_conditional_sizes(d, spec)
    for row in res.details["per_type"]:
        c0, c1 = row["x_type"]
        x = (0,) * c0 + (1,) * c1
        assert row["size"] == len(conditional_typical_set(x, d, spec))


# ---- Markov chain check ----

def test_markov_copy_identity_is_one():
    d = sources.copy_source(2)
    res = verify_markov_lemma(d, Partition.identity(d.support_x()), TypicalSpec(10, 0.2), trials=500)
    assert res.estimate == 1.0 and res.passed
    assert res.joint_events == res.conditioning_events


def test_markov_trivial_partition_is_one():
    d = sources.dsbs(0.11)
    # with one cell the conclusion is Y-typicality at |Y| * delta = 1, which every y of length 32 meets
    res = verify_markov_lemma(d, Partition.trivial(d.support_x()), TypicalSpec(32, 0.5), trials=500)
    assert res.estimate == 1.0


def test_markov_dsbs_identity_small():
    d = sources.dsbs(0.11)
    res = verify_markov_lemma(d, Partition.identity(d.support_x()), TypicalSpec(64, 0.1),
                              trials=2000, seed=5)
    assert res.trials == 2000 and res.conditioning_events > 0
    assert res.estimate > 0.9


def test_markov_is_reproducible():
    d = sources.dsbs(0.11)
    part = Partition.identity(d.support_x())
    a = verify_markov_lemma(d, part, TypicalSpec(24, 0.2), trials=300, seed=9)
    b = verify_markov_lemma(d, part, TypicalSpec(24, 0.2), trials=300, seed=9)
    assert a == b


def test_markov_zero_conditioning_raises():
    d = sources.dsbs(0.11)
    with pytest.raises(ValidationError, match="increase n"):
        verify_markov_lemma(d, Partition.identity(d.support_x()), TypicalSpec(3, 0.01), trials=50)


def test_criterion_scaled_matches_direct():
    p = marginal_x(sources.dsbs(0.11))
    a = Criterion(p, 0.1).scaled(2)
    b = Criterion(p, 0.2)
    for c in range(0, 21):
        assert a.accepts((20 - c, c), 20) == b.accepts((20 - c, c), 20)
