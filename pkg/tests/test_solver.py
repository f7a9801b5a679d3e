import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import joint_distributions
from malleable import sources
from malleable.dist import (
    JointDistribution, conditional_entropy_y_given_function, conditional_entropy_y_given_x,
    entropy_x, entropy_y, joint_entropy,
)
from malleable.errors import ResourceLimitError
from malleable.partitions import Partition
from malleable.solver import (
    bound_violations, check_slope_bounds, evaluate_partition, exact_curve, heuristic_curve,
    is_minimal, minimal_sufficient_statistic, simple_bounds, sufficient_regime_gap,
)

H011 = 0.49991595816452783


class TestEvaluatePartition:
    def test_trivial_corner(self, dsbs):
        pt = evaluate_partition(dsbs, Partition.trivial(dsbs.support_x()))
        assert pt.j == 0 and pt.l == pytest.approx(entropy_y(dsbs))

    def test_identity_corner(self, dsbs):
        pt = evaluate_partition(dsbs, Partition.identity(dsbs.support_x()))
        assert pt.j == pytest.approx(entropy_x(dsbs)) and pt.l == pytest.approx(joint_entropy(dsbs))

    def test_parity_on_mod2(self, mod2):
        pt = evaluate_partition(mod2, Partition.from_canonical((0, 1, 2, 3), "0-1-0-1"))
        assert (pt.j, pt.l, pt.m) == pytest.approx((1.0, 1.0, 0.0))

    def test_parity_is_on_brute_force_envelope(self, mod2):
        pts = [(j, l) for _, j, l in oracles.all_partition_points(mod2.pxy.tolist())]
        assert len(pts) == 15
        assert oracles.envelope_at(pts, 1.0) == pytest.approx(1.0, abs=1e-12)


class TestExactCurve:
    def test_dsbs_two_points(self, dsbs):
        c = exact_curve(dsbs)
        assert len(c.raw_j) == 2
        assert [(v.j, v.l) for v in c.vertices] == pytest.approx([(0, 1), (1, 1 + H011)])
        assert check_slope_bounds(c).slopes == pytest.approx((H011,))

    def test_independent_line(self, indep):
        c = exact_curve(indep)
        js = np.linspace(0, 1, 7)
        assert c.evaluate(js) == pytest.approx(js + 1)
        assert c.h_w == 0

    def test_copy_flat(self, copy2):
        c = exact_curve(copy2)
        assert c.evaluate(np.linspace(0, 1, 7)) == pytest.approx(np.ones(7))
        assert check_slope_bounds(c).slopes == pytest.approx((0.0,))

    def test_mod2_vertices_and_tie_break(self, mod2):
        c = exact_curve(mod2)
        assert [(v.j, v.l) for v in c.vertices] == pytest.approx([(0, 1), (1, 1), (2, 2)])
        assert c.vertices[1].partition.canonical_form == "0-1-0-1"

    def test_ray_beyond_support_entropy(self, mod2):
        c = exact_curve(mod2)
        assert c.evaluate(3.5) == pytest.approx(3.5)
        with pytest.raises(ValueError):
            c.evaluate(-0.5)

    def test_point_at(self, mod2):
        c = exact_curve(mod2)
        assert c.point_at(1.0).partition.canonical_form == "0-1-0-1"
        mid = c.point_at(0.5)
        assert mid.partition is None and mid.as_dict()["partition"] == "time-shared"

    def test_limit(self):
        d = sources.uniform_independent(13, 1)
        with pytest.raises(ResourceLimitError):
            exact_curve(d)

    def test_max_cells(self, mod2):
        c = exact_curve(mod2, max_cells=2)
        assert len(c.raw_j) == 8

    def test_workers_do_not_change_result(self):
        d = sources.random_joint(np.random.default_rng(5), 7, 3)
        a, b = exact_curve(d), exact_curve(d, workers=2)
        assert np.array_equal(a.raw_rgs, b.raw_rgs) and np.array_equal(a.raw_l, b.raw_l)
        assert [(v.j, v.l, v.partition) for v in a.vertices] == [(v.j, v.l, v.partition) for v in b.vertices]

    def test_zero_probability_symbols_are_excluded(self):
        d = JointDistribution.from_matrix([[0.5, 0.0], [0.0, 0.0], [0.25, 0.25]])
        c = exact_curve(d)
        assert c.support == (0, 2) and len(c.raw_j) == 2


@settings(max_examples=40)
@given(joint_distributions(max_x=6, max_y=3))
def test_envelope_matches_pairwise_oracle(d):
    c = exact_curve(d)
    pts = [(j, l) for _, j, l in oracles.all_partition_points(d.pxy.tolist())]
    assert len(pts) == len(c.raw_j)
    assert sorted(c.raw_l) == pytest.approx(sorted(l for _, l in pts), abs=1e-9)
    h_x = entropy_x(d)
    for j in np.linspace(0, h_x, 9):
        assert c.evaluate(j) == pytest.approx(oracles.envelope_at(pts, j), abs=1e-9)


@given(joint_distributions(max_x=6, max_y=4))
def test_curve_invariants(d):
    c = exact_curve(d)
    assert c.evaluate(0.0) == pytest.approx(entropy_y(d), abs=1e-9)
    assert c.evaluate(entropy_x(d)) == pytest.approx(joint_entropy(d), abs=1e-9)
    assert bound_violations(d, c) == 0
    assert check_slope_bounds(c).ok
    vl = np.array([v.l for v in c.vertices])
    vj = np.array([v.j for v in c.vertices])
    if len(vj) >= 3:
        s = np.diff(vl) / np.diff(vj)
        assert np.all(np.diff(s) >= -1e-9)
    assert np.all(np.diff(vl) >= -1e-9)
    js = np.linspace(c.h_w, c.h_w + 2, 5)
    assert sufficient_regime_gap(c, d, js) == pytest.approx(np.zeros(5), abs=1e-9)
    assert np.all(c.on_envelope() | (c.raw_l > c.evaluate(c.raw_j)))


@given(joint_distributions(max_x=5, max_y=3), st.data())
def test_refinement_monotonicity(d, data):
    support = d.support_x()
    labels = data.draw(st.lists(st.integers(0, 3), min_size=len(support), max_size=len(support)))
    fine = Partition.from_labels(support, labels)
    if fine.num_cells < 2:
        return
    a, b = data.draw(st.tuples(st.integers(0, fine.num_cells - 1), st.integers(0, fine.num_cells - 1)))
    coarse = fine.merge(a, b)
    pf, pc = evaluate_partition(d, fine), evaluate_partition(d, coarse)
    assert pf.j >= pc.j - 1e-12
    assert pf.m <= pc.m + 1e-12


def test_simple_bounds_values(dsbs):
    a, b, c = simple_bounds(dsbs, [0.0, 0.5])
    assert list(a) == [1.0, 1.0] and list(b) == [0.0, 0.5] and list(c) == [1.0, 1.5]


class TestSufficientStatistic:
    def test_mod2(self, mod2):
        s = minimal_sufficient_statistic(mod2)
        assert s.partition.canonical_form == "0-1-0-1" and s.entropy == pytest.approx(1.0)

    def test_dsbs_identity(self, dsbs):
        s = minimal_sufficient_statistic(dsbs)
        assert s.partition.canonical_form == "0-1" and s.entropy == pytest.approx(1.0)

    def test_independent_one_cell(self, indep):
        s = minimal_sufficient_statistic(indep)
        assert s.partition.num_cells == 1 and s.entropy == 0.0

    @given(joint_distributions(max_x=6, max_y=3))
    def test_properties(self, d):
        s = minimal_sufficient_statistic(d)
        assert s.h_y_given_w == pytest.approx(conditional_entropy_y_given_x(d), abs=1e-9)
        assert is_minimal(d, s)

    def test_non_minimal_detected(self, mod2):
        s = minimal_sufficient_statistic(mod2)
        ident = Partition.identity(mod2.support_x())
        fake = type(s)(ident, 2.0, conditional_entropy_y_given_function(mod2, ident))
        assert not is_minimal(mod2, fake)


class TestHeuristic:
    @settings(max_examples=25)
    @given(joint_distributions(max_x=6, max_y=3), st.integers(0, 5))
    def test_dominates_exact(self, d, seed):
        exact = exact_curve(d)
        heur = heuristic_curve(d, restarts=4, seed=seed)
        js = np.linspace(0, entropy_x(d), 9)
        assert np.all(heur.evaluate(js) >= exact.evaluate(js) - 1e-9)
        assert not heur.exact

    def test_extremal_sources(self, copy2, indep):
        js = np.linspace(0, 1, 5)
        assert heuristic_curve(copy2).evaluate(js) == pytest.approx(np.ones(5))
        assert heuristic_curve(indep).evaluate(js) == pytest.approx(js + 1)

    def test_deterministic_and_large_support(self):
        d = sources.random_joint(np.random.default_rng(1), 16, 3)
        a, b = heuristic_curve(d, restarts=3, seed=7), heuristic_curve(d, restarts=3, seed=7)
        assert np.array_equal(a.raw_l, b.raw_l)
        assert bound_violations(d, a) == 0 and check_slope_bounds(a).ok

    def test_rejects_zero_restarts(self, dsbs):
        with pytest.raises(ValueError):
            heuristic_curve(dsbs, restarts=0)
