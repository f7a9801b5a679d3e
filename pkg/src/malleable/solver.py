"""Exact and heuristic rate-malleability curves over deterministic quotients.

For every partition U = f(X) of the X-support the pair

    j = H(U),   l = j + H(Y|U) = H(U, Y)

is a feasible point of the reuse/total-rate trade-off. The curve L*(J) is
the lower convex envelope of these points (time sharing), extended past
the minimal sufficient statistic W with slope one.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dist import (
    JointDistribution, conditional_entropy_y_given_function, conditional_entropy_y_given_x,
    conditional_y_given_x, entropy_of_function, entropy_x, entropy_y, joint_entropy, marginal_x,
)
from .partitions import EXACT_SEARCH_LIMIT, Partition, check_exact_limit, enumerate_rgs

BOUND_TOL = 1e-9
ROW_TOL = 1e-9
HULL_TOL = 1e-12


@dataclass(frozen=True)
class CurvePoint:
    j: float
    l: float
    partition: Partition | None = None  # None marks a time-shared point

    @property
    def m(self) -> float:
        return self.l - self.j

    def as_dict(self) -> dict:
        return {"j": self.j, "l": self.l, "m": self.m,
                "partition": self.partition.canonical_form if self.partition else "time-shared"}


@dataclass(frozen=True)
class SufficientStatistic:
    partition: Partition
    entropy: float
    h_y_given_w: float

    @property
    def h_yw(self) -> float:
        return self.entropy + self.h_y_given_w


@dataclass(frozen=True)
class SlopeReport:
    slopes: tuple[float, ...]
    min_slope: float
    max_slope: float
    violations: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(eq=False)
class MalleabilityCurve:
    """Raw partition points plus their lower convex envelope.

    Raw points are kept as parallel arrays (``raw_j``, ``raw_l``, ``raw_rgs``)
    because an exhaustive search can produce millions of them.
    """

    support: tuple[int, ...]
    raw_j: np.ndarray
    raw_l: np.ndarray
    raw_rgs: np.ndarray
    vertices: list[CurvePoint]
    sufficient: SufficientStatistic
    h_x: float
    h_y: float
    h_xy: float
    exact: bool = True
    _raw_points: list | None = field(default=None, repr=False)

    @property
    def h_w(self) -> float:
        return self.sufficient.entropy

    @property
    def h_yw(self) -> float:
        return self.sufficient.h_yw

    @property
    def raw_points(self) -> list[CurvePoint]:
        if self._raw_points is None:
            self._raw_points = [
                CurvePoint(float(j), float(l), Partition(tuple(r), self.support))
                for j, l, r in zip(self.raw_j, self.raw_l, self.raw_rgs)]
        return self._raw_points

    def __call__(self, j):
        return self.evaluate(j)

    def evaluate(self, j):
        """L*(j) on the envelope; scalar or array input."""
        arr = np.asarray(j, dtype=float)
        if np.any(arr < -BOUND_TOL):
            raise ValueError("envelope is defined for j >= 0 only")
        vj = np.array([v.j for v in self.vertices])
        vl = np.array([v.l for v in self.vertices])
        inside = np.interp(np.minimum(arr, vj[-1]), vj, vl)
        ray = self.h_yw + (arr - self.h_w)
        # the last vertex always sits at or beyond H(W), so the ray covers the tail
        out = np.where(arr >= self.h_w, ray, inside)
        return float(out) if out.ndim == 0 else out

    def slopes(self) -> np.ndarray:
        vj = np.array([v.j for v in self.vertices])
        vl = np.array([v.l for v in self.vertices])
        return np.diff(vl) / np.diff(vj)

    def on_envelope(self, tol: float = BOUND_TOL) -> np.ndarray:
        return self.raw_l - self.evaluate(self.raw_j) <= tol

    def point_at(self, j: float) -> CurvePoint:
        """Envelope point at ``j``; carries a partition only when ``j`` is a vertex."""
        for v in self.vertices:
            if abs(v.j - j) <= HULL_TOL:
                return v
        return CurvePoint(float(j), self.evaluate(j), None)


def evaluate_partition(d: JointDistribution, f: Partition) -> CurvePoint:
    j = entropy_of_function(d, f)
    return CurvePoint(j, j + conditional_entropy_y_given_function(d, f), f)


def minimal_sufficient_statistic(d: JointDistribution, row_tol: float = ROW_TOL) -> SufficientStatistic:
    """Group X symbols whose conditional rows p(Y|X=x) agree within ``row_tol``."""
    kernel = conditional_y_given_x(d)
    reps: list[np.ndarray] = []
    labels = []
    for x in kernel.support:
        row = kernel.row(x)
        for c, rep in enumerate(reps):
            if np.max(np.abs(row - rep)) <= row_tol:
                labels.append(c)
                break
        else:
            labels.append(len(reps))
            reps.append(row)
    w = Partition.from_labels(kernel.support, labels)
    return SufficientStatistic(w, entropy_of_function(d, w), conditional_entropy_y_given_function(d, w))


def is_minimal(d: JointDistribution, stat: SufficientStatistic, row_tol: float = ROW_TOL) -> bool:
    """Merging any two cells of W changes some conditional row by more than ``row_tol``."""
    kernel = conditional_y_given_x(d)
    cells = stat.partition.cells
    rows = [kernel.row(cell[0]) for cell in cells]
    return all(np.max(np.abs(rows[a] - rows[b])) > row_tol
               for a in range(len(cells)) for b in range(a + 1, len(cells)))


def _phi(t):
    return -t * math.log(t) if t > 0 else 0.0


def _phi_vec(v):
    out = np.zeros_like(v)
    pos = v > 0
    out[pos] = -v[pos] * np.log(v[pos])
    return out


def _expand_rgs(prefix: tuple[int, ...], n: int, max_cells: int | None) -> np.ndarray:
    """All length-``n`` RGS extending ``prefix``, as rows in lexicographic order."""
    cap = n if max_cells is None else max(1, min(max_cells, n))
    rgs = np.array([prefix], dtype=np.int8).reshape(1, len(prefix))
    top = np.array([max(prefix) + 1 if prefix else 0], dtype=np.int64)
    for _ in range(len(prefix), n):
        counts = np.minimum(top + 1, cap)
        rep = np.repeat(np.arange(len(rgs)), counts)
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        child = (np.arange(len(rep)) - starts).astype(np.int8)
        rgs = np.hstack([rgs[rep], child[:, None]])
        top = np.maximum(top[rep], child.astype(np.int64) + 1)
    return rgs


def _evaluate_block(args):
    """H(U) and H(U,Y) in nats for every RGS sharing ``prefix``."""
    px, rows, prefix, max_cells = args
    n = len(px)
    rgs = _expand_rgs(prefix, n, max_cells)
    m = len(rgs)
    ar = np.arange(m)
    pu = np.zeros((m, n))
    puy = np.zeros((m, n, rows.shape[1]))
    for i in range(n):
        pu[ar, rgs[:, i]] += px[i]
        puy[ar, rgs[:, i], :] += rows[i]
    with np.errstate(divide="ignore", invalid="ignore"):
        hu = -np.sum(np.where(pu > 0, pu * np.log(pu), 0.0), axis=1)
        huy = -np.sum(np.where(puy > 0, puy * np.log(puy), 0.0), axis=(1, 2))
    return rgs, hu, huy


def _support_arrays(d: JointDistribution):
    support = d.support_x()
    px = marginal_x(d)[list(support)]
    rows = d.pxy[list(support)]
    return support, px, rows


def _lower_hull(js, ls, order) -> list[int]:
    """Indices of the lower convex hull, left to right, with ties already ordered."""
    hull: list[int] = []
    last_j = None
    for i in order:
        if last_j is not None and abs(js[i] - last_j) <= HULL_TOL:
            continue  # same j: the first one seen has the lowest l
        last_j = js[i]
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (js[b] - js[a]) * (ls[i] - ls[a]) - (ls[b] - ls[a]) * (js[i] - js[a])
            if cross <= HULL_TOL:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def _assemble(d: JointDistribution, support, js, ls, rgs_list, exact: bool) -> MalleabilityCurve:
    stat = minimal_sufficient_statistic(d)
    w_point = evaluate_partition(d, stat.partition)
    js = np.asarray(js, dtype=float)
    ls = np.asarray(ls, dtype=float)
    rgs_arr = np.asarray(rgs_list, dtype=np.int16).reshape(len(js), len(support))
    all_j = np.append(js, w_point.j)
    all_l = np.append(ls, w_point.l)
    # lexsort keys: last is primary; rounding keeps float dust from breaking ties
    idx = np.arange(len(all_j))
    order = np.lexsort((idx, np.round(all_l, 10), np.round(all_j, 10)))
    hull = _lower_hull(all_j, all_l, order)
    vertices = []
    for i in hull:
        if i == len(js):
            part = stat.partition
        else:
            part = Partition(tuple(int(v) for v in rgs_arr[i]), support)
        vertices.append(CurvePoint(float(all_j[i]), float(all_l[i]), part))
    return MalleabilityCurve(
        support=support, raw_j=js, raw_l=ls, raw_rgs=rgs_arr, vertices=vertices,
        sufficient=stat, h_x=entropy_x(d), h_y=entropy_y(d), h_xy=joint_entropy(d), exact=exact)


def exact_curve(d: JointDistribution, max_cells: int | None = None,
                limit: int = EXACT_SEARCH_LIMIT, workers: int = 1) -> MalleabilityCurve:
    """Evaluate every partition of the X-support and take the lower envelope.

    The search is split by RGS prefix; blocks are merged in prefix order so
    the result does not depend on ``workers``.
    """
    support, px, rows = _support_arrays(d)
    n = len(support)
    check_exact_limit(n, limit)
    depth = min(n, 5)
    prefixes = list(enumerate_rgs(depth, max_cells))
    tasks = [(px, rows, p, max_cells) for p in prefixes]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(_evaluate_block, tasks))
    else:
        blocks = [_evaluate_block(t) for t in tasks]
    rgs = np.vstack([b[0] for b in blocks])
    scale = math.log(d.log_base)
    js = np.maximum(np.concatenate([b[1] for b in blocks]) / scale, 0.0)
    ls = np.concatenate([b[2] for b in blocks]) / scale
    return _assemble(d, support, js, ls, rgs, exact=True)


def _greedy_path(px, rows, rng, choices: int):
    """Agglomerative merging from singletons; returns the label vector at each level."""
    k = len(px)
    labels = list(range(k))
    mass = list(px)
    joint = [rows[i].copy() for i in range(k)]
    alive = list(range(k))
    path = [tuple(labels)]
    while len(alive) > 1:
        cand = []
        for ia in range(len(alive)):
            for ib in range(ia + 1, len(alive)):
                a, b = alive[ia], alive[ib]
                du = _phi(mass[a]) + _phi(mass[b]) - _phi(mass[a] + mass[b])
                duy = float(np.sum(_phi_vec(joint[a]) + _phi_vec(joint[b]) - _phi_vec(joint[a] + joint[b])))
                cost = (du - duy) / du if du > 0 else math.inf
                cand.append((cost, a, b))
        cand.sort()
        if rng is None or choices <= 1:
            _, a, b = cand[0]
        else:
            _, a, b = cand[int(rng.integers(min(choices, len(cand))))]
        mass[a] += mass[b]
        joint[a] = joint[a] + joint[b]
        alive.remove(b)
        labels = [a if v == b else v for v in labels]
        path.append(tuple(labels))
    return path


def heuristic_curve(d: JointDistribution, restarts: int = 10, seed: int = 0,
                    choices: int = 3) -> MalleabilityCurve:
    """Greedy agglomerative search; every returned point is a genuine partition.

    Restart 0 is the pure greedy path (merge the pair with the smallest rise in
    H(Y|U) per unit drop in H(U)); later restarts pick uniformly among the
    ``choices`` cheapest merges using a stream seeded by (seed, restart).
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    support, px, rows = _support_arrays(d)
    seen: dict[tuple, int] = {}
    rgs_list, js, ls = [], [], []
    for r in range(restarts):
        rng = None if r == 0 else np.random.default_rng(np.random.SeedSequence([seed, r]))
        for labels in _greedy_path(px, rows, rng, choices):
            part = Partition.from_labels(support, labels)
            if part.rgs in seen:
                continue
            seen[part.rgs] = len(rgs_list)
            pt = evaluate_partition(d, part)
            rgs_list.append(part.rgs)
            js.append(pt.j)
            ls.append(pt.l)
    return _assemble(d, support, js, ls, rgs_list, exact=False)


def check_slope_bounds(curve: MalleabilityCurve, tol: float = BOUND_TOL) -> SlopeReport:
    """Slopes of every envelope segment, flagging any outside [0, 1]."""
    if len(curve.vertices) < 2:
        return SlopeReport((), math.nan, math.nan, ())
    s = curve.slopes()
    bad = tuple(int(i) for i in np.flatnonzero((s < -tol) | (s > 1 + tol)))
    return SlopeReport(tuple(float(v) for v in s), float(s.min()), float(s.max()), bad)


def simple_bounds(d: JointDistribution, j):
    """The three elementary bounds at reuse rate ``j``: (lower_a, lower_b, upper_c)."""
    hy = entropy_y(d)
    j = np.asarray(j, dtype=float)
    return np.full_like(j, hy), j.copy(), j + hy


def bound_violations(d: JointDistribution, curve: MalleabilityCurve, tol: float = BOUND_TOL) -> int:
    """Number of raw points breaking l >= H(Y), l >= j or l <= j + H(Y)."""
    a, b, c = simple_bounds(d, curve.raw_j)
    bad = (curve.raw_l < a - tol) | (curve.raw_l < b - tol) | (curve.raw_l > c + tol)
    return int(np.count_nonzero(bad))


def sufficient_regime_gap(curve: MalleabilityCurve, d: JointDistribution, js) -> np.ndarray:
    """envelope(j) - j - H(Y|X) on ``js``; zero where the sufficient-statistic regime holds."""
    js = np.asarray(js, dtype=float)
    return curve.evaluate(js) - js - conditional_entropy_y_given_x(d)
