"""Information-bottleneck relaxation of the reuse problem.

Soft encoders p(u|x) trace

    F(R) = min H(Y|U)  s.t.  I(U;X) <= R,      B(R) = H(Y) - F(R),

by the self-consistent iteration

    p(u|x)  proportional to  p(u) exp(-beta * D(p(y|x) || p(y|u)))

which never increases the Lagrangian I(U;X) + beta * H(Y|U). Deterministic
encoders are a subset of the feasible set, so F lies below the exact
partition curve's l - j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dist import JointDistribution, marginal_x, mutual_information
from .errors import NumericalError

DEFAULT_RESTARTS = 10
MAX_ITER = 5000
CONV_TOL = 1e-10
IDENTITY_TOL = 1e-6
_NEG = -1e250


def default_beta_grid(num: int = 50, lo: float = 0.01, hi: float = 100.0) -> np.ndarray:
    return np.logspace(math.log10(lo), math.log10(hi), num)


@dataclass(frozen=True, eq=False)
class SoftEncoder:
    rows: np.ndarray  # (|X-support|, u_card)

    @property
    def u_card(self) -> int:
        return self.rows.shape[1]

    @classmethod
    def uniform(cls, n_x: int, u_card: int) -> "SoftEncoder":
        return cls(np.full((n_x, u_card), 1.0 / u_card))

    @classmethod
    def perturbed(cls, n_x: int, u_card: int, rng: np.random.Generator) -> "SoftEncoder":
        w = 1.0 + 0.9 * (2 * rng.random((n_x, u_card)) - 1)
        return cls(w / w.sum(axis=1, keepdims=True))


@dataclass(frozen=True)
class TradeoffPoint:
    beta: float
    i_ux: float
    h_y_given_u: float
    i_yu: float
    converged: bool
    iterations: int

    def as_dict(self) -> dict:
        return {"beta": self.beta, "i_ux": self.i_ux, "i_yu": self.i_yu,
                "h_y_given_u": self.h_y_given_u, "converged": self.converged,
                "iterations": self.iterations}


def _source(d: JointDistribution):
    support = list(d.support_x())
    px = marginal_x(d)[support]
    pyx = d.pxy[support] / px[:, None]
    return px, pyx


def _stats(px, pyx, q):
    """Batched p(u), p(u,y) for encoders q of shape (B, X, U)."""
    pu = np.einsum("x,bxu->bu", px, q)
    puy = np.einsum("x,bxu,xy->buy", px, q, pyx)
    return pu, puy


def _step(px, pyx, q, beta):
    pu, puy = _stats(px, pyx, q)
    with np.errstate(divide="ignore", invalid="ignore"):
        pyu = puy / pu[:, :, None]
        log_pyu = np.where(puy > 0, np.log(np.where(puy > 0, pyu, 1.0)), _NEG)
        log_pu = np.where(pu > 0, np.log(np.where(pu > 0, pu, 1.0)), -np.inf)
    neg_ent = np.sum(np.where(pyx > 0, pyx * np.log(np.where(pyx > 0, pyx, 1.0)), 0.0), axis=1)
    cross = np.einsum("xy,buy->bxu", pyx, log_pyu)
    div = neg_ent[None, :, None] - cross
    with np.errstate(invalid="ignore"):
        logits = log_pu[:, None, :] - beta[:, None, None] * div
    top = logits.max(axis=2, keepdims=True)
    if not np.all(np.isfinite(top)):
        raise NumericalError(
            "every encoder weight underflowed for some source symbol; "
            "beta is too large for the working precision")
    w = np.exp(logits - top)
    return w / w.sum(axis=2, keepdims=True)


def _measure(px, pyx, q, base):
    """(I(U;X), H(Y|U), I(Y;U)) for encoders of shape (B, X, U), in ``base`` units."""
    pu, puy = _stats(px, pyx, q)
    py = px @ pyx
    scale = math.log(base)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio_ux = np.where(q > 0, q / pu[:, None, :], 1.0)
        i_ux = np.einsum("x,bxu->b", px, np.where(q > 0, q * np.log(ratio_ux), 0.0))
        pyu = np.where(puy > 0, puy / pu[:, :, None], 1.0)
        h_y_u = -np.sum(np.where(puy > 0, puy * np.log(pyu), 0.0), axis=(1, 2))
        ratio_uy = np.where(puy > 0, puy / (pu[:, :, None] * py[None, None, :]), 1.0)
        i_yu = np.sum(np.where(puy > 0, puy * np.log(ratio_uy), 0.0), axis=(1, 2))
    return np.maximum(i_ux, 0) / scale, np.maximum(h_y_u, 0) / scale, np.maximum(i_yu, 0) / scale


def lagrangian(d: JointDistribution, enc: SoftEncoder, beta: float) -> float:
    """I(U;X) + beta * H(Y|U), in units of ``d.log_base``."""
    px, pyx = _source(d)
    i_ux, h_y_u, _ = _measure(px, pyx, enc.rows[None], d.log_base)
    return float(i_ux[0] + beta * h_y_u[0])


def ib_step(d: JointDistribution, enc: SoftEncoder, beta: float) -> SoftEncoder:
    if beta < 0:
        raise ValueError("beta must be >= 0")
    px, pyx = _source(d)
    q = _step(px, pyx, enc.rows[None], np.array([float(beta)]))
    return SoftEncoder(q[0])


def measure(d: JointDistribution, enc: SoftEncoder) -> tuple[float, float, float]:
    px, pyx = _source(d)
    a, b, c = _measure(px, pyx, enc.rows[None], d.log_base)
    return float(a[0]), float(b[0]), float(c[0])


def _iterate(px, pyx, q, beta, max_iter, tol):
    b = q.shape[0]
    done = np.zeros(b, dtype=bool)
    iters = np.full(b, max_iter, dtype=int)
    for it in range(1, max_iter + 1):
        live = ~done
        q_new = _step(px, pyx, q[live], beta[live])
        change = np.max(np.abs(q_new - q[live]), axis=(1, 2))
        q[live] = q_new
        idx = np.flatnonzero(live)
        newly = idx[change < tol]
        done[newly] = True
        iters[newly] = it
        if done.all():
            break
    return q, done, iters


def sweep_beta(d: JointDistribution, beta_grid=None, restarts: int = DEFAULT_RESTARTS,
               seed: int = 0, u_card: int | None = None, max_iter: int = MAX_ITER,
               tol: float = CONV_TOL, return_all: bool = False):
    """Best fixed point (lowest Lagrangian over restarts) for every beta.

    Each (beta index, restart) task draws its initial encoder from its own
    stream seeded by (seed, beta index, restart); tasks are iterated as one
    batch, so results do not depend on evaluation order.
    """
    grid = default_beta_grid() if beta_grid is None else np.asarray(beta_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("beta grid must be nonempty")
    if np.any(grid < 0):
        raise ValueError("beta must be >= 0")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    px, pyx = _source(d)
    k = len(px) + 1 if u_card is None else int(u_card)
    inits, betas = [], []
    for bi, beta in enumerate(grid):
        for r in range(restarts):
            rng = np.random.default_rng(np.random.SeedSequence([seed, bi, r]))
            inits.append(SoftEncoder.perturbed(len(px), k, rng).rows)
            betas.append(beta)
    q = np.array(inits)
    beta_arr = np.array(betas)
    q, done, iters = _iterate(px, pyx, q, beta_arr, max_iter, tol)
    i_ux, h_y_u, i_yu = _measure(px, pyx, q, d.log_base)
    every = [TradeoffPoint(float(beta_arr[t]), float(i_ux[t]), float(h_y_u[t]), float(i_yu[t]),
                           bool(done[t]), int(iters[t])) for t in range(len(beta_arr))]
    best = []
    for bi in range(len(grid)):
        chunk = every[bi * restarts:(bi + 1) * restarts]
        # ties go to the lowest restart index
        best.append(min(chunk, key=lambda p: p.i_ux + p.beta * p.h_y_given_u))
    best.sort(key=lambda p: (p.i_ux, p.beta))
    if return_all:
        return best, every
    return best


@dataclass(frozen=True)
class IBEnvelope:
    """Convex, nonincreasing upper bound on F(R) built from feasible points."""

    rates: tuple[float, ...]
    values: tuple[float, ...]
    h_y: float

    def F(self, r):
        arr = np.asarray(r, dtype=float)
        out = np.interp(arr, self.rates, self.values)
        return float(out) if out.ndim == 0 else out

    def B(self, r):
        return self.h_y - self.F(r)


def ib_envelope(points, h_y: float) -> IBEnvelope:
    """Lower convex hull of (i_ux, h_y_given_u), anchored at the constant encoder (0, H(Y))."""
    pts = sorted({(0.0, float(h_y))} | {(p.i_ux, p.h_y_given_u) for p in points})
    hull: list[tuple[float, float]] = []
    for x, y in pts:
        if hull and abs(x - hull[-1][0]) <= 1e-15:
            continue
        while len(hull) >= 2:
            (x0, y0), (x1, y1) = hull[-2], hull[-1]
            if (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0) <= 0:
                hull.pop()
            else:
                break
        hull.append((x, y))
    # F is nonincreasing: stop at the minimum and stay flat after it
    cut = int(np.argmin([y for _, y in hull]))
    hull = hull[:cut + 1]
    return IBEnvelope(tuple(x for x, _ in hull), tuple(y for _, y in hull), float(h_y))


@dataclass(frozen=True)
class ComparisonRow:
    j: float
    exact_m: float
    relaxed_f: float
    covered: bool = True  # j lies within the range of rates the sweep reached

    @property
    def ok(self) -> bool:
        return self.relaxed_f <= self.exact_m + IDENTITY_TOL


@dataclass(frozen=True)
class Comparison:
    rows: tuple[ComparisonRow, ...]

    @property
    def failures(self) -> list[ComparisonRow]:
        return [r for r in self.rows if r.covered and not r.ok]

    @property
    def uncovered(self) -> list[ComparisonRow]:
        return [r for r in self.rows if not r.covered]

    @property
    def ok(self) -> bool:
        return not self.failures


def compare_to_exact(points, curve, h_y: float | None = None) -> Comparison:
    """Check F(j) <= l - j at every vertex (j, l) of the exact envelope.

    Vertices beyond the largest rate any sweep point reached are marked
    uncovered unless F already sits at its floor H(Y|X) there; otherwise F is
    only the flat continuation of the last point and the comparison says
    nothing about the relaxation.
    """
    h_y = curve.h_y if h_y is None else h_y
    env = ib_envelope(points, h_y)
    reach = max((p.i_ux for p in points), default=0.0)
    floor = curve.sufficient.h_y_given_w
    saturated = env.F(reach) <= floor + IDENTITY_TOL
    rows = tuple(ComparisonRow(v.j, v.m, env.F(v.j), saturated or v.j <= reach + 1e-9)
                 for v in curve.vertices)
    return Comparison(rows)


def identity_gap(points, h_y: float) -> float:
    """Largest |h_y_given_u + i_yu - H(Y)| over ``points``."""
    return max((abs(p.h_y_given_u + p.i_yu - h_y) for p in points), default=0.0)


def predictive_ceiling(d: JointDistribution) -> float:
    """I(X;Y): the most any encoder can learn about Y."""
    return mutual_information(d)

