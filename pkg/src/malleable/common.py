"""Gacs-Korner common information from the support graph of p(x, y).

The maximal common function f(X) = g(Y) is the index of the connected
component of the bipartite graph with an edge x -- y whenever
p(x, y) > 0. Its entropy is C(X;Y).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .dist import ZERO_THRESHOLD, JointDistribution, entropy, entropy_y, marginal_x
from .partitions import Partition


@dataclass(frozen=True)
class CommonDecomposition:
    components: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]  # (x indices, y indices)
    component_probs: tuple[float, ...]
    c_value: float

    @property
    def num_components(self) -> int:
        return sum(1 for p in self.component_probs if p > ZERO_THRESHOLD)

    def x_partition(self, support: tuple[int, ...]) -> Partition:
        """The common function viewed as a partition of the X-support."""
        owner = {x: k for k, (xs, _) in enumerate(self.components) for x in xs}
        return Partition.from_labels(support, [owner[x] for x in support])


def gacs_korner(d: JointDistribution) -> CommonDecomposition:
    xs = d.support_x()
    ys = d.support_y()
    nx = len(xs)
    edges = np.argwhere(d.pxy[np.ix_(xs, ys)] > ZERO_THRESHOLD)
    # nodes 0..nx-1 are X symbols, nx.. are Y symbols
    graph = coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1] + nx)),
                       shape=(nx + len(ys), nx + len(ys)))
    _, labels = connected_components(graph, directed=False)
    # renumber components by first appearance along the X-support order
    order: dict[int, int] = {}
    for lab in labels[:nx]:
        order.setdefault(int(lab), len(order))
    comps_x: list[list[int]] = [[] for _ in order]
    comps_y: list[list[int]] = [[] for _ in order]
    for i, x in enumerate(xs):
        comps_x[order[int(labels[i])]].append(x)
    for i, y in enumerate(ys):
        comps_y[order[int(labels[nx + i])]].append(y)
    px = marginal_x(d)
    probs = tuple(float(sum(px[x] for x in cx)) for cx in comps_x)
    comps = tuple((tuple(cx), tuple(cy)) for cx, cy in zip(comps_x, comps_y))
    # a single component has C = 0 exactly, whatever rounding the marginal carries
    positive = sum(1 for p in probs if p > ZERO_THRESHOLD)
    c_value = entropy(probs, d.log_base) if positive > 1 else 0.0
    return CommonDecomposition(comps, probs, c_value)


def is_indecomposable(d: JointDistribution) -> bool:
    return gacs_korner(d).num_components == 1


def converse_malleability_bound(d: JointDistribution) -> float:
    """H(Y) - C(X;Y): least malleability when K = H(X) and L = H(Y) are required."""
    return entropy_y(d) - gacs_korner(d).c_value


def gk_report(d: JointDistribution) -> dict:
    dec = gacs_korner(d)
    ax, ay = d.alphabet_x.symbols, d.alphabet_y.symbols
    return {
        "components": [{"x": [ax[x] for x in cx], "y": [ay[y] for y in cy]}
                       for cx, cy in dec.components],
        "component_probs": list(dec.component_probs),
        "C": dec.c_value,
        "indecomposable": dec.num_components == 1,
        "converse_bound": entropy_y(d) - dec.c_value,
    }
