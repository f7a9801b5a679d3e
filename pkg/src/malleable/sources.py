"""Named joint sources used in examples, tests and the CLI."""

import numpy as np

from .dist import JointDistribution


def dsbs(p: float, log_base: float = 2.0) -> JointDistribution:
    """Doubly symmetric binary source: X ~ Bern(1/2), Y = X xor Bern(p)."""
    return JointDistribution.from_matrix(
        [[(1 - p) / 2, p / 2], [p / 2, (1 - p) / 2]], log_base)


def copy_source(k: int = 2, log_base: float = 2.0) -> JointDistribution:
    """X uniform on k symbols and Y = X."""
    return JointDistribution.from_matrix(np.eye(k) / k, log_base)


def independent(px, py, log_base: float = 2.0) -> JointDistribution:
    return JointDistribution.from_matrix(np.outer(px, py), log_base)


def uniform_independent(kx: int = 2, ky: int = 2, log_base: float = 2.0) -> JointDistribution:
    return independent(np.full(kx, 1 / kx), np.full(ky, 1 / ky), log_base)


def mod_source(k: int = 4, m: int = 2, log_base: float = 2.0) -> JointDistribution:
    """X uniform on {0..k-1} and Y = X mod m."""
    pxy = np.zeros((k, m))
    for x in range(k):
        pxy[x, x % m] = 1 / k
    return JointDistribution.from_matrix(pxy, log_base)


def block_diagonal(log_base: float = 2.0) -> JointDistribution:
    """4x4 joint with blocks {0,1}x{0,1} and {2,3}x{2,3}, each cell 1/8."""
    pxy = np.zeros((4, 4))
    pxy[:2, :2] = 1 / 8
    pxy[2:, 2:] = 1 / 8
    return JointDistribution.from_matrix(pxy, log_base)


def point_mass(kx: int = 2, ky: int = 2, log_base: float = 2.0) -> JointDistribution:
    pxy = np.zeros((kx, ky))
    pxy[0, 0] = 1.0
    return JointDistribution.from_matrix(pxy, log_base)


def random_joint(rng: np.random.Generator, nx: int, ny: int, sparsity: float = 0.0,
                 log_base: float = 2.0) -> JointDistribution:
    """Dirichlet(1) joint pmf; ``sparsity`` zeroes a fraction of cells at random.

    Every X row keeps at least one positive cell so the X-support has size nx.
    """
    w = rng.dirichlet(np.ones(nx * ny)).reshape(nx, ny)
    if sparsity > 0:
        mask = rng.random((nx, ny)) < sparsity
        for x in range(nx):
            if mask[x].all():
                mask[x, rng.integers(ny)] = False
        w = np.where(mask, 0.0, w)
    w = w / w.sum()
    return JointDistribution.from_matrix(w, log_base)


NAMED = {
    "dsbs": lambda: dsbs(0.11),
    "copy": lambda: copy_source(2),
    "independent": lambda: uniform_independent(2, 2),
    "mod2": lambda: mod_source(4, 2),
    "block": block_diagonal,
}
