"""Integration grids on the unit cube and composite Gauss-Legendre rules."""

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

GL_NODES = 64
QMC_POINTS = 100_000
QMC_SEED = 20240531


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    points: np.ndarray  # (N, d)
    weights: np.ndarray  # (N,)

    @property
    def d(self):
        return self.points.shape[1]

    def integrate(self, values):
        """Integrate pointwise ``values`` (leading axis N) against the weights."""
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))


def gauss_legendre(n, lo=0.0, hi=1.0):
    if n < 2:
        raise ValueError(f"degenerate quadrature with {n} node(s)")
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def composite_gauss_legendre(edges, n):
    """Gauss-Legendre with ``n`` nodes on each panel between consecutive edges."""
    edges = np.asarray(edges, dtype=float)
    x, w = np.polynomial.legendre.leggauss(n)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = lo + half * (x[None, :] + 1.0)
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def tensor_grid(d, n=GL_NODES):
    """Tensor Gauss-Legendre on [0, 1]^d."""
    x, w = gauss_legendre(n)
    mesh = np.meshgrid(*([x] * d), indexing="ij")
    wmesh = np.meshgrid(*([w] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=1)
    wts = np.prod(np.stack([g.ravel() for g in wmesh], axis=1), axis=1)
    return QuadratureGrid(pts, wts)


def qmc_grid(d, n=QMC_POINTS, seed=QMC_SEED):
    """Scrambled Halton points on [0, 1]^d with equal weights."""
    pts = qmc.Halton(d=d, scramble=True, seed=seed).random(n)
    return QuadratureGrid(pts, np.full(n, 1.0 / n))


def default_grid(d):
    """64-point tensor Gauss-Legendre for d <= 2, 10^5 Halton points above."""
    return tensor_grid(d) if d <= 2 else qmc_grid(d)
