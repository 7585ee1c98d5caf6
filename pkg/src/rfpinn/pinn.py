"""Dirichlet problems ``-Lap u + V u = f`` on [0, 1]^d and their PINN objective.

For output weights ``a`` of the network ``u(x) = sum_j a_j sigma(w_j.x + b_j)``
the empirical objective is

    F_n(a) = (|Omega| / n) |Phi_int a + g1|^2 + (|dOmega| / n) |Phi_bd a + g2|^2
             + lam |a|^2

with ``Phi_int[i, j] = -|w_j|^2 sigma''(w_j.x_i + b_j) + V(x_i) sigma(w_j.x_i + b_j)``,
``Phi_bd[i, j] = sigma(w_j.y_i + b_j)``, ``g1 = -f(x_i)`` and ``g2 = -g(y_i)``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .activation import ActivationKind
from .quadrature import default_grid


class DataError(ValueError):
    """Problem data (V, f or g) is not finite at a sample point."""


class UnsupportedMetric(ValueError):
    pass


@dataclass(frozen=True)
class EllipticProblem:
    d: int
    V: Callable
    f: Callable
    g: Callable
    exact_solution: Optional[Callable] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    @property
    def interior_measure(self):
        return 1.0

    @property
    def boundary_measure(self):
        # counting measure on {0, 1} in 1D, total face area otherwise
        return 2.0 if self.d == 1 else 2.0 * self.d


# building blocks for configs --------------------------------------------------


def _zero(X):
    return np.zeros(len(X))


def _const(c):
    return lambda X: np.full(len(X), float(c))


class SineProduct:
    """``amp * prod_k sin(pi x_k)``; vanishes on the boundary of the cube."""

    def __init__(self, amp=1.0):
        self.amp = float(amp)

    def __call__(self, X):
        return self.amp * np.prod(np.sin(math.pi * X), axis=1)

    def neg_laplacian(self, X):
        return X.shape[1] * math.pi**2 * self(X)


class Quadratic:
    """``amp * sum_k x_k^2``; non-zero boundary data."""

    def __init__(self, amp=1.0):
        self.amp = float(amp)

    def __call__(self, X):
        return self.amp * np.sum(X**2, axis=1)

    def neg_laplacian(self, X):
        return np.full(len(X), -2.0 * X.shape[1] * self.amp)


SOLUTIONS = {"sine_product": SineProduct, "quadratic": Quadratic}


def _coefficient(spec):
    """``V``/``f``/``g`` from a config value: a number, ``"zero"`` or
    ``{"name": "const", "c": ...}``."""
    if spec is None or spec == "zero":
        return _zero
    if isinstance(spec, (int, float)):
        return _const(spec)
    if isinstance(spec, dict):
        name = spec.get("name", "const")
        if name == "zero":
            return _zero
        if name == "const":
            return _const(spec.get("c", 0.0))
        if name in SOLUTIONS:
            return SOLUTIONS[name](spec.get("amp", 1.0))
    raise ValueError(f"unrecognized coefficient spec {spec!r}")


def manufactured(solution, V=_zero, d=1, name="manufactured", params=None):
    """Problem whose exact solution is ``solution`` (needs ``neg_laplacian``)."""

    def f(X):
        return solution.neg_laplacian(X) + V(X) * solution(X)

    return EllipticProblem(d, V, f, solution, solution, name, dict(params or {}))


def poisson1d():
    """``-u'' = pi^2 sin(pi x)`` on [0, 1], ``u(0) = u(1) = 0``; ``u* = sin(pi x)``."""
    return manufactured(SineProduct(), d=1, name="poisson1d")


def poisson(d=1):
    return manufactured(SineProduct(), d=d, name="poisson", params={"d": d})


def schrodinger(d=1, c=1.0):
    """Constant potential ``V = c > 0`` with the sine-product solution."""
    if not c > 0:
        raise ValueError(f"schrodinger potential must be positive, got {c}")
    return manufactured(SineProduct(), V=_const(c), d=d, name="schrodinger",
                        params={"d": d, "c": c})


PROBLEMS = {
    "poisson1d": lambda **kw: poisson1d(),
    "poisson": lambda d=1, **kw: poisson(d),
    "schrodinger": lambda d=1, c=1.0, **kw: schrodinger(d, c),
}


def problem_from_config(cfg):
    """Build a problem from a config mapping.

    Either ``{"problem": "<registered name>", "d": .., "c": ..}`` or explicit
    ``{"d": .., "V": .., "f": .., "g": ..}`` with optional ``solution``
    (``{"name": "sine_product" | "quadratic", "amp": ..}``); with a solution
    and no ``f``, ``f`` and ``g`` are manufactured from it.
    """
    if "problem" in cfg and cfg["problem"] in PROBLEMS:
        kw = {k: cfg[k] for k in ("d", "c") if k in cfg}
        return PROBLEMS[cfg["problem"]](**kw)
    if "problem" in cfg and cfg["problem"] not in (None, "custom"):
        raise ValueError(f"unknown problem {cfg['problem']!r}; choose from {sorted(PROBLEMS)}")
    d = int(cfg.get("d", 1))
    V = _coefficient(cfg.get("V"))
    sol_spec = cfg.get("solution")
    if sol_spec is not None and "f" not in cfg:
        sol = _coefficient(sol_spec if isinstance(sol_spec, dict) else {"name": sol_spec})
        return manufactured(sol, V=V, d=d, name="custom", params=dict(cfg))
    sol = _coefficient(sol_spec) if sol_spec is not None else None
    return EllipticProblem(d, V, _coefficient(cfg.get("f")), _coefficient(cfg.get("g")),
                           sol, "custom", dict(cfg))


# collocation ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CollocationSet:
    X: np.ndarray
    Y: np.ndarray
    seed: int

    @property
    def n(self):
        return self.X.shape[0]


def _open_unit(rng, shape):
    # integers in [1, 2^53) / 2^53 lie strictly inside (0, 1)
    return rng.integers(1, 2**53, size=shape) / 2.0**53


def sample_collocation(problem, n, seed):
    """``n`` interior points uniform on (0, 1)^d and ``n`` boundary points.

    Boundary points pick one of the 2d faces uniformly (all faces have unit
    measure), then a uniform point on it.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"need n >= 1 collocation points, got {n}")
    d = problem.d
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0xC011])))
    X = _open_unit(rng, (n, d))
    face = rng.integers(0, 2 * d, size=n)
    Y = rng.random((n, d))
    Y[np.arange(n), face // 2] = (face % 2).astype(float)
    return CollocationSet(X, Y, int(seed))


# assembly ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    Phi_int: np.ndarray
    Phi_bd: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    w_int: float
    w_bd: float
    lam: float

    @property
    def n(self):
        return self.Phi_int.shape[0]

    @property
    def m(self):
        return self.Phi_int.shape[1]

    def with_lambda(self, lam):
        return AssembledSystem(self.Phi_int, self.Phi_bd, self.g1, self.g2,
                               self.w_int, self.w_bd, float(lam))

    def residuals(self, a):
        return self.Phi_int @ a + self.g1, self.Phi_bd @ a + self.g2

    def data_loss(self, a):
        r1, r2 = self.residuals(a)
        return self.w_int * np.mean(r1**2) + self.w_bd * np.mean(r2**2)

    def loss(self, a):
        return self.data_loss(a) + self.lam * float(a @ a)

    def gradient(self, a):
        r1, r2 = self.residuals(a)
        n = self.n
        return (2.0 * self.w_int / n) * (self.Phi_int.T @ r1) + \
            (2.0 * self.w_bd / n) * (self.Phi_bd.T @ r2) + 2.0 * self.lam * a

    def hessian_matvec(self, v):
        """Apply half the Hessian, ``G v``, without forming ``G``."""
        n = self.n
        return (self.w_int / n) * (self.Phi_int.T @ (self.Phi_int @ v)) + \
            (self.w_bd / n) * (self.Phi_bd.T @ (self.Phi_bd @ v)) + self.lam * v

    @functools.cached_property
    def _data_gram(self):
        n = self.n
        G = (self.w_int / n) * (self.Phi_int.T @ self.Phi_int)
        G += (self.w_bd / n) * (self.Phi_bd.T @ self.Phi_bd)
        G.setflags(write=False)
        return G

    @functools.cached_property
    def _rhs(self):
        n = self.n
        r = -(self.w_int / n) * (self.Phi_int.T @ self.g1) - \
            (self.w_bd / n) * (self.Phi_bd.T @ self.g2)
        r.setflags(write=False)
        return r

    @functools.cached_property
    def data_constant(self):
        """``F_n(0)``, the data term at zero coefficients."""
        return self.w_int * float(np.mean(self.g1**2)) + self.w_bd * float(np.mean(self.g2**2))

    def normal_matrix(self):
        """``G = (w_int/n) Phi_int^T Phi_int + (w_bd/n) Phi_bd^T Phi_bd + lam I``."""
        G = self._data_gram.copy()
        G[np.diag_indices_from(G)] += self.lam
        return G

    def normal_rhs(self):
        """``rhs`` with ``grad F_n(a) = 2 (G a - rhs)``."""
        return self._rhs.copy()

    def quadratic(self):
        """``(G, rhs, c)`` with ``F_n(a) = a.G a - 2 rhs.a + c``."""
        return self.normal_matrix(), self.normal_rhs(), self.data_constant


def _checked(fn, pts, label):
    vals = np.asarray(fn(pts), dtype=float).reshape(-1)
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise DataError(f"{label} is not finite at point {pts[i].tolist()} (value {vals[i]})")
    return vals


def assemble(problem, bank, colloc, kind, lam):
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    if bank.d != problem.d or colloc.X.shape[1] != problem.d:
        raise ValueError(
            f"dimension mismatch: problem d={problem.d}, bank d={bank.d}, "
            f"collocation d={colloc.X.shape[1]}"
        )
    kind = ActivationKind.parse(kind)
    X, Y = colloc.X, colloc.Y
    V = _checked(problem.V, X, "V")
    f = _checked(problem.f, X, "f")
    g = _checked(problem.g, Y, "g")
    Phi_int = kernels.interior_matrix(X, bank.W, bank.B, V, kind.code)
    Phi_bd = kernels.feature_matrix(Y, bank.W, bank.B, kind.code, 0)
    return AssembledSystem(Phi_int, Phi_bd, -f, -g, problem.interior_measure,
                           problem.boundary_measure, float(lam))


def empirical_loss(system, a):
    a = np.asarray(a, dtype=float)
    if a.shape != (system.m,):
        raise ValueError(f"coefficient vector has shape {a.shape}, expected ({system.m},)")
    return float(system.loss(a))


def estimate_test_loss(problem, bank, kind, a, n_test, seed, return_stderr=False):
    """Monte-Carlo estimate of the population PINN loss on fresh points (no lam term)."""
    colloc = sample_collocation(problem, n_test, seed)
    system = assemble(problem, bank, colloc, kind, 0.0)
    r1, r2 = system.residuals(np.asarray(a, dtype=float))
    per_point = system.w_int * r1**2 + system.w_bd * r2**2
    est = float(per_point.mean())
    if return_stderr:
        return est, float(per_point.std(ddof=1) / math.sqrt(len(per_point)))
    return est


def network_values(bank, kind, a, X):
    kind = ActivationKind.parse(kind)
    return kernels.feature_matrix(np.asarray(X, dtype=float), bank.W, bank.B, kind.code, 0) @ a


def relative_l2_error(problem, bank, kind, a, grid=None):
    """``|u_a - u*|_L2 / |u*|_L2`` over [0, 1]^d by quadrature."""
    if problem.exact_solution is None:
        raise UnsupportedMetric(f"problem {problem.name!r} has no exact solution")
    grid = default_grid(problem.d) if grid is None else grid
    exact = problem.exact_solution(grid.points)
    approx = network_values(bank, kind, np.asarray(a, dtype=float), grid.points)
    return math.sqrt(grid.integrate((approx - exact) ** 2) / grid.integrate(exact**2))
