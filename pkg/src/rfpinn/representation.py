"""Monte-Carlo random-feature approximants of Barron targets.

Fourier convention: ``f(x) = int exp(i w.x) fhat(w) dw``, so the unit
Gaussian ``exp(-|x|^2 / 2)`` has ``fhat(w) = (2 pi)^(-d/2) exp(-|w|^2 / 2)``.

Since ``int sigma(w.x + b) exp(-i b) db = sigma_hat(1) exp(i w.x)``, every
target admits the ridge-function representation

    f(x) = c / (2 pi |sigma_hat(1)|) int int sigma(w.x + b) |fhat(w)|
           cos(theta(w) - b - phi) db dw,

with ``phi = arg sigma_hat(1)`` (zero for the even Spline34).  The global
constant ``c`` is fitted once per activation by :func:`representation_constant`
against a dense quadrature of the truncated integral and then reused by the
coefficient builders.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .activation import ActivationKind, sigma_hat_one
from .quadrature import composite_gauss_legendre, default_grid
from .sampling import CompactPrior, FeatureBank, HeavyTailPrior, prior_density

DEFAULT_C_IND = 3.0


# targets ---------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianComponent:
    amplitude: float
    center: tuple
    width: float = 1.0


@dataclass(frozen=True)
class GaussianMixtureTarget:
    """Sum of isotropic Gaussians ``a exp(-|x - c|^2 / (2 l^2))``.

    Value, gradient, Hessian and Fourier transform are all closed form.
    """

    components: tuple
    label: str = "gaussian"

    @property
    def d(self):
        return len(self.components[0].center)

    def _parts(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        for c in self.components:
            diff = X - np.asarray(c.center, dtype=float)[None, :]
            g = c.amplitude * np.exp(-np.einsum("nd,nd->n", diff, diff) / (2 * c.width**2))
            yield c, diff, g

    def value(self, X):
        return sum(g for _, _, g in self._parts(X))

    def gradient(self, X):
        return sum(-(diff / c.width**2) * g[:, None] for c, diff, g in self._parts(X))

    def hessian(self, X):
        total = 0.0
        for c, diff, g in self._parts(X):
            l2 = c.width**2
            outer = np.einsum("ns,nt->nst", diff, diff) / l2**2
            eye = np.eye(diff.shape[1])[None] / l2
            total = total + (outer - eye) * g[:, None, None]
        return total

    def fourier(self, omega):
        """Complex ``fhat(omega)``; ``omega`` has shape (..., d)."""
        omega = np.asarray(omega, dtype=float)
        if omega.ndim == 0:
            omega = omega.reshape(1)
        total = 0.0
        for c in self.components:
            l2 = c.width**2
            amp = c.amplitude * (l2 / (2 * math.pi)) ** (self.d / 2)
            r2 = np.sum(omega**2, axis=-1)
            phase = -(omega @ np.asarray(c.center, dtype=float))
            total = total + amp * np.exp(-0.5 * l2 * r2) * np.exp(1j * phase)
        return total

    def fourier_modulus(self, omega):
        return np.abs(self.fourier(omega))

    def phase(self, omega):
        return np.angle(self.fourier(omega))

    def fourier_sup(self):
        """Upper bound on sup |fhat|; exact when all amplitudes are >= 0."""
        return sum(
            abs(c.amplitude) * (c.width**2 / (2 * math.pi)) ** (self.d / 2)
            for c in self.components
        )


def zero_target(d=1):
    return GaussianMixtureTarget((GaussianComponent(0.0, (0.0,) * d),), label="zero")


def gaussian(d=1, center=None, width=1.0, amplitude=1.0, label=None):
    center = tuple(float(v) for v in (center if center is not None else (0.0,) * d))
    if len(center) != d:
        raise ValueError(f"center has {len(center)} entries, expected {d}")
    name = label or ("gaussian" if not any(center) and width == 1.0 else "gaussian_shifted")
    return GaussianMixtureTarget((GaussianComponent(float(amplitude), center, float(width)),), name)


def gaussian_mixture(d=1):
    comps = (
        GaussianComponent(1.0, (0.3,) * d, 0.6),
        GaussianComponent(-0.5, (0.8,) * d, 0.4),
    )
    return GaussianMixtureTarget(comps, "gaussian_mixture")


TARGETS = {
    "gaussian": lambda d, **kw: gaussian(d, **kw),
    "gaussian_shifted": lambda d, **kw: gaussian(
        d, center=kw.pop("center", (0.5,) * d), label="gaussian_shifted", **kw
    ),
    "gaussian_mixture": lambda d, **kw: gaussian_mixture(d),
}


def make_target(name, d=1, **params):
    try:
        factory = TARGETS[name]
    except KeyError:
        raise ValueError(f"unknown target {name!r}; choose from {sorted(TARGETS)}") from None
    return factory(d, **params)


# models ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RandomFeatureModel:
    """``scale * sum_i A_i sigma(W_i . x + B_i)``."""

    bank: FeatureBank
    A: np.ndarray
    kind: ActivationKind
    scale: float = 1.0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float).ravel()
        if A.shape[0] != self.bank.m:
            raise ValueError(f"{A.shape[0]} coefficients for {self.bank.m} features")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "kind", ActivationKind.parse(self.kind))

    @property
    def m(self):
        return self.bank.m

    def derivatives(self, X):
        """Value (n,), gradient (n, d) and Hessian (n, d, d) at the rows of X."""
        X = _as_points(X, self.bank.d)
        coef = self.scale * self.A
        return kernels.model_derivs(X, self.bank.W, self.bank.B, coef, self.kind.code)


def _as_points(X, d):
    X = np.asarray(X, dtype=float)
    if X.ndim <= 1:
        X = X.reshape(-1, d)
    if X.shape[1] != d:
        raise ValueError(f"points have dimension {X.shape[1]}, model has d={d}")
    return X


def evaluate_model(model, x, order="value"):
    """Evaluate a model at one point or a batch.

    ``order`` is ``"value"``, ``"gradient"`` or ``"laplacian"`` (the Hessian
    trace, ``scale * sum A_i |W_i|^2 sigma''``).  A single point returns a
    float (value, laplacian) or a d-vector (gradient).
    """
    x_arr = np.asarray(x, dtype=float)
    single = x_arr.ndim <= 1 and (x_arr.size == model.bank.d)
    X = x_arr.reshape(1, -1) if single else _as_points(x_arr, model.bank.d)
    value, grad, hess = model.derivatives(X)
    if order == "value":
        out = value
    elif order == "gradient":
        out = grad
    elif order in ("laplacian", "hessian_diag_sum"):
        out = np.trace(hess, axis1=1, axis2=2)
    else:
        raise ValueError(f"unknown order {order!r}")
    if single:
        return out[0] if out.ndim > 1 else float(out[0])
    return out


# coefficient formulas --------------------------------------------------------


def _sigma_phase(kind):
    s1 = sigma_hat_one(kind)
    if s1 == 0:
        raise ArithmeticError(f"sigma_hat(1) vanishes for {kind.name}")
    return abs(s1), math.atan2(s1.imag, s1.real)


def _raw_coefficients(target, bank, kind, calibration):
    mod_s, phi = _sigma_phase(kind)
    c = representation_constant(kind) if calibration is None else float(calibration)
    fh = target.fourier(bank.W)
    p1, p2 = prior_density(bank.prior, bank.W, bank.B)
    return (
        c
        * np.abs(fh)
        * np.cos(np.angle(fh) - bank.B - phi)
        / (2 * math.pi * mod_s * np.asarray(p1) * np.asarray(p2))
    )


def coefficients_compact(target, bank, kind, calibration=None):
    """Build the approximant for a bank drawn from a compact prior.

    ``A_i = c |fhat(W_i)| cos(theta(W_i) - B_i) / (2 pi sigma_hat(1) p1 p2)``.
    ``calibration`` overrides the fitted constant ``c``; pass 1.0 for the
    bare formula.
    """
    kind = ActivationKind.parse(kind)
    if not isinstance(bank.prior, CompactPrior):
        raise TypeError("coefficients_compact needs a bank from CompactPrior")
    A = _raw_coefficients(target, bank, kind, calibration)
    return RandomFeatureModel(bank, A, kind, scale=1.0 / bank.m, info={"builder": "compact"})


def coefficients_heavytail(target, bank, kind, C_ind=DEFAULT_C_IND, calibration=None,
                           strict=True):
    """Approximant for a heavy-tail bank; terms with
    ``|B_i| > C_ind * d * (1 + |W_i|_2)`` are dropped."""
    kind = ActivationKind.parse(kind)
    if not isinstance(bank.prior, HeavyTailPrior):
        raise TypeError("coefficients_heavytail needs a bank from HeavyTailPrior")
    if strict:
        bank.prior.check_barron_condition()
    A = _raw_coefficients(target, bank, kind, calibration)
    keep = np.abs(bank.B) <= C_ind * bank.d * (1.0 + np.linalg.norm(bank.W, axis=1))
    A = np.where(keep, A, 0.0)
    return RandomFeatureModel(
        bank, A, kind, scale=1.0 / bank.m, info={"builder": "heavytail", "C_ind": C_ind}
    )


def build_approximant(target, bank, kind, **kw):
    if isinstance(bank.prior, CompactPrior):
        return coefficients_compact(target, bank, kind, calibration=kw.get("calibration"))
    return coefficients_heavytail(target, bank, kind, **kw)


def coefficient_bound_constant(kind, d, calibration=None):
    """Seed-independent ``K`` with ``|A_i| <= K sup|fhat| M^(d+1)`` (compact prior)."""
    kind = ActivationKind.parse(kind)
    mod_s, _ = _sigma_phase(kind)
    c = representation_constant(kind) if calibration is None else calibration
    from .sampling import l1_ball_volume

    return c * 4.0 * l1_ball_volume(d) / (2 * math.pi * mod_s)


# errors ----------------------------------------------------------------------


def sobolev_error(model, target, grid=None):
    """Squared L2, H1 and H2 errors over [0, 1]^d.

    Each norm includes the lower-order terms; the H2 part sums all d^2
    Hessian entries.
    """
    d = model.bank.d
    if grid is None:
        grid = default_grid(d)
    if grid.d != d:
        raise ValueError(f"grid has dimension {grid.d}, model has d={d}")
    if target.d != d:
        raise ValueError(f"target has dimension {target.d}, model has d={d}")
    X = grid.points
    v, g, h = model.derivatives(X)
    ev = v - target.value(X)
    eg = g - target.gradient(X)
    eh = h - target.hessian(X)
    l2 = float(grid.integrate(ev**2))
    h1 = l2 + float(grid.integrate(np.sum(eg**2, axis=1)))
    h2 = h1 + float(grid.integrate(np.sum(eh**2, axis=(1, 2))))
    return l2, h1, h2


def target_sobolev_norms(target, grid=None):
    """Squared L2 / H1 / H2 norms of the target itself."""
    d = target.d
    grid = default_grid(d) if grid is None else grid
    X = grid.points
    l2 = float(grid.integrate(target.value(X) ** 2))
    h1 = l2 + float(grid.integrate(np.sum(target.gradient(X) ** 2, axis=1)))
    h2 = h1 + float(grid.integrate(np.sum(target.hessian(X) ** 2, axis=(1, 2))))
    return l2, h1, h2


# dense reconstruction oracle -------------------------------------------------


def _omega_nodes(d, M, panels, n):
    if d == 1:
        w, wt = composite_gauss_legendre(np.linspace(-M, M, 2 * panels + 1), n)
        return w[:, None], wt
    # d == 2: integrate over the diamond |w1| + |w2| <= M
    w1, wt1 = composite_gauss_legendre(np.linspace(-M, M, 2 * panels + 1), n)
    # second coordinate: the same panel layout rescaled to [-h, h], h = M - |w1|
    u, wu = composite_gauss_legendre(np.linspace(-1.0, 1.0, 2 * panels + 1), n)
    half = M - np.abs(w1)
    w2 = half[:, None] * u[None, :]
    wt2 = half[:, None] * wu[None, :]
    nodes = np.stack([np.repeat(w1, u.size), w2.ravel()], axis=1)
    return nodes, (wt1[:, None] * wt2).ravel()


def reconstruct_dense(target, kind, M, x, resolution=(32, 16), calibration=None):
    """Truncated integral representation of ``target`` at ``x``.

    Integrates over ``{|w|_1 <= M, |b| <= 2M}`` with composite Gauss-Legendre
    rules: ``resolution[0]`` panels per half-axis in w and ``resolution[1]``
    nodes per panel.  Only d <= 2 is supported.
    """
    kind = ActivationKind.parse(kind)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.shape[0]
    if d > 2:
        raise NotImplementedError("dense reconstruction is limited to d <= 2")
    panels, n = resolution
    if panels < 1 or n < 2:
        raise ValueError(f"degenerate resolution {resolution!r}")
    mod_s, phi = _sigma_phase(kind)
    c = representation_constant(kind) if calibration is None else float(calibration)
    omega, w_om = _omega_nodes(d, M, panels, n)
    fh = target.fourier(omega)
    amp, theta = np.abs(fh), np.angle(fh)
    wx = omega @ x
    if kind is ActivationKind.SPLINE34:
        # supp sigma = [-2, 2] lies inside w.x + [-2M, 2M] whenever M >= 2;
        # substitute t = w.x + b and integrate the knot intervals exactly
        t, w_t = composite_gauss_legendre(np.arange(-2.0, 3.0), n)
        sig = kernels.sigma(kind.code, t, 0)
        arg = theta[:, None] + wx[:, None] - t[None, :] - phi
        inner = np.cos(arg) @ (w_t * sig)
    else:
        b, w_b = composite_gauss_legendre(np.linspace(-2 * M, 2 * M, int(4 * M) + 1), n)
        sig = kernels.sigma(kind.code, wx[:, None] + b[None, :], 0)
        inner = np.sum(sig * np.cos(theta[:, None] - b[None, :] - phi) * w_b[None, :], axis=1)
    return float(c * np.sum(w_om * amp * inner) / (2 * math.pi * mod_s))


PROBE_POINTS = (np.arange(8) + 0.5) / 8.0
PROBE_M = 8.0


@functools.lru_cache(maxsize=None)
def representation_constant(kind):
    """Least-squares constant matching the bare representation to the target.

    Fitted on the unit Gaussian in d = 1 at eight probe points with M = 8.
    """
    kind = ActivationKind.parse(kind)
    target = gaussian(1)
    raw = np.array(
        [reconstruct_dense(target, kind, PROBE_M, [p], resolution=(64, 16), calibration=1.0)
         for p in PROBE_POINTS]
    )
    exact = target.value(PROBE_POINTS[:, None])
    return float(raw @ exact / (raw @ raw))
