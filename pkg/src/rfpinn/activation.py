"""Activation functions with exact first and second derivatives.

Three shapes are supported:

* ``SPLINE34``: sum_{i=0}^4 (-1)^i C(4, i) relu(t + 2 - i)^3, a cubic
  B-spline scaled by 6, supported on [-2, 2].
* ``SIGDIFF``: Sig(t + 1) - Sig(t).
* ``TANHDIFF``: tanh(t + 1) - tanh(t).

All three are C^2 and integrable, so their Fourier transforms exist and are
used by the coefficient formulas in :mod:`rfpinn.representation`.

``TANH`` (plain tanh) is a compatibility option for PDE solves only; it is
not integrable, and the Fourier-side helpers reject it.
"""

import enum
import functools
import math

import numpy as np
from scipy import integrate

from . import kernels


class ActivationKind(enum.Enum):
    SPLINE34 = 0
    SIGDIFF = 1
    TANHDIFF = 2
    TANH = 3

    @property
    def code(self):
        return self.value

    @property
    def compact(self):
        return self is ActivationKind.SPLINE34

    @property
    def integrable(self):
        return self is not ActivationKind.TANH

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "").replace("-", "")
        for kind in cls:
            if kind.name.lower() == key:
                return kind
        raise ValueError(f"unknown activation {name!r}; expected one of "
                         f"{[k.name.lower() for k in cls]}")


class QuadratureError(ArithmeticError):
    """Raised when an adaptive quadrature misses its error target."""


# |t| beyond which SigDiff/TanhDiff are dropped from Fourier integrals; the
# tails are bounded by 2 e^{-60} for both shapes.
TAIL_CUTOFF = 60.0
SIGMA_HAT_TOL = 1e-10


def eval_sigma(kind, t, order=0):
    """Evaluate ``sigma^(order)(t)`` for ``order`` in {0, 1, 2}.

    ``t`` may be a scalar or an array; a scalar input returns a float.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order!r}")
    kind = ActivationKind.parse(kind)
    scalar = np.ndim(t) == 0
    out = kernels.sigma(kind.code, np.atleast_1d(np.asarray(t, dtype=float)), order)
    return float(out[0]) if scalar else out


def _support(kind):
    if not kind.integrable:
        raise ValueError(f"{kind.name.lower()} is not integrable; use spline34, sigdiff or tanhdiff")
    if kind is ActivationKind.SPLINE34:
        return -2.0, 2.0, [-1.0, 0.0, 1.0]
    return -TAIL_CUTOFF, TAIL_CUTOFF, None


def _quad(func, lo, hi, points):
    if points is None:
        # split at 0 so quad sees each monotone-ish part separately
        pieces = [(lo, 0.0), (0.0, hi)]
    else:
        edges = [lo] + list(points) + [hi]
        pieces = list(zip(edges[:-1], edges[1:]))
    total, err = 0.0, 0.0
    for a, b in pieces:
        val, e = integrate.quad(func, a, b, epsabs=1e-13, epsrel=1e-13, limit=200)
        total += val
        err += e
    return total, err


def sigma_hat(kind, a):
    """Fourier transform ``int sigma(t) exp(-i a t) dt`` by adaptive quadrature."""
    if a == 0:
        raise ValueError("sigma_hat needs a != 0")
    kind = ActivationKind.parse(kind)
    return _sigma_hat_cached(kind, float(a))


@functools.lru_cache(maxsize=256)
def _sigma_hat_cached(kind, a):
    lo, hi, points = _support(kind)
    re, err_re = _quad(lambda t: eval_sigma(kind, t) * math.cos(a * t), lo, hi, points)
    im, err_im = _quad(lambda t: -eval_sigma(kind, t) * math.sin(a * t), lo, hi, points)
    if err_re > SIGMA_HAT_TOL or err_im > SIGMA_HAT_TOL:
        raise QuadratureError(
            f"sigma_hat({kind.name}, {a}) error estimate {max(err_re, err_im):.2e} "
            f"exceeds {SIGMA_HAT_TOL:g}"
        )
    if kind is ActivationKind.SPLINE34:
        # even and real: the sine part is pure round-off
        im = 0.0 if abs(im) < 1e-12 else im
    return complex(re, im)


def spline34_hat_closed_form(a):
    """6 (sin(a/2) / (a/2))^4, the transform of the scaled cubic B-spline."""
    a = np.asarray(a, dtype=float)
    half = 0.5 * a
    return 6.0 * np.sinc(half / np.pi) ** 4


def sigma_hat_one(kind):
    """Cached value of ``sigma_hat(kind, 1)`` used by the coefficient formulas."""
    return sigma_hat(kind, 1.0)


def integral(kind, order=0, power=1):
    """``int |sigma^(order)(t)|^power dt`` over the real line."""
    kind = ActivationKind.parse(kind)
    lo, hi, points = _support(kind)
    val, _ = _quad(lambda t: abs(eval_sigma(kind, t, order)) ** power, lo, hi, points)
    return val
