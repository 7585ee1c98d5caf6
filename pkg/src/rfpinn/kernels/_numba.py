"""numba kernels; same contracts as the numpy versions in ``_numpy``.

Only Spline34 (code 0) runs through the fused loops.  The tanh/sigmoid
shapes are dominated by transcendental calls, where numpy's vectorized
ufuncs beat scalar libm calls inside numba, so those codes delegate to the
numpy kernels.  The scalar njit versions stay for callers inside njit code.
"""

import math

import numpy as np
from numba import njit, prange

from . import _numpy
from ._numpy import SPLINE34_COEFFS

_C = SPLINE34_COEFFS.copy()


@njit(cache=True)
def _spline34_scalar(t, order):
    if t < -2.0 or t >= 2.0:
        return 0.0
    k = math.floor(t)
    row = int(k) + 2
    u = t - k
    c0 = _C[row, 0]
    c1 = _C[row, 1]
    c2 = _C[row, 2]
    c3 = _C[row, 3]
    if order == 0:
        return c0 + u * (c1 + u * (c2 + u * c3))
    if order == 1:
        return c1 + u * (2.0 * c2 + 3.0 * u * c3)
    return 2.0 * c2 + 6.0 * u * c3


@njit(cache=True)
def _expit(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@njit(cache=True)
def _sig(x, order):
    s = _expit(x)
    r = _expit(-x)
    if order == 1:
        return s * r
    return s * r * (r - s)


@njit(cache=True)
def _sech2(x):
    c = math.cosh(min(max(x, -300.0), 300.0))
    return 1.0 / (c * c)


@njit(cache=True)
def _tanh(x, order):
    if order == 0:
        return math.tanh(x)
    if order == 1:
        return _sech2(x)
    return -2.0 * math.tanh(x) * _sech2(x)


_SINH1 = math.sinh(1.0)


@njit(cache=True)
def sigma_scalar(kind, t, order):
    if kind == 0:
        return _spline34_scalar(t, order)
    if kind == 3:
        return _tanh(t, order)
    a = t + 1.0
    if order == 0:
        # cancellation-free forms of f(t + 1) - f(t)
        if kind == 1:
            return _expit(a) * _expit(-t) - _expit(t) * _expit(-a)
        ca = math.cosh(min(max(a, -300.0), 300.0))
        ct = math.cosh(min(max(t, -300.0), 300.0))
        return _SINH1 / (ca * ct)
    if kind == 1:
        return _sig(a, order) - _sig(t, order)
    return _tanh(a, order) - _tanh(t, order)


@njit(cache=True, parallel=True)
def _sigma_flat(kind, t, order):
    out = np.empty_like(t)
    for i in prange(t.size):
        out[i] = sigma_scalar(kind, t[i], order)
    return out


def sigma(kind, t, order):
    if kind != 0:
        return _numpy.sigma(kind, t, order)
    t = np.asarray(t, dtype=float)
    flat = np.ascontiguousarray(t).ravel()
    return _sigma_flat(kind, flat, order).reshape(t.shape)


@njit(cache=True, parallel=True)
def _feature_matrix(X, W, B, kind, order):
    n, d = X.shape
    m = W.shape[0]
    out = np.empty((n, m))
    for i in prange(n):
        for j in range(m):
            z = B[j]
            for k in range(d):
                z += W[j, k] * X[i, k]
            out[i, j] = sigma_scalar(kind, z, order)
    return out


def feature_matrix(X, W, B, kind, order):
    if kind != 0:
        return _numpy.feature_matrix(X, W, B, kind, order)
    return _feature_matrix(_c(X), _c(W), _c(B), kind, order)


@njit(cache=True, parallel=True)
def _interior_matrix(X, W, B, V, kind):
    n, d = X.shape
    m = W.shape[0]
    w2 = np.empty(m)
    for j in range(m):
        acc = 0.0
        for k in range(d):
            acc += W[j, k] * W[j, k]
        w2[j] = acc
    out = np.empty((n, m))
    for i in prange(n):
        for j in range(m):
            z = B[j]
            for k in range(d):
                z += W[j, k] * X[i, k]
            out[i, j] = -w2[j] * sigma_scalar(kind, z, 2) + V[i] * sigma_scalar(kind, z, 0)
    return out


def interior_matrix(X, W, B, V, kind):
    if kind != 0:
        return _numpy.interior_matrix(X, W, B, V, kind)
    return _interior_matrix(_c(X), _c(W), _c(B), _c(V), kind)


@njit(cache=True, parallel=True)
def _model_derivs(X, W, B, coef, kind):
    n, d = X.shape
    m = W.shape[0]
    value = np.zeros(n)
    grad = np.zeros((n, d))
    hess = np.zeros((n, d, d))
    for i in prange(n):
        for j in range(m):
            z = B[j]
            for k in range(d):
                z += W[j, k] * X[i, k]
            c = coef[j]
            if c == 0.0:
                continue
            value[i] += c * sigma_scalar(kind, z, 0)
            s1 = c * sigma_scalar(kind, z, 1)
            s2 = c * sigma_scalar(kind, z, 2)
            for k in range(d):
                grad[i, k] += s1 * W[j, k]
                for q in range(d):
                    hess[i, k, q] += s2 * W[j, k] * W[j, q]
    return value, grad, hess


def model_derivs(X, W, B, coef, kind):
    if kind != 0:
        return _numpy.model_derivs(X, W, B, coef, kind)
    return _model_derivs(_c(X), _c(W), _c(B), _c(coef), kind)


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)
