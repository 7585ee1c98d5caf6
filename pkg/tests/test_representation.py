import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from rfpinn.activation import ActivationKind, sigma_hat_one
from rfpinn.quadrature import tensor_grid
from rfpinn.representation import (
    PROBE_POINTS,
    RandomFeatureModel,
    coefficient_bound_constant,
    coefficients_compact,
    coefficients_heavytail,
    evaluate_model,
    gaussian,
    gaussian_mixture,
    make_target,
    reconstruct_dense,
    representation_constant,
    sobolev_error,
    target_sobolev_norms,
    zero_target,
)
from rfpinn.sampling import CompactPrior, FeatureBank, HeavyTailPrior, normalizers, sample

from conftest import single_feature_bank


class FlatSpectrum:
    """|fhat| = 1 and theta = 0 everywhere."""

    d = 1

    def fourier(self, omega):
        omega = np.atleast_2d(omega)
        return np.ones(omega.shape[0], dtype=complex)


def test_compact_coefficient_example():
    bank = single_feature_bank(0.5, 0.0, M=2.0)
    model = coefficients_compact(FlatSpectrum(), bank, "spline34", calibration=1.0)
    assert model.A[0] == pytest.approx(32 / (2 * math.pi * 5.0717), rel=1e-4)
    assert model.A[0] == pytest.approx(1.0043, abs=2e-4)
    assert model.scale == 1.0


def test_heavytail_coefficient_example():
    prior = HeavyTailPrior(6, 2, 1)
    bank = FeatureBank(np.zeros((1, 1)), np.zeros(1), prior, 0)
    model = coefficients_heavytail(FlatSpectrum(), bank, "spline34", calibration=1.0)
    c_alpha, c_beta = normalizers(prior)
    expected = 1 / (2 * math.pi * sigma_hat_one("spline34").real * c_alpha * c_beta)
    assert model.A[0] == pytest.approx(expected, rel=1e-12)


def test_heavytail_indicator_kills_far_offsets():
    prior = HeavyTailPrior(6, 2, 1)
    bank = FeatureBank(np.array([[0.5], [0.5]]), np.array([0.1, 100.0]), prior, 0)
    A = coefficients_heavytail(gaussian(1), bank, "spline34").A
    assert A[0] != 0 and A[1] == 0


def test_heavytail_strict_rejects_weak_tails():
    bank = sample(HeavyTailPrior(3, 2, 1), 10, seed=0)
    with pytest.raises(ValueError):
        coefficients_heavytail(gaussian(1), bank, "spline34")
    coefficients_heavytail(gaussian(1), bank, "spline34", strict=False)


def test_builders_reject_wrong_prior():
    with pytest.raises(TypeError):
        coefficients_compact(gaussian(1), sample(HeavyTailPrior(7, 2, 1), 5, 0), "spline34")
    with pytest.raises(TypeError):
        coefficients_heavytail(gaussian(1), sample(CompactPrior(2, 1), 5, 0), "spline34")


def test_zero_target_gives_zero_coefficients():
    bank = sample(CompactPrior(4, 1), 100, seed=0)
    assert np.all(coefficients_compact(zero_target(1), bank, "spline34").A == 0)


@pytest.mark.parametrize("kind", ["spline34", "tanhdiff"])
def test_coefficient_bound_seed_independent(kind):
    target, M = gaussian(1), 4.0
    K = coefficient_bound_constant(kind, 1)
    ratios = []
    for seed in range(10):
        A = coefficients_compact(target, sample(CompactPrior(M, 1), 2000, seed), kind).A
        ratios.append(np.max(np.abs(A)) / (target.fourier_sup() * M**2))
    assert max(ratios) <= K
    # the bound is attained up to a modest factor for every seed
    assert min(ratios) >= 0.5 * K


@pytest.mark.parametrize("kind", ["spline34", "sigdiff", "tanhdiff"])
def test_representation_constant_frozen_at_two_pi(kind):
    tol = 1e-6 if kind != "sigdiff" else 1e-5
    assert representation_constant(kind) == pytest.approx(2 * math.pi, rel=tol)


def test_dense_reconstruction_matches_target():
    target = gaussian(1)
    for x in (0.1, 0.5, 0.9):
        rec = reconstruct_dense(target, "spline34", 8.0, [x])
        assert rec == pytest.approx(float(target.value([[x]])[0]), rel=1e-3)


def test_dense_reconstruction_shifted_and_2d():
    shifted = make_target("gaussian_shifted", 1)
    for x in (0.2, 0.7):
        assert reconstruct_dense(shifted, "tanhdiff", 8.0, [x]) == pytest.approx(
            float(shifted.value([[x]])[0]), rel=1e-3)
    g2 = gaussian(2)
    x = np.array([0.3, 0.6])
    assert reconstruct_dense(g2, "spline34", 8.0, x) == pytest.approx(
        float(g2.value(x[None])[0]), rel=1e-3)


def test_dense_reconstruction_edge_cases():
    assert reconstruct_dense(zero_target(1), "spline34", 4.0, [0.5]) == 0.0
    with pytest.raises(NotImplementedError):
        reconstruct_dense(gaussian(3), "spline34", 4.0, [0.1, 0.2, 0.3])
    with pytest.raises(ValueError):
        reconstruct_dense(gaussian(1), "spline34", 4.0, [0.5], resolution=(4, 1))


def test_truncation_error_shrinks_with_M():
    target = gaussian(1, width=0.5)
    def sup_err(M):
        return max(abs(reconstruct_dense(target, "spline34", M, [x]) - float(target.value([[x]])[0]))
                   for x in PROBE_POINTS)

    errs = [sup_err(M) for M in (2.0, 4.0, 8.0)]
    assert errs[0] > errs[1] > errs[2]


def test_unbiasedness_against_dense_reconstruction():
    target, M, m, seeds = gaussian(1), 4.0, 2000, 40
    x = np.array([[0.2], [0.5], [0.8]])
    vals = np.array([
        evaluate_model(coefficients_compact(target, sample(CompactPrior(M, 1), m, s), "spline34"), x)
        for s in range(seeds)
    ])
    mean, se = vals.mean(axis=0), vals.std(axis=0, ddof=1) / math.sqrt(seeds)
    ref = np.array([reconstruct_dense(target, "spline34", M, xi) for xi in x])
    assert np.all(np.abs(mean - ref) <= 4 * se)


def test_heavytail_model_matches_target_within_mc_band():
    target, prior, m = gaussian(1), HeavyTailPrior(7, 2, 1), 10_000
    x = np.array([[0.25], [0.75]])
    model = coefficients_heavytail(target, sample(prior, m, seed=3), "spline34")
    # per-feature spread gives the Monte-Carlo standard error of the mean
    from rfpinn import kernels

    terms = kernels.feature_matrix(x, model.bank.W, model.bank.B, 0, 0) * model.A[None, :]
    se = terms.std(axis=1, ddof=1) / math.sqrt(m)
    assert np.all(np.abs(terms.mean(axis=1) - target.value(x)) <= 4 * se + 1e-12)


def test_indicator_constant_is_inert_for_compact_support():
    prior = HeavyTailPrior(7, 2, 1)
    bank = sample(prior, 5000, seed=8)
    base = coefficients_heavytail(gaussian(1), bank, "spline34", C_ind=3.0)
    wide = coefficients_heavytail(gaussian(1), bank, "spline34", C_ind=50.0)
    assert np.count_nonzero(wide.A) > np.count_nonzero(base.A)
    X = np.linspace(0, 1, 101)[:, None]
    np.testing.assert_array_equal(evaluate_model(base, X), evaluate_model(wide, X))


def test_evaluate_examples():
    bank = single_feature_bank(0.0, 0.0)
    model = RandomFeatureModel(bank, [1.0], "spline34")
    assert evaluate_model(model, [0.37]) == pytest.approx(4.0)
    assert np.all(evaluate_model(model, [0.37], "gradient") == 0.0)
    m1 = RandomFeatureModel(single_feature_bank(1.0, 0.0), [1.0], "spline34")
    assert evaluate_model(m1, [0.0], "laplacian") == pytest.approx(-12.0)
    assert evaluate_model(m1, [0.0], "hessian_diag_sum") == pytest.approx(-12.0)
    with pytest.raises(ValueError):
        evaluate_model(m1, [0.0], "curl")


@pytest.mark.parametrize("kind", ["spline34", "sigdiff", "tanhdiff"])
@pytest.mark.parametrize("d", [1, 2])
def test_model_derivatives_match_finite_differences(kind, d):
    bank = sample(CompactPrior(2, d), 40, seed=d)
    model = coefficients_compact(gaussian_mixture(d), bank, kind)
    X = np.random.default_rng(0).random((25, d))
    v, g, H = model.derivatives(X)
    h = 1e-6
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        vp, gp, _ = model.derivatives(X + e)
        vm, gm, _ = model.derivatives(X - e)
        fd_g = (vp - vm) / (2 * h)
        fd_H = (gp - gm) / (2 * h)
        scale_g = max(1.0, np.max(np.abs(g)))
        scale_H = max(1.0, np.max(np.abs(H)))
        assert np.max(np.abs(fd_g - g[:, k])) / scale_g < 1e-6
        assert np.max(np.abs(fd_H - H[:, :, k])) / scale_H < 1e-6
    lap = evaluate_model(model, X, "laplacian")
    np.testing.assert_allclose(lap, np.trace(H, axis1=1, axis2=2))


@pytest.mark.parametrize("d", [1, 2])
def test_target_derivatives_match_finite_differences(d):
    t = make_target("gaussian_shifted", d)
    X = np.random.default_rng(1).random((10, d))
    h = 1e-6
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        np.testing.assert_allclose((t.value(X + e) - t.value(X - e)) / (2 * h),
                                   t.gradient(X)[:, k], atol=1e-8)
        np.testing.assert_allclose((t.gradient(X + e) - t.gradient(X - e)) / (2 * h),
                                   t.hessian(X)[:, :, k], atol=1e-8)


def test_gaussian_fourier_convention():
    # f(x) = int exp(i w x) fhat(w) dw on a dense grid
    t = make_target("gaussian_shifted", 1)
    w = np.linspace(-30, 30, 60_001)
    fh = t.fourier(w[:, None])
    for x in (0.0, 0.3):
        val = trapezoid(np.exp(1j * w * x) * fh, w)
        assert val.real == pytest.approx(float(t.value([[x]])[0]), abs=1e-9)
        assert abs(val.imag) < 1e-9


def test_sobolev_error_examples():
    target = gaussian(1)
    grid = tensor_grid(1)
    bank = single_feature_bank(1.0, 0.0)
    zero_model = RandomFeatureModel(bank, [0.0], "spline34")
    assert sobolev_error(zero_model, target, grid) == pytest.approx(target_sobolev_norms(target, grid))
    # a model that equals its own "target": a one-feature Spline34 on [0, 1]
    class SelfTarget:
        d = 1

        def value(self, X):
            return zero_model.derivatives(X)[0]

        def gradient(self, X):
            return zero_model.derivatives(X)[1]

        def hessian(self, X):
            return zero_model.derivatives(X)[2]

    assert sobolev_error(zero_model, SelfTarget(), grid) == (0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        sobolev_error(zero_model, target, tensor_grid(2, 8))


def test_sobolev_norms_of_unit_gaussian_1d():
    from scipy import integrate

    f = lambda x: math.exp(-x * x / 2)
    l2 = integrate.quad(lambda x: f(x) ** 2, 0, 1)[0]
    h1 = l2 + integrate.quad(lambda x: (x * f(x)) ** 2, 0, 1)[0]
    h2 = h1 + integrate.quad(lambda x: ((x * x - 1) * f(x)) ** 2, 0, 1)[0]
    assert target_sobolev_norms(gaussian(1)) == pytest.approx((l2, h1, h2), rel=1e-12)


def test_h2_error_decays_like_inverse_width():
    from rfpinn.experiments import fit_loglog_slope

    target, M, seeds = gaussian(1), 8.0, 40
    pts = []
    for m in (256, 512, 1024, 2048):
        errs = [sobolev_error(coefficients_compact(target, sample(CompactPrior(M, 1), m, 1000 * m + s),
                                                    "spline34"), target)[2] for s in range(seeds)]
        pts.append((m, float(np.mean(errs))))
    slope = fit_loglog_slope(pts)[0]
    assert -1.3 < slope < -0.7


def test_target_registry():
    with pytest.raises(ValueError):
        make_target("sinc", 1)
    assert make_target("gaussian_mixture", 2).d == 2
    with pytest.raises(ValueError):
        gaussian(2, center=(0.0,))


def test_model_shape_check():
    with pytest.raises(ValueError):
        RandomFeatureModel(single_feature_bank(1.0, 0.0), [1.0, 2.0], "spline34")
    assert RandomFeatureModel(single_feature_bank(1.0, 0.0), [1.0], "tanhdiff").kind is ActivationKind.TANHDIFF
