import csv
import itertools
import json
import math

import numpy as np
import pytest

from rfpinn import pinn, solvers
from rfpinn.sampling import CompactPrior, sample
from rfpinn.solvers import PGDConfig


def make_system(Phi_int, g1, lam, Phi_bd=None, g2=None, w_int=1.0, w_bd=0.0):
    Phi_int = np.atleast_2d(np.asarray(Phi_int, dtype=float))
    n, m = Phi_int.shape
    Phi_bd = np.zeros((n, m)) if Phi_bd is None else np.asarray(Phi_bd, dtype=float)
    g2 = np.zeros(n) if g2 is None else np.asarray(g2, dtype=float)
    return pinn.AssembledSystem(Phi_int, Phi_bd, np.asarray(g1, dtype=float), g2, w_int, w_bd, lam)


def shifted_quadratic(a0):
    # F(a) = |a - a0|^2 : Phi = sqrt(n) I over n = m points, g1 = -sqrt(n) a0
    m = len(a0)
    return make_system(math.sqrt(m) * np.eye(m), -math.sqrt(m) * np.asarray(a0), 0.0)


@pytest.fixture(scope="module")
def poisson_system():
    p = pinn.poisson1d()
    bank = sample(CompactPrior(2, 1), 20, seed=2)
    return pinn.assemble(p, bank, pinn.sample_collocation(p, 500, 3), "tanhdiff", 0.1)


# projection -------------------------------------------------------------------


def test_projection_examples():
    np.testing.assert_allclose(solvers.project_l2ball([3.0, 4.0], 1.0), [0.6, 0.8])
    a = np.array([0.1, -0.2])
    np.testing.assert_array_equal(solvers.project_l2ball(a, 1.0), a)
    np.testing.assert_array_equal(solvers.project_l2ball(np.zeros(3), 0.5), np.zeros(3))
    with pytest.raises(ValueError):
        solvers.project_l2ball(a, 0.0)


def test_projection_idempotent(rng):
    for _ in range(50):
        a, C = rng.standard_normal(7) * 3, rng.uniform(0.1, 5)
        p = solvers.project_l2ball(a, C)
        np.testing.assert_array_equal(solvers.project_l2ball(p, C), p)
        assert np.linalg.norm(p) <= C * (1 + 1e-14)


# smoothness --------------------------------------------------------------------


def test_smoothness_identity_like():
    s = make_system(math.sqrt(4) * np.eye(4), np.zeros(4), 0.0)
    assert solvers.smoothness_estimate(s) == pytest.approx(2.0, rel=1e-6)


def test_smoothness_shift_and_floor(poisson_system):
    beta = solvers.smoothness_estimate(poisson_system)
    shifted = solvers.smoothness_estimate(poisson_system.with_lambda(poisson_system.lam + 0.5))
    assert shifted - beta == pytest.approx(1.0, rel=1e-5)
    assert beta >= 2 * poisson_system.lam
    top = np.linalg.eigvalsh(poisson_system.normal_matrix())[-1]
    assert beta == pytest.approx(2 * top, rel=1e-5)


def test_zero_system_smoothness():
    assert solvers.smoothness_estimate(make_system(np.zeros((3, 2)), np.zeros(3), 0.0)) == 0.0


def test_power_iteration_stagnation_raises():
    # a map whose scale alternates 1, 2, 1, ... keeps the Rayleigh quotient jumping
    scales = itertools.cycle([1.0, 2.0])
    with pytest.raises(solvers.PowerIterationError):
        solvers._power_iteration(lambda v: next(scales) * v, 2, 1e-12, 50)


# pgd ---------------------------------------------------------------------------


def test_pgd_requires_positive_lambda(poisson_system):
    with pytest.raises(ValueError):
        solvers.pgd(poisson_system.with_lambda(0.0), PGDConfig(C=1.0, T=5))


def test_pgd_config_validation():
    with pytest.raises(ValueError):
        PGDConfig(step="nesterov")
    with pytest.raises(ValueError):
        PGDConfig(C=-1.0)
    with pytest.raises(ValueError):
        PGDConfig(T=0)


def test_pgd_converges_to_interior_minimizer():
    a0 = np.array([0.3, -0.2, 0.1])
    base = shifted_quadratic(a0)
    # a tiny lam makes pgd legal; the minimizer moves by a factor 1/(1+lam)
    s = base.with_lambda(1e-9)
    rep = solvers.pgd(s, PGDConfig(C=10.0, T=50), keep_iterates=True)
    dist = np.linalg.norm(rep.iterates - a0, axis=1)
    assert np.all(np.diff(dist) <= 1e-15)
    np.testing.assert_allclose(rep.a, a0, atol=1e-8)


def test_pgd_contraction_bound(poisson_system):
    a_star = solvers.ridge(poisson_system).a
    rep = solvers.pgd(poisson_system, PGDConfig(C=10 * np.linalg.norm(a_star) + 1, T=300),
                      keep_iterates=True)
    d2 = np.sum((rep.iterates - a_star) ** 2, axis=1)
    ratios = d2[2:] / d2[1:-1]
    bound = math.exp(-1.0 / rep.kappa_estimate) + 1e-9
    keep = d2[1:-1] > 1e-20
    assert np.all(ratios[keep] <= bound)


def test_pgd_monotone_descent(poisson_system):
    rep = solvers.pgd(poisson_system, PGDConfig(C=1.0, T=500))
    assert np.all(np.diff(rep.loss_trace) <= 1e-12 * np.abs(rep.loss_trace[:-1]) + 1e-12)
    assert len(rep.loss_trace) == 501 and rep.iterations == 500
    assert np.linalg.norm(rep.a) <= 1.0 + 1e-12


def test_pgd_agrees_with_ridge_at_scale():
    p = pinn.poisson1d()
    sched = solvers.theorem3_schedule(10_000, 1)
    bank = sample(CompactPrior(2, 1), sched.m, seed=4)
    s = pinn.assemble(p, bank, pinn.sample_collocation(p, sched.n, 5), "tanhdiff", sched.lam)
    a_r = solvers.ridge(s).a
    rep = solvers.pgd(s, PGDConfig(T=sched.T))
    assert rep.extra["radius"] > np.linalg.norm(a_r)
    assert np.linalg.norm(rep.a - a_r) <= 1e-5 * (1 + np.linalg.norm(a_r))


def test_pgd_tolerance_stops_early(poisson_system):
    rep = solvers.pgd(poisson_system, PGDConfig(C=5.0, T=100_000, tolerance=1e-14))
    assert rep.iterations < 100_000


def test_averaged_pgd_excess_shrinks():
    p = pinn.poisson1d()
    bank = sample(CompactPrior(2, 1), 10, seed=1)
    s = pinn.assemble(p, bank, pinn.sample_collocation(p, 500, 2), "tanhdiff", 0.1)
    best = solvers.ridge(s)
    C = 2 * np.linalg.norm(best.a)
    ex = [solvers.pgd(s, PGDConfig(C=C, T=T, step="decreasing")).final_loss - best.final_loss
          for T in (100, 10_000)]
    assert ex[1] >= -1e-12
    assert ex[0] >= 50 * ex[1]


def test_averaged_trace_ends_with_average(poisson_system):
    rep = solvers.pgd(poisson_system, PGDConfig(C=1.0, T=20, step="decreasing"))
    assert len(rep.loss_trace) == 22
    assert rep.final_loss == pytest.approx(poisson_system.loss(rep.a))
    assert rep.solver == "pgd-decreasing"


# ridge -------------------------------------------------------------------------


def test_ridge_examples():
    assert np.all(solvers.ridge(make_system(np.ones((3, 2)), np.zeros(3), 0.5)).a == 0)
    s = make_system([[2.0]], [-3.0], 0.0)
    assert solvers.ridge(s).a[0] == pytest.approx(1.5)


def test_ridge_first_order_optimality(poisson_system):
    rep = solvers.ridge(poisson_system)
    rhs = poisson_system.normal_rhs()
    assert np.linalg.norm(poisson_system.gradient(rep.a)) <= 1e-8 * (1 + np.linalg.norm(rhs))
    assert rep.kappa_estimate == pytest.approx(solvers.condition_number(poisson_system), rel=1e-4)


def test_ridge_singular_advises_regularization():
    s = make_system(np.ones((2, 5)), np.ones(2), 0.0)
    with pytest.raises(solvers.SingularSystemError, match="lam > 0"):
        solvers.ridge(s)


def test_ridge_condition_warning(caplog):
    s = make_system(np.diag([1.0, 1e-6]) * math.sqrt(2), np.ones(2), 0.0)
    with caplog.at_level("WARNING"):
        solvers.ridge(s)
    assert "condition number" in caplog.text


def test_default_radius():
    assert solvers.default_radius(make_system(np.ones((3, 2)), np.zeros(3), 1.0)) == 1.0
    s = make_system([[2.0]], [-3.0], 0.0)
    assert solvers.default_radius(s) == pytest.approx(3.0)


# schedules -----------------------------------------------------------------------


def test_theorem3_schedule_example():
    s = solvers.theorem3_schedule(10_000, 1)
    assert (s.m, s.T) == (6, 922)
    assert s.lam == pytest.approx(1 / math.sqrt(6))
    assert round(s.lam, 3) == 0.408
    assert solvers.theorem3_schedule(10_000, 1, c=2.0).T == math.ceil(200 * math.log(10_000))
    assert solvers.theorem3_schedule(2, 3).m == 2
    with pytest.raises(ValueError):
        solvers.theorem3_schedule(1, 1)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_theorem3_width_monotone(d):
    ms = [solvers.theorem3_schedule(n, d).m for n in np.unique(np.logspace(0.5, 8, 200).astype(int))]
    assert all(b >= a for a, b in zip(ms, ms[1:]))


def test_theorem4_schedule_examples():
    assert solvers.theorem4_schedule(10_000).m == 10
    assert solvers.theorem4_schedule(16).m == 2
    big = solvers.theorem4_schedule(10**8)
    assert big.m == 100 and big.lam == 1.0
    assert big.predicted_cost == pytest.approx(1e12)
    assert big.above_desk_scale and not solvers.theorem4_schedule(10_000).above_desk_scale
    with pytest.raises(ValueError):
        solvers.theorem4_schedule(15)


# reports -------------------------------------------------------------------------


def test_report_serialization(tmp_path, poisson_system):
    rep = solvers.pgd(poisson_system, PGDConfig(C=1.0, T=10))
    rep.write_csv(tmp_path / "trace.csv")
    rows = list(csv.reader(open(tmp_path / "trace.csv")))
    assert rows[0] == ["iteration", "F_n", "wall_clock"]
    assert len(rows) == 12 and float(rows[-1][1]) == rep.final_loss
    rep.write_summary(tmp_path / "s.json", schedule="manual")
    summary = json.load(open(tmp_path / "s.json"))
    assert summary["schedule"] == "manual"
    assert summary["final_loss"] == rep.final_loss and summary["iterations"] == 10
    assert "kappa_estimate" in summary
