"""Minimizers for the assembled PINN objective.

* :func:`ridge` solves the regularized normal equations by Cholesky.
* :func:`pgd` runs projected gradient descent onto ``{|a|_2 <= C}``, with
  either the constant step ``1/beta`` (last iterate returned) or the
  decreasing step ``1/(lam (t+1))`` (weighted average returned).
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg

log = logging.getLogger(__name__)

COND_WARN = 1e10
DESK_SCALE_FLOPS = 1e10


class SingularSystemError(np.linalg.LinAlgError):
    pass


class DivergenceError(ArithmeticError):
    pass


class PowerIterationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class PGDConfig:
    C: float | None = None
    T: int = 1000
    step: str = "inverse_smoothness"
    tolerance: float = 0.0

    def __post_init__(self):
        if self.step not in ("inverse_smoothness", "decreasing"):
            raise ValueError(f"unknown step rule {self.step!r}")
        if self.C is not None and not self.C > 0:
            raise ValueError(f"ball radius must be positive, got {self.C}")
        if self.T < 1:
            raise ValueError(f"need T >= 1 iterations, got {self.T}")


@dataclass(frozen=True)
class RidgeConfig:
    tolerance: float = 0.0


@dataclass
class SolveReport:
    a: np.ndarray
    loss_trace: np.ndarray
    iterations: int
    wall_time: float
    kappa_estimate: float
    solver: str = ""
    time_trace: np.ndarray | None = None
    iterates: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def final_loss(self):
        return float(self.loss_trace[-1])

    def summary(self):
        out = {
            "solver": self.solver,
            "final_loss": self.final_loss,
            "iterations": int(self.iterations),
            "wall_time": float(self.wall_time),
            "kappa_estimate": float(self.kappa_estimate),
            "coef_norm": float(np.linalg.norm(self.a)),
        }
        out.update(self.extra)
        return out

    def write_csv(self, path):
        times = self.time_trace if self.time_trace is not None else \
            np.full(len(self.loss_trace), np.nan)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "F_n", "wall_clock"])
            for i, (v, t) in enumerate(zip(self.loss_trace, times)):
                w.writerow([i, repr(float(v)), repr(float(t))])

    def write_summary(self, path, **context):
        with open(path, "w") as fh:
            json.dump({**self.summary(), **context}, fh, indent=2, sort_keys=True)
            fh.write("\n")


def project_l2ball(a, C):
    """Euclidean projection onto ``{|a|_2 <= C}``."""
    if not C > 0:
        raise ValueError(f"ball radius must be positive, got {C}")
    a = np.asarray(a, dtype=float)
    nrm = np.linalg.norm(a)
    # a few ulps of slack keep the map idempotent after rounding
    if nrm <= C * (1.0 + 4.0 * np.finfo(float).eps):
        return a.copy()
    return a * (C / nrm)


def _power_iteration(matvec, m, tol, max_iter):
    v = np.random.default_rng(0).standard_normal(m) + 1.0
    v /= np.linalg.norm(v)
    lam_old = 0.0
    for _ in range(max_iter):
        w = matvec(v)
        lam_new = float(v @ w)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        if abs(lam_new - lam_old) <= tol * abs(lam_new):
            # the Rayleigh quotient approaches lambda_max from below
            return max(lam_new, float(v @ matvec(v)))
        lam_old = lam_new
    raise PowerIterationError(f"power iteration did not reach rel. tol {tol} in {max_iter} sweeps")


def smoothness_estimate(system, tol=1e-6, max_iter=10_000):
    """``beta = 2 lambda_max(G)`` by power iteration on ``G``."""
    G = system.normal_matrix()
    return 2.0 * _power_iteration(lambda v: G @ v, system.m, tol, max_iter)


def condition_number(system):
    return smoothness_estimate(system) / (2.0 * system.lam) if system.lam > 0 else math.inf


def ridge(system):
    """Closed-form minimizer of ``F_n``: Cholesky solve of ``G a = rhs``.

    Forming ``G`` costs O(m^2 n), which dominates for n >= m.
    """
    t0 = time.perf_counter()
    G = system.normal_matrix()
    rhs = system.normal_rhs()
    eig = np.linalg.eigvalsh(G)
    lo, hi = float(eig[0]), float(eig[-1])
    if lo <= system.m * np.finfo(float).eps * max(hi, 1e-300):
        raise SingularSystemError(
            f"normal matrix is singular (min eigenvalue {lo:.3e}, lam={system.lam}); "
            "use a regularization parameter lam > 0"
        )
    cond = hi / lo
    if cond > COND_WARN:
        log.warning("normal matrix condition number %.3e exceeds %.0e", cond, COND_WARN)
    try:
        factor = linalg.cho_factor(G, lower=True, check_finite=True)
    except linalg.LinAlgError as exc:
        raise SingularSystemError(
            f"Cholesky factorization failed ({exc}); use a regularization parameter lam > 0"
        ) from exc
    a = linalg.cho_solve(factor, rhs)
    wall = time.perf_counter() - t0
    kappa = 2 * hi / (2 * system.lam) if system.lam > 0 else cond
    return SolveReport(
        a=a,
        loss_trace=np.array([system.loss(a)]),
        iterations=1,
        wall_time=wall,
        kappa_estimate=kappa,
        solver="ridge",
        time_trace=np.array([wall]),
        extra={"condition_number": cond},
    )


def default_radius(system):
    """Twice the norm of the unconstrained ridge minimizer (1 if that is 0)."""
    r = 2.0 * float(np.linalg.norm(ridge(system).a))
    return r if r > 0 else 1.0


def pgd(system, config, keep_iterates=False):
    """Projected gradient descent from ``a_1 = 0``.

    ``loss_trace[t]`` is ``F_n`` at the t-th iterate (``t = 0`` is the start);
    for the decreasing step the last entry is ``F_n`` of the returned average.
    """
    if not system.lam > 0:
        raise ValueError("projected gradient descent needs lam > 0 (strong convexity)")
    C = config.C if config.C is not None else default_radius(system)
    t0 = time.perf_counter()
    # every iteration works on the m x m quadratic form, O(m^2) per step
    G, rhs, const = system.quadratic()
    beta = 2.0 * _power_iteration(lambda v: G @ v, system.m, 1e-6, 10_000)
    kappa = beta / (2.0 * system.lam)

    def objective(a):
        return float(a @ (G @ a) - 2.0 * (rhs @ a) + const)

    T = int(config.T)
    a = np.zeros(system.m)
    losses = [objective(a)]
    times = [time.perf_counter() - t0]
    iterates = [a.copy()] if keep_iterates else None
    avg = np.zeros_like(a)
    t = 0
    for t in range(1, T + 1):
        if config.step == "inverse_smoothness":
            nu = 1.0 / beta
        else:
            nu = 1.0 / (system.lam * (t + 1))
            avg += t * a
        a = project_l2ball(a - nu * 2.0 * (G @ a - rhs), C)
        val = objective(a)
        if not math.isfinite(val):
            raise DivergenceError(f"non-finite objective at iteration {t}")
        losses.append(val)
        times.append(time.perf_counter() - t0)
        if keep_iterates:
            iterates.append(a.copy())
        if config.tolerance > 0 and config.step == "inverse_smoothness" and \
                abs(losses[-2] - val) <= config.tolerance * max(1.0, abs(val)):
            break
    if config.step == "decreasing":
        a = avg * (2.0 / (T * (T + 1)))
        losses.append(objective(a))
        times.append(time.perf_counter() - t0)
    return SolveReport(
        a=a,
        loss_trace=np.array(losses),
        iterations=t,
        wall_time=time.perf_counter() - t0,
        kappa_estimate=kappa,
        solver=f"pgd-{config.step}",
        time_trace=np.array(times),
        iterates=np.array(iterates) if keep_iterates else None,
        extra={"radius": C, "beta": beta, "step": config.step},
    )


# schedules --------------------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    name: str
    n: int
    m: int
    lam: float
    T: int | None = None

    @property
    def predicted_cost(self):
        return float(self.m) ** 2 * self.n

    @property
    def above_desk_scale(self):
        return self.predicted_cost > DESK_SCALE_FLOPS

    def as_dict(self):
        out = asdict(self)
        out["predicted_cost"] = self.predicted_cost
        return out


def theorem3_schedule(n, d, c=1.0):
    """Width ``n^((d+1)/(3d+7))``, ``lam = 1/sqrt(m)``, ``T = ceil(c sqrt(n) log n)``."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    m = max(2, int(round(n ** ((d + 1) / (3 * d + 7)))))
    lam = 1.0 / math.sqrt(m)
    T = int(math.ceil(c * math.sqrt(n) * math.log(n)))
    return Schedule("theorem3", int(n), m, lam, T)


def theorem4_schedule(n):
    """Width ``n^(1/4)`` with ``lam = 1`` for the closed-form ridge solve."""
    if n < 16:
        raise ValueError(f"need n >= 16, got {n}")
    m = int(round(n**0.25))
    return Schedule("theorem4", int(n), m, 1.0, None)
