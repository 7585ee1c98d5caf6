"""Deterministic sweeps: approximation rate, loss decay in width, single solves.

A :class:`SweepPlan` names the experiment and a parameter grid.  Each grid
cell is independent and reproducible from its own provenance columns, so
cells can run on a thread pool and the rows are sorted by key afterwards.
Failed cells are recorded with an ``error`` tag and do not stop the sweep.
"""

from __future__ import annotations

import csv
import functools
import hashlib
import io
import logging
import math
import pathlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import pinn, solvers
from .activation import ActivationKind
from .representation import build_approximant, make_target, sobolev_error
from .sampling import CompactPrior, HeavyTailPrior, sample

log = logging.getLogger(__name__)

EXPERIMENTS = ("approx_rate", "loss_decay", "solve")
DEFAULT_WIDTHS = tuple(range(50, 501, 50))
# PGD iterations when neither the plan nor the schedule fixes T
DEFAULT_PGD_T = 10_000

# stream tags keep bank, training and test randomness apart for one seed
_TRAIN_TAG = 1
_TEST_TAG = 2


@functools.lru_cache(maxsize=1)
def build_id():
    """Short content hash of the package sources (a git-style build id)."""
    root = pathlib.Path(__file__).resolve().parent
    h = hashlib.sha1()
    for path in sorted(root.rglob("*.py")):
        h.update(path.relative_to(root).as_posix().encode())
        h.update(path.read_bytes())
    return h.hexdigest()[:12]


def derived_seed(seed, tag):
    return int(np.random.SeedSequence([int(seed), int(tag)]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SweepPlan:
    experiment: str
    m: tuple = DEFAULT_WIDTHS
    n: tuple = (1000,)
    M: tuple = (2.0,)
    seeds: tuple = tuple(range(10))
    problem: str = "poisson1d"
    target: str = "gaussian"
    target_params: dict = field(default_factory=dict)
    d: int = 1
    activation: str = "spline34"
    prior: str = "compact"
    alpha: float = 7.0
    beta: float = 2.0
    lam: float | None = 1.0
    schedule: str | None = None
    solver: str = "ridge"
    T: int | None = None
    n_test_factor: int = 10
    problem_params: dict = field(default_factory=dict)
    output: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        for name in ("m", "n", "M", "seeds"):
            vals = tuple(getattr(self, name))
            if not vals:
                raise ValueError(f"parameter grid {name!r} is empty")
            object.__setattr__(self, name, vals)
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError(f"seeds must be pairwise distinct, got {list(self.seeds)}")
        if self.prior not in ("compact", "heavytail"):
            raise ValueError(f"unknown prior {self.prior!r}")
        if self.schedule not in (None, "theorem3", "theorem4"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.solver not in ("ridge", "pgd"):
            raise ValueError(f"unknown solver {self.solver!r}")
        ActivationKind.parse(self.activation)

    @classmethod
    def from_dict(cls, cfg):
        known = set(cls.__dataclass_fields__)
        extra = sorted(set(cfg) - known)
        if extra:
            raise ValueError(f"unknown plan keys {extra}")
        cfg = dict(cfg)
        for key in ("m", "n", "M", "seeds"):
            if key in cfg and np.isscalar(cfg[key]):
                cfg[key] = (cfg[key],)
        return cls(**cfg)

    def as_dict(self):
        out = asdict(self)
        for key in ("m", "n", "M", "seeds"):
            out[key] = list(out[key])
        return out

    def make_prior(self, M):
        if self.prior == "compact":
            return CompactPrior(float(M), self.d)
        return HeavyTailPrior(self.alpha, self.beta, self.d)

    def make_problem(self):
        return pinn.problem_from_config({"problem": self.problem, "d": self.d,
                                         **self.problem_params})


# CSV --------------------------------------------------------------------------

PROVENANCE = ("seed", "m", "n", "M", "lam", "activation", "prior", "schedule", "build_id")
COLUMNS = {
    "loss_decay": PROVENANCE + ("train_loss", "test_loss", "status"),
    "approx_rate": PROVENANCE + ("l2_err_sq", "h1_err_sq", "h2_err_sq", "status"),
    "solve": PROVENANCE + ("solver", "iterations", "train_loss", "test_loss", "rel_l2",
                           "kappa_estimate", "status"),
}


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_to_csv(rows, experiment):
    cols = COLUMNS[experiment]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in cols])
    return buf.getvalue()


def write_csv(rows, experiment, path):
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows, experiment))


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# cells ------------------------------------------------------------------------


def _provenance(plan, seed, m, n, M, lam):
    return {
        "seed": int(seed),
        "m": int(m),
        "n": None if n is None else int(n),
        "M": float(M) if plan.prior == "compact" else None,
        "lam": None if lam is None else float(lam),
        "activation": ActivationKind.parse(plan.activation).name.lower(),
        "prior": plan.prior if plan.prior == "compact"
        else f"heavytail(alpha={plan.alpha:g},beta={plan.beta:g})",
        "schedule": plan.schedule or "fixed",
        "build_id": build_id(),
    }


def _error_tag(exc):
    return f"error:{type(exc).__name__}: {exc}"


def _loss_decay_cell(plan, problem, key):
    m, n, M, seed = key
    row = _provenance(plan, seed, m, n, M, plan.lam)
    try:
        bank = sample(plan.make_prior(M), m, seed)
        colloc = pinn.sample_collocation(problem, n, derived_seed(seed, _TRAIN_TAG))
        system = pinn.assemble(problem, bank, colloc, plan.activation, plan.lam)
        a = solvers.ridge(system).a
        row["train_loss"] = float(system.loss(a))
        row["test_loss"] = pinn.estimate_test_loss(
            problem, bank, plan.activation, a, plan.n_test_factor * n,
            derived_seed(seed, _TEST_TAG))
        row["status"] = "ok"
    except Exception as exc:  # recorded, sweep continues
        log.warning("loss_decay cell %s failed: %s", key, exc)
        row.update(train_loss=math.nan, test_loss=math.nan, status=_error_tag(exc))
    return row


def _approx_cell(plan, target, key):
    m, _, M, seed = key
    row = _provenance(plan, seed, m, None, M, None)
    try:
        bank = sample(plan.make_prior(M), m, seed)
        model = build_approximant(target, bank, plan.activation)
        l2, h1, h2 = sobolev_error(model, target)
        row.update(l2_err_sq=l2, h1_err_sq=h1, h2_err_sq=h2, status="ok")
    except Exception as exc:
        log.warning("approx_rate cell %s failed: %s", key, exc)
        row.update(l2_err_sq=math.nan, h1_err_sq=math.nan, h2_err_sq=math.nan,
                   status=_error_tag(exc))
    return row


def _run_cells(fn, keys, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(fn, keys))
    else:
        rows = [fn(k) for k in keys]
    return sorted(rows, key=_row_key)


def _row_key(row):
    return (row["m"], row["n"] or 0, row["M"] or 0.0, row["seed"])


def _grid(plan, use_n=True):
    ns = plan.n if use_n else (None,)
    return [(m, n, M, s) for m in plan.m for n in ns for M in plan.M for s in plan.seeds]


def run_loss_decay(plan, threads=1):
    """One row per (m, n, M, seed): ridge solve with the plan's lam, test loss on
    ``n_test_factor * n`` fresh points."""
    if plan.experiment != "loss_decay":
        raise ValueError(f"plan is for {plan.experiment!r}, not loss_decay")
    if plan.lam is None:
        raise ValueError("loss_decay needs a fixed lam")
    problem = plan.make_problem()
    rows = _run_cells(functools.partial(_loss_decay_cell, plan, problem), _grid(plan), threads)
    _maybe_write(plan, rows)
    return rows


def run_approx_rate(plan, threads=1):
    """One row per (m, M, seed) with squared L2/H1/H2 errors of the Monte-Carlo
    approximant of the plan's target."""
    if plan.experiment != "approx_rate":
        raise ValueError(f"plan is for {plan.experiment!r}, not approx_rate")
    target = make_target(plan.target, plan.d, **plan.target_params)
    M_grid = plan.M if plan.prior == "compact" else plan.M[:1]
    plan_eff = replace(plan, M=M_grid)
    rows = _run_cells(functools.partial(_approx_cell, plan_eff, target),
                      _grid(plan_eff, use_n=False), threads)
    _maybe_write(plan, rows)
    return rows


def resolve_schedule(plan, n):
    """``(m, lam, T)`` for the plan at ``n`` collocation points."""
    if plan.schedule == "theorem3":
        s = solvers.theorem3_schedule(n, plan.d)
        return s.m, s.lam, s.T if plan.T is None else plan.T
    if plan.schedule == "theorem4":
        s = solvers.theorem4_schedule(n)
        return s.m, s.lam, plan.T
    if plan.lam is None:
        raise ValueError("a fixed schedule needs lam")
    return plan.m[0], plan.lam, plan.T


def run_solve(plan, seed=None):
    """Full pipeline for one configuration: sample, assemble, solve, evaluate."""
    if plan.experiment != "solve":
        raise ValueError(f"plan is for {plan.experiment!r}, not solve")
    seed = plan.seeds[0] if seed is None else int(seed)
    n = int(plan.n[0])
    M = plan.M[0]
    m, lam, T = resolve_schedule(plan, n)
    problem = plan.make_problem()
    t0 = time.perf_counter()
    try:
        bank = sample(plan.make_prior(M), m, seed)
        colloc = pinn.sample_collocation(problem, n, derived_seed(seed, _TRAIN_TAG))
        system = pinn.assemble(problem, bank, colloc, plan.activation, lam)
        if plan.solver == "ridge":
            report = solvers.ridge(system)
        else:
            report = solvers.pgd(system, solvers.PGDConfig(T=T or DEFAULT_PGD_T))
    except Exception as exc:
        raise type(exc)(f"solve failed for seed={seed}, m={m}, n={n}, lam={lam}: {exc}") from exc
    a = report.a
    test = pinn.estimate_test_loss(problem, bank, plan.activation, a,
                                   plan.n_test_factor * n, derived_seed(seed, _TEST_TAG))
    try:
        rel = pinn.relative_l2_error(problem, bank, plan.activation, a)
    except pinn.UnsupportedMetric:
        rel = None
    out = _provenance(plan, seed, m, n, M, lam)
    out.update(
        solver=report.solver,
        iterations=report.iterations,
        T=T,
        train_loss=float(system.loss(a)),
        test_loss=test,
        rel_l2=rel,
        kappa_estimate=report.kappa_estimate,
        wall_time=time.perf_counter() - t0,
        status="ok",
    )
    return out, report


def _maybe_write(plan, rows):
    if plan.output:
        write_csv(rows, plan.experiment, plan.output)


# aggregation ------------------------------------------------------------------


def aggregate(rows, value, by="m", how="median"):
    """``[(key, stat)]`` over rows with ``status == 'ok'`` and a finite value,
    sorted by key."""
    reducer = {"median": np.median, "mean": np.mean}[how]
    groups = {}
    for r in rows:
        if r.get("status", "ok") != "ok":
            continue
        v = float(r[value])
        if math.isfinite(v):
            groups.setdefault(float(r[by]), []).append(v)
    return [(k, float(reducer(v))) for k, v in sorted(groups.items())]


def fit_loglog_slope(points):
    """Least-squares line through ``(log x, log y)``: ``(slope, intercept, r2)``."""
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points for a slope fit, got {len(pts)}")
    if any(not (x > 0 and y > 0) for x, y in pts):
        raise ValueError("log-log fit needs strictly positive x and y")
    lx = np.log([p[0] for p in pts])
    ly = np.log([p[1] for p in pts])
    A = np.column_stack([lx, np.ones_like(lx)])
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + icpt)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(icpt), r2
