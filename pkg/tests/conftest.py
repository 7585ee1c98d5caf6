import numpy as np
import pytest

from rfpinn import pinn
from rfpinn.sampling import CompactPrior, FeatureBank


def single_feature_bank(w, b, M=2.0):
    w = np.atleast_2d(np.asarray(w, dtype=float))
    return FeatureBank(w, np.atleast_1d(float(b)), CompactPrior(M, w.shape[1]), seed=0)


@pytest.fixture
def poisson():
    return pinn.poisson1d()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance summary: one line per criterion, printed after the run.
# Kept on the config object because test modules also import this file.


@pytest.fixture
def record_criterion(request):
    lines = request.config.__dict__.setdefault("_rfpinn_criteria", {})

    def record(k, ok, detail):
        line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'} {detail}"
        lines[str(k)] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.__dict__.get("_rfpinn_criteria")
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines, key=lambda s: (int(s.rstrip("ab")), s)):
            terminalreporter.write_line(lines[k])
