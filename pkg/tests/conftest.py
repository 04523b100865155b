import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from iscreen.model import Dataset

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def orthonormal_design(n, p, seed=0):
    """Columns orthogonal with ||X_j||^2 = n."""
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((n, p)))
    return q * np.sqrt(n)


def gaussian_data(n, p, seed=0, t=3, noise=1.0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[: min(t, p)] = 1.5
    return Dataset(x, x @ beta + noise * rng.standard_normal(n)), beta


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def record(criterion, passed, detail):
    ACCEPTANCE[criterion] = (bool(passed), detail)
    print(f"{criterion} {'PASS' if passed else 'FAIL'}  {detail}")
    assert passed, f"{criterion}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{name} {'PASS' if ok else 'FAIL'}  {detail}")
