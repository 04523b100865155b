"""Agreement suites: incremental engine and PLS solver against the oracles.

Each suite draws random instances from a seeded generator and reports the
worst error seen; ``run_all`` backs the ``iscreen verify`` command.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import oracle
from .model import Dataset, PenaltySpec, Screening, TrueModel
from .penalty import kkt_residual, solve_pls
from .projection import new_state, relevant_signal_bound

REL_TOL = 1e-8
SLACK = 1e-8
PLS_TOL = 1e-6


@dataclass
class SuiteResult:
    name: str
    passed: bool
    instances: int
    max_error: float
    failures: list[str] = field(default_factory=list)

    def to_dict(self):
        return {
            "suite": self.name,
            "passed": self.passed,
            "instances": self.instances,
            "max_error": self.max_error,
            "failures": self.failures[:10],
        }


@dataclass
class Instance:
    data: Dataset
    truth: TrueModel
    noise: np.ndarray
    active: list[int]
    candidate: int


def random_instance(rng: np.random.Generator) -> Instance:
    """Gaussian design with n in [10, 50], p in [2, 20], |S| <= 8 and |S u T| < n."""
    n = int(rng.integers(10, 51))
    p = int(rng.integers(2, 21))
    x = rng.standard_normal((n, p))
    t = int(rng.integers(1, min(5, p) + 1))
    support = np.sort(rng.choice(p, t, replace=False))
    beta = np.zeros(p)
    beta[support] = rng.uniform(0.5, 2.0, t) * rng.choice([-1.0, 1.0], t)
    noise = rng.standard_normal(n)
    y = x @ beta + noise
    s = int(rng.integers(0, min(8, p - 1) + 1))
    active = [int(j) for j in rng.choice(p, s, replace=False)]
    # keep X_{S u T u {j}} comfortably full rank
    while len(set(active) | set(support.tolist())) + 1 >= n and active:
        active.pop()
    rest = [j for j in range(p) if j not in active]
    cand = int(rng.choice(rest))
    return Instance(Dataset(x, y), TrueModel.from_beta(beta), noise, active, cand)


def _rel(a: float, b: float, scale: float) -> float:
    return abs(a - b) / max(abs(b), 1e-14 * scale, 1e-300)


def suite_rss_delta(instances: int, seed: int) -> SuiteResult:
    """RSS drop from one column equals (X_j'M_S Y)^2/||M_S X_j||^2.

    The reported error compares the closed form with the oracle drop. The
    engine's own rss(S) - rss(S u {j}) is also checked, with an extra
    allowance of 1e-13 rss(S) since a difference of two RSS values cannot
    resolve anything finer.
    """
    rng = np.random.default_rng(seed)
    worst, fails = 0.0, []
    for i in range(instances):
        inst = random_instance(rng)
        x, y = inst.data.x, inst.data.y
        st = new_state(inst.data).extend(inst.active)
        fast = st.rss_delta_single(inst.candidate)
        ref = oracle.dense_rss_drop(x, y, inst.active, inst.candidate)
        err = _rel(fast, ref, y @ y)
        extended = st.rss - st.extend([inst.candidate]).rss
        sub_ok = abs(extended - ref) <= REL_TOL * abs(ref) + 1e-13 * st.rss
        worst = max(worst, err)
        if err > REL_TOL or not sub_ok:
            fails.append(f"instance {i}: rel err {err:.3g}, subtraction {extended:.10g} vs {ref:.10g}")
    return SuiteResult("rss_delta", not fails, instances, worst, fails)


def suite_joint_coef(instances: int, seed: int) -> SuiteResult:
    """beta_hat_last matches the joint OLS refit and satisfies b^2 d^2 = m^2."""
    rng = np.random.default_rng(seed)
    worst, fails = 0.0, []
    for i in range(instances):
        inst = random_instance(rng)
        x, y = inst.data.x, inst.data.y
        st = new_state(inst.data).extend(inst.active)
        j = inst.candidate
        b = st.beta_hat_last(j)
        ref = oracle.dense_joint_ols_last_coef(x, y, inst.active, j)
        m = oracle.dense_residual_stat(x, y, inst.active, j)
        d = st.projected_col_norm_sq(j)
        err = max(_rel(b, ref, 1.0), _rel(b * b * d * d, m * m, y @ y * (x[:, j] @ x[:, j])))
        worst = max(worst, err)
        if err > REL_TOL:
            fails.append(f"instance {i}: rel err {err:.3g}")
    return SuiteResult("joint_coef", not fails, instances, worst, fails)


def suite_rss_lower_bound(instances: int, seed: int) -> SuiteResult:
    """RSS drop from a block A is at least sum (X_i'M_S Y)^2 / lambda_max(X_A'M_S X_A)."""
    rng = np.random.default_rng(seed)
    worst, fails = 0.0, []
    for i in range(instances):
        inst = random_instance(rng)
        p, n = inst.data.p, inst.data.n
        st = new_state(inst.data).extend(inst.active)
        rest = [j for j in range(p) if j not in inst.active]
        size = int(rng.integers(1, min(len(rest), n - 1 - len(inst.active), 4) + 1))
        add = [int(j) for j in rng.choice(rest, size, replace=False)]
        lhs, rhs = st.rss_lower_bound_check(add)
        viol = (rhs - lhs) / max(1.0, lhs)
        worst = max(worst, viol)
        if viol > SLACK:
            fails.append(f"instance {i}: lhs {lhs:.6g} < rhs {rhs:.6g}")
    return SuiteResult("rss_lower_bound", not fails, instances, max(worst, 0.0), fails)


def suite_signal_bound(instances: int, seed: int) -> SuiteResult:
    """max over missed relevant columns of (X_i'M_S Y)^2 respects its lower bound."""
    rng = np.random.default_rng(seed)
    worst, fails, checked = 0.0, [], 0
    for i in range(instances):
        inst = random_instance(rng)
        st = new_state(inst.data).extend(inst.active)
        out = relevant_signal_bound(st, inst.truth, inst.noise)
        if out is None:
            continue
        checked += 1
        lhs, rhs = out
        viol = (rhs - lhs) / max(1.0, abs(lhs))
        worst = max(worst, viol)
        if viol > SLACK:
            fails.append(f"instance {i}: lhs {lhs:.6g} < rhs {rhs:.6g}")
    return SuiteResult("signal_bound", not fails, checked, max(worst, 0.0), fails)


def suite_screen(criterion: Screening, instances: int, seed: int) -> SuiteResult:
    """Fast screening returns exactly the brute-force set, in the same order."""
    from .criteria import screen

    rng = np.random.default_rng(seed)
    fails = []
    for i in range(instances):
        inst = random_instance(rng)
        rest = inst.data.p - len(inst.active)
        size = int(rng.integers(1, rest + 2))
        st = new_state(inst.data).extend(inst.active)
        fast = screen(criterion, st, size)
        ref = oracle.brute_screen(criterion, inst.data.x, inst.data.y, inst.active, size)
        if fast != ref:
            fails.append(f"instance {i}: {fast} != {ref}")
    return SuiteResult(
        f"screen_{Screening(criterion).value.lower()}", not fails, instances, float(len(fails)), fails
    )


def pls_instance(rng: np.random.Generator, m: int, kind: str):
    """Small PLS problem whose objective is convex even for SCAD.

    Columns are scaled to ||X_j||^2 = n and redrawn until
    lambda_min(X'X/n) > 1/(a - 1), which dominates the SCAD concavity.
    """
    a = 3.7
    while True:
        n = int(rng.integers(20, 61))
        x = rng.standard_normal((n, m))
        x *= np.sqrt(n) / np.linalg.norm(x, axis=0)
        if np.linalg.eigvalsh(x.T @ x / n)[0] > 1 / (a - 1):
            break
    beta = rng.uniform(-2, 2, m) * (rng.random(m) < 0.7)
    z = x @ beta + rng.standard_normal(n) * rng.uniform(0.2, 1.5)
    lam = float(rng.uniform(0.05, 1.5))
    return x, z, PenaltySpec(kind, lam, a)


def suite_pls_grid(instances: int, seed: int) -> SuiteResult:
    """solve_pls never loses to an exhaustive grid for m <= 2 (LASSO and SCAD)."""
    rng = np.random.default_rng(seed)
    worst, fails = -np.inf, []
    for i in range(instances):
        m = int(rng.integers(1, 3))
        kind = "lasso" if i % 2 == 0 else "scad"
        x, z, pen = pls_instance(rng, m, kind)
        sol = solve_pls(x, z, pen)
        _, grid_obj = oracle.grid_pls(x, z, pen, grid_radius=4.0, grid_step=0.02)
        gap = sol.objective - grid_obj
        worst = max(worst, gap)
        if gap > PLS_TOL:
            fails.append(f"instance {i} ({kind}, m={m}): solver {sol.objective:.10g} > grid {grid_obj:.10g}")
    return SuiteResult("pls_grid", not fails, instances, float(worst), fails)


def suite_lasso_kkt(instances: int, seed: int, max_m: int = 50) -> SuiteResult:
    """LASSO solutions satisfy the KKT conditions up to 1e-6."""
    rng = np.random.default_rng(seed)
    worst, fails = 0.0, []
    for i in range(instances):
        m = int(rng.integers(1, max_m + 1))
        n = int(rng.integers(max(10, m // 2), 2 * m + 20))
        x = rng.standard_normal((n, m))
        beta = rng.standard_normal(m) * (rng.random(m) < 0.3)
        z = x @ beta + rng.standard_normal(n)
        lam = float(rng.uniform(0.01, 1.0))
        sol = solve_pls(x, z, PenaltySpec("lasso", lam))
        err = kkt_residual(x, z, sol.coefficients, lam)
        worst = max(worst, err)
        if err > PLS_TOL:
            fails.append(f"instance {i} (m={m}, n={n}): KKT residual {err:.3g}")
    return SuiteResult("lasso_kkt", not fails, instances, worst, fails)


SUITES: dict[str, Callable[[int, int], SuiteResult]] = {
    "rss_delta": suite_rss_delta,
    "joint_coef": suite_joint_coef,
    "rss_lower_bound": suite_rss_lower_bound,
    "signal_bound": suite_signal_bound,
    "screen_scr1": lambda k, s: suite_screen(Screening.SCR1, k, s),
    "screen_scr2": lambda k, s: suite_screen(Screening.SCR2, k, s),
    "screen_scr3": lambda k, s: suite_screen(Screening.SCR3, k, s),
    "pls_grid": suite_pls_grid,
    "lasso_kkt": suite_lasso_kkt,
}


def run_all(instances: int, seed: int) -> list[SuiteResult]:
    return [fn(instances, seed + i) for i, fn in enumerate(SUITES.values())]
