"""Synthetic designs, assumption checks and Monte-Carlo screening experiments."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from statistics import median
from typing import Any, Optional, Union

import numpy as np
from scipy import linalg
from threadpoolctl import threadpool_limits

from .model import (
    AlgorithmConfig,
    Dataset,
    InfeasibleConstruction,
    InvalidInput,
    NotPositiveDefinite,
    ScreeningError,
    Selection,
    TrueModel,
)
from .pipeline import check_sure_screening, iterations_to_coverage, run

Seed = Union[int, np.random.SeedSequence, None]


@dataclass(frozen=True, eq=False)
class CovarianceSpec:
    """Predictor covariance: ``identity``, ``ar1`` (rho^|i-j|), ``cs`` or ``custom``."""

    family: str
    p: int
    rho: float = 0.0
    matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.family not in ("identity", "ar1", "cs", "custom"):
            raise InvalidInput(f"unknown covariance family {self.family!r}")
        if self.p < 1:
            raise InvalidInput("p must be >= 1")
        if self.family in ("ar1", "cs") and not abs(self.rho) < 1:
            raise InvalidInput("need |rho| < 1")
        if self.family == "cs" and self.p > 1 and self.rho <= -1 / (self.p - 1):
            raise InvalidInput("compound symmetry needs rho > -1/(p-1)")
        if self.family == "custom":
            m = np.asarray(self.matrix, dtype=float)
            if m.shape != (self.p, self.p) or not np.allclose(m, m.T):
                raise InvalidInput("custom covariance must be a symmetric p x p matrix")
            object.__setattr__(self, "matrix", m)

    @classmethod
    def parse(cls, text: str, p: int) -> "CovarianceSpec":
        """``identity``, ``ar1:0.5``, ``cs:0.3``."""
        name, _, arg = text.partition(":")
        name = name.strip().lower()
        if name == "identity":
            return cls("identity", p)
        if name in ("ar1", "cs") and arg:
            return cls(name, p, float(arg))
        raise InvalidInput(f"cannot parse covariance {text!r}")

    def label(self) -> str:
        return self.family if self.family in ("identity", "custom") else f"{self.family}:{self.rho!r}"

    def sigma(self) -> np.ndarray:
        p = self.p
        if self.family == "identity":
            return np.eye(p)
        if self.family == "ar1":
            i = np.arange(p)
            return self.rho ** np.abs(i[:, None] - i[None, :])
        if self.family == "cs":
            return np.full((p, p), self.rho) + (1 - self.rho) * np.eye(p)
        return self.matrix.copy()

    def cholesky(self) -> np.ndarray:
        """Lower factor L with L L' = Sigma."""
        if self.family == "custom":
            return _chol(self.sigma())
        return _cached_chol(self.family, self.p, self.rho)


def _chol(sigma: np.ndarray) -> np.ndarray:
    try:
        return linalg.cholesky(sigma, lower=True)
    except linalg.LinAlgError as e:
        raise NotPositiveDefinite(str(e)) from None


@lru_cache(maxsize=8)
def _cached_chol(family: str, p: int, rho: float) -> np.ndarray:
    out = _chol(CovarianceSpec(family, p, rho).sigma())
    out.setflags(write=False)
    return out


def _rng(seed: Seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def gen_design(n: int, cov: CovarianceSpec, seed: Seed = None) -> np.ndarray:
    """n Gaussian rows x ~ N(0, Sigma), drawn as Z L'."""
    z = _rng(seed).standard_normal((n, cov.p))
    return z @ cov.cholesky().T


def gen_response(x: np.ndarray, truth: TrueModel, noise_sd: float, seed: Seed = None) -> np.ndarray:
    """Y = X beta + eps with eps ~ N(0, noise_sd^2) i.i.d."""
    if noise_sd < 0:
        raise InvalidInput("noise_sd must be >= 0")
    signal = x @ truth.beta
    if noise_sd == 0:
        return signal
    return signal + noise_sd * _rng(seed).standard_normal(x.shape[0])


@dataclass
class EigenReport:
    min_eigenvalue: float
    max_eigenvalue: float
    violation_fraction: float
    n_subsets: int
    violating_subsets: list[tuple[int, ...]] = field(default_factory=list)
    note: str = "sampled subsets: a lower bound on the true violation count"


def check_eigen_condition(
    x: np.ndarray,
    max_subset_size: int,
    n_subsets: int,
    tau_min: float,
    tau_max: float,
    seed: Seed = None,
    subsets: Optional[list] = None,
) -> EigenReport:
    """Extreme eigenvalues of X_S'X_S/n over random subsets with |S| in 1..s.

    Enumerating every subset is infeasible, so this samples ``n_subsets`` of
    them (sizes uniform on 1..s); extra ``subsets`` are always included.
    """
    n, p = x.shape
    if max_subset_size > min(n, p):
        raise InvalidInput("subset size must not exceed min(n, p)")
    rng = _rng(seed)
    chosen = [tuple(s) for s in (subsets or [])]
    for _ in range(n_subsets):
        size = int(rng.integers(1, max_subset_size + 1))
        chosen.append(tuple(int(j) for j in rng.choice(p, size, replace=False)))
    lo, hi, bad = math.inf, -math.inf, []
    for s in chosen:
        xs = x[:, list(s)]
        ev = linalg.eigvalsh(xs.T @ xs / n)
        lo, hi = min(lo, ev[0]), max(hi, ev[-1])
        if ev[0] < tau_min or ev[-1] > tau_max:
            bad.append(s)
    return EigenReport(float(lo), float(hi), len(bad) / max(len(chosen), 1), len(chosen), bad)


def adversarial_population(p: int, t: int, rho: float, beta_value: float = 5.0):
    """Population (Sigma, beta) where the last relevant predictor has zero
    marginal covariance with y.

    Sigma is compound symmetry(rho) on the first t coordinates and identity on
    the rest; beta = (b, ..., b, c, 0, ...) with c solving (Sigma beta)_t = 0.
    """
    if t < 2 or p <= t:
        raise InvalidInput("need t >= 2 and p > t")
    block = CovarianceSpec("cs", t, rho).sigma()
    beta_t = np.full(t, float(beta_value))
    # (Sigma beta)_{t-1} = Sigma_tt c + Sigma_{t,-t} beta_{-t} = 0
    c = -(block[t - 1, : t - 1] @ beta_t[: t - 1]) / block[t - 1, t - 1]
    if c == 0 or not math.isfinite(c):
        raise InfeasibleConstruction(
            f"rho={rho} forces the last relevant coefficient to zero"
        )
    beta_t[t - 1] = c
    sigma = np.eye(p)
    sigma[:t, :t] = block
    beta = np.zeros(p)
    beta[:t] = beta_t
    return sigma, beta


def adversarial_instance(
    n: int,
    p: int,
    t: int,
    seed: Seed = None,
    rho: float = 0.5,
    beta_value: float = 5.0,
    noise_sd: float = 1.0,
) -> tuple[Dataset, TrueModel]:
    """Data where column t-1 is relevant but marginally uncorrelated with y."""
    sigma, beta = adversarial_population(p, t, rho, beta_value)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    s_x, s_e = ss.spawn(2)
    rng = _rng(s_x)
    z = rng.standard_normal((n, p))
    x = z.copy()
    x[:, :t] = z[:, :t] @ _chol(sigma[:t, :t]).T
    truth = TrueModel.from_beta(beta)
    y = gen_response(x, truth, noise_sd, s_e)
    return Dataset(x, y), truth


@dataclass(frozen=True)
class TruthSpec:
    """How the true support and coefficients are drawn per replication."""

    t: int
    beta_value: float = 1.0
    signs: str = "positive"  # or "random"
    placement: str = "random"  # or "first"

    def draw(self, p: int, seed: Seed = None) -> TrueModel:
        if not 0 <= self.t <= p:
            raise InvalidInput("need 0 <= t <= p")
        rng = _rng(seed)
        if self.placement == "first":
            idx = np.arange(self.t)
        else:
            idx = np.sort(rng.choice(p, self.t, replace=False))
        beta = np.zeros(p)
        mags = np.full(self.t, float(self.beta_value))
        if self.signs == "random":
            mags *= rng.choice([-1.0, 1.0], self.t)
        beta[idx] = mags
        return TrueModel.from_beta(beta)


@dataclass(frozen=True)
class ExperimentSpec:
    n: int
    p: int
    covariance: CovarianceSpec
    truth: TruthSpec
    noise_sd: float
    replications: int
    algorithm: AlgorithmConfig
    success_mode: Optional[str] = None  # None: final for SEL1/SEL2, any for SEL3
    seed: int = 0
    adversarial: bool = False

    def __post_init__(self):
        if self.replications < 1:
            raise InvalidInput("replications must be >= 1")
        if self.truth.t > self.p:
            raise InvalidInput("t must not exceed p")
        if self.noise_sd < 0:
            raise InvalidInput("noise_sd must be >= 0")
        if self.success_mode not in (None, "final", "any"):
            raise InvalidInput("success_mode is 'final' or 'any'")

    @property
    def resolved_success_mode(self) -> str:
        if self.success_mode is not None:
            return self.success_mode
        return "any" if self.algorithm.selection is Selection.SEL3 else "final"

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "p": self.p,
            "covariance": self.covariance.label(),
            "t": self.truth.t,
            "beta_value": self.truth.beta_value,
            "signs": self.truth.signs,
            "placement": self.truth.placement,
            "noise_sd": self.noise_sd,
            "replications": self.replications,
            "algorithm": self.algorithm.to_dict(),
            "success_mode": self.resolved_success_mode,
            "seed": self.seed,
            "adversarial": self.adversarial,
        }


def replication_data(spec: ExperimentSpec, rep: int) -> tuple[Dataset, TrueModel]:
    """Data for replication ``rep``; depends only on (seed, rep)."""
    ss = np.random.SeedSequence(spec.seed, spawn_key=(rep,))
    if spec.adversarial:
        rho = spec.covariance.rho if spec.covariance.family == "cs" else 0.5
        return adversarial_instance(
            spec.n, spec.p, spec.truth.t, ss, rho=rho,
            beta_value=spec.truth.beta_value, noise_sd=spec.noise_sd,
        )
    s_truth, s_x, s_e = ss.spawn(3)
    truth = spec.truth.draw(spec.p, s_truth)
    x = gen_design(spec.n, spec.covariance, s_x)
    y = gen_response(x, truth, spec.noise_sd, s_e)
    return Dataset(x, y), truth


def run_replication(spec: ExperimentSpec, rep: int) -> dict[str, Any]:
    data, truth = replication_data(spec, rep)
    rec: dict[str, Any] = {"rep": rep}
    try:
        traj = run(data, spec.algorithm)
    except ScreeningError as e:
        rec.update(success=False, error=f"{type(e).__name__}: {e}", steps=0,
                   iterations_to_coverage=None, final_model_size=0, stop_reason=None,
                   all_converged=False)
        return rec
    ok = bool(traj.records) and check_sure_screening(traj, truth, spec.resolved_success_mode)
    rec.update(
        success=ok,
        error=None,
        steps=len(traj),
        iterations_to_coverage=iterations_to_coverage(traj, truth),
        final_model_size=len(traj.final_model),
        stop_reason=traj.stop_reason.value,
        all_converged=all(r.converged for r in traj.records),
    )
    return rec


def _worker_init():
    threadpool_limits(1)


def _run_chunk(args):
    spec, reps = args
    return [run_replication(spec, r) for r in reps]


def resolve_workers(requested: Optional[int] = None) -> int:
    """Worker count: ``requested`` (default: all cores), capped by ISCREEN_THREADS."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get("ISCREEN_THREADS")
    if cap:
        n = min(n, int(cap))
    return max(1, n)


@dataclass
class ExperimentReport:
    spec: dict[str, Any]
    success_count: int
    replications: int
    success_rate: float
    mean_iterations_to_coverage: Optional[float]
    median_iterations_to_coverage: Optional[float]
    mean_final_model_size: float
    records: list[dict[str, Any]]
    wall_time_s: float = 0.0

    def to_dict(self, timing: bool = True) -> dict[str, Any]:
        d = {
            "spec": self.spec,
            "success_count": self.success_count,
            "replications": self.replications,
            "success_rate": self.success_rate,
            "mean_iterations_to_coverage": self.mean_iterations_to_coverage,
            "median_iterations_to_coverage": self.median_iterations_to_coverage,
            "mean_final_model_size": self.mean_final_model_size,
            "records": self.records,
        }
        if timing:
            d["timing"] = {"wall_time_s": self.wall_time_s}
        return d


def run_experiment(spec: ExperimentSpec, workers: Optional[int] = None) -> ExperimentReport:
    """Monte-Carlo estimate of the sure-screening probability.

    Replication r uses data seeded from (spec.seed, r) alone and BLAS is pinned
    to one thread per worker, so the report does not depend on ``workers``.
    """
    start = time.perf_counter()
    workers = resolve_workers(workers)
    reps = list(range(spec.replications))
    if workers == 1 or spec.replications == 1:
        with threadpool_limits(1):
            records = [run_replication(spec, r) for r in reps]
    else:
        chunks = [(spec, reps[i::workers]) for i in range(workers)]
        with ProcessPoolExecutor(workers, initializer=_worker_init) as pool:
            parts = list(pool.map(_run_chunk, chunks))
        records = sorted((r for part in parts for r in part), key=lambda r: r["rep"])
    hits = [r["iterations_to_coverage"] for r in records if r["iterations_to_coverage"] is not None]
    count = sum(r["success"] for r in records)
    return ExperimentReport(
        spec=spec.to_dict(),
        success_count=count,
        replications=spec.replications,
        success_rate=count / spec.replications,
        mean_iterations_to_coverage=float(np.mean(hits)) if hits else None,
        median_iterations_to_coverage=float(median(hits)) if hits else None,
        mean_final_model_size=float(np.mean([r["final_model_size"] for r in records])),
        records=records,
        wall_time_s=time.perf_counter() - start,
    )
