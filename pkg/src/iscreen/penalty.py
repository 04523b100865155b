"""LASSO / SCAD penalties and the penalized least-squares solver.

The objective keeps the n-scaled convention

    ||z - X beta||^2 + n * sum_j p_lambda(|beta_j|)

so the LASSO soft-threshold level for coordinate j is n*lambda/2.
SCAD is minimized by local linear approximation (LLA): a sequence of weighted
LASSO problems started from the plain LASSO solution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from .model import PenaltyKind, PenaltySpec, ScreeningError

log = logging.getLogger(__name__)

ZERO_SNAP = 1e-12


class NotConverged(ScreeningError):
    """Soft failure; ``solution`` holds the best iterate found."""

    def __init__(self, solution: "PlsSolution"):
        super().__init__(f"PLS solver stopped after {solution.iterations} sweeps")
        self.solution = solution


def lasso_penalty(theta, lam: float):
    return lam * np.abs(theta)


def scad_derivative(theta, lam: float, a: float = 3.7):
    """p'_lambda(theta) for theta >= 0."""
    theta = np.asarray(theta, dtype=float)
    out = np.where(theta <= lam, lam, np.maximum(a * lam - theta, 0.0) / (a - 1))
    return out if out.ndim else float(out)


def scad_penalty(theta, lam: float, a: float = 3.7):
    """Antiderivative of :func:`scad_derivative` with p(0) = 0."""
    theta = np.abs(np.asarray(theta, dtype=float))
    mid = (2 * a * lam * theta - theta**2 - lam**2) / (2 * (a - 1))
    out = np.where(
        theta <= lam,
        lam * theta,
        np.where(theta <= a * lam, mid, lam**2 * (a + 1) / 2),
    )
    return out if out.ndim else float(out)


def penalty_value(theta, penalty: PenaltySpec):
    if penalty.kind is PenaltyKind.LASSO:
        return lasso_penalty(theta, penalty.lam)
    return scad_penalty(np.abs(theta), penalty.lam, penalty.scad_a)


def objective_value(x_cols, z, beta, penalty: PenaltySpec) -> float:
    """||z - X beta||^2 + n * sum_j p_lambda(|beta_j|)."""
    x_cols = np.asarray(x_cols, dtype=float)
    beta = np.asarray(beta, dtype=float)
    r = np.asarray(z, dtype=float) - x_cols @ beta
    n = x_cols.shape[0]
    return float(r @ r + n * np.sum(penalty_value(beta, penalty)))


@dataclass
class SolverOptions:
    tol: float = 1e-8
    max_sweeps: int = 10_000
    lla_iters: int = 25


@dataclass
class PlsSolution:
    coefficients: np.ndarray
    objective: float
    iterations: int
    converged: bool
    objective_path: list[float] = field(default_factory=list)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.coefficients))


def _weighted_lasso_cd(gram, q, thresh, beta, tol, max_sweeps):
    """Coordinate descent on 0.5 b'Gb - q'b + sum_j thresh_j |b_j| (Gram form).

    ``thresh`` is n*w_j/2, matching the n-scaled objective halved.
    Returns (beta, sweeps, converged).
    """
    m = gram.shape[0]
    diag = np.diag(gram).copy()
    grad = q - gram @ beta  # X'(z - X b)
    active_idx = np.arange(m)
    sweeps = 0
    full_pass = True
    while sweeps < max_sweeps:
        sweeps += 1
        max_delta = 0.0
        scale = max(1.0, float(np.abs(beta).max()))
        for j in range(m) if full_pass else active_idx:
            if diag[j] <= 0:
                continue
            old = beta[j]
            c = grad[j] + diag[j] * old
            new = np.sign(c) * max(abs(c) - thresh[j], 0.0) / diag[j]
            if new != old:
                d = new - old
                grad -= gram[:, j] * d
                beta[j] = new
                if abs(d) > max_delta:
                    max_delta = abs(d)
        if max_delta <= tol * scale:
            if full_pass:
                return beta, sweeps, True
            # active set settled; confirm with a sweep over every coordinate
            full_pass = True
        elif full_pass:
            active_idx = np.flatnonzero(beta)
            full_pass = active_idx.size == 0
    return beta, sweeps, False


def _polish(gram, q, thresh, beta):
    """Solve the KKT system exactly on the CD support when signs agree."""
    supp = np.flatnonzero(beta)
    if supp.size == 0:
        return beta
    signs = np.sign(beta[supp])
    try:
        b = linalg.solve(
            gram[np.ix_(supp, supp)], q[supp] - thresh[supp] * signs, assume_a="pos"
        )
    except (linalg.LinAlgError, ValueError):
        return beta
    if not np.all(np.sign(b) == signs):
        return beta
    cand = np.zeros_like(beta)
    cand[supp] = b
    grad = q - gram @ cand
    off = np.ones(beta.size, dtype=bool)
    off[supp] = False
    if np.any(np.abs(grad[off]) > thresh[off] * (1 + 1e-9) + 1e-12):
        return beta
    return cand


def _snap(beta):
    beta = beta.copy()
    beta[np.abs(beta) < ZERO_SNAP] = 0.0
    return beta


def _weighted_lasso(gram, q, thresh, beta0, opts: SolverOptions):
    beta, sweeps, ok = _weighted_lasso_cd(
        gram, q, thresh, beta0.copy(), opts.tol, opts.max_sweeps
    )
    return _snap(_polish(gram, q, thresh, beta)), sweeps, ok


def solve_pls(
    x_cols,
    z,
    penalty: PenaltySpec,
    options: Optional[SolverOptions] = None,
    init: Optional[np.ndarray] = None,
    strict: bool = False,
) -> PlsSolution:
    """Minimize ||z - X beta||^2 + n sum_j p_lambda(|beta_j|) over beta.

    LASSO returns the global minimizer. SCAD returns a local minimizer reached
    by LLA from the LASSO solution; when ``init`` is given, LLA is also run from
    there and the lower objective wins. Non-convergence is reported through
    ``converged`` (or raised as :class:`NotConverged` when ``strict``).
    """
    opts = options or SolverOptions()
    x_cols = np.asarray(x_cols, dtype=float)
    z = np.asarray(z, dtype=float)
    n, m = x_cols.shape
    if m < 1:
        raise ValueError("solve_pls needs at least one column")
    gram = x_cols.T @ x_cols
    q = x_cols.T @ z
    lam = penalty.lam
    base = np.full(m, n * lam / 2)

    beta, sweeps, ok = _weighted_lasso(gram, q, base, np.zeros(m), opts)
    obj = objective_value(x_cols, z, beta, penalty)
    if penalty.kind is PenaltyKind.LASSO:
        sol = PlsSolution(beta, obj, sweeps, ok, [obj])
    else:
        sol = _lla(x_cols, z, gram, q, penalty, beta, sweeps, ok, opts)
        if init is not None:
            alt = _lla(x_cols, z, gram, q, penalty, _snap(np.asarray(init, float)), 0, True, opts)
            if alt.objective < sol.objective:
                sol = alt
    if not sol.converged:
        log.warning("PLS solver did not converge (%d sweeps)", sol.iterations)
        if strict:
            raise NotConverged(sol)
    return sol


def _lla(x_cols, z, gram, q, penalty, beta, sweeps, ok, opts) -> PlsSolution:
    n = x_cols.shape[0]
    lam, a = penalty.lam, penalty.scad_a
    obj = objective_value(x_cols, z, beta, penalty)
    path = [obj]
    converged = False
    for _ in range(opts.lla_iters):
        thresh = n * scad_derivative(np.abs(beta), lam, a) / 2
        new, s, ok_i = _weighted_lasso(gram, q, thresh, beta, opts)
        sweeps += s
        ok = ok and ok_i
        new_obj = objective_value(x_cols, z, new, penalty)
        if new_obj > obj + 1e-12 * max(1.0, abs(obj)):
            # inexact inner solve; keep the better iterate
            converged = True
            break
        delta = float(np.abs(new - beta).max())
        same_support = np.array_equal(new != 0, beta != 0)
        beta, obj = new, new_obj
        path.append(obj)
        if same_support and delta <= opts.tol * max(1.0, float(np.abs(beta).max())):
            converged = True
            break
    return PlsSolution(beta, obj, sweeps, ok and converged, path)


def kkt_residual(x_cols, z, beta, lam: float) -> float:
    """Largest LASSO KKT violation for the n-scaled objective."""
    x_cols = np.asarray(x_cols, dtype=float)
    n = x_cols.shape[0]
    g = x_cols.T @ (np.asarray(z, float) - x_cols @ beta)
    t = n * lam / 2
    nz = beta != 0
    viol = np.where(nz, np.abs(g - t * np.sign(beta)), np.maximum(np.abs(g) - t, 0.0))
    return float(viol.max()) if viol.size else 0.0
