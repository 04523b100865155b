"""Brute-force reference computations.

Nothing here shares code with the incremental engine: least squares goes
through column-pivoted Householder QR, screening refits every candidate model
from scratch, and PLS is minimized by exhaustive grid search.
These are slow on purpose and exist to check the fast paths.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy import linalg

from .model import NoEligibleColumns, PenaltySpec, RankDeficient, Screening
from .penalty import objective_value, penalty_value

RANK_TOL = 1e-10


def _lstsq(x, y, cols):
    """Pivoted-QR least squares on columns ``cols``; returns (coef, residual)."""
    cols = list(cols)
    if not cols:
        return np.zeros(0), np.array(y, dtype=float)
    xs = x[:, cols]
    q, r, piv = linalg.qr(xs, mode="economic", pivoting=True)
    # |R_kk|^2 is the squared distance of a pivot column to the span of earlier pivots
    d = np.abs(np.diag(r)) ** 2
    colsq = np.einsum("ij,ij->j", xs, xs)[piv]
    bad = d < RANK_TOL * colsq
    if np.any(bad):
        raise RankDeficient([cols[piv[i]] for i in np.flatnonzero(bad)])
    coef_p = linalg.solve_triangular(r, q.T @ y)
    coef = np.empty_like(coef_p)
    coef[piv] = coef_p
    return coef, y - xs @ coef


def dense_rss(x, y, cols: Sequence[int]) -> float:
    """||Y - X_S (X_S'X_S)^{-1} X_S' Y||^2."""
    _, res = _lstsq(np.asarray(x, float), np.asarray(y, float), cols)
    return float(res @ res)


def dense_rss_drop(x, y, cols: Sequence[int], j: int) -> float:
    """rss(S) - rss(S u {j}) as ||H_{S u j} Y - H_S Y||^2.

    The two fitted vectors differ by a vector orthogonal to the larger
    residual, so this avoids subtracting two nearly equal RSS values.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    _, r0 = _lstsq(x, y, cols)
    _, r1 = _lstsq(x, y, list(cols) + [int(j)])
    d = r0 - r1
    return float(d @ d)


def dense_joint_ols_last_coef(x, y, cols: Sequence[int], j: int) -> float:
    """Coefficient of X_j in the OLS fit of Y on [X_S, X_j]."""
    coef, _ = _lstsq(np.asarray(x, float), np.asarray(y, float), list(cols) + [int(j)])
    return float(coef[-1])


def dense_residual_stat(x, y, cols: Sequence[int], j: int) -> float:
    """X_j' M_S Y computed from an explicit refit."""
    _, res = _lstsq(np.asarray(x, float), np.asarray(y, float), cols)
    return float(np.asarray(x)[:, j] @ res)


def brute_screen(criterion, x, y, cols: Sequence[int], size: int) -> tuple[int, ...]:
    """Screening by literal evaluation of each rule.

    SCR1 ranks |X_i' M_S Y| from the refit residual, SCR2 refits OLS on S u {i}
    and ranks the RSS smallest-first, SCR3 refits and ranks |beta_i|.
    Ties go to the lowest index.
    """
    criterion = Screening(criterion)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    cols = list(cols)
    rest = [i for i in range(x.shape[1]) if i not in set(cols)]
    keys = []
    if criterion is Screening.SCR1:
        _, res = _lstsq(x, y, cols)
        keys = [(-abs(float(x[:, i] @ res)), i) for i in rest]
    else:
        for i in rest:
            try:
                coef, res = _lstsq(x, y, cols + [i])
            except RankDeficient:
                continue
            if criterion is Screening.SCR2:
                keys.append((float(res @ res), i))
            else:
                keys.append((-abs(float(coef[-1])), i))
    if not keys:
        raise NoEligibleColumns("every remaining column is collinear with S")
    keys.sort()
    return tuple(i for _, i in keys[:size])


def grid_pls(x_cols, z, penalty: PenaltySpec, grid_radius: float = 3.0,
             grid_step: float = 0.01, refine: int = 2):
    """Exhaustive grid minimizer of the PLS objective for m <= 2 columns.

    The grid is centred at 0 with half-width ``grid_radius``; each of the
    ``refine`` extra rounds re-grids +/- 5 steps around the incumbent at a
    10x finer step. Returns ``(beta, objective)``.
    """
    x_cols = np.asarray(x_cols, float)
    z = np.asarray(z, float)
    n, m = x_cols.shape
    if m not in (1, 2):
        raise ValueError("grid_pls handles one or two columns")
    gram, q, zz = x_cols.T @ x_cols, x_cols.T @ z, float(z @ z)
    center = np.zeros(m)
    radius, h = grid_radius, grid_step
    best_b, best_f = None, np.inf
    for _ in range(refine + 1):
        axes = [np.arange(-radius, radius + h / 2, h) + c for c in center]
        # keep exact zero on the grid whenever it is in range
        axes = [np.union1d(a, [0.0]) if a[0] <= 0 <= a[-1] else a for a in axes]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=1)
        f = zz - 2 * pts @ q + np.einsum("ij,jk,ik->i", pts, gram, pts)
        f = f + n * np.sum(penalty_value(pts, penalty), axis=1)
        i = int(np.argmin(f))
        if f[i] < best_f:
            best_f, best_b = float(f[i]), pts[i].copy()
        center = best_b
        radius, h = 5 * h, h / 10
    return best_b, objective_value(x_cols, z, best_b, penalty)

