"""Screening rules (candidate set A from S) and selection rules (next S).

Every screening rule is a ranking of a scaled marginal statistic
m_i = X_i' M_S Y with d_i = ||M_S X_i||^2:

    SCR1  |m_i|                 (residual correlation)
    SCR2  m_i^2 / d_i           (RSS drop after adding i)
    SCR3  m_i^2 / d_i^2         (squared joint-OLS coefficient of i)

Ties are broken by the lowest column index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import NoEligibleColumns, PenaltySpec, Screening, Selection
from .penalty import PlsSolution, SolverOptions, solve_pls
from .projection import RANK_TOL, ActiveSetState


@dataclass(frozen=True)
class ScreenScores:
    candidates: np.ndarray  # eligible column indices, ascending
    scores: np.ndarray  # larger is better
    excluded: tuple[int, ...]  # failed the rank guard


def score_candidates(criterion: Screening, state: ActiveSetState) -> ScreenScores:
    criterion = Screening(criterion)
    cols = state.inactive()
    m = state.marginal_stats(cols)
    if criterion is Screening.SCR1:
        return ScreenScores(cols, np.abs(m), ())
    d = state.projected_col_norms_sq(cols)
    ok = d >= RANK_TOL * state.col_sq[cols]
    excluded = tuple(int(j) for j in cols[~ok])
    cols, m, d = cols[ok], m[ok], d[ok]
    if criterion is Screening.SCR2:
        scores = m * m / d
    else:
        scores = (m / d) ** 2
    return ScreenScores(cols, scores, excluded)


def rank(candidates: np.ndarray, scores: np.ndarray, size: int) -> tuple[int, ...]:
    """Top ``size`` candidates by descending score, lowest index first on ties."""
    order = np.lexsort((candidates, -scores))
    return tuple(int(candidates[i]) for i in order[:size])


def screen(criterion: Screening, state: ActiveSetState, size: int) -> tuple[int, ...]:
    """The candidate set A: up to ``size`` inactive columns ranked by ``criterion``."""
    if size < 1:
        raise ValueError("screen size must be >= 1")
    sc = score_candidates(criterion, state)
    if sc.candidates.size == 0:
        raise NoEligibleColumns(
            f"no eligible inactive columns ({len(sc.excluded)} excluded as collinear)"
        )
    return rank(sc.candidates, sc.scores, size)


@dataclass
class Selected:
    model: tuple[int, ...]
    new: tuple[int, ...]
    objective: float
    converged: bool = True
    solution: Optional[PlsSolution] = None
    columns: tuple[int, ...] = ()


def select(
    criterion: Selection,
    state: ActiveSetState,
    screened,
    penalty: Optional[PenaltySpec] = None,
    options: Optional[SolverOptions] = None,
    init: Optional[dict[int, float]] = None,
) -> Selected:
    """Next model from S (``state.active``) and the candidate set ``screened``.

    SEL1 keeps every candidate. SEL2 keeps the support of the PLS fit of the
    current residual on X_A. SEL3 refits PLS of Y on X_{S u A} (columns in
    ascending index order) and may drop members of S. ``init`` optionally maps
    column -> coefficient as a SCAD warm start for SEL3.
    """
    criterion = Selection(criterion)
    screened = tuple(int(i) for i in screened)
    if set(screened) & set(state.active):
        raise ValueError("screened columns overlap the active set")
    if criterion is Selection.SEL1:
        if penalty is not None:
            raise ValueError("SEL1 takes no penalty")
        model = state.active + screened
        return Selected(model, screened, objective=float("nan"))
    if penalty is None:
        raise ValueError(f"{criterion.value} requires a penalty")
    if not screened:
        raise ValueError("empty candidate set")

    if criterion is Selection.SEL2:
        sol = solve_pls(state.x[:, list(screened)], state.residual, penalty, options)
        new = tuple(screened[j] for j in sol.support)
        return Selected(state.active + new, new, sol.objective, sol.converged, sol, screened)

    cols = tuple(sorted(state.active + screened))
    warm = None
    if init is not None:
        warm = np.array([init.get(c, 0.0) for c in cols])
    sol = solve_pls(state.x[:, list(cols)], state.y, penalty, options, init=warm)
    model = tuple(cols[j] for j in sol.support)
    new = tuple(c for c in model if c not in state.active)
    return Selected(model, new, sol.objective, sol.converged, sol, cols)
