"""Incremental least-squares engine over an active column set S.

The state keeps an orthonormal basis ``Q`` of C(X_S) together with the
upper-triangular factor ``R`` (so ``X_S = Q R`` and ``R'R = X_S'X_S``). The
n x n projections H_S and M_S are never formed; every query costs O(n |S|)
per column.

States are persistent: :meth:`ActiveSetState.extend` and
:meth:`ActiveSetState.shrink_to` return new objects and never touch ``self``,
so a frozen state can be queried from several threads at once.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .model import (
    Dataset,
    IndexActive,
    NearCollinear,
    NotSubset,
    RankDeficient,
    TrueModel,
    as_index_set,
)

#: a column is collinear with S when X_j' M_S X_j < RANK_TOL * X_j' X_j
RANK_TOL = 1e-10


def _orthogonalize(q: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Classical Gram-Schmidt with one re-orthogonalization pass.

    Returns ``(v - q c, c)`` with ``c`` the accumulated coefficients.
    """
    if q.shape[1] == 0:
        return v.copy(), np.zeros((0,) + v.shape[1:])
    c = q.T @ v
    v = v - q @ c
    c2 = q.T @ v
    return v - q @ c2, c + c2


class ActiveSetState:
    """Least-squares fit of ``y`` on the columns ``active`` of ``x``."""

    __slots__ = ("dataset", "x", "y", "col_sq", "active", "q", "r", "residual", "rss")

    def __init__(self, dataset: Dataset, active, q, r, residual, col_sq=None):
        self.dataset = dataset
        self.x = dataset.x
        self.y = dataset.y
        self.col_sq = (
            np.einsum("ij,ij->j", self.x, self.x) if col_sq is None else col_sq
        )
        self.active: tuple[int, ...] = tuple(active)
        self.q = q
        self.r = r
        self.residual = residual
        self.rss = float(residual @ residual)

    # -- construction -----------------------------------------------------

    @classmethod
    def empty(cls, dataset: Dataset) -> "ActiveSetState":
        n = dataset.n
        return cls(dataset, (), np.zeros((n, 0)), np.zeros((0, 0)), dataset.y.copy())

    @property
    def size(self) -> int:
        return len(self.active)

    @property
    def chol(self) -> np.ndarray:
        """Upper-triangular R with R'R = X_S' X_S."""
        return self.r

    def inactive(self) -> np.ndarray:
        mask = np.ones(self.x.shape[1], dtype=bool)
        mask[list(self.active)] = False
        return np.flatnonzero(mask)

    def coefficients(self) -> np.ndarray:
        """OLS coefficients of y on X_S, in ``active`` order."""
        if not self.active:
            return np.zeros(0)
        return linalg.solve_triangular(self.r, self.q.T @ self.y)

    def project_out(self, v: np.ndarray) -> np.ndarray:
        """M_S v."""
        return _orthogonalize(self.q, np.asarray(v, dtype=float))[0]

    # -- queries ------------------------------------------------------------

    def _check_inactive(self, j: int) -> int:
        j = int(j)
        if j in self.active:
            raise IndexActive(j)
        return j

    def marginal_stat(self, j: int) -> float:
        """Signed X_j' M_S Y."""
        j = self._check_inactive(j)
        return float(self.x[:, j] @ self.residual)

    def marginal_stats(self, cols: Optional[Sequence[int]] = None) -> np.ndarray:
        if cols is None:
            return self.x.T @ self.residual
        return self.x[:, cols].T @ self.residual

    def projected_col_norm_sq(self, j: int) -> float:
        """||M_S X_j||^2 = X_j' M_S X_j."""
        j = self._check_inactive(j)
        return float(self.projected_col_norms_sq([j])[0])

    def projected_col_norms_sq(self, cols: Sequence[int]) -> np.ndarray:
        cols = np.asarray(cols, dtype=int)
        xc = self.x[:, cols]
        if not self.active:
            return self.col_sq[cols].copy()
        v = _orthogonalize(self.q, xc)[0]
        return np.einsum("ij,ij->j", v, v)

    def _guarded(self, j: int) -> tuple[float, float]:
        j = self._check_inactive(j)
        d = float(self.projected_col_norms_sq([j])[0])
        if d < RANK_TOL * self.col_sq[j]:
            raise NearCollinear(j)
        return float(self.x[:, j] @ self.residual), d

    def rss_delta_single(self, j: int) -> float:
        """Exact RSS drop from adding column j: (X_j'M_S Y)^2 / ||M_S X_j||^2."""
        m, d = self._guarded(j)
        return m * m / d

    def beta_hat_last(self, j: int) -> float:
        """Coefficient of X_j in the joint OLS fit on [X_S, X_j]."""
        m, d = self._guarded(j)
        return m / d

    # -- updates -------------------------------------------------------------

    def extend(self, add: Sequence[int]) -> "ActiveSetState":
        """State for S u add; raises RankDeficient naming every offending column."""
        add = as_index_set(add, self.x.shape[1])
        if not add:
            return self
        clash = set(add) & set(self.active)
        if clash:
            raise IndexActive(min(clash))
        xa = self.x[:, list(add)]
        v, r12 = _orthogonalize(self.q, xa)
        n, m = xa.shape
        q_new = np.zeros((n, m))
        r22 = np.zeros((m, m))
        bad = []
        kept = 0
        for i in range(m):
            col = v[:, i]
            # orthogonalize against the new directions built so far (twice)
            qk = q_new[:, :kept]
            c = qk.T @ col
            col = col - qk @ c
            c2 = qk.T @ col
            col = col - qk @ c2
            nrm2 = float(col @ col)
            if nrm2 < RANK_TOL * self.col_sq[add[i]]:
                bad.append(add[i])
                continue
            nrm = np.sqrt(nrm2)
            q_new[:, kept] = col / nrm
            r22[:kept, i] = c + c2
            r22[kept, i] = nrm
            kept += 1
        if bad:
            raise RankDeficient(bad)
        s = self.size
        r = np.zeros((s + m, s + m))
        r[:s, :s] = self.r
        r[:s, s:] = r12
        r[s:, s:] = r22
        q = np.hstack([self.q, q_new])
        residual = _orthogonalize(q_new, self.residual)[0]
        residual = _orthogonalize(q, residual)[0]
        return ActiveSetState(
            self.dataset, self.active + add, q, r, residual, self.col_sq
        )

    def shrink_to(self, keep: Sequence[int]) -> "ActiveSetState":
        """State for ``keep`` (subset of S), refactorized from scratch."""
        keep = as_index_set(keep)
        if not set(keep) <= set(self.active):
            raise NotSubset(f"{sorted(set(keep) - set(self.active))} not in the active set")
        if keep == self.active:
            return self
        base = ActiveSetState(
            self.dataset,
            (),
            np.zeros((self.x.shape[0], 0)),
            np.zeros((0, 0)),
            self.y.copy(),
            self.col_sq,
        )
        return base.extend(keep)

    # -- diagnostics --------------------------------------------------------

    def rss_lower_bound_check(self, add: Sequence[int]) -> tuple[float, float]:
        """Both sides of the RSS-reduction lower bound for adding ``add``.

        lhs = ||M_S Y||^2 - ||M_{S u A} Y||^2,
        rhs = sum_i (X_i' M_S Y)^2 / lambda_max(X_A' M_S X_A).
        """
        add = as_index_set(add, self.x.shape[1])
        bigger = self.extend(add)
        lhs = self.rss - bigger.rss
        if not add:
            return lhs, 0.0
        v = _orthogonalize(self.q, self.x[:, list(add)])[0]
        lam_max = float(linalg.eigvalsh(v.T @ v)[-1])
        m = self.marginal_stats(list(add))
        return lhs, float(m @ m) / lam_max

    def check_invariants(self) -> dict[str, float]:
        """Relative errors of the cached factorization; all should be tiny."""
        out = {"gram": 0.0, "orthogonality": 0.0, "rss": 0.0}
        scale = max(float(np.sqrt(self.y @ self.y)), 1e-300)
        if self.active:
            xs = self.x[:, list(self.active)]
            gram = xs.T @ xs
            out["gram"] = float(
                np.abs(self.r.T @ self.r - gram).max() / np.abs(gram).max()
            )
            colnorm = np.sqrt(self.col_sq[list(self.active)])
            out["orthogonality"] = float(
                np.abs(xs.T @ self.residual / colnorm).max() / scale
            )
        out["rss"] = abs(self.rss - float(self.residual @ self.residual)) / max(
            self.rss, 1e-300
        )
        return out


def new_state(dataset: Dataset) -> ActiveSetState:
    """Empty model: residual = Y, rss = ||Y||^2."""
    return ActiveSetState.empty(dataset)


def state_for(dataset: Dataset, model: Sequence[int]) -> ActiveSetState:
    return new_state(dataset).extend(model)


def relevant_signal_bound(
    state: ActiveSetState, truth: TrueModel, noise: np.ndarray
) -> Optional[tuple[float, float]]:
    """Both sides of the lower bound on the largest marginal statistic among
    relevant columns not yet in S.

    lhs = max_{i in T-S} (X_i' M_S Y)^2
    rhs = beta_min^2/2 * lambda_min(X_{S*}'X_{S*})^2
          - max_{i in T-S} X_i'X_i * max_{i in T-S} (X_i' M_S eps / ||M_S X_i||)^2

    with S* = S u T. Returns None when T - S is empty.
    """
    missing = [i for i in truth.indices if i not in state.active]
    if not missing:
        return None
    s_star = list(state.active) + missing
    xs = state.x[:, s_star]
    lam_min = float(linalg.eigvalsh(xs.T @ xs)[0])
    lhs = float(np.max(state.marginal_stats(missing) ** 2))
    me = state.project_out(noise)
    proj = state.projected_col_norms_sq(missing)
    noise_term = np.max((state.x[:, missing].T @ me) ** 2 / proj)
    rhs = truth.beta_min**2 / 2 * lam_min**2 - float(
        np.max(state.col_sq[missing])
    ) * float(noise_term)
    return lhs, rhs
