"""Core value types shared by the screening engine, the solvers and the harness.

All column indices are 0-based, on every surface (library, CSV, JSON).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence, Union

import numpy as np


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class ScreeningError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(ScreeningError, ValueError):
    """A value object was constructed with inconsistent fields."""


class ConstantColumn(ScreeningError):
    def __init__(self, column: int):
        super().__init__(f"column {column} has zero variance")
        self.column = column


class IndexActive(ScreeningError):
    def __init__(self, column: int):
        super().__init__(f"column {column} is already in the active set")
        self.column = column


class NearCollinear(ScreeningError):
    def __init__(self, column: int):
        super().__init__(f"column {column} is numerically in the span of the active set")
        self.column = column


class RankDeficient(ScreeningError):
    def __init__(self, columns: Sequence[int]):
        columns = tuple(int(c) for c in columns)
        super().__init__(f"columns {list(columns)} make the design rank deficient")
        self.columns = columns


class NotSubset(ScreeningError):
    pass


class NoEligibleColumns(ScreeningError):
    pass


class InvalidRates(ScreeningError, ValueError):
    pass


class NotPositiveDefinite(ScreeningError):
    pass


class InfeasibleConstruction(ScreeningError):
    pass


# ---------------------------------------------------------------------------
# Data
# ---------------------------------------------------------------------------


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix ``x`` (n x p) and response ``y`` (n,).

    When produced by :func:`standardize`, ``x_center``/``x_scale``/``y_center``
    hold the affine maps applied, so coefficients can be mapped back with
    :meth:`coef_to_original`.
    """

    x: np.ndarray
    y: np.ndarray
    column_names: Optional[tuple[str, ...]] = None
    standardized: bool = False
    x_center: Optional[np.ndarray] = None
    x_scale: Optional[np.ndarray] = None
    y_center: float = 0.0

    def __post_init__(self):
        x = _frozen(self.x)
        y = _frozen(self.y)
        if x.ndim != 2:
            raise InvalidInput("x must be a 2-d array")
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise InvalidInput("y must be a vector with one entry per row of x")
        n, p = x.shape
        if n < 2 or p < 1:
            raise InvalidInput(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise InvalidInput("x and y must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.column_names is not None:
            names = tuple(str(c) for c in self.column_names)
            if len(names) != p:
                raise InvalidInput("column_names must have one label per column")
            object.__setattr__(self, "column_names", names)
        for attr in ("x_center", "x_scale"):
            v = getattr(self, attr)
            if v is not None:
                object.__setattr__(self, attr, _frozen(v))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def names(self) -> tuple[str, ...]:
        if self.column_names is not None:
            return self.column_names
        return tuple(f"x{j}" for j in range(self.p))

    def coef_to_original(self, beta: np.ndarray) -> tuple[np.ndarray, float]:
        """Map coefficients fitted on standardized data back to raw units.

        Returns ``(beta_raw, intercept)``; identity when not standardized.
        """
        beta = np.asarray(beta, dtype=float)
        if not self.standardized:
            return beta.copy(), 0.0
        raw = beta / self.x_scale
        return raw, float(self.y_center - raw @ self.x_center)


def standardize(dataset: Dataset) -> Dataset:
    """Center every column and rescale it to ``||X_j||^2 = n``; center ``y``."""
    x = np.asarray(dataset.x)
    n = x.shape[0]
    center = x.mean(axis=0)
    xc = x - center
    sq = np.einsum("ij,ij->j", xc, xc)
    col_scale = np.abs(x).max(axis=0)
    for j in range(x.shape[1]):
        if sq[j] <= (1e-14 * max(col_scale[j], 1e-300)) ** 2 * n:
            raise ConstantColumn(j)
    scale = np.sqrt(sq / n)
    y_center = float(dataset.y.mean())
    prev_center = dataset.x_center if dataset.standardized else None
    prev_scale = dataset.x_scale if dataset.standardized else None
    if prev_center is not None:
        # compose with the maps already applied so back-transformation stays exact
        center = prev_center + center * prev_scale
        scale = prev_scale * scale
        y_center = y_center + dataset.y_center
    return Dataset(
        x=xc / np.sqrt(sq / n),
        y=dataset.y - dataset.y.mean(),
        column_names=dataset.column_names,
        standardized=True,
        x_center=center,
        x_scale=scale,
        y_center=y_center,
    )


def is_standardized(dataset: Dataset, rtol: float = 1e-8) -> bool:
    x = dataset.x
    n = dataset.n
    scale = np.maximum(np.abs(x).max(axis=0), 1.0)
    if np.any(np.abs(x.mean(axis=0)) > 1e-10 * scale):
        return False
    if np.any(np.abs(np.einsum("ij,ij->j", x, x) - n) > rtol * n):
        return False
    return abs(dataset.y.mean()) <= 1e-10 * max(np.abs(dataset.y).max(), 1.0)


def as_index_set(indices: Sequence[int], p: Optional[int] = None) -> tuple[int, ...]:
    """Validate an ordered collection of distinct column indices."""
    out = tuple(int(i) for i in indices)
    if len(set(out)) != len(out):
        raise InvalidInput(f"duplicate indices in {list(out)}")
    if any(i < 0 for i in out) or (p is not None and any(i >= p for i in out)):
        raise InvalidInput(f"indices out of range for p={p}: {list(out)}")
    return out


@dataclass(frozen=True, eq=False)
class TrueModel:
    """Support ``indices`` and full coefficient vector ``beta``."""

    indices: tuple[int, ...]
    beta: np.ndarray

    def __post_init__(self):
        beta = _frozen(self.beta)
        idx = tuple(sorted(as_index_set(self.indices, beta.shape[0])))
        support = tuple(int(j) for j in np.flatnonzero(beta))
        if support != idx:
            raise InvalidInput("beta must be nonzero exactly on indices")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_beta(cls, beta) -> "TrueModel":
        beta = np.asarray(beta, dtype=float)
        return cls(tuple(int(j) for j in np.flatnonzero(beta)), beta)

    @property
    def t(self) -> int:
        return len(self.indices)

    @property
    def beta_min(self) -> float:
        return float(np.abs(self.beta[list(self.indices)]).min()) if self.indices else math.inf


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


class Screening(str, enum.Enum):
    SCR1 = "SCR1"  # |X_i' M_S Y|
    SCR2 = "SCR2"  # smallest RSS after adding i
    SCR3 = "SCR3"  # largest |joint OLS coefficient of i|


class Selection(str, enum.Enum):
    SEL1 = "SEL1"  # S u A
    SEL2 = "SEL2"  # S u support(PLS of residual on X_A)
    SEL3 = "SEL3"  # support(PLS of Y on X_{S u A})


class PenaltyKind(str, enum.Enum):
    LASSO = "lasso"
    SCAD = "scad"


@dataclass(frozen=True)
class PenaltySpec:
    kind: PenaltyKind = PenaltyKind.LASSO
    lam: float = 0.1
    scad_a: float = 3.7

    def __post_init__(self):
        object.__setattr__(self, "kind", PenaltyKind(self.kind))
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise InvalidInput(f"lambda must be positive, got {self.lam}")
        if not self.scad_a > 2:
            raise InvalidInput(f"SCAD a must exceed 2, got {self.scad_a}")

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "lambda": self.lam, "scad_a": self.scad_a}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "PenaltySpec":
        return cls(PenaltyKind(d["kind"]), float(d["lambda"]), float(d["scad_a"]))


@dataclass(frozen=True)
class AlgorithmConfig:
    """One SCRi-SELj combination plus its schedule.

    ``screen_sizes`` is either a constant a (used at every step) or an explicit
    list of length ``max_iters``.
    """

    screening: Screening
    selection: Selection
    screen_sizes: Union[int, tuple[int, ...]]
    max_iters: int = 10
    penalty: Optional[PenaltySpec] = None
    stop_on_fixed_point: bool = True

    def __post_init__(self):
        object.__setattr__(self, "screening", Screening(self.screening))
        object.__setattr__(self, "selection", Selection(self.selection))
        if self.max_iters < 1:
            raise InvalidInput("max_iters must be >= 1")
        sizes = self.screen_sizes
        if isinstance(sizes, (int, np.integer)):
            sizes = int(sizes)
            if sizes < 1:
                raise InvalidInput("screen size must be >= 1")
        else:
            sizes = tuple(int(a) for a in sizes)
            if len(sizes) != self.max_iters:
                raise InvalidInput("explicit schedule needs one a_k per iteration")
            if any(a < 1 for a in sizes):
                raise InvalidInput("every a_k must be >= 1")
        object.__setattr__(self, "screen_sizes", sizes)
        penalized = self.selection in (Selection.SEL2, Selection.SEL3)
        if penalized and self.penalty is None:
            raise InvalidInput(f"{self.selection.value} requires a penalty")
        if not penalized and self.penalty is not None:
            raise InvalidInput("SEL1 takes no penalty")

    @property
    def name(self) -> str:
        return f"{self.screening.value}-{self.selection.value}"

    def schedule(self, p: int) -> list[int]:
        """a_1..a_kappa truncated so that the total never exceeds p.

        Steps whose budget is exhausted get size 0.
        """
        raw = (
            [self.screen_sizes] * self.max_iters
            if isinstance(self.screen_sizes, int)
            else list(self.screen_sizes)
        )
        out, left = [], p
        for a in raw:
            take = min(a, left)
            out.append(take)
            left -= take
        return out

    def to_dict(self) -> dict[str, Any]:
        sizes = self.screen_sizes
        return {
            "screening": self.screening.value,
            "selection": self.selection.value,
            "screen_sizes": sizes if isinstance(sizes, int) else list(sizes),
            "max_iters": self.max_iters,
            "penalty": None if self.penalty is None else self.penalty.to_dict(),
            "stop_on_fixed_point": self.stop_on_fixed_point,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "AlgorithmConfig":
        sizes = d["screen_sizes"]
        return cls(
            screening=Screening(d["screening"]),
            selection=Selection(d["selection"]),
            screen_sizes=sizes if isinstance(sizes, int) else tuple(sizes),
            max_iters=int(d["max_iters"]),
            penalty=None if d["penalty"] is None else PenaltySpec.from_dict(d["penalty"]),
            stop_on_fixed_point=bool(d["stop_on_fixed_point"]),
        )


@dataclass(frozen=True)
class RateConstants:
    """Constants of the rate assumptions; they drive :func:`pipeline.suggest_schedule`."""

    c_t: float = 1.0
    xi_t: float = 0.0
    c_p: float = 1.0
    xi_p: float = 0.0
    c_beta: float = 1.0
    xi_beta: float = 0.0
    c_y: float = 1.0
    xi_y: float = 0.0
    tau_min: float = 1.0
    tau_max: float = 2.0
    c_s: float = 1.0
    xi_s: float = 0.0

    def validate(self) -> None:
        for name, v in vars(self).items():
            if not (math.isfinite(v) and v >= 0):
                raise InvalidRates(f"{name} must be a finite nonnegative number, got {v}")
        if not 0 < self.tau_min < self.tau_max:
            raise InvalidRates("need 0 < tau_min < tau_max")
        if self.c_beta <= 0 or self.c_y <= 0:
            raise InvalidRates("c_beta and c_y must be positive")
        if self.xi_p + 3 * max(self.xi_t, self.xi_s) >= 1:
            raise InvalidRates("need xi_p + 3 max(xi_t, xi_s) < 1")

    @property
    def c_kappa(self) -> float:
        return 8 * self.c_y * self.tau_max**3 / (self.c_beta**2 * self.tau_min**4)

    @property
    def xi_s_star(self) -> float:
        return max(self.xi_t, self.xi_s)

    @property
    def C_s_star(self) -> float:
        return max(self.c_t, self.c_s)

    @property
    def c_star(self) -> float:
        return 4 * self.c_y * self.C_s_star / self.tau_min


# ---------------------------------------------------------------------------
# Trajectory
# ---------------------------------------------------------------------------


class StopReason(str, enum.Enum):
    MAX_ITERS = "MaxIters"
    FIXED_POINT = "FixedPoint"
    ALL_COLUMNS_USED = "AllColumnsUsed"
    RANK_DEFICIENT = "RankDeficient"
    NO_ELIGIBLE_COLUMNS = "NoEligibleColumns"


@dataclass(frozen=True)
class StepRecord:
    k: int
    screened: tuple[int, ...]
    selected_new: tuple[int, ...]
    model: tuple[int, ...]
    rss: float
    objective: float
    converged: bool = True

    def to_dict(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "screened": list(self.screened),
            "selected_new": list(self.selected_new),
            "model": list(self.model),
            "rss": self.rss,
            "objective": self.objective,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "StepRecord":
        return cls(
            k=int(d["k"]),
            screened=tuple(d["screened"]),
            selected_new=tuple(d["selected_new"]),
            model=tuple(d["model"]),
            rss=float(d["rss"]),
            objective=float(d["objective"]),
            converged=bool(d["converged"]),
        )


@dataclass
class Trajectory:
    records: list[StepRecord] = field(default_factory=list)
    stop_reason: StopReason = StopReason.MAX_ITERS
    initial_rss: float = 0.0
    standardized: bool = False
    detail: str = ""

    @property
    def models(self) -> list[tuple[int, ...]]:
        return [r.model for r in self.records]

    @property
    def final_model(self) -> tuple[int, ...]:
        return self.records[-1].model if self.records else ()

    def __len__(self) -> int:
        return len(self.records)

    def to_dict(self) -> dict[str, Any]:
        return {
            "records": [r.to_dict() for r in self.records],
            "stop_reason": self.stop_reason.value,
            "initial_rss": self.initial_rss,
            "standardized": self.standardized,
            "detail": self.detail,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Trajectory":
        return cls(
            records=[StepRecord.from_dict(r) for r in d["records"]],
            stop_reason=StopReason(d["stop_reason"]),
            initial_rss=float(d["initial_rss"]),
            standardized=bool(d["standardized"]),
            detail=str(d.get("detail", "")),
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, Trajectory) and self.to_dict() == other.to_dict()
