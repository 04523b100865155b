"""Iterative screening engine, named presets and schedule helpers."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .criteria import Selected, screen, select
from .model import (
    AlgorithmConfig,
    Dataset,
    InvalidRates,
    NoEligibleColumns,
    PenaltySpec,
    RankDeficient,
    RateConstants,
    Screening,
    Selection,
    StepRecord,
    StopReason,
    Trajectory,
    TrueModel,
)
from .penalty import SolverOptions
from .projection import ActiveSetState, new_state, state_for

log = logging.getLogger(__name__)

DEFAULT_MAX_ITERS = 10


class Preset(str, enum.Enum):
    ISIS = "ISIS"
    VanISIS = "VanISIS"
    VanISIS_R = "VanISIS_R"
    FR = "FR"
    SIS_once = "SIS_once"
    NP_ISIS = "NP_ISIS"
    NP_VanISIS = "NP_VanISIS"
    NP_VanISIS_R = "NP_VanISIS_R"


PRESET_RULES = {
    Preset.ISIS: (Screening.SCR1, Selection.SEL2),
    Preset.VanISIS: (Screening.SCR2, Selection.SEL3),
    Preset.VanISIS_R: (Screening.SCR3, Selection.SEL3),
    Preset.FR: (Screening.SCR2, Selection.SEL1),
    Preset.SIS_once: (Screening.SCR1, Selection.SEL1),
    Preset.NP_ISIS: (Screening.SCR1, Selection.SEL1),
    Preset.NP_VanISIS: (Screening.SCR2, Selection.SEL1),
    Preset.NP_VanISIS_R: (Screening.SCR3, Selection.SEL1),
}


def default_screen_size(n: int) -> int:
    """ceil(n / log n), the classical SIS model size."""
    return max(1, math.ceil(n / math.log(n)))


def preset_config(
    preset: Union[Preset, str],
    n: int,
    penalty: Optional[PenaltySpec] = None,
    max_iters: Optional[int] = None,
    screen_sizes: Union[int, Sequence[int], None] = None,
    stop_on_fixed_point: bool = True,
) -> AlgorithmConfig:
    preset = Preset(preset)
    scr, sel = PRESET_RULES[preset]
    if preset is Preset.SIS_once:
        max_iters = 1 if max_iters is None else max_iters
    kappa = DEFAULT_MAX_ITERS if max_iters is None else max_iters
    if screen_sizes is None:
        screen_sizes = 1 if preset is Preset.FR else default_screen_size(n)
    elif not isinstance(screen_sizes, int):
        screen_sizes = tuple(screen_sizes)
    return AlgorithmConfig(
        screening=scr,
        selection=sel,
        screen_sizes=screen_sizes,
        max_iters=kappa,
        penalty=penalty if sel is not Selection.SEL1 else None,
        stop_on_fixed_point=stop_on_fixed_point,
    )


def _advance(
    state: ActiveSetState,
    config: AlgorithmConfig,
    k: int,
    size: int,
    options: Optional[SolverOptions],
    init: Optional[dict[int, float]] = None,
) -> tuple[ActiveSetState, StepRecord, Selected]:
    screened = screen(config.screening, state, size)
    sel = select(config.selection, state, screened, config.penalty, options, init)
    if config.selection is Selection.SEL3:
        nxt = state_for(state.dataset, sel.model)
    else:
        nxt = state.extend(sel.new)
    objective = nxt.rss if config.selection is Selection.SEL1 else sel.objective
    rec = StepRecord(
        k=k,
        screened=screened,
        selected_new=sel.new,
        model=sel.model,
        rss=nxt.rss,
        objective=float(objective),
        converged=sel.converged,
    )
    return nxt, rec, sel


def step(
    dataset: Dataset,
    model: Sequence[int],
    config: AlgorithmConfig,
    k: int,
    options: Optional[SolverOptions] = None,
    init: Optional[dict[int, float]] = None,
) -> StepRecord:
    """One iteration from model S_{k-1} = ``model``, computed from scratch.

    ``k`` selects a_k from the schedule; past the last step a_kappa is reused,
    which is what a forced extra iteration after a fixed-point stop needs.
    """
    state = state_for(dataset, model)
    sizes = config.schedule(dataset.p)
    size = sizes[min(k, len(sizes)) - 1] or 1
    return _advance(state, config, k, size, options, init)[1]


def run(
    dataset: Dataset,
    config: AlgorithmConfig,
    options: Optional[SolverOptions] = None,
) -> Trajectory:
    """Run the configured SCRi-SELj algorithm for up to ``config.max_iters`` steps.

    Numerical trouble (rank deficiency, no eligible column) ends the run with
    the matching stop reason instead of raising.
    """
    state = new_state(dataset)
    traj = Trajectory(initial_rss=state.rss, standardized=dataset.standardized)
    sizes = config.schedule(dataset.p)
    warm: Optional[dict[int, float]] = None
    scad_sel3 = (
        config.selection is Selection.SEL3 and config.penalty.kind.value == "scad"
    )
    for k in range(1, config.max_iters + 1):
        size = sizes[k - 1]
        if size == 0 or state.size == dataset.p:
            traj.stop_reason = StopReason.ALL_COLUMNS_USED
            return traj
        try:
            nxt, rec, sel = _advance(state, config, k, size, options, warm)
        except NoEligibleColumns as e:
            traj.stop_reason = StopReason.NO_ELIGIBLE_COLUMNS
            traj.detail = str(e)
            return traj
        except RankDeficient as e:
            traj.stop_reason = StopReason.RANK_DEFICIENT
            traj.detail = str(e)
            return traj
        traj.records.append(rec)
        if scad_sel3:
            coef = sel.solution.coefficients
            warm = {c: float(b) for c, b in zip(sel.columns, coef) if b != 0}
        fixed = set(rec.model) == set(state.active)
        state = nxt
        if config.selection is Selection.SEL3 and config.stop_on_fixed_point and fixed:
            traj.stop_reason = StopReason.FIXED_POINT
            return traj
    traj.stop_reason = StopReason.MAX_ITERS
    return traj


class ScheduleMode(str, enum.Enum):
    THM1 = "Thm1"  # SEL1 rules: iteration count only
    THM2 = "Thm2"  # SEL2: count plus lambda bound
    THM3 = "Thm3"  # SEL3: lambda bound that also shrinks with the model-size rate


@dataclass(frozen=True)
class ScheduleSuggestion:
    kappa: int
    lambda_max: Optional[float]


def _ceil(v: float) -> int:
    # guard against 64.00000000000001 turning into 65
    return math.ceil(round(v, 9))


def suggest_schedule(
    rates: RateConstants, n: int, mode: Union[ScheduleMode, str]
) -> ScheduleSuggestion:
    """Iteration count and lambda upper bound sufficient under the rate constants.

    Evaluates the closed-form thresholds as written; the constants themselves
    cannot be estimated from data, so the result is only as good as the
    supplied ``rates``.
    """
    rates.validate()
    if n < 2:
        raise InvalidRates("n must be >= 2")
    mode = ScheduleMode(mode)
    growth = n ** (rates.xi_y + 2 * rates.xi_beta)
    if mode is ScheduleMode.THM1:
        return ScheduleSuggestion(_ceil(rates.c_kappa * growth), None)
    kappa = _ceil(2 * rates.c_kappa * growth)
    tmin, tmax = rates.tau_min, rates.tau_max
    if mode is ScheduleMode.THM2:
        lam = tmin**2 * rates.c_beta * n ** (-rates.xi_beta) / (4 * tmax)
    else:
        expo = -2 * rates.xi_beta - (rates.xi_s_star + rates.xi_y) / 2
        lam = (
            tmin**4 * rates.c_beta**2 * n**expo / (8 * math.sqrt(rates.c_star) * tmax**3)
        )
    return ScheduleSuggestion(kappa, lam)


def check_sure_screening(trajectory: Trajectory, truth: TrueModel, mode: str = "final") -> bool:
    """``final``: T in the last model. ``any``: T in some S_k."""
    if not trajectory.records:
        raise ValueError("empty trajectory")
    t = set(truth.indices)
    if mode == "final":
        return t <= set(trajectory.final_model)
    if mode == "any":
        return any(t <= set(m) for m in trajectory.models)
    raise ValueError(f"unknown mode {mode!r}")


def iterations_to_coverage(trajectory: Trajectory, truth: TrueModel) -> Optional[int]:
    t = set(truth.indices)
    for rec in trajectory.records:
        if t <= set(rec.model):
            return rec.k
    return None


def objective_monotone(trajectory: Trajectory, rtol: float = 1e-8) -> bool:
    """rho_k non-increasing along the run, up to ``rtol``."""
    obj = [r.objective for r in trajectory.records]
    return all(b <= a + rtol * max(1.0, abs(a)) for a, b in zip(obj, obj[1:]))
