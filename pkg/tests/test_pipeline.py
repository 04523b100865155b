import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iscreen.model import (
    AlgorithmConfig,
    Dataset,
    InvalidRates,
    PenaltySpec,
    RateConstants,
    StepRecord,
    StopReason,
    Trajectory,
    TrueModel,
)
from iscreen.pipeline import (
    Preset,
    check_sure_screening,
    default_screen_size,
    iterations_to_coverage,
    objective_monotone,
    preset_config,
    run,
    step,
    suggest_schedule,
)

from conftest import gaussian_data, orthonormal_design


def test_default_screen_size():
    assert default_screen_size(200) == 38


def test_single_step_saturation():
    ds, _ = gaussian_data(30, 8)
    traj = run(ds, AlgorithmConfig("SCR1", "SEL1", 8, max_iters=1))
    assert sorted(traj.final_model) == list(range(8))
    assert traj.stop_reason is StopReason.MAX_ITERS


def test_forward_regression_exact_recovery():
    x = orthonormal_design(20, 6)
    ds = Dataset(x, 2 * x[:, 3])
    traj = run(ds, preset_config("FR", 20, max_iters=4))
    assert traj.records[0].model == (3,)
    assert traj.records[0].rss <= 1e-20
    assert [len(r.model) for r in traj.records] == [1, 2, 3, 4]
    assert run(ds, preset_config("FR", 20, max_iters=4)) == traj


def test_all_columns_used_stop():
    ds, _ = gaussian_data(30, 5)
    traj = run(ds, preset_config("FR", 30, max_iters=8))
    assert len(traj) == 5
    assert traj.stop_reason is StopReason.ALL_COLUMNS_USED


def test_rank_deficiency_ends_run():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((6, 3))
    x = np.column_stack([x, rng.standard_normal((6, 5))])
    ds = Dataset(x, rng.standard_normal(6))
    traj = run(ds, AlgorithmConfig("SCR1", "SEL1", 4, max_iters=3))
    assert traj.stop_reason is StopReason.RANK_DEFICIENT
    assert len(traj) == 1
    assert traj.detail


@pytest.mark.parametrize(
    "preset, explicit",
    [
        ("ISIS", ("SCR1", "SEL2")),
        ("VanISIS", ("SCR2", "SEL3")),
        ("VanISIS_R", ("SCR3", "SEL3")),
        ("NP_VanISIS", ("SCR2", "SEL1")),
    ],
)
def test_preset_fidelity(preset, explicit):
    ds, _ = gaussian_data(60, 40, seed=3, t=4)
    pen = PenaltySpec("lasso", 0.2)
    cfg = preset_config(preset, 60, pen, max_iters=4, screen_sizes=6)
    manual = AlgorithmConfig(*explicit, 6, max_iters=4, penalty=cfg.penalty)
    assert cfg == manual
    assert run(ds, cfg) == run(ds, manual)


def test_sis_once_is_one_step():
    cfg = preset_config("SIS_once", 200)
    assert cfg.max_iters == 1 and cfg.screen_sizes == 38
    assert preset_config(Preset.FR, 50).screen_sizes == 1


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["ISIS", "NP_ISIS", "FR", "NP_VanISIS_R"]))
def test_prop_nesting_sel1_sel2(seed, preset):
    rng = np.random.default_rng(seed)
    n, p = int(rng.integers(30, 60)), int(rng.integers(20, 80))
    ds, beta = gaussian_data(n, p, seed=seed, t=3)
    truth = TrueModel.from_beta(beta)
    size = None if preset == "FR" else 4
    cfg = preset_config(preset, n, PenaltySpec("lasso", 0.1), max_iters=5, screen_sizes=size)
    traj = run(ds, cfg)
    models = [()] + traj.models
    for a, b in zip(models, models[1:]):
        assert set(a) <= set(b)
    if preset == "FR":
        assert all(len(m) == k for k, m in enumerate(models))
    if check_sure_screening(traj, truth, "final"):
        assert check_sure_screening(traj, truth, "any")
    if check_sure_screening(traj, truth, "any"):
        assert check_sure_screening(traj, truth, "final")
    assert objective_monotone(traj)


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["lasso", "scad"]), st.sampled_from(["VanISIS", "VanISIS_R"]))
def test_prop_sel3_objective_monotone(seed, kind, preset):
    rng = np.random.default_rng(seed)
    n, p = int(rng.integers(40, 80)), int(rng.integers(30, 100))
    ds, _ = gaussian_data(n, p, seed=seed, t=4)
    cfg = preset_config(preset, n, PenaltySpec(kind, 0.15), max_iters=6, screen_sizes=5)
    traj = run(ds, cfg)
    assert objective_monotone(traj)
    for r in traj.records:
        assert set(r.model) <= set(range(p))


def test_fixed_point_stop_and_forced_step():
    ds, _ = gaussian_data(80, 60, seed=21, t=3)
    cfg = preset_config("VanISIS", 80, PenaltySpec("lasso", 0.3), max_iters=10, screen_sizes=5)
    traj = run(ds, cfg)
    assert traj.stop_reason is StopReason.FIXED_POINT
    last = traj.records[-1]
    assert set(last.model) == set(traj.records[-2].model)
    forced = step(ds, last.model, cfg, len(traj) + 1)
    assert set(forced.model) == set(last.model)
    no_stop = preset_config("VanISIS", 80, PenaltySpec("lasso", 0.3), max_iters=10,
                            screen_sizes=5, stop_on_fixed_point=False)
    assert len(run(ds, no_stop)) == 10


def test_run_is_deterministic():
    ds, _ = gaussian_data(50, 70, seed=8)
    cfg = preset_config("VanISIS", 50, PenaltySpec("scad", 0.2), max_iters=4, screen_sizes=6)
    a, b = run(ds, cfg), run(ds, cfg)
    assert a.to_dict() == b.to_dict()


# -- theory helpers --------------------------------------------------------


def test_suggest_schedule_defaults():
    r = RateConstants(c_y=1, c_beta=1, tau_min=1, tau_max=2)
    assert suggest_schedule(r, 500, "Thm1").kappa == 64
    assert suggest_schedule(r, 500, "Thm1").lambda_max is None
    thm2 = suggest_schedule(r, 7, "Thm2")
    assert thm2.kappa == 128 and thm2.lambda_max == 0.125


def test_suggest_schedule_rejects_bad_rates():
    with pytest.raises(InvalidRates):
        suggest_schedule(RateConstants(tau_min=2, tau_max=2), 100, "Thm1")
    with pytest.raises(ValueError):
        suggest_schedule(RateConstants(), 100, "Thm4")


def _traj(models):
    recs = [StepRecord(k + 1, (), (), tuple(m), 1.0, 1.0, True) for k, m in enumerate(models)]
    return Trajectory(records=recs, stop_reason=StopReason.MAX_ITERS, initial_rss=1.0)


def test_check_sure_screening_examples():
    traj = _traj([(2,), (2, 1), (2,)])
    truth = TrueModel.from_beta([0.0, 1.0, 0.0])
    assert not check_sure_screening(traj, truth, "final")
    assert check_sure_screening(traj, truth, "any")
    assert iterations_to_coverage(traj, truth) == 2
    empty = TrueModel.from_beta([0.0, 0.0, 0.0])
    assert check_sure_screening(traj, empty, "final")
    assert check_sure_screening(traj, empty, "any")
    with pytest.raises(ValueError):
        check_sure_screening(traj, truth, "sometimes")


@given(
    st.lists(st.sets(st.integers(0, 7), max_size=6), min_size=1, max_size=6),
    st.sets(st.integers(0, 7), max_size=3),
)
def test_prop_sure_screening_matches_scan(models, support):
    beta = np.zeros(8)
    beta[list(support)] = 1.0
    truth = TrueModel.from_beta(beta)
    traj = _traj([sorted(m) for m in models])
    assert check_sure_screening(traj, truth, "final") == (support <= models[-1])
    assert check_sure_screening(traj, truth, "any") == any(support <= m for m in models)
