import numpy as np
import pytest

from iscreen import oracle
from iscreen.model import PenaltySpec, RankDeficient
from iscreen.projection import new_state, state_for
from iscreen.verify import random_instance

from conftest import gaussian_data


def test_dense_rss_examples(rng):
    x = rng.standard_normal((12, 4))
    y = rng.standard_normal(12)
    assert oracle.dense_rss(x, y, []) == pytest.approx(y @ y)
    fit = x[:, :2] @ [1.0, 3.0]
    assert oracle.dense_rss(x, fit, [0, 1]) <= 1e-8 * (fit @ fit)


def test_dense_rss_agrees_with_engine():
    rng = np.random.default_rng(77)
    for _ in range(50):
        inst = random_instance(rng)
        s = state_for(inst.data, inst.active)
        ref = oracle.dense_rss(inst.data.x, inst.data.y, inst.active)
        assert s.rss == pytest.approx(ref, rel=1e-8, abs=1e-12 * (inst.data.y @ inst.data.y))


def test_joint_coef_examples(rng):
    ds, _ = gaussian_data(20, 4, seed=1)
    xj = ds.x[:, 2]
    assert oracle.dense_joint_ols_last_coef(ds.x, ds.y, [], 2) == pytest.approx(xj @ ds.y / (xj @ xj))
    dup = np.column_stack([ds.x, ds.x[:, 0]])
    with pytest.raises(RankDeficient):
        oracle.dense_joint_ols_last_coef(dup, ds.y, [0], 4)
    s = state_for(ds, [0, 3])
    assert s.beta_hat_last(1) == pytest.approx(
        oracle.dense_joint_ols_last_coef(ds.x, ds.y, [0, 3], 1), rel=1e-8
    )


@pytest.mark.parametrize("criterion", ["SCR1", "SCR2", "SCR3"])
def test_brute_screen_trivial(criterion, rng):
    x = rng.standard_normal((10, 4))
    y = rng.standard_normal(10)
    assert sorted(oracle.brute_screen(criterion, x, y, [], 4)) == [0, 1, 2, 3]
    assert oracle.brute_screen(criterion, x[:, :1], y, [], 1) == (0,)


def test_grid_kill_condition(rng):
    x = rng.standard_normal((20, 2))
    z = rng.standard_normal(20)
    lam = 2 * np.abs(x.T @ z).max() / 20 * 1.5
    beta, obj = oracle.grid_pls(x, z, PenaltySpec("lasso", lam))
    np.testing.assert_array_equal(beta, [0.0, 0.0])
    assert obj == pytest.approx(z @ z)


def test_grid_rejects_wide_problems(rng):
    with pytest.raises(ValueError):
        oracle.grid_pls(rng.standard_normal((5, 3)), np.ones(5), PenaltySpec("lasso", 1.0))


def test_oracles_are_deterministic(rng):
    ds, _ = gaussian_data(15, 5)
    pen = PenaltySpec("scad", 0.3)
    a = oracle.grid_pls(ds.x[:, :2], ds.y, pen)
    b = oracle.grid_pls(ds.x[:, :2], ds.y, pen)
    np.testing.assert_array_equal(a[0], b[0])
    assert a[1] == b[1]
    assert new_state(ds).rss == oracle.dense_rss(ds.x, ds.y, [])


def test_rss_drop_matches_subtraction_when_well_scaled(rng):
    ds, _ = gaussian_data(30, 6, seed=4, noise=0.1)
    drop = oracle.dense_rss_drop(ds.x, ds.y, [0, 3], 1)
    sub = oracle.dense_rss(ds.x, ds.y, [0, 3]) - oracle.dense_rss(ds.x, ds.y, [0, 3, 1])
    assert drop == pytest.approx(sub, rel=1e-10)
    assert state_for(ds, [0, 3]).rss_delta_single(1) == pytest.approx(drop, rel=1e-10)
