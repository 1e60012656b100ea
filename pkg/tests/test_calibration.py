import numpy as np
import pandas as pd
import pytest

import src.calibration.power_curve as power_curve
import src.calibration.sample_size as sample_size
import src.calibration.thresholds as thresholds
from src.calibration.power_curve import power_curve_by_effect, power_curve_by_n
from src.calibration.sample_size import find_sample_size, find_switch_sample_size, sized
from src.calibration.thresholds import (
    DEFAULT_FUTILITY_GRID,
    DEFAULT_SUPERIORITY_GRID,
    CalibrationResult,
    PathStatistics,
    calibrate_thresholds,
    choose_pair,
    evaluate_grid,
)
from src.exceptions import NoFeasiblePair, TargetUnreachable
from src.inference.data import Model
from src.ordinal.distributions import UtilityScale, proportional_effect
from src.ordinal.scenarios import COVID_CONTROL, EXAMPLE_CONTROL_5, scenario_catalog
from src.trial.config import Design, DesignConfig, Method, StageSizes
from src.trial.engine import TrialPath

FAST = dict(method=Method.FREQUENTIST, n_boot=200)


def _stats(interim, final):
    return PathStatistics(np.asarray(interim, float), np.asarray(final, float))


def test_default_grids():
    assert DEFAULT_FUTILITY_GRID == (0.05, 0.1, 0.15, 0.2, 0.25, 0.3)
    assert len(DEFAULT_SUPERIORITY_GRID) == 20
    assert DEFAULT_SUPERIORITY_GRID[0] == 0.8 and DEFAULT_SUPERIORITY_GRID[-1] == 0.99
    assert 0.95 in DEFAULT_SUPERIORITY_GRID and 0.86 in DEFAULT_SUPERIORITY_GRID


def test_path_statistics_rates():
    stats = _stats([0.1, 0.5, 0.9, 0.3], [0.2, 0.96, 0.99, 0.5])
    assert stats.stop_rate(0.2) == 0.25
    assert stats.rejection_rate(0.2, 0.95) == 0.5
    assert stats.rejection_rate(0.2, 0.98) == 0.25


def test_futility_cutoff_of_one_stops_every_path():
    stats = _stats([1.0, 1.0, 0.4], [1.0, 1.0, 0.99])
    assert stats.stop_rate(1.0) == 1.0
    assert stats.rejection_rate(1.0, 1.01) == 0.0
    assert stats.stop_rate(0.5) == pytest.approx(1 / 3)


def test_path_statistics_need_valid_paths():
    with pytest.raises(NoFeasiblePair):
        PathStatistics.from_results([(None, 3), (None, 3)])
    path = TrialPath(0.4, 0.8, Model.PO, 10, 10)
    stats = PathStatistics.from_results([(path, 1), (None, 3)])
    assert stats.interim.tolist() == [0.4]


def test_type1_non_increasing_in_superiority_cutoff():
    rng = np.random.default_rng(0)
    stats = _stats(rng.uniform(size=500), rng.uniform(size=500))
    grid = evaluate_grid(stats, DEFAULT_FUTILITY_GRID, DEFAULT_SUPERIORITY_GRID)
    for _, by_cf in grid.groupby("c_f"):
        assert np.all(np.diff(by_cf.sort_values("c_s")["type1"].to_numpy()) <= 0)


def test_choose_pair_tie_breaks():
    grid = pd.DataFrame(
        {
            "c_f": [0.1, 0.2, 0.2, 0.1],
            "c_s": [0.90, 0.90, 0.95, 0.95],
            "type1": [0.05, 0.05, 0.05, 0.03],
            "pet_null": [0.5] * 4,
            "power": [np.nan] * 4,
        }
    )
    best = choose_pair(grid, 0.05)
    assert (best["c_f"], best["c_s"]) == (0.2, 0.90)
    with pytest.raises(NoFeasiblePair):
        choose_pair(grid, 0.01)


def test_choose_pair_prefers_power_when_available():
    grid = pd.DataFrame(
        {
            "c_f": [0.2, 0.1],
            "c_s": [0.95, 0.95],
            "type1": [0.04, 0.05],
            "pet_null": [0.6, 0.5],
            "power": [0.70, 0.75],
        }
    )
    best = choose_pair(grid, 0.05)
    assert best["c_f"] == 0.1


def test_calibrate_never_reject_pair_is_feasible():
    cfg = DesignConfig.fixed(Design.PO, 60, **FAST)
    result = calibrate_thresholds(cfg, COVID_CONTROL, 0.05, [0.0], [1.0], n_trials=10, confirm=False)
    assert (result.c_f, result.c_s, result.achieved_type1) == (0.0, 1.0, 0.0)
    assert result.grid_rows == [(0.0, 1.0, 0.0)]
    assert result.achieved_power is None


def test_calibrate_reports_infeasible_grid():
    cfg = DesignConfig.fixed(Design.PO, 60, **FAST)
    with pytest.raises(NoFeasiblePair):
        calibrate_thresholds(cfg, COVID_CONTROL, 0.01, [0.0], [0.05], n_trials=20)


def test_calibrate_validates_inputs():
    cfg = DesignConfig.fixed(Design.PO, 60, **FAST)
    with pytest.raises(ValueError):
        calibrate_thresholds(cfg, COVID_CONTROL, 1.5, n_trials=5)
    with pytest.raises(ValueError):
        calibrate_thresholds(cfg, COVID_CONTROL, 0.05, [0.2], [1.2], n_trials=5)


def test_calibrate_with_alternative():
    cfg = DesignConfig.fixed(Design.PO, 80, **FAST)
    result = calibrate_thresholds(
        cfg, COVID_CONTROL, 0.2, [0.1, 0.2], [0.9, 0.95], n_trials=30,
        alternative=proportional_effect(1.8, 6), confirm=False,
    )
    assert (result.c_f, result.c_s) in {(0.1, 0.9), (0.1, 0.95), (0.2, 0.9), (0.2, 0.95)}
    assert result.achieved_type1 <= 0.2
    assert 0.0 <= result.achieved_power <= 1.0
    assert len(result.grid) == 4


def test_frequentist_calibration_is_confirmed_by_default(monkeypatch):
    seen = []

    def fake_confirm(cfg, control, n_trials, threads=1, progress_callback=None):
        seen.append((cfg.method, cfg.c_f, cfg.c_s))
        return 0.03

    monkeypatch.setattr(thresholds, "confirm_type1", fake_confirm)
    cfg = DesignConfig.fixed(Design.PO, 60, **FAST)
    result = calibrate_thresholds(cfg, COVID_CONTROL, 0.05, [0.0], [1.0], n_trials=10)
    assert result.confirmed_type1 == 0.03
    assert seen == [(Method.FREQUENTIST, 0.0, 1.0)]

    opted_out = calibrate_thresholds(cfg, COVID_CONTROL, 0.05, [0.0], [1.0], n_trials=10, confirm=False)
    assert opted_out.confirmed_type1 is None
    assert len(seen) == 1


def test_sized_sets_the_design_model():
    cfg = DesignConfig(Design.NPO)
    assert sized(cfg, 40).npo_sizes == StageSizes(40, 40)
    assert sized(cfg, 40).po_sizes == cfg.po_sizes
    switch = sized(DesignConfig(Design.SWITCH), 30)
    assert switch.po_sizes == switch.npo_sizes == StageSizes(30, 30)


def _fake_calibration(power_by_n):
    def fake(
        cfg, control, alpha, futility_grid, superiority_grid, n_trials, threads, alternative, confirm, progress_callback
    ):
        assert not confirm
        n = cfg.stage1_size
        return CalibrationResult(0.2, 0.9, 0.04, power_by_n(cfg, n), pd.DataFrame())

    return fake


def test_find_sample_size_smallest_n(monkeypatch):
    powers = {50: 0.6, 70: 0.78, 90: 0.82, 110: 0.9}
    monkeypatch.setattr(sample_size, "calibrate_thresholds", _fake_calibration(lambda cfg, n: powers[n]))
    cfg = DesignConfig(Design.PO, n_categories=5, utility=UtilityScale(np.array([100.0, 75.0, 50.0, 25.0, 0.0])))
    result = find_sample_size(cfg, EXAMPLE_CONTROL_5, proportional_effect(1.5, 5), 0.05, 0.8, [50, 70, 90, 110])
    assert result.n_per_arm_per_stage == 90
    assert result.achieved_power == 0.82
    assert (result.previous_n, result.previous_power) == (70, 0.78)
    assert result.cutoffs == (0.2, 0.9)
    assert result.history["n"].tolist() == [50, 70, 90]


def test_find_sample_size_zero_target_is_first_size(monkeypatch):
    monkeypatch.setattr(sample_size, "calibrate_thresholds", _fake_calibration(lambda cfg, n: 0.01))
    cfg = DesignConfig(Design.PO)
    result = find_sample_size(cfg, COVID_CONTROL, proportional_effect(1.2, 6), 0.05, 0.0, [50, 70])
    assert result.n_per_arm_per_stage == 50
    assert result.previous_n is None


def test_find_sample_size_unreachable(monkeypatch):
    monkeypatch.setattr(sample_size, "calibrate_thresholds", _fake_calibration(lambda cfg, n: 0.05))
    with pytest.raises(TargetUnreachable) as err:
        find_sample_size(DesignConfig(Design.PO), COVID_CONTROL, proportional_effect(1.0, 6), 0.05, 0.8, [50, 70])
    assert err.value.max_n == 70
    assert err.value.max_power == 0.05


def test_find_sample_size_validates_grid():
    cfg = DesignConfig(Design.PO)
    with pytest.raises(ValueError):
        find_sample_size(cfg, COVID_CONTROL, proportional_effect(1.2, 6), 0.05, 0.8, [70, 50])
    with pytest.raises(ValueError):
        find_sample_size(cfg, COVID_CONTROL, proportional_effect(1.2, 6), 0.05, 1.0, [50])


def test_find_switch_sample_size(monkeypatch):
    def power(cfg, n):
        if cfg.design is Design.PO:
            return 0.85 if cfg.po_sizes.stage1 >= 70 else 0.5
        if cfg.design is Design.NPO:
            return 0.85 if cfg.npo_sizes.stage1 >= 150 else 0.5
        return 0.88

    monkeypatch.setattr(sample_size, "calibrate_thresholds", _fake_calibration(power))
    result = find_switch_sample_size(
        DesignConfig(Design.SWITCH), COVID_CONTROL, scenario_catalog()[7].effect, 0.05, 0.8,
        po_grid=[50, 70, 90], npo_grid=[50, 100, 150, 200],
    )
    assert result.po.n_per_arm_per_stage == 70
    assert result.npo.n_per_arm_per_stage == 150
    assert result.stage1_size == 150
    assert result.achieved_power == 0.88


def test_power_curve_by_effect():
    cfg = DesignConfig.fixed(Design.PO, 60, **FAST)
    curve = power_curve_by_effect(cfg, scenario_catalog()[:2], n_trials=5)
    assert curve["scenario"].tolist() == ["1", "2"]
    assert curve["effect_size"].tolist() == pytest.approx([1.0, 1.2])
    assert curve["power"].between(0, 1).all()


def test_power_curve_by_n(monkeypatch):
    def fake(
        cfg, control, alpha, futility_grid, superiority_grid, n_trials, threads, alternative, confirm, progress_callback
    ):
        assert not confirm
        n = cfg.stage1_size
        if n < 60:
            raise NoFeasiblePair("too small")
        return CalibrationResult(0.2, 0.95, 0.05, n / 100.0, pd.DataFrame())

    monkeypatch.setattr(power_curve, "calibrate_thresholds", fake)
    curve = power_curve_by_n(
        DesignConfig(Design.NPO), COVID_CONTROL, proportional_effect(1.4, 6), 0.05, [50, 60, 80], n_trials=5
    )
    assert curve["n"].tolist() == [50, 60, 80]
    assert np.isnan(curve["power"].iloc[0])
    assert curve["power"].iloc[1:].tolist() == [0.6, 0.8]
