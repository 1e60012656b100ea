"""Smallest per-arm stage size reaching a target power.

Each candidate size gets its own cutoff calibration under the null, so the
cutoffs reported with a sample size belong to that size only.
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from src.exceptions import NoFeasiblePair, TargetUnreachable
from src.ordinal.distributions import CategoryDistribution, EffectSpec
from src.trial.config import Design, DesignConfig, StageSizes
from src.trial.engine import ProgressCallback
from .thresholds import (
    DEFAULT_FUTILITY_GRID,
    DEFAULT_SUPERIORITY_GRID,
    CalibrationResult,
    calibrate_thresholds,
)

logger = logging.getLogger(__name__)

PO_N_GRID = tuple(range(50, 201, 20))
NPO_N_GRID = tuple(range(50, 401, 50))


@dataclass(frozen=True)
class SampleSizeResult:
    """Recommended per-arm, per-stage size and the calibration behind it.

    `previous_n` / `previous_power` describe the next-smaller grid size, which
    missed the target (None when the first grid size already met it).
    """

    n_per_arm_per_stage: int
    achieved_power: float
    c_f: float
    c_s: float
    achieved_type1: float
    previous_n: Optional[int]
    previous_power: Optional[float]
    history: pd.DataFrame

    @property
    def cutoffs(self):
        return self.c_f, self.c_s


@dataclass(frozen=True)
class SwitchSampleSizeResult:
    po: SampleSizeResult
    npo: SampleSizeResult
    stage1_size: int
    calibration: CalibrationResult

    @property
    def achieved_power(self) -> float:
        return self.calibration.achieved_power


def sized(cfg: DesignConfig, n: int) -> DesignConfig:
    """`cfg` with both stages of its own model set to `n` per arm."""
    sizes = StageSizes(n, n)
    if cfg.design is Design.PO:
        return replace(cfg, po_sizes=sizes)
    if cfg.design is Design.NPO:
        return replace(cfg, npo_sizes=sizes)
    return replace(cfg, po_sizes=sizes, npo_sizes=sizes)


def _validate_search(power_target: float, n_grid: Sequence[int]) -> List[int]:
    if not 0.0 <= power_target < 1.0:
        raise ValueError(f"power_target must lie in [0, 1), got {power_target}")
    grid = [int(n) for n in n_grid]
    if not grid:
        raise ValueError("n_grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"n_grid must be strictly increasing, got {grid}")
    if grid[0] < 1:
        raise ValueError("n_grid sizes must be at least 1")
    return grid


def find_sample_size(
    cfg: DesignConfig,
    control: CategoryDistribution,
    effect: EffectSpec,
    alpha: float,
    power_target: float,
    n_grid: Sequence[int] = PO_N_GRID,
    n_trials: int = 1000,
    threads: int = 1,
    futility_grid: Sequence[float] = DEFAULT_FUTILITY_GRID,
    superiority_grid: Sequence[float] = DEFAULT_SUPERIORITY_GRID,
    progress_callback: Optional[ProgressCallback] = None,
) -> SampleSizeResult:
    """Walk `n_grid` upwards and stop at the first size whose calibrated
    design reaches `power_target` at `effect`."""
    grid = _validate_search(power_target, n_grid)
    history = []
    previous_n, previous_power = None, None
    for n in grid:
        try:
            calibration = calibrate_thresholds(
                sized(cfg, n),
                control,
                alpha,
                futility_grid,
                superiority_grid,
                n_trials=n_trials,
                threads=threads,
                alternative=effect,
                confirm=False,
                progress_callback=progress_callback,
            )
        except NoFeasiblePair as e:
            logger.info("n=%d: no feasible cutoff pair (%s)", n, e)
            history.append({"n": n, "c_f": np.nan, "c_s": np.nan, "type1": np.nan, "power": np.nan})
            previous_n, previous_power = n, None
            continue

        power = calibration.achieved_power
        history.append(
            {"n": n, "c_f": calibration.c_f, "c_s": calibration.c_s, "type1": calibration.achieved_type1, "power": power}
        )
        logger.info("n=%d per arm per stage: power %.3f at cutoffs (%.2f, %.2f)", n, power, calibration.c_f, calibration.c_s)
        if power >= power_target:
            return SampleSizeResult(
                n_per_arm_per_stage=n,
                achieved_power=power,
                c_f=calibration.c_f,
                c_s=calibration.c_s,
                achieved_type1=calibration.achieved_type1,
                previous_n=previous_n,
                previous_power=previous_power,
                history=pd.DataFrame(history),
            )
        previous_n, previous_power = n, power

    max_power = previous_power if previous_power is not None else 0.0
    raise TargetUnreachable(
        f"power {max_power:.3f} at n={grid[-1]} per arm per stage is below the target {power_target}",
        max_n=grid[-1],
        max_power=max_power,
    )


def find_switch_sample_size(
    cfg: DesignConfig,
    control: CategoryDistribution,
    effect: EffectSpec,
    alpha: float,
    power_target: float,
    po_grid: Sequence[int] = PO_N_GRID,
    npo_grid: Sequence[int] = NPO_N_GRID,
    n_trials: int = 1000,
    threads: int = 1,
    futility_grid: Sequence[float] = DEFAULT_FUTILITY_GRID,
    superiority_grid: Sequence[float] = DEFAULT_SUPERIORITY_GRID,
    progress_callback: Optional[ProgressCallback] = None,
) -> SwitchSampleSizeResult:
    """Size the PO and NPO designs separately, then calibrate the switch
    design that enrols the larger stage-1 size and the chosen model's
    stage-2 size."""
    search = dict(
        n_trials=n_trials,
        threads=threads,
        futility_grid=futility_grid,
        superiority_grid=superiority_grid,
        progress_callback=progress_callback,
    )
    po = find_sample_size(replace(cfg, design=Design.PO), control, effect, alpha, power_target, po_grid, **search)
    npo = find_sample_size(replace(cfg, design=Design.NPO), control, effect, alpha, power_target, npo_grid, **search)

    switch_cfg = replace(
        cfg,
        design=Design.SWITCH,
        po_sizes=StageSizes(po.n_per_arm_per_stage, po.n_per_arm_per_stage),
        npo_sizes=StageSizes(npo.n_per_arm_per_stage, npo.n_per_arm_per_stage),
    )
    calibration = calibrate_thresholds(
        switch_cfg,
        control,
        alpha,
        futility_grid,
        superiority_grid,
        n_trials=n_trials,
        threads=threads,
        alternative=effect,
        confirm=False,
        progress_callback=progress_callback,
    )
    logger.info(
        "switch design: stage 1 n=%d, power %.3f at cutoffs (%.2f, %.2f)",
        switch_cfg.stage1_size, calibration.achieved_power, calibration.c_f, calibration.c_s,
    )
    return SwitchSampleSizeResult(po=po, npo=npo, stage1_size=switch_cfg.stage1_size, calibration=calibration)
