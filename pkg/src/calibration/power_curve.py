"""Power as a function of effect size or of sample size, emitted as tables for plotting."""

import logging
from typing import Optional, Sequence

import pandas as pd

from src.exceptions import NoFeasiblePair
from src.ordinal.distributions import CategoryDistribution, EffectSpec
from src.ordinal.scenarios import Scenario
from src.trial.config import Design, DesignConfig
from src.trial.engine import ProgressCallback, operating_characteristics
from .sample_size import sized
from .thresholds import DEFAULT_FUTILITY_GRID, DEFAULT_SUPERIORITY_GRID, calibrate_thresholds

logger = logging.getLogger(__name__)


def power_curve_by_effect(
    cfg: DesignConfig,
    scenarios: Sequence[Scenario],
    n_trials: int,
    threads: int = 1,
    progress_callback: Optional[ProgressCallback] = None,
) -> pd.DataFrame:
    """PRN at fixed cutoffs and sizes, one row per scenario."""
    rows = []
    for scenario in scenarios:
        oc = operating_characteristics(cfg, scenario, n_trials, threads, progress_callback=progress_callback)
        rows.append(
            {
                "design": cfg.design.value,
                "scenario": scenario.id,
                "effect_size": scenario.effect_size(npo_convention=cfg.design is not Design.PO),
                "mean_utility_difference": scenario.mean_utility_difference,
                "power": oc.prn / 100.0,
                "pet": oc.pet / 100.0,
                "avg_n_per_arm": oc.avg_n_per_arm,
            }
        )
    return pd.DataFrame(rows)


def power_curve_by_n(
    cfg: DesignConfig,
    control: CategoryDistribution,
    effect: EffectSpec,
    alpha: float,
    n_grid: Sequence[int],
    n_trials: int,
    threads: int = 1,
    futility_grid: Sequence[float] = DEFAULT_FUTILITY_GRID,
    superiority_grid: Sequence[float] = DEFAULT_SUPERIORITY_GRID,
    progress_callback: Optional[ProgressCallback] = None,
) -> pd.DataFrame:
    """Power at `effect` for each per-arm stage size, with cutoffs recalibrated at every size."""
    rows = []
    for n in n_grid:
        row = {"design": cfg.design.value, "n": int(n)}
        try:
            result = calibrate_thresholds(
                sized(cfg, int(n)),
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
            row.update(power=result.achieved_power, type1=result.achieved_type1, c_f=result.c_f, c_s=result.c_s)
        except NoFeasiblePair as e:
            logger.warning("%s design, n=%d: %s", cfg.design.value, n, e)
            row.update(power=float("nan"), type1=float("nan"), c_f=float("nan"), c_s=float("nan"))
        rows.append(row)
    return pd.DataFrame(rows, columns=["design", "n", "power", "type1", "c_f", "c_s"])
