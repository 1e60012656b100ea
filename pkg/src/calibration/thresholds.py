"""Grid calibration of the futility / superiority cutoffs.

Trials are simulated once with both looks analysed; each cutoff pair then
re-decides the same paths (common random numbers), so the grid costs one
set of fits rather than one per pair.
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.exceptions import NoFeasiblePair
from src.ordinal.distributions import CategoryDistribution, EffectSpec, proportional_effect
from src.trial.config import DesignConfig, Method
from src.trial.engine import (
    Decision,
    ProgressCallback,
    TrialPath,
    outcomes_from_paths,
    simulate_paths,
    stops_futile,
)

logger = logging.getLogger(__name__)

DEFAULT_FUTILITY_GRID = tuple(np.round(np.arange(0.05, 0.30 + 1e-9, 0.05), 2))
DEFAULT_SUPERIORITY_GRID = tuple(np.round(np.arange(0.80, 0.99 + 1e-9, 0.01), 2))

NULL_STREAM = 1
ALTERNATIVE_STREAM = 2
CONFIRM_STREAM = 3


@dataclass(frozen=True)
class CalibrationResult:
    c_f: float
    c_s: float
    achieved_type1: float
    achieved_power: Optional[float]
    grid: pd.DataFrame
    confirmed_type1: Optional[float] = None

    @property
    def grid_rows(self) -> List[Tuple[float, float, float]]:
        return list(self.grid[["c_f", "c_s", "type1"]].itertuples(index=False, name=None))


@dataclass(frozen=True)
class PathStatistics:
    """Interim and final statistics of valid paths, as arrays."""

    interim: np.ndarray
    final: np.ndarray

    @classmethod
    def from_results(cls, results: List[Tuple[Optional[TrialPath], int]]) -> "PathStatistics":
        paths = [path for path, _ in results if path is not None]
        if not paths:
            raise NoFeasiblePair("every simulated trial was invalid")
        return cls(
            np.array([p.interim_stat for p in paths]),
            np.array([p.final_stat for p in paths], dtype=float),
        )

    def rejection_rate(self, c_f: float, c_s: float) -> float:
        return float(np.mean(~stops_futile(self.interim, c_f) & (self.final > c_s)))

    def stop_rate(self, c_f: float) -> float:
        return float(np.mean(stops_futile(self.interim, c_f)))


def evaluate_grid(
    null: PathStatistics,
    futility_grid: Sequence[float],
    superiority_grid: Sequence[float],
    alternative: Optional[PathStatistics] = None,
) -> pd.DataFrame:
    rows = []
    for c_f in futility_grid:
        for c_s in superiority_grid:
            if not c_f < c_s:
                continue
            rows.append(
                {
                    "c_f": float(c_f),
                    "c_s": float(c_s),
                    "type1": null.rejection_rate(c_f, c_s),
                    "pet_null": null.stop_rate(c_f),
                    "power": alternative.rejection_rate(c_f, c_s) if alternative is not None else np.nan,
                }
            )
    return pd.DataFrame(rows, columns=["c_f", "c_s", "type1", "pet_null", "power"])


def choose_pair(grid: pd.DataFrame, alpha: float) -> pd.Series:
    """Best feasible pair: highest power (or null rejection rate without an
    alternative), then largest c_f, then smallest c_s."""
    feasible = grid[grid["type1"] <= alpha].copy()
    if feasible.empty:
        raise NoFeasiblePair(
            f"no cutoff pair keeps type I error <= {alpha}; smallest on the grid is {grid['type1'].min():.3f}"
        )
    feasible["objective"] = feasible["power"].fillna(feasible["type1"])
    ranked = feasible.sort_values(["objective", "c_f", "c_s"], ascending=[False, False, True], kind="mergesort")
    return ranked.iloc[0]


def null_effect(n_categories: int) -> EffectSpec:
    return proportional_effect(1.0, n_categories)


def calibrate_thresholds(
    cfg: DesignConfig,
    control: CategoryDistribution,
    alpha: float,
    futility_grid: Sequence[float] = DEFAULT_FUTILITY_GRID,
    superiority_grid: Sequence[float] = DEFAULT_SUPERIORITY_GRID,
    n_trials: int = 1000,
    threads: int = 1,
    alternative: Optional[EffectSpec] = None,
    confirm: bool = True,
    progress_callback: Optional[ProgressCallback] = None,
) -> CalibrationResult:
    """Choose (c_f, c_s) keeping the simulated type I error at or below `alpha`.

    `cfg`'s own cutoffs are ignored. With `alternative` the objective is power
    at that effect, otherwise the rejection rate under the null. A
    frequentist calibration is re-checked by a Bayesian run at the chosen
    pair unless `confirm` is False.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    grid_values = np.concatenate((np.asarray(futility_grid, float), np.asarray(superiority_grid, float)))
    if np.any(grid_values < 0) or np.any(grid_values > 1):
        raise ValueError("cutoff grids must lie within [0, 1]")
    null = null_effect(cfg.n_categories)

    null_stats = PathStatistics.from_results(
        simulate_paths(
            cfg, control, null, n_trials, threads, stream=NULL_STREAM, stop_early=False,
            progress_callback=progress_callback, label="Null trials",
        )
    )
    alt_stats = None
    if alternative is not None:
        alt_stats = PathStatistics.from_results(
            simulate_paths(
                cfg, control, alternative, n_trials, threads, stream=ALTERNATIVE_STREAM, stop_early=False,
                progress_callback=progress_callback, label="Alternative trials",
            )
        )

    grid = evaluate_grid(null_stats, futility_grid, superiority_grid, alt_stats)
    best = choose_pair(grid, alpha)
    result = CalibrationResult(
        c_f=float(best["c_f"]),
        c_s=float(best["c_s"]),
        achieved_type1=float(best["type1"]),
        achieved_power=None if alternative is None else float(best["power"]),
        grid=grid,
    )
    logger.info(
        "calibrated %s design: c_f=%.2f c_s=%.2f type I=%.3f",
        cfg.design.value, result.c_f, result.c_s, result.achieved_type1,
    )

    if confirm and cfg.method is Method.FREQUENTIST:
        confirmed = confirm_type1(
            cfg.with_cutoffs(result.c_f, result.c_s), control, n_trials, threads, progress_callback
        )
        result = replace(result, confirmed_type1=confirmed)
    return result


def confirm_type1(
    cfg: DesignConfig,
    control: CategoryDistribution,
    n_trials: int,
    threads: int = 1,
    progress_callback: Optional[ProgressCallback] = None,
) -> float:
    """Null rejection rate of the fully Bayesian design at `cfg`'s cutoffs."""
    bayes_cfg = replace(cfg, method=Method.BAYESIAN)
    results = simulate_paths(
        bayes_cfg, control, null_effect(cfg.n_categories), n_trials, threads, stream=CONFIRM_STREAM,
        progress_callback=progress_callback, label="Bayesian confirmation",
    )
    outcomes, _, _ = outcomes_from_paths(results, cfg.c_f, cfg.c_s)
    if not outcomes:
        raise NoFeasiblePair("every confirmation trial was invalid")
    confirmed = float(np.mean([o.decision is Decision.SUPERIOR for o in outcomes]))
    logger.info("Bayesian confirmation at (%.2f, %.2f): type I=%.3f", cfg.c_f, cfg.c_s, confirmed)
    return confirmed
