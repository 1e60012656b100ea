from dataclasses import dataclass

import numpy as np

from src.exceptions import DimensionMismatch, NonMonotoneResult

SUM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class CategoryDistribution:
    """Probability vector over C ordered outcome levels (level 1 is best)."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float).copy()
        if probs.ndim != 1 or probs.size < 3:
            raise ValueError(f"probs must be a vector with at least 3 levels, got shape {probs.shape}")
        if np.any(probs < 0) or np.any(probs > 1):
            raise ValueError(f"probs entries must lie in [0, 1]: {probs.tolist()}")
        if abs(probs.sum() - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"probs must sum to 1, got {probs.sum():.15f}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def point_mass(cls, level: int, n_categories: int) -> "CategoryDistribution":
        """Degenerate distribution at `level` (1-based)."""
        probs = np.zeros(n_categories)
        probs[level - 1] = 1.0
        return cls(probs)

    @property
    def n_categories(self) -> int:
        return self.probs.size

    def __len__(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class EffectSpec:
    """Cumulative odds ratios, one per category boundary.

    theta_c = odds(treatment P(Y <= c)) / odds(control P(Y <= c)), so values
    above 1 move mass towards the better (lower) levels.
    """

    odds_ratios: np.ndarray

    def __post_init__(self):
        ors = np.asarray(self.odds_ratios, dtype=float).copy()
        if ors.ndim != 1 or ors.size < 2:
            raise ValueError(f"odds_ratios must be a vector with at least 2 boundaries, got shape {ors.shape}")
        if np.any(ors <= 0) or not np.all(np.isfinite(ors)):
            raise ValueError(f"odds_ratios must be positive and finite: {ors.tolist()}")
        ors.setflags(write=False)
        object.__setattr__(self, "odds_ratios", ors)

    @property
    def is_proportional(self) -> bool:
        return bool(np.all(self.odds_ratios == self.odds_ratios[0]))

    @property
    def n_categories(self) -> int:
        return self.odds_ratios.size + 1

    @property
    def log_odds_shift(self) -> np.ndarray:
        """Per-boundary model shift Delta_c = -log(theta_c); negative means benefit."""
        return -np.log(self.odds_ratios)


@dataclass(frozen=True)
class UtilityScale:
    """Utility points per outcome level, non-increasing from level 1 to C."""

    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float).copy()
        if u.ndim != 1 or u.size < 3:
            raise ValueError(f"utility scale needs at least 3 levels, got shape {u.shape}")
        if np.any(np.diff(u) > 0):
            raise ValueError(f"utility scale must be non-increasing in category: {u.tolist()}")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    def __len__(self) -> int:
        return self.u.size


def proportional_effect(odds_ratio: float, n_categories: int) -> EffectSpec:
    return EffectSpec(np.full(n_categories - 1, float(odds_ratio)))


def cumulative(dist: CategoryDistribution) -> np.ndarray:
    cum = np.cumsum(dist.probs)
    # pin the last boundary so rounding never leaves it at 0.9999999999999999
    cum[-1] = 1.0
    return cum


def apply_odds_ratios(control: CategoryDistribution, effect: EffectSpec) -> CategoryDistribution:
    """Treatment distribution whose boundary odds are theta_c times the control's."""
    if effect.n_categories != control.n_categories:
        raise DimensionMismatch(
            f"effect has {effect.odds_ratios.size} boundaries, control has {control.n_categories} levels"
        )
    boundaries = cumulative(control)[:-1]
    if np.any(boundaries <= 0) or np.any(boundaries >= 1):
        raise NonMonotoneResult(
            f"control cumulative probabilities must lie strictly inside (0, 1): {boundaries.tolist()}"
        )
    odds = effect.odds_ratios * boundaries / (1.0 - boundaries)
    treated = odds / (1.0 + odds)
    probs = np.diff(np.concatenate(([0.0], treated, [1.0])))
    if np.any(probs < 0):
        raise NonMonotoneResult(
            f"odds ratios {effect.odds_ratios.tolist()} give negative category probabilities {probs.tolist()}"
        )
    # absorb the rounding residue into the last level
    probs[-1] = 1.0 - probs[:-1].sum()
    return CategoryDistribution(probs)


def mean_utility(dist: CategoryDistribution, scale: UtilityScale) -> float:
    if len(scale) != dist.n_categories:
        raise DimensionMismatch(f"utility scale has {len(scale)} levels, distribution has {dist.n_categories}")
    return float(scale.u @ dist.probs)


def mean_utility_difference(control: CategoryDistribution, effect: EffectSpec, scale: UtilityScale) -> float:
    return mean_utility(apply_odds_ratios(control, effect), scale) - mean_utility(control, scale)


def sample_counts(dist: CategoryDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial category counts for `n` patients."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    return rng.multinomial(n, dist.probs)
