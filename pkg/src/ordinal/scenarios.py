from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .distributions import (
    CategoryDistribution,
    EffectSpec,
    UtilityScale,
    mean_utility_difference,
    proportional_effect,
)

# Six-level clinical status scale, 1 = discharged ... 6 = death.
COVID_CONTROL = CategoryDistribution(np.array([0.58, 0.05, 0.17, 0.03, 0.04, 0.13]))
DEFAULT_UTILITY = UtilityScale(np.array([100.0, 80.0, 65.0, 25.0, 10.0, 0.0]))

# Five-level control used by the sample-size example.
EXAMPLE_CONTROL_5 = CategoryDistribution(np.array([0.3, 0.2, 0.15, 0.05, 0.3]))

PO_SCENARIO_ORS = (1.0, 1.2, 1.4, 1.6, 1.8)
NPO_SCENARIO_ORS = (
    (1.5, 1.5, 1.1, 1.1, 1.1),
    (1.5, 1.5, 1.2, 1.2, 1.2),
    (1.5, 1.5, 1.3, 1.3, 1.3),
)


@dataclass(frozen=True)
class Scenario:
    id: str
    control: CategoryDistribution
    effect: EffectSpec
    mean_utility_difference: float

    @classmethod
    def build(
        cls,
        id: str,
        control: CategoryDistribution,
        effect: EffectSpec,
        scale: Optional[UtilityScale] = None,
    ) -> "Scenario":
        scale = scale or DEFAULT_UTILITY
        return cls(id, control, effect, mean_utility_difference(control, effect, scale))

    @property
    def is_null(self) -> bool:
        return bool(np.all(self.effect.odds_ratios == 1.0))

    def effect_size(self, npo_convention: bool) -> float:
        """Report column value: OR for PO rows, utility difference for NPO rows."""
        if npo_convention or not self.effect.is_proportional:
            return self.mean_utility_difference
        return float(self.effect.odds_ratios[0])


def scenario_catalog(
    scale: Optional[UtilityScale] = None, control: CategoryDistribution = COVID_CONTROL
) -> List[Scenario]:
    """The eight reference scenarios on a six-level `control`."""
    if control.n_categories != COVID_CONTROL.n_categories:
        raise ValueError(f"the catalog needs a six-level control, got {control.n_categories} levels")
    scale = scale or DEFAULT_UTILITY
    scenarios = [
        Scenario.build(str(i), control, proportional_effect(or_, control.n_categories), scale)
        for i, or_ in enumerate(PO_SCENARIO_ORS, start=1)
    ]
    start = len(scenarios) + 1
    scenarios.extend(
        Scenario.build(str(i), control, EffectSpec(np.array(ors)), scale)
        for i, ors in enumerate(NPO_SCENARIO_ORS, start=start)
    )
    return scenarios


def _grid(start: float, stop: float, step: float) -> np.ndarray:
    n = int(round((stop - start) / step)) + 1
    return np.round(start + step * np.arange(n), 10)


def po_effect_sweep(
    start: float = 1.0, stop: float = 2.0, step: float = 0.05, n_categories: int = 6
) -> List[EffectSpec]:
    return [proportional_effect(or_, n_categories) for or_ in _grid(start, stop, step)]


def npo_effect_sweep(
    lead: Sequence[float] = (1.5, 1.5),
    start: float = 1.0,
    stop: float = 1.4,
    step: float = 0.05,
    n_categories: int = 6,
) -> List[EffectSpec]:
    """Fixed odds ratios at the first boundaries, a common varying tail at the rest."""
    tail = n_categories - 1 - len(lead)
    if tail < 1:
        raise ValueError(f"lead of length {len(lead)} leaves no varying boundary for {n_categories} levels")
    return [EffectSpec(np.concatenate((lead, np.full(tail, or_)))) for or_ in _grid(start, stop, step)]


def npo_oc_matrix() -> List[EffectSpec]:
    """Null row followed by OR_1 = OR_2 = 1.5 with the tail from 1.00 to 1.30."""
    return [proportional_effect(1.0, 6)] + npo_effect_sweep(start=1.0, stop=1.3, step=0.05)


def scenarios_from_effects(
    control: CategoryDistribution, effects: Sequence[EffectSpec], scale: UtilityScale
) -> List[Scenario]:
    return [Scenario.build(str(i), control, effect, scale) for i, effect in enumerate(effects, start=1)]
