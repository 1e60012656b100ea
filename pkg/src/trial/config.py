from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Tuple

from src.inference.data import Model
from src.inference.priors import McmcConfig, PriorSpec
from src.ordinal.distributions import UtilityScale
from src.ordinal.scenarios import DEFAULT_UTILITY
from src.rjmcmc.palette import DEFAULT_PSEUDO_PRIOR_VAR
from src.rjmcmc.selection import DEFAULT_MODEL_PRIORS, DEFAULT_SWEEPS


class Design(str, Enum):
    PO = "po"
    NPO = "npo"
    SWITCH = "switch"


class Method(str, Enum):
    BAYESIAN = "bayesian"
    FREQUENTIST = "frequentist"


@dataclass(frozen=True)
class StageSizes:
    """Patients per arm enrolled at each of the two stages."""

    stage1: int
    stage2: int

    def __post_init__(self):
        if self.stage1 < 1 or self.stage2 < 1:
            raise ValueError(f"stage sizes must be at least 1, got ({self.stage1}, {self.stage2})")

    @property
    def total(self) -> int:
        return self.stage1 + self.stage2


@dataclass(frozen=True)
class DesignConfig:
    """Everything a simulated trial needs besides the true distributions.

    PO and NPO designs read `po_sizes` / `npo_sizes`. The switch design
    enrols the larger stage-1 size and then the chosen model's stage-2 size.
    A superiority cutoff above 1 can never be crossed.
    """

    design: Design
    n_categories: int = 6
    po_sizes: StageSizes = StageSizes(100, 100)
    npo_sizes: StageSizes = StageSizes(100, 100)
    c_f: float = 0.2
    c_s: float = 0.95
    priors: Optional[PriorSpec] = None
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    utility: UtilityScale = DEFAULT_UTILITY
    method: Method = Method.BAYESIAN
    seed: int = 0
    model_priors: Tuple[float, float] = DEFAULT_MODEL_PRIORS
    n_sweeps: int = DEFAULT_SWEEPS
    pseudo_prior_var: float = DEFAULT_PSEUDO_PRIOR_VAR
    n_boot: int = 1000
    max_attempts: int = 3

    def __post_init__(self):
        if not 0.0 <= self.c_f < self.c_s:
            raise ValueError(f"cutoffs need 0 <= c_f < c_s, got c_f={self.c_f}, c_s={self.c_s}")
        if len(self.utility) != self.n_categories:
            raise ValueError(f"utility has {len(self.utility)} levels, design has {self.n_categories}")
        if self.max_attempts < 1:
            raise ValueError(f"max_attempts must be at least 1, got {self.max_attempts}")
        if self.priors is None:
            object.__setattr__(self, "priors", PriorSpec(n_categories=self.n_categories))
        elif self.priors.n_categories != self.n_categories:
            raise ValueError(f"priors are for {self.priors.n_categories} levels, design has {self.n_categories}")

    @classmethod
    def fixed(cls, design: Design, n_stage: int, **kwargs) -> "DesignConfig":
        """Same per-arm size at both stages for every model."""
        sizes = StageSizes(n_stage, n_stage)
        return cls(design=design, po_sizes=sizes, npo_sizes=sizes, **kwargs)

    @property
    def stage1_size(self) -> int:
        if self.design is Design.PO:
            return self.po_sizes.stage1
        if self.design is Design.NPO:
            return self.npo_sizes.stage1
        return max(self.po_sizes.stage1, self.npo_sizes.stage1)

    def stage2_size(self, model: Model) -> int:
        return (self.po_sizes if model is Model.PO else self.npo_sizes).stage2

    @property
    def max_size(self) -> int:
        if self.design is Design.SWITCH:
            return self.stage1_size + max(self.po_sizes.stage2, self.npo_sizes.stage2)
        return self.stage1_size + self.stage2_size(Model(self.design.value))

    def with_cutoffs(self, c_f: float, c_s: float) -> "DesignConfig":
        return replace(self, c_f=c_f, c_s=c_s)
