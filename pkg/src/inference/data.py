from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from src.exceptions import DimensionMismatch


class Model(str, Enum):
    PO = "po"
    NPO = "npo"


class Arm(str, Enum):
    CONTROL = "control"
    TREATMENT = "treatment"


@dataclass(frozen=True)
class ArmData:
    """Category counts observed in one arm."""

    counts: np.ndarray
    arm: Arm

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64).copy()
        if counts.ndim != 1:
            raise ValueError(f"{self.arm.value} counts must be a vector, got shape {counts.shape}")
        if np.any(counts < 0):
            raise ValueError(f"{self.arm.value} counts must be non-negative: {counts.tolist()}")
        if counts.sum() < 1:
            raise ValueError(f"{self.arm.value} arm has no patients")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class TwoArmData:
    control: ArmData
    treatment: ArmData

    def __post_init__(self):
        if self.control.counts.size != self.treatment.counts.size:
            raise DimensionMismatch(
                f"control has {self.control.counts.size} levels, treatment has {self.treatment.counts.size}"
            )

    @classmethod
    def from_counts(cls, control_counts, treatment_counts) -> "TwoArmData":
        return cls(ArmData(control_counts, Arm.CONTROL), ArmData(treatment_counts, Arm.TREATMENT))

    @property
    def n_categories(self) -> int:
        return self.control.counts.size

    @property
    def totals(self) -> Tuple[int, int]:
        return self.control.total, self.treatment.total

    def pooled(self, other: "TwoArmData") -> "TwoArmData":
        """Stage-wise pooling: counts add arm by arm."""
        return TwoArmData.from_counts(
            self.control.counts + other.control.counts,
            self.treatment.counts + other.treatment.counts,
        )

    def merge_empty(self) -> "TwoArmData":
        """Fold categories empty in both arms into their neighbour.

        An empty level merges with the next one up; a trailing empty level
        merges with the one below it.
        """
        control = list(self.control.counts)
        treatment = list(self.treatment.counts)
        i = 0
        while i < len(control) and len(control) > 1:
            if control[i] + treatment[i] == 0:
                j = i + 1 if i + 1 < len(control) else i - 1
                control[j] += control[i]
                treatment[j] += treatment[i]
                del control[i], treatment[i]
                continue
            i += 1
        return TwoArmData(
            ArmData(np.array(control), Arm.CONTROL),
            ArmData(np.array(treatment), Arm.TREATMENT),
        )
