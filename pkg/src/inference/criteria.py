from typing import Optional

import numpy as np

from src.exceptions import DimensionMismatch, WrongModel
from src.ordinal.distributions import CategoryDistribution, UtilityScale
from .data import Model
from .likelihood import category_probabilities
from .sampler import PosteriorDraws


def prob_effective_po(draws: PosteriorDraws) -> float:
    """Posterior probability that the PO shift favours treatment, Pr(delta < 0 | D)."""
    if draws.model is not Model.PO:
        raise WrongModel(f"prob_effective_po needs PO draws, got {draws.model.value}")
    return float(np.mean(draws.delta < 0))


def prob_effective_npo(
    draws: PosteriorDraws,
    scale: UtilityScale,
    control_reference: Optional[CategoryDistribution] = None,
) -> float:
    """Posterior probability that treatment has the higher mean utility.

    Each draw gives both arms' category probabilities; the control arm comes
    from the same draw unless a fixed `control_reference` is supplied.
    """
    if draws.model is not Model.NPO:
        raise WrongModel(f"prob_effective_npo needs NPO draws, got {draws.model.value}")
    if len(scale) != draws.n_categories:
        raise DimensionMismatch(f"utility scale has {len(scale)} levels, draws have {draws.n_categories}")
    treatment = category_probabilities(draws.mu, draws.gamma, draws.delta)
    if control_reference is None:
        control_utility = category_probabilities(draws.mu, draws.gamma, 0.0) @ scale.u
    else:
        control_utility = float(control_reference.probs @ scale.u)
    return float(np.mean(treatment @ scale.u > control_utility))
