"""Large-sample stand-ins for the posterior criteria.

PO: maximum-likelihood proportional-odds fit (statsmodels `OrderedModel`),
returning Phi(-delta_hat / se). NPO: parametric bootstrap of the per-arm
category proportions, returning the share of resamples in which treatment
has the higher mean utility.
"""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from scipy.special import xlogy
from scipy.stats import norm
from statsmodels.miscmodels.ordinal_model import OrderedModel

from src.exceptions import DimensionMismatch, FitFailure
from src.ordinal.distributions import UtilityScale
from .data import Model, TwoArmData

N_BOOT = 1000


@dataclass(frozen=True)
class ProportionalOddsMle:
    delta: float
    se: float
    log_likelihood: float
    n_categories: int


def fit_po_mle(data: TwoArmData) -> ProportionalOddsMle:
    """Fit the PO model by maximum likelihood after folding empty categories."""
    merged = data.merge_empty()
    if merged.n_categories < 2:
        raise FitFailure("all patients fall in a single category")
    levels = np.arange(merged.n_categories)
    control = np.repeat(levels, merged.control.counts)
    treatment = np.repeat(levels, merged.treatment.counts)
    endog = pd.Series(np.concatenate((control, treatment)), name="level")
    exog = pd.DataFrame({"treatment": np.r_[np.zeros(control.size), np.ones(treatment.size)]})

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            result = OrderedModel(endog, exog, distr="logit").fit(method="bfgs", disp=False, maxiter=500)
        except (np.linalg.LinAlgError, ValueError) as e:
            raise FitFailure(f"proportional-odds fit failed: {e}") from e

    delta = float(result.params["treatment"])
    se = float(result.bse["treatment"])
    if not result.mle_retvals.get("converged", False) or not np.isfinite(se) or se <= 0:
        raise FitFailure(f"proportional-odds fit did not converge (delta={delta:.3g}, se={se:.3g})")
    return ProportionalOddsMle(delta, se, float(result.llf), merged.n_categories)


def saturated_log_likelihood(data: TwoArmData) -> float:
    """Maximised two-arm multinomial log-likelihood; the NPO model attains it."""
    total = 0.0
    for arm in (data.control, data.treatment):
        total += float(xlogy(arm.counts, arm.counts / arm.total).sum())
    return total


def frequentist_prob_effective(
    data: TwoArmData,
    model: Model,
    scale: Optional[UtilityScale] = None,
    rng: Optional[np.random.Generator] = None,
    n_boot: int = N_BOOT,
) -> float:
    if min(data.totals) < data.n_categories:
        raise FitFailure(f"each arm needs at least {data.n_categories} patients, got {data.totals}")
    if model is Model.PO:
        mle = fit_po_mle(data)
        return float(norm.cdf(-mle.delta / mle.se))

    if scale is None:
        raise ValueError("the NPO criterion needs a utility scale")
    if len(scale) != data.n_categories:
        raise DimensionMismatch(f"utility scale has {len(scale)} levels, data has {data.n_categories}")
    rng = rng if rng is not None else np.random.default_rng()
    utilities = []
    for arm in (data.control, data.treatment):
        resampled = rng.multinomial(arm.total, arm.counts / arm.total, size=n_boot)
        utilities.append(resampled @ scale.u / arm.total)
    control_u, treatment_u = utilities
    return float(np.mean(treatment_u > control_u))
