"""PO/NPO model choice from interim data.

`select_model` post-processes the two models' posterior draws with the
palette Gibbs scheme: given the current model, draw psi from that model's
posterior (padding PO with pseudo-prior u); given psi, draw the model from
its full conditional. The cutpoints and mu that go into each likelihood
come from the draw psi was built from.

`approximate_model_choice` replaces the sampler with the Schwarz (BIC)
approximation for the frequentist fast path.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from src.exceptions import InsufficientDraws
from src.inference.data import Model, TwoArmData
from src.inference.frequentist import fit_po_mle, saturated_log_likelihood
from src.inference.likelihood import log_likelihood_npo, log_likelihood_po
from src.inference.priors import PriorSpec
from src.inference.sampler import PosteriorDraws
from .palette import DEFAULT_PSEUDO_PRIOR_VAR, g1, g2, g2_inverse, palette_log_prior

logger = logging.getLogger(__name__)

DEFAULT_SWEEPS = 2000
DEFAULT_MODEL_PRIORS = (0.5, 0.5)
MODELS = (Model.PO, Model.NPO)


@dataclass(frozen=True)
class ModelChoice:
    """Outcome of PO/NPO selection.

    `visit_counts` is (PO visits, NPO visits) from the sampler, or None when
    the probability comes from the large-sample approximation.
    """

    selected: Model
    posterior_prob_npo: float
    visit_counts: Optional[Tuple[int, int]]

    @classmethod
    def from_probability(cls, prob_npo: float, visit_counts=None) -> "ModelChoice":
        # ties go to the more flexible model
        selected = Model.NPO if prob_npo >= 0.5 else Model.PO
        return cls(selected, float(prob_npo), visit_counts)


def _validate_model_priors(model_priors: Tuple[float, float]) -> np.ndarray:
    priors = np.asarray(model_priors, dtype=float)
    if priors.shape != (2,) or np.any(priors < 0) or not np.isclose(priors.sum(), 1.0):
        raise ValueError(f"model_priors must be two non-negative weights summing to 1, got {model_priors}")
    return priors


def model_conditional(
    psi: np.ndarray,
    mu: float,
    gamma: np.ndarray,
    data: TwoArmData,
    priors: PriorSpec,
    log_model_priors: np.ndarray,
    pseudo_prior_var: float = DEFAULT_PSEUDO_PRIOR_VAR,
) -> np.ndarray:
    """Full conditional (Pr(PO | psi, D), Pr(NPO | psi, D))."""
    delta_po, _ = g2(psi)
    log_weights = np.array(
        [
            log_likelihood_po(data, mu, gamma, delta_po)
            + palette_log_prior(psi, Model.PO, priors, pseudo_prior_var)
            + log_model_priors[0],
            log_likelihood_npo(data, mu, gamma, g1(psi))
            + palette_log_prior(psi, Model.NPO, priors, pseudo_prior_var)
            + log_model_priors[1],
        ]
    )
    if not np.any(np.isfinite(log_weights)):
        return np.full(2, np.nan)
    probs = np.exp(log_weights - logsumexp(log_weights))
    assert np.all((probs >= 0) & (probs <= 1)) and np.isclose(probs.sum(), 1.0)
    return probs


def select_model(
    draws_po: PosteriorDraws,
    draws_npo: PosteriorDraws,
    data: TwoArmData,
    priors: PriorSpec,
    model_priors: Tuple[float, float] = DEFAULT_MODEL_PRIORS,
    n_sweeps: int = DEFAULT_SWEEPS,
    rng: Optional[np.random.Generator] = None,
    pseudo_prior_var: float = DEFAULT_PSEUDO_PRIOR_VAR,
) -> ModelChoice:
    """Choose between PO and NPO; `model_priors` is ordered (PO, NPO)."""
    if draws_po.model is not Model.PO or draws_npo.model is not Model.NPO:
        raise ValueError("select_model needs one PO and one NPO set of draws")
    if draws_po.n_keep < 1 or draws_npo.n_keep < 1:
        raise InsufficientDraws("both chains need at least one retained draw")
    if n_sweeps < 1:
        raise ValueError(f"n_sweeps must be at least 1, got {n_sweeps}")
    rng = rng if rng is not None else np.random.default_rng()
    weights = _validate_model_priors(model_priors)
    with np.errstate(divide="ignore"):
        log_model_priors = np.log(weights)

    n_supplemental = data.n_categories - 2
    current = MODELS[int(rng.choice(2, p=weights))]
    visits = np.zeros(2, dtype=np.int64)
    for sweep in range(n_sweeps):
        if current is Model.NPO:
            row = sweep % draws_npo.n_keep
            psi = draws_npo.delta[row]
            mu, gamma = draws_npo.mu[row], draws_npo.gamma[row]
        else:
            row = sweep % draws_po.n_keep
            u = rng.normal(0.0, np.sqrt(pseudo_prior_var), n_supplemental)
            psi = g2_inverse(draws_po.delta[row], u)
            mu, gamma = draws_po.mu[row], draws_po.gamma[row]

        probs = model_conditional(psi, mu, gamma, data, priors, log_model_priors, pseudo_prior_var)
        # an all-inadmissible psi leaves the model unchanged
        if np.all(np.isfinite(probs)):
            current = MODELS[int(rng.uniform() < probs[1])]
        visits[MODELS.index(current)] += 1

    prob_npo = visits[1] / n_sweeps
    logger.debug("model selection visits PO=%d NPO=%d", visits[0], visits[1])
    return ModelChoice.from_probability(prob_npo, (int(visits[0]), int(visits[1])))


def approximate_model_choice(
    data: TwoArmData, model_priors: Tuple[float, float] = DEFAULT_MODEL_PRIORS
) -> ModelChoice:
    """Schwarz approximation to Pr(NPO | D) from the two maximum-likelihood fits."""
    weights = _validate_model_priors(model_priors)
    mle = fit_po_mle(data)
    k = mle.n_categories - 1
    n = sum(data.totals)
    bic = np.array(
        [
            -2.0 * mle.log_likelihood + (k + 1) * np.log(n),
            -2.0 * saturated_log_likelihood(data) + 2 * k * np.log(n),
        ]
    )
    with np.errstate(divide="ignore"):
        log_weights = -0.5 * bic + np.log(weights)
    prob_npo = float(np.exp(log_weights[1] - logsumexp(log_weights)))
    return ModelChoice.from_probability(prob_npo)
