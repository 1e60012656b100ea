import numpy as np
from scipy.special import expit, xlogy

from .data import TwoArmData


def category_probabilities(mu, gamma, shift=0.0) -> np.ndarray:
    """Logistic-difference category probabilities.

    P(Y <= c) = expit(gamma_c - mu - shift_c); `shift` is a scalar (PO) or a
    per-boundary vector (NPO). Broadcasts over leading axes, so a stack of
    posterior draws gives one probability row per draw.
    """
    mu = np.asarray(mu, dtype=float)[..., None]
    gamma = np.asarray(gamma, dtype=float)
    shift = np.asarray(shift, dtype=float)
    if shift.ndim == gamma.ndim - 1 or shift.ndim == 0:
        shift = shift[..., None]
    cdf = expit(gamma - mu - shift)
    lead = cdf.shape[:-1]
    padded = np.concatenate((np.zeros(lead + (1,)), cdf, np.ones(lead + (1,))), axis=-1)
    return np.diff(padded, axis=-1)


def _log_likelihood(counts: np.ndarray, probs: np.ndarray) -> float:
    if np.any(probs <= 0):
        return -np.inf
    return float(xlogy(counts, probs).sum())


def log_likelihood_po(data: TwoArmData, mu: float, gamma: np.ndarray, delta: float) -> float:
    """Proportional-odds log-likelihood from the arms' sufficient counts."""
    control = category_probabilities(mu, gamma, 0.0)
    treatment = category_probabilities(mu, gamma, delta)
    return _log_likelihood(data.control.counts, control) + _log_likelihood(data.treatment.counts, treatment)


def log_likelihood_npo(data: TwoArmData, mu: float, gamma: np.ndarray, delta: np.ndarray) -> float:
    """Non-proportional odds: treatment cutpoints shift by delta_c at each boundary."""
    control = category_probabilities(mu, gamma, 0.0)
    treatment = category_probabilities(mu, gamma, np.asarray(delta, dtype=float))
    return _log_likelihood(data.control.counts, control) + _log_likelihood(data.treatment.counts, treatment)
