"""Random-walk Metropolis-within-Gibbs sampler for the cumulative-logit models.

Parameter vector layout, shared by every draw matrix in the package:

    [mu, gamma_1 .. gamma_{C-1}, delta]                  (PO)
    [mu, gamma_1 .. gamma_{C-1}, delta_1 .. delta_{C-1}]  (NPO)

Blocks (mu), (gamma), (delta) are updated in turn with isotropic Gaussian
proposals. Step sizes adapt during burn-in towards the acceptance band in
`McmcConfig.target_acceptance` and are frozen afterwards.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.special import logit

from src.exceptions import ChainDegenerate, DimensionMismatch
from .data import Model, TwoArmData
from .likelihood import log_likelihood_npo, log_likelihood_po
from .priors import McmcConfig, PriorSpec

logger = logging.getLogger(__name__)

MIN_ACCEPTANCE = 0.01


@dataclass(frozen=True)
class PosteriorDraws:
    model: Model
    draws: np.ndarray
    acceptance_rate: float
    n_categories: int

    def __post_init__(self):
        draws = np.array(self.draws, dtype=float)
        k = self.n_categories - 1
        n_params = 1 + k + (1 if self.model is Model.PO else k)
        if draws.ndim != 2 or draws.shape[0] < 1 or draws.shape[1] != n_params:
            raise ValueError(f"{self.model.value} draws need shape (n_keep >= 1, {n_params}), got {draws.shape}")
        gamma = draws[:, 1 : 1 + k]
        if np.any(np.diff(gamma, axis=1) <= 0):
            raise ValueError("every retained draw must have strictly increasing cutpoints")
        draws.setflags(write=False)
        object.__setattr__(self, "draws", draws)

    @property
    def n_keep(self) -> int:
        return self.draws.shape[0]

    @property
    def mu(self) -> np.ndarray:
        return self.draws[:, 0]

    @property
    def gamma(self) -> np.ndarray:
        return self.draws[:, 1 : self.n_categories]

    @property
    def delta(self) -> np.ndarray:
        """(n_keep,) under PO, (n_keep, C-1) under NPO."""
        if self.model is Model.PO:
            return self.draws[:, self.n_categories]
        return self.draws[:, self.n_categories :]


def _log_posterior(data: TwoArmData, model: Model, priors: PriorSpec) -> Callable[[np.ndarray], float]:
    k = data.n_categories - 1

    def log_post(state: np.ndarray) -> float:
        mu, gamma, delta = state[0], state[1 : 1 + k], state[1 + k :]
        lp = priors.log_prior_cutpoints(gamma)
        if not np.isfinite(lp):
            return -np.inf
        lp += priors.log_prior_mu(mu)
        if model is Model.PO:
            lp += priors.log_prior_delta_po(delta[0])
            return lp + log_likelihood_po(data, mu, gamma, delta[0])
        lp += priors.log_prior_delta_npo(delta)
        return lp + log_likelihood_npo(data, mu, gamma, delta)

    return log_post


def initial_state(data: TwoArmData, model: Model) -> np.ndarray:
    """Start at the pooled empirical cutpoints with no treatment shift."""
    k = data.n_categories - 1
    pooled = data.control.counts + data.treatment.counts + 0.5
    gamma = logit(np.cumsum(pooled)[:-1] / pooled.sum())
    n_delta = 1 if model is Model.PO else k
    return np.concatenate(([0.0], gamma, np.zeros(n_delta)))


def _blocks(data: TwoArmData, model: Model, cfg: McmcConfig) -> List[Tuple[str, slice, float]]:
    k = data.n_categories - 1
    n_delta = 1 if model is Model.PO else k
    blocks = [
        ("mu", slice(0, 1), cfg.step_mu),
        ("gamma", slice(1, 1 + k), cfg.step_gamma),
        ("delta", slice(1 + k, 1 + k + n_delta), cfg.step_delta),
    ]
    return blocks[1:] if cfg.fix_mu else blocks


def fit(
    data: TwoArmData,
    model: Model,
    priors: Optional[PriorSpec] = None,
    cfg: Optional[McmcConfig] = None,
    rng: Optional[np.random.Generator] = None,
) -> PosteriorDraws:
    """Sample the posterior of the PO or NPO model given both arms' counts."""
    priors = priors or PriorSpec(n_categories=data.n_categories)
    if priors.n_categories != data.n_categories:
        raise DimensionMismatch(f"priors are for {priors.n_categories} levels, data has {data.n_categories}")
    cfg = cfg or McmcConfig()
    rng = rng if rng is not None else np.random.default_rng()

    log_post = _log_posterior(data, model, priors)
    blocks = _blocks(data, model, cfg)
    steps = np.array([step for _, _, step in blocks])
    low, high = cfg.target_acceptance

    state = initial_state(data, model)
    current = log_post(state)

    def sweep(accepted: np.ndarray):
        nonlocal state, current
        for b, (_, sl, _) in enumerate(blocks):
            proposal = state.copy()
            proposal[sl] += steps[b] * rng.standard_normal(sl.stop - sl.start)
            candidate = log_post(proposal)
            if np.log(rng.uniform()) < candidate - current:
                state, current = proposal, candidate
                accepted[b] += 1

    window = np.zeros(len(blocks))
    for it in range(1, cfg.n_burn + 1):
        sweep(window)
        if cfg.adapt and it % cfg.adapt_interval == 0:
            rates = window / cfg.adapt_interval
            steps = np.where(rates < low, steps * 0.7, np.where(rates > high, steps * 1.3, steps))
            window[:] = 0
    logger.debug("%s sampler steps after burn-in: %s", model.value, dict(zip((n for n, _, _ in blocks), steps.round(4))))

    n_params = state.size
    kept = np.empty((cfg.n_keep, n_params))
    accepted = np.zeros(len(blocks))
    for i in range(cfg.n_keep):
        for _ in range(cfg.thin):
            sweep(accepted)
        kept[i] = state

    rates = accepted / (cfg.n_keep * cfg.thin)
    if rates.min() < MIN_ACCEPTANCE:
        raise ChainDegenerate(
            f"{model.value} sampler acceptance {dict(zip((n for n, _, _ in blocks), rates.round(4)))} below {MIN_ACCEPTANCE}"
        )
    return PosteriorDraws(model, kept, float(rates.mean()), data.n_categories)
