from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

CUTPOINT_CONVENTIONS = ("precision", "variance")
LOG_2PI = np.log(2 * np.pi)


def normal_logpdf(x, mean, var) -> np.ndarray:
    """Elementwise Normal(mean, var) log density; the sampler calls this per proposal."""
    x = np.asarray(x, dtype=float)
    return -0.5 * ((x - mean) ** 2 / var + np.log(var) + LOG_2PI)


@dataclass(frozen=True)
class PriorSpec:
    """Normal priors on the cumulative-logit parameters.

    Cutpoints get Normal(0, s) where `cutpoint_param` is read as a precision
    (variance 1/s) by default or as a variance when `cutpoint_convention` is
    "variance". Under PO the single shift uses the mean of `delta_means` and
    `delta_vars`.
    """

    n_categories: int = 6
    mu_mean: float = 0.0
    mu_var: float = 1.0
    cutpoint_param: float = 0.1
    cutpoint_convention: str = "precision"
    delta_means: Optional[np.ndarray] = None
    delta_vars: Optional[np.ndarray] = None

    def __post_init__(self):
        k = self.n_categories - 1
        if self.n_categories < 3:
            raise ValueError(f"n_categories must be at least 3, got {self.n_categories}")
        if self.cutpoint_convention not in CUTPOINT_CONVENTIONS:
            raise ValueError(f"cutpoint_convention must be one of {CUTPOINT_CONVENTIONS}, got {self.cutpoint_convention!r}")
        means = np.zeros(k) if self.delta_means is None else np.asarray(self.delta_means, dtype=float)
        variances = np.full(k, 10.0) if self.delta_vars is None else np.asarray(self.delta_vars, dtype=float)
        if means.shape != (k,) or variances.shape != (k,):
            raise ValueError(f"delta_means and delta_vars must have {k} entries")
        if self.mu_var <= 0 or self.cutpoint_param <= 0 or np.any(variances <= 0):
            raise ValueError("prior variances must be positive")
        object.__setattr__(self, "delta_means", means)
        object.__setattr__(self, "delta_vars", variances)

    @property
    def cutpoint_var(self) -> float:
        if self.cutpoint_convention == "precision":
            return 1.0 / self.cutpoint_param
        return self.cutpoint_param

    @property
    def po_delta_mean(self) -> float:
        return float(np.mean(self.delta_means))

    @property
    def po_delta_var(self) -> float:
        return float(np.mean(self.delta_vars))

    def log_prior_mu(self, mu: float) -> float:
        return float(normal_logpdf(mu, self.mu_mean, self.mu_var))

    def log_prior_cutpoints(self, gamma: np.ndarray) -> float:
        if np.any(np.diff(gamma) <= 0):
            return -np.inf
        return float(normal_logpdf(gamma, 0.0, self.cutpoint_var).sum())

    def log_prior_delta_po(self, delta: float) -> float:
        return float(normal_logpdf(delta, self.po_delta_mean, self.po_delta_var))

    def log_prior_delta_npo(self, delta: np.ndarray) -> float:
        return float(normal_logpdf(delta, self.delta_means, self.delta_vars).sum())


@dataclass(frozen=True)
class McmcConfig:
    n_burn: int = 1000
    n_keep: int = 2000
    thin: int = 1
    step_mu: float = 0.3
    step_gamma: float = 0.15
    step_delta: float = 0.2
    adapt: bool = True
    adapt_interval: int = 50
    fix_mu: bool = False
    target_acceptance: Tuple[float, float] = (0.25, 0.45)

    def __post_init__(self):
        if self.n_burn < 1 or self.n_keep < 1 or self.thin < 1:
            raise ValueError("n_burn, n_keep and thin must be at least 1")
        if min(self.step_mu, self.step_gamma, self.step_delta) <= 0:
            raise ValueError("step sizes must be positive")
