"""Palette maps between a shared effect vector psi and each model's parameters.

The palette has one entry per category boundary (C - 1). The NPO model reads
it directly; the PO model reads its mean as the common shift and keeps the
remaining C - 2 degrees of freedom as supplemental variables u:

    g2(psi)            = (mean(psi), mean(psi) - psi_2, ..., mean(psi) - psi_{C-1})
    g2_inverse(d, u)   = (d + sum(u), d - u_1, ..., d - u_{C-2})
"""

from typing import Tuple

import numpy as np
import numpy.typing as npt

from src.inference.data import Model
from src.inference.priors import PriorSpec, normal_logpdf

Palette = npt.NDArray[np.float64]

DEFAULT_PSEUDO_PRIOR_VAR = 1.0


def g1(psi: Palette) -> np.ndarray:
    return np.asarray(psi, dtype=float).copy()


def g2(psi: Palette) -> Tuple[float, np.ndarray]:
    psi = np.asarray(psi, dtype=float)
    delta = float(psi.mean())
    return delta, delta - psi[1:]


def g2_inverse(delta: float, u: np.ndarray) -> Palette:
    u = np.asarray(u, dtype=float)
    return np.concatenate(([delta + u.sum()], delta - u))


def g2_matrix(n_categories: int) -> np.ndarray:
    """The linear map g2 as a (C-1) x (C-1) matrix."""
    k = n_categories - 1
    mat = np.full((k, k), 1.0 / k)
    mat[1:, 1:] -= np.eye(k - 1)
    return mat


def jacobian_magnitude(model: Model, n_categories: int) -> float:
    """|det dg_k/dpsi|: 1 for the identity map, 1/(C-1) for g2."""
    if n_categories < 3:
        raise ValueError(f"n_categories must be at least 3, got {n_categories}")
    if model is Model.NPO:
        return 1.0
    return float(abs(np.linalg.det(g2_matrix(n_categories))))


def palette_log_prior(
    psi: Palette,
    model: Model,
    priors: PriorSpec,
    pseudo_prior_var: float = DEFAULT_PSEUDO_PRIOR_VAR,
    include_jacobian: bool = True,
) -> float:
    """Log density of psi under `model`: f_k(g_k(psi)) |dg_k/dpsi|."""
    if pseudo_prior_var <= 0:
        raise ValueError(f"pseudo_prior_var must be positive, got {pseudo_prior_var}")
    psi = np.asarray(psi, dtype=float)
    if model is Model.NPO:
        return priors.log_prior_delta_npo(g1(psi))
    delta, u = g2(psi)
    value = priors.log_prior_delta_po(delta) + float(normal_logpdf(u, 0.0, pseudo_prior_var).sum())
    if include_jacobian:
        value += np.log(jacobian_magnitude(Model.PO, psi.size + 1))
    return value
