import numpy as np
import pytest
from scipy.integrate import dblquad

from src.inference.data import Model, TwoArmData
from src.inference.priors import McmcConfig, PriorSpec
from src.inference.sampler import fit
from src.rjmcmc.palette import g1, g2, g2_inverse, g2_matrix, jacobian_magnitude, palette_log_prior
from src.rjmcmc.selection import ModelChoice, approximate_model_choice, model_conditional, select_model

PROPORTIONAL = TwoArmData.from_counts([30, 10, 20, 10, 10, 20], [30, 10, 20, 10, 10, 20])
# treatment gains at both extremes: the boundary log-odds ratios change sign
CROSSING = TwoArmData.from_counts([20, 15, 15, 15, 15, 20], [45, 2, 3, 3, 2, 45])

QUICK = McmcConfig(n_burn=500, n_keep=1000)


@pytest.mark.parametrize("n_categories", range(3, 9))
def test_g2_round_trip(n_categories):
    rng = np.random.default_rng(n_categories)
    psi = rng.normal(size=n_categories - 1)
    delta, u = g2(psi)
    assert u.shape == (n_categories - 2,)
    np.testing.assert_allclose(g2_inverse(delta, u), psi, atol=1e-12)
    np.testing.assert_allclose(g2_matrix(n_categories) @ psi, np.concatenate(([delta], u)), atol=1e-12)


@pytest.mark.parametrize("n_categories", range(3, 9))
def test_jacobian_magnitude(n_categories):
    assert jacobian_magnitude(Model.PO, n_categories) == pytest.approx(1.0 / (n_categories - 1), abs=1e-8)
    assert jacobian_magnitude(Model.NPO, n_categories) == 1.0


def test_jacobian_needs_three_levels():
    with pytest.raises(ValueError):
        jacobian_magnitude(Model.PO, 2)


def test_g1_is_identity_copy():
    psi = np.array([0.1, -0.2, 0.3])
    out = g1(psi)
    np.testing.assert_array_equal(out, psi)
    out[0] = 5.0
    assert psi[0] == 0.1


def test_palette_log_prior_terms():
    priors = PriorSpec(n_categories=4)
    psi = np.array([0.3, -0.1, 0.4])
    delta, u = g2(psi)
    without = palette_log_prior(psi, Model.PO, priors, include_jacobian=False)
    with_jacobian = palette_log_prior(psi, Model.PO, priors)
    assert with_jacobian - without == pytest.approx(np.log(1.0 / 3.0))
    expected = priors.log_prior_delta_po(delta) + float(np.sum(-0.5 * (u**2 + np.log(2 * np.pi))))
    assert without == pytest.approx(expected)
    assert palette_log_prior(psi, Model.NPO, priors) == pytest.approx(priors.log_prior_delta_npo(psi))
    with pytest.raises(ValueError):
        palette_log_prior(psi, Model.PO, priors, pseudo_prior_var=0.0)


@pytest.mark.parametrize("model", [Model.PO, Model.NPO])
def test_palette_density_integrates_to_one(model):
    priors = PriorSpec(n_categories=3)
    total, _ = dblquad(
        lambda b, a: np.exp(palette_log_prior(np.array([a, b]), model, priors)),
        -30.0, 30.0, -30.0, 30.0,
        epsabs=1e-8,
    )
    assert total == pytest.approx(1.0, abs=1e-4)


def test_model_conditional_is_a_distribution():
    priors = PriorSpec()
    gamma = np.array([-0.8, -0.4, 0.2, 0.6, 1.2])
    probs = model_conditional(np.full(5, -0.2), 0.0, gamma, CROSSING, priors, np.log([0.5, 0.5]))
    assert probs.shape == (2,)
    assert probs.sum() == pytest.approx(1.0)


def test_model_choice_ties_go_to_npo():
    assert ModelChoice.from_probability(0.5).selected is Model.NPO
    assert ModelChoice.from_probability(0.49).selected is Model.PO


@pytest.fixture(scope="module")
def crossing_draws():
    rng = np.random.default_rng(17)
    return fit(CROSSING, Model.PO, cfg=QUICK, rng=rng), fit(CROSSING, Model.NPO, cfg=QUICK, rng=rng)


def test_select_model_prefers_npo_for_crossing_effects(crossing_draws):
    draws_po, draws_npo = crossing_draws
    choice = select_model(draws_po, draws_npo, CROSSING, PriorSpec(), rng=np.random.default_rng(1))
    assert choice.selected is Model.NPO
    assert sum(choice.visit_counts) == 2000
    assert choice.posterior_prob_npo == choice.visit_counts[1] / 2000


def test_select_model_prefers_po_for_identical_arms():
    rng = np.random.default_rng(23)
    draws_po = fit(PROPORTIONAL, Model.PO, cfg=QUICK, rng=rng)
    draws_npo = fit(PROPORTIONAL, Model.NPO, cfg=QUICK, rng=rng)
    choice = select_model(draws_po, draws_npo, PROPORTIONAL, PriorSpec(), rng=np.random.default_rng(1))
    assert choice.selected is Model.PO


def test_select_model_respects_degenerate_model_priors(crossing_draws):
    draws_po, draws_npo = crossing_draws
    only_po = select_model(draws_po, draws_npo, CROSSING, PriorSpec(), (1.0, 0.0), 300, np.random.default_rng(0))
    only_npo = select_model(draws_po, draws_npo, CROSSING, PriorSpec(), (0.0, 1.0), 300, np.random.default_rng(0))
    assert only_po.posterior_prob_npo == 0.0
    assert only_npo.posterior_prob_npo == 1.0


def test_select_model_is_deterministic_per_seed(crossing_draws):
    draws_po, draws_npo = crossing_draws
    a = select_model(draws_po, draws_npo, CROSSING, PriorSpec(), n_sweeps=500, rng=np.random.default_rng(4))
    b = select_model(draws_po, draws_npo, CROSSING, PriorSpec(), n_sweeps=500, rng=np.random.default_rng(4))
    assert a == b


def test_select_model_validates_inputs(crossing_draws):
    draws_po, draws_npo = crossing_draws
    with pytest.raises(ValueError):
        select_model(draws_npo, draws_po, CROSSING, PriorSpec())
    with pytest.raises(ValueError):
        select_model(draws_po, draws_npo, CROSSING, PriorSpec(), model_priors=(0.7, 0.7))
    with pytest.raises(ValueError):
        select_model(draws_po, draws_npo, CROSSING, PriorSpec(), n_sweeps=0)


def test_approximate_model_choice():
    crossing = approximate_model_choice(CROSSING)
    assert crossing.selected is Model.NPO
    assert crossing.visit_counts is None
    assert approximate_model_choice(PROPORTIONAL).selected is Model.PO
