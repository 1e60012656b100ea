import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np

from src.exceptions import ChainDegenerate, FitFailure, TrialInvalid
from src.inference.criteria import prob_effective_npo, prob_effective_po
from src.inference.data import Model, TwoArmData
from src.inference.frequentist import frequentist_prob_effective
from src.inference.sampler import PosteriorDraws, fit
from src.ordinal.distributions import CategoryDistribution, EffectSpec, apply_odds_ratios, sample_counts
from src.ordinal.scenarios import Scenario
from src.rjmcmc.selection import ModelChoice, approximate_model_choice, select_model
from .config import Design, DesignConfig, Method

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[str, int, int], None]


class Decision(str, Enum):
    STOPPED_FUTILE = "stopped_futile"
    SUPERIOR = "superior"
    NOT_EFFECTIVE = "not_effective"


@dataclass(frozen=True)
class TrialPath:
    """Statistics of one simulated trial, before any cutoff is applied.

    `final_stat` is None when the trial was stopped at the interim look.
    """

    interim_stat: float
    final_stat: Optional[float]
    model: Model
    stage1_size: int
    stage2_size: int
    chosen_model: Optional[Model] = None
    posterior_prob_npo: Optional[float] = None
    attempts: int = 1


@dataclass(frozen=True)
class TrialOutcome:
    decision: Decision
    n_enrolled_per_arm: int
    interim_stat: float
    final_stat: Optional[float]
    chosen_model: Optional[Model]
    attempts: int = 1


def trial_rng(seed: int, index: int, attempt: int = 0, stream: int = 0) -> np.random.Generator:
    """Counter-derived stream: identical for a given (seed, stream, index, attempt)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, index, attempt)))


def stops_futile(interim, c_f: float):
    """Interim statistics that end the trial; a futility cutoff of 1 or more stops every trial."""
    return np.logical_or(np.asarray(interim) < c_f, c_f >= 1.0)


def criterion(draws: PosteriorDraws, cfg: DesignConfig) -> float:
    if draws.model is Model.PO:
        return prob_effective_po(draws)
    return prob_effective_npo(draws, cfg.utility)


def statistic(data: TwoArmData, model: Model, cfg: DesignConfig, rng: np.random.Generator) -> float:
    """pi under PO, pi_U under NPO, by the configured method."""
    if cfg.method is Method.FREQUENTIST:
        return frequentist_prob_effective(data, model, cfg.utility, rng, cfg.n_boot)
    return criterion(fit(data, model, cfg.priors, cfg.mcmc, rng), cfg)


def choose_model(data: TwoArmData, cfg: DesignConfig, rng: np.random.Generator) -> Tuple[ModelChoice, float]:
    """Select PO or NPO on interim data and return the chosen model's statistic."""
    if cfg.method is Method.FREQUENTIST:
        choice = approximate_model_choice(data, cfg.model_priors)
        return choice, statistic(data, choice.selected, cfg, rng)
    draws_po = fit(data, Model.PO, cfg.priors, cfg.mcmc, rng)
    draws_npo = fit(data, Model.NPO, cfg.priors, cfg.mcmc, rng)
    choice = select_model(
        draws_po, draws_npo, data, cfg.priors, cfg.model_priors, cfg.n_sweeps, rng, cfg.pseudo_prior_var
    )
    chosen = draws_po if choice.selected is Model.PO else draws_npo
    return choice, criterion(chosen, cfg)


def _enrol(control: CategoryDistribution, treatment: CategoryDistribution, n: int, rng) -> TwoArmData:
    return TwoArmData.from_counts(sample_counts(control, n, rng), sample_counts(treatment, n, rng))


def simulate_path(
    cfg: DesignConfig,
    truth_control: CategoryDistribution,
    truth_effect: EffectSpec,
    rng: np.random.Generator,
    stop_below: Optional[float] = None,
) -> TrialPath:
    """Run both stages; stop after the interim look when its statistic is below `stop_below`."""
    truth_treatment = apply_odds_ratios(truth_control, truth_effect)
    n1 = cfg.stage1_size
    try:
        stage1 = _enrol(truth_control, truth_treatment, n1, rng)
        choice = None
        if cfg.design is Design.SWITCH:
            choice, interim = choose_model(stage1, cfg, rng)
            model = choice.selected
            logger.debug("switch design chose %s (Pr(NPO)=%.3f)", model.value, choice.posterior_prob_npo)
        else:
            model = Model(cfg.design.value)
            interim = statistic(stage1, model, cfg, rng)

        n2 = cfg.stage2_size(model)
        path = TrialPath(
            interim_stat=interim,
            final_stat=None,
            model=model,
            stage1_size=n1,
            stage2_size=n2,
            chosen_model=choice.selected if choice else None,
            posterior_prob_npo=choice.posterior_prob_npo if choice else None,
        )
        if stop_below is not None and stops_futile(interim, stop_below):
            return path
        pooled = stage1.pooled(_enrol(truth_control, truth_treatment, n2, rng))
        return replace(path, final_stat=statistic(pooled, model, cfg, rng))
    except (ChainDegenerate, FitFailure) as e:
        raise TrialInvalid(str(e)) from e


def decide(path: TrialPath, c_f: float, c_s: float) -> TrialOutcome:
    """Apply the futility and superiority cutoffs to a trial's statistics."""
    if stops_futile(path.interim_stat, c_f):
        return TrialOutcome(
            Decision.STOPPED_FUTILE, path.stage1_size, path.interim_stat, None, path.chosen_model, path.attempts
        )
    if path.final_stat is None:
        raise ValueError("trial continued past the interim look but has no final statistic")
    decision = Decision.SUPERIOR if path.final_stat > c_s else Decision.NOT_EFFECTIVE
    return TrialOutcome(
        decision,
        path.stage1_size + path.stage2_size,
        path.interim_stat,
        path.final_stat,
        path.chosen_model,
        path.attempts,
    )


def simulate_trial(
    cfg: DesignConfig,
    truth_control: CategoryDistribution,
    truth_effect: EffectSpec,
    rng: np.random.Generator,
) -> TrialOutcome:
    return decide(simulate_path(cfg, truth_control, truth_effect, rng, stop_below=cfg.c_f), cfg.c_f, cfg.c_s)


def _run_indexed(args) -> Tuple[Optional[TrialPath], int]:
    cfg, control, effect, index, stop_below, stream = args
    for attempt in range(cfg.max_attempts):
        try:
            path = simulate_path(cfg, control, effect, trial_rng(cfg.seed, index, attempt, stream), stop_below)
            return replace(path, attempts=attempt + 1), attempt + 1
        except TrialInvalid as e:
            logger.warning("trial %d attempt %d invalid: %s", index, attempt + 1, e)
    return None, cfg.max_attempts


def simulate_paths(
    cfg: DesignConfig,
    control: CategoryDistribution,
    effect: EffectSpec,
    n_trials: int,
    threads: int = 1,
    stream: int = 0,
    stop_early: bool = True,
    progress_callback: Optional[ProgressCallback] = None,
    label: str = "Simulating trials",
) -> List[Tuple[Optional[TrialPath], int]]:
    """Simulate `n_trials` independent trials, ordered by trial index.

    With `stop_early=False` every trial is analysed at both looks, so the
    same paths can be re-decided under any cutoff pair.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be at least 1, got {n_trials}")
    stop_below = cfg.c_f if stop_early else None
    jobs = [(cfg, control, effect, i, stop_below, stream) for i in range(n_trials)]
    results = []
    if threads <= 1:
        for i, job in enumerate(jobs):
            results.append(_run_indexed(job))
            if progress_callback:
                progress_callback(label, i + 1, n_trials)
        return results
    with ProcessPoolExecutor(max_workers=threads) as pool:
        chunksize = max(1, n_trials // (threads * 8))
        for i, result in enumerate(pool.map(_run_indexed, jobs, chunksize=chunksize)):
            results.append(result)
            if progress_callback:
                progress_callback(label, i + 1, n_trials)
    return results


@dataclass(frozen=True)
class OperatingCharacteristics:
    pet: float
    prn: float
    avg_n_per_arm: float
    avg_n_total: float
    n_trials: int
    n_invalid: int
    n_reruns: int
    npo_selection_rate: Optional[float]
    outcomes: List[TrialOutcome]

    @classmethod
    def from_outcomes(cls, outcomes: List[TrialOutcome], n_invalid: int = 0, n_reruns: int = 0):
        if not outcomes:
            raise TrialInvalid("no valid trials to aggregate")
        decisions = np.array([o.decision.value for o in outcomes])
        enrolled = np.array([o.n_enrolled_per_arm for o in outcomes], dtype=float)
        chosen = [o.chosen_model for o in outcomes if o.chosen_model is not None]
        npo_rate = float(np.mean([m is Model.NPO for m in chosen])) if chosen else None
        return cls(
            pet=100.0 * float(np.mean(decisions == Decision.STOPPED_FUTILE.value)),
            prn=100.0 * float(np.mean(decisions == Decision.SUPERIOR.value)),
            avg_n_per_arm=float(enrolled.mean()),
            avg_n_total=2.0 * float(enrolled.mean()),
            n_trials=len(outcomes),
            n_invalid=n_invalid,
            n_reruns=n_reruns,
            npo_selection_rate=npo_rate,
            outcomes=outcomes,
        )


def outcomes_from_paths(
    results: List[Tuple[Optional[TrialPath], int]], c_f: float, c_s: float
) -> Tuple[List[TrialOutcome], int, int]:
    """Decisions for the valid paths plus (invalid count, rerun count)."""
    outcomes = [decide(path, c_f, c_s) for path, _ in results if path is not None]
    n_invalid = sum(path is None for path, _ in results)
    n_reruns = sum(attempts - 1 for _, attempts in results)
    return outcomes, n_invalid, n_reruns


def operating_characteristics(
    cfg: DesignConfig,
    scenario: Scenario,
    n_trials: int,
    threads: int = 1,
    seed: Optional[int] = None,
    progress_callback: Optional[ProgressCallback] = None,
) -> OperatingCharacteristics:
    """PET, PRN and average sample size over `n_trials` simulated trials.

    Trial i draws from the stream derived from (seed, i), so the result does
    not depend on `threads`. `seed` overrides `cfg.seed`.
    """
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    results = simulate_paths(
        cfg,
        scenario.control,
        scenario.effect,
        n_trials,
        threads=threads,
        progress_callback=progress_callback,
        label=f"Scenario {scenario.id}",
    )
    outcomes, n_invalid, n_reruns = outcomes_from_paths(results, cfg.c_f, cfg.c_s)
    if n_invalid:
        logger.warning(
            "scenario %s: %d of %d trials invalid after %d attempts",
            scenario.id, n_invalid, n_trials, cfg.max_attempts,
        )
    return OperatingCharacteristics.from_outcomes(outcomes, n_invalid, n_reruns)
