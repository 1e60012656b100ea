"""Run configuration: a JSON document plus command-line overrides.

Precedence is flag > file > environment (ORDINAL_SEED, ORDINAL_THREADS,
ORDINAL_OUTPUT_DIR, usually from a .env file) > built-in default. Every
validation failure raises ConfigError naming the offending key.
"""

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.calibration.sample_size import NPO_N_GRID, PO_N_GRID
from src.calibration.thresholds import DEFAULT_FUTILITY_GRID, DEFAULT_SUPERIORITY_GRID
from src.exceptions import ConfigError
from src.inference.priors import McmcConfig, PriorSpec
from src.ordinal.distributions import CategoryDistribution, EffectSpec, UtilityScale, proportional_effect
from src.ordinal.scenarios import (
    COVID_CONTROL,
    DEFAULT_UTILITY,
    Scenario,
    npo_effect_sweep,
    npo_oc_matrix,
    po_effect_sweep,
    scenario_catalog,
    scenarios_from_effects,
)
from src.rjmcmc.palette import DEFAULT_PSEUDO_PRIOR_VAR
from src.rjmcmc.selection import DEFAULT_MODEL_PRIORS, DEFAULT_SWEEPS
from src.trial.config import Design, DesignConfig, Method, StageSizes

COMMANDS = ("ss-po", "ss-npo", "ss-switch", "oc-po", "oc-npo", "oc-switch", "power-curve")
CURVE_AXES = ("effect", "n")
SCENARIO_SETS = ("catalog", "npo_sweep", "npo_matrix")

KNOWN_KEYS = {
    "control", "utility", "effects", "effect", "scenarios", "n_stage", "po_sizes", "npo_sizes",
    "c_f", "c_s", "alpha", "power", "n_trials", "method", "seed", "threads", "output_dir",
    "priors", "mcmc", "model_priors", "n_sweeps", "pseudo_prior_var", "n_boot", "max_attempts",
    "n_grid", "po_n_grid", "npo_n_grid", "futility_grid", "superiority_grid", "confirm",
    "vary", "designs", "design", "command", "scenario_ids",
}
PRIOR_KEYS = {"mu_mean", "mu_var", "cutpoint_param", "cutpoint_convention", "delta_means", "delta_vars"}
MCMC_KEYS = {
    "n_burn", "n_keep", "thin", "step_mu", "step_gamma", "step_delta", "adapt", "adapt_interval",
    "fix_mu", "target_acceptance",
}


def design_for(command: str) -> Design:
    suffix = command.split("-", 1)[1]
    return Design(suffix) if suffix in {d.value for d in Design} else Design.PO


@dataclass(frozen=True)
class RunConfig:
    command: str
    design: Design
    control: CategoryDistribution
    utility: UtilityScale
    scenarios: List[Scenario]
    po_sizes: StageSizes
    npo_sizes: StageSizes
    c_f: float
    c_s: float
    alpha: float
    power: float
    n_trials: int
    method: Method
    seed: int
    threads: int
    output_dir: Optional[Path]
    priors: PriorSpec
    mcmc: McmcConfig
    model_priors: Tuple[float, float] = DEFAULT_MODEL_PRIORS
    n_sweeps: int = DEFAULT_SWEEPS
    pseudo_prior_var: float = DEFAULT_PSEUDO_PRIOR_VAR
    n_boot: int = 1000
    max_attempts: int = 3
    po_n_grid: Tuple[int, ...] = PO_N_GRID
    npo_n_grid: Tuple[int, ...] = NPO_N_GRID
    futility_grid: Tuple[float, ...] = DEFAULT_FUTILITY_GRID
    superiority_grid: Tuple[float, ...] = DEFAULT_SUPERIORITY_GRID
    confirm: bool = False
    vary: str = "effect"
    designs: Tuple[Design, ...] = (Design.PO, Design.NPO, Design.SWITCH)
    overwrite: bool = False

    @property
    def n_categories(self) -> int:
        return self.control.n_categories

    @property
    def effect(self) -> EffectSpec:
        """The single alternative used by sample-size searches."""
        return self.scenarios[0].effect

    def design_config(self, design: Optional[Design] = None) -> DesignConfig:
        return DesignConfig(
            design=design or self.design,
            n_categories=self.n_categories,
            po_sizes=self.po_sizes,
            npo_sizes=self.npo_sizes,
            c_f=self.c_f,
            c_s=self.c_s,
            priors=self.priors,
            mcmc=self.mcmc,
            utility=self.utility,
            method=self.method,
            seed=self.seed,
            model_priors=self.model_priors,
            n_sweeps=self.n_sweeps,
            pseudo_prior_var=self.pseudo_prior_var,
            n_boot=self.n_boot,
            max_attempts=self.max_attempts,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Resolved configuration; feeding it back to `parse_run_config` reproduces this run."""
        return {
            "command": self.command,
            "design": self.design.value,
            "control": self.control.probs.tolist(),
            "utility": self.utility.u.tolist(),
            "effects": [s.effect.odds_ratios.tolist() for s in self.scenarios],
            "scenario_ids": [s.id for s in self.scenarios],
            "po_sizes": [self.po_sizes.stage1, self.po_sizes.stage2],
            "npo_sizes": [self.npo_sizes.stage1, self.npo_sizes.stage2],
            "c_f": self.c_f,
            "c_s": self.c_s,
            "alpha": self.alpha,
            "power": self.power,
            "n_trials": self.n_trials,
            "method": self.method.value,
            "seed": self.seed,
            "threads": self.threads,
            "priors": {
                "mu_mean": self.priors.mu_mean,
                "mu_var": self.priors.mu_var,
                "cutpoint_param": self.priors.cutpoint_param,
                "cutpoint_convention": self.priors.cutpoint_convention,
                "delta_means": self.priors.delta_means.tolist(),
                "delta_vars": self.priors.delta_vars.tolist(),
            },
            "mcmc": {
                "n_burn": self.mcmc.n_burn,
                "n_keep": self.mcmc.n_keep,
                "thin": self.mcmc.thin,
                "step_mu": self.mcmc.step_mu,
                "step_gamma": self.mcmc.step_gamma,
                "step_delta": self.mcmc.step_delta,
                "adapt": self.mcmc.adapt,
                "adapt_interval": self.mcmc.adapt_interval,
                "fix_mu": self.mcmc.fix_mu,
                "target_acceptance": list(self.mcmc.target_acceptance),
            },
            "model_priors": list(self.model_priors),
            "n_sweeps": self.n_sweeps,
            "pseudo_prior_var": self.pseudo_prior_var,
            "n_boot": self.n_boot,
            "max_attempts": self.max_attempts,
            "po_n_grid": list(self.po_n_grid),
            "npo_n_grid": list(self.npo_n_grid),
            "futility_grid": list(self.futility_grid),
            "superiority_grid": list(self.superiority_grid),
            "confirm": self.confirm,
            "vary": self.vary,
            "designs": [d.value for d in self.designs],
        }


def _number(raw: Dict[str, Any], key: str, default, kind=float, low=None, high=None):
    value = raw.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if kind is int and float(value) != int(value):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    value = kind(value)
    if low is not None and value < low:
        raise ConfigError(key, f"must be at least {low}, got {value}")
    if high is not None and value > high:
        raise ConfigError(key, f"must be at most {high}, got {value}")
    return value


def _vector(raw: Dict[str, Any], key: str, default=None) -> Optional[np.ndarray]:
    value = raw.get(key, default)
    if value is None:
        return None
    if not isinstance(value, (list, tuple)) or not all(isinstance(v, (int, float)) for v in value):
        raise ConfigError(key, f"expected a list of numbers, got {value!r}")
    return np.asarray(value, dtype=float)


def _built(key: str, factory, *args, **kwargs):
    """Run a constructor and turn its ValueError into a ConfigError for `key`."""
    try:
        return factory(*args, **kwargs)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(key, str(e)) from e


def _sizes(raw: Dict[str, Any], key: str, n_stage: Optional[int]) -> StageSizes:
    if key not in raw:
        if n_stage is None:
            raise ConfigError("n_stage", "required unless both po_sizes and npo_sizes are given")
        return StageSizes(n_stage, n_stage)
    value = raw[key]
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value, value]
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(key, f"expected [stage1, stage2], got {value!r}")
    return _built(key, StageSizes, int(value[0]), int(value[1]))


def _effect(value: Any, n_categories: int, key: str) -> EffectSpec:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return _built(key, proportional_effect, float(value), n_categories)
    if isinstance(value, list):
        effect = _built(key, EffectSpec, np.asarray(value, dtype=float))
        if effect.n_categories != n_categories:
            raise ConfigError(key, f"needs {n_categories - 1} odds ratios, got {effect.odds_ratios.size}")
        return effect
    raise ConfigError(key, f"expected an odds ratio or a list of odds ratios, got {value!r}")


def _named_scenarios(name: str, control: CategoryDistribution, utility: UtilityScale) -> List[Scenario]:
    C = control.n_categories
    if name not in SCENARIO_SETS:
        raise ConfigError("scenarios", f"expected one of {SCENARIO_SETS}, got {name!r}")
    try:
        if name == "catalog":
            return scenario_catalog(utility, control)
        if name == "npo_sweep":
            return scenarios_from_effects(control, npo_effect_sweep(n_categories=C), utility)
        if C != COVID_CONTROL.n_categories:
            raise ValueError(f"npo_matrix needs a six-level control, got {C} levels")
        return scenarios_from_effects(control, npo_oc_matrix(), utility)
    except ValueError as e:
        raise ConfigError("scenarios", str(e)) from e


def _scenarios(raw: Dict[str, Any], command: str, control: CategoryDistribution, utility: UtilityScale) -> List[Scenario]:
    C = control.n_categories
    effects = raw.get("effects")
    single = command.startswith("ss-") or (command == "power-curve" and raw.get("vary", "effect") == "n")
    if single:
        # a resolved config echo carries the alternative as effects[0]
        if "effect" in raw:
            return scenarios_from_effects(control, [_effect(raw["effect"], C, "effect")], utility)
        if isinstance(effects, list) and effects:
            return scenarios_from_effects(control, [_effect(effects[0], C, "effects[0]")], utility)
        raise ConfigError("effect", f"required by {command}")
    if "scenarios" in raw:
        return _named_scenarios(raw["scenarios"], control, utility)
    if command == "power-curve" and effects is None:
        return scenarios_from_effects(control, po_effect_sweep(n_categories=C), utility)
    if not isinstance(effects, list) or not effects:
        raise ConfigError("effects", "expected a non-empty list of odds ratios or odds-ratio vectors")
    return scenarios_from_effects(control, [_effect(e, C, f"effects[{i}]") for i, e in enumerate(effects)], utility)


def _priors(raw: Dict[str, Any], n_categories: int) -> PriorSpec:
    section = raw.get("priors", {})
    if not isinstance(section, dict):
        raise ConfigError("priors", "expected an object")
    unknown = set(section) - PRIOR_KEYS
    if unknown:
        raise ConfigError(f"priors.{sorted(unknown)[0]}", "unknown key")
    kwargs = {k: section[k] for k in PRIOR_KEYS & set(section)}
    for key in ("delta_means", "delta_vars"):
        if key in kwargs:
            kwargs[key] = _vector(section, key)
    return _built("priors", PriorSpec, n_categories=n_categories, **kwargs)


def _mcmc(raw: Dict[str, Any]) -> McmcConfig:
    section = raw.get("mcmc", {})
    if not isinstance(section, dict):
        raise ConfigError("mcmc", "expected an object")
    unknown = set(section) - MCMC_KEYS
    if unknown:
        raise ConfigError(f"mcmc.{sorted(unknown)[0]}", "unknown key")
    kwargs = dict(section)
    if "target_acceptance" in kwargs:
        kwargs["target_acceptance"] = tuple(kwargs["target_acceptance"])
    return _built("mcmc", McmcConfig, **kwargs)


def _env_default(name: str, kind):
    value = os.environ.get(name)
    if value is None or value == "":
        return None
    try:
        return kind(value)
    except ValueError as e:
        raise ConfigError(name, f"cannot parse {value!r}") from e


def parse_run_config(raw: Dict[str, Any], command: str, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Validate a decoded JSON document for `command`; `overrides` hold
    command-line values, None meaning "not given"."""
    if command not in COMMANDS:
        raise ConfigError("command", f"expected one of {COMMANDS}, got {command!r}")
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a JSON object")
    unknown = set(raw) - KNOWN_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")

    raw = dict(raw)
    env = {
        "seed": _env_default("ORDINAL_SEED", int),
        "threads": _env_default("ORDINAL_THREADS", int),
        "output_dir": _env_default("ORDINAL_OUTPUT_DIR", str),
    }
    for key, value in env.items():
        if value is not None:
            raw.setdefault(key, value)
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value

    if "control" in raw:
        control = _built("control", CategoryDistribution, _vector(raw, "control"))
    elif raw.get("scenarios") in ("catalog", "npo_matrix"):
        control = COVID_CONTROL
    else:
        raise ConfigError("control", "required: the control-arm category probabilities")
    C = control.n_categories

    if "utility" in raw:
        utility = _built("utility", UtilityScale, _vector(raw, "utility"))
    elif C == len(DEFAULT_UTILITY):
        utility = DEFAULT_UTILITY
    else:
        raise ConfigError("utility", f"required for a {C}-level control")
    if len(utility) != C:
        raise ConfigError("utility", f"has {len(utility)} levels, control has {C}")

    design = _built("design", Design, raw["design"]) if "design" in raw and command == "power-curve" else design_for(command)
    n_stage = _number(raw, "n_stage", 100, int, low=1) if "n_stage" in raw or not (
        "po_sizes" in raw and "npo_sizes" in raw
    ) else None

    default_method = Method.FREQUENTIST if command.startswith("ss-") else Method.BAYESIAN
    method_value = raw.get("method", default_method.value)
    try:
        method = Method(str(method_value).lower())
    except ValueError as e:
        raise ConfigError("method", f"expected 'bayesian' or 'frequentist', got {method_value!r}") from e

    vary = raw.get("vary", "effect")
    if vary not in CURVE_AXES:
        raise ConfigError("vary", f"expected one of {CURVE_AXES}, got {vary!r}")
    designs_value = raw.get("designs", ["po", "npo", "switch"])
    if isinstance(designs_value, str):
        designs_value = [d.strip() for d in designs_value.split(",") if d.strip()]
    try:
        designs = tuple(Design(d) for d in designs_value)
    except ValueError as e:
        raise ConfigError("designs", f"expected a subset of po,npo,switch, got {designs_value!r}") from e
    if not designs:
        raise ConfigError("designs", "at least one design is required")

    c_f = _number(raw, "c_f", 0.2, low=0.0, high=1.0)
    c_s = _number(raw, "c_s", 0.95, low=0.0)
    if not c_f < c_s:
        raise ConfigError("c_s", f"must exceed c_f={c_f}, got {c_s}")

    output_dir = raw.get("output_dir")
    model_priors = _vector(raw, "model_priors", list(DEFAULT_MODEL_PRIORS))
    if model_priors.shape != (2,) or np.any(model_priors < 0) or not np.isclose(model_priors.sum(), 1.0):
        raise ConfigError("model_priors", "expected two non-negative weights (PO, NPO) summing to 1")

    def grid(key: str, default: Sequence, kind=float) -> tuple:
        values = _vector(raw, key, list(default))
        if values.size == 0:
            raise ConfigError(key, "must not be empty")
        if kind is int:
            if np.any(values < 1) or np.any(np.diff(values) <= 0):
                raise ConfigError(key, "sample sizes must be positive and strictly increasing")
        elif np.any(values < 0) or np.any(values > 1):
            raise ConfigError(key, "cutoffs must lie within [0, 1]")
        return tuple(kind(v) for v in values)

    return RunConfig(
        command=command,
        design=design,
        control=control,
        utility=utility,
        scenarios=_scenarios(raw, command, control, utility),
        po_sizes=_sizes(raw, "po_sizes", n_stage),
        npo_sizes=_sizes(raw, "npo_sizes", n_stage),
        c_f=c_f,
        c_s=c_s,
        alpha=_number(raw, "alpha", 0.05, low=1e-9, high=1 - 1e-9),
        power=_number(raw, "power", 0.8, low=0.0, high=1 - 1e-9),
        n_trials=_number(raw, "n_trials", 1000, int, low=1),
        method=method,
        seed=_number(raw, "seed", 0, int, low=0),
        threads=_number(raw, "threads", 1, int, low=1),
        output_dir=Path(output_dir) if output_dir else None,
        priors=_priors(raw, C),
        mcmc=_mcmc(raw),
        model_priors=(float(model_priors[0]), float(model_priors[1])),
        n_sweeps=_number(raw, "n_sweeps", DEFAULT_SWEEPS, int, low=1),
        pseudo_prior_var=_number(raw, "pseudo_prior_var", DEFAULT_PSEUDO_PRIOR_VAR, low=1e-12),
        n_boot=_number(raw, "n_boot", 1000, int, low=1),
        max_attempts=_number(raw, "max_attempts", 3, int, low=1),
        po_n_grid=grid("po_n_grid", raw.get("n_grid", PO_N_GRID), int),
        npo_n_grid=grid("npo_n_grid", raw.get("n_grid", NPO_N_GRID), int),
        futility_grid=grid("futility_grid", DEFAULT_FUTILITY_GRID),
        superiority_grid=grid("superiority_grid", DEFAULT_SUPERIORITY_GRID),
        confirm=bool(raw.get("confirm", command.startswith("ss-"))),
        vary=vary,
        designs=designs,
        overwrite=bool(raw.get("overwrite", False)),
    )


def load_run_config(path: Optional[Path], command: str, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    raw: Dict[str, Any] = {}
    if path is not None:
        try:
            with open(path) as f:
                raw = json.load(f)
        except FileNotFoundError as e:
            raise ConfigError("config", f"file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ConfigError("config", f"{path} is not valid JSON: {e}") from e
    return parse_run_config(raw, command, overrides)
