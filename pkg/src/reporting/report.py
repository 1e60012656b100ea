"""Result tables and documents written to disk.

CSV files carry 4 significant digits; ReportRow rounds to the same
precision so a written table reads back equal. JSON documents keep full
precision and contain no timestamps, so a re-run with the same seed
produces the same bytes.
"""

import json
import logging
from dataclasses import asdict, dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.exceptions import ConfigError
from src.ordinal.scenarios import Scenario
from src.trial.engine import OperatingCharacteristics

logger = logging.getLogger(__name__)

CSV_COLUMNS = {
    "scenario": "Scenario",
    "effect_size": "Effect Size",
    "pet": "PET (%)",
    "prn": "PRN (%)",
    "avg_n_per_arm": "Avg N per arm",
    "avg_n_total": "Avg N total",
}
FLOAT_FORMAT = "%.4g"
SCHEMA_VERSION = 1


def round_sig(value: float, digits: int = 4) -> float:
    if value is None or not np.isfinite(value):
        return value
    return float(f"{value:.{digits}g}")


@dataclass(frozen=True)
class ReportRow:
    scenario: str
    effect_size: float
    pet: float
    prn: float
    avg_n_per_arm: float
    avg_n_total: float

    def __post_init__(self):
        for name in ("effect_size", "pet", "prn", "avg_n_per_arm", "avg_n_total"):
            object.__setattr__(self, name, round_sig(float(getattr(self, name))))

    @classmethod
    def from_oc(cls, scenario: Scenario, oc: OperatingCharacteristics, npo_convention: bool) -> "ReportRow":
        return cls(
            scenario=scenario.id,
            effect_size=scenario.effect_size(npo_convention),
            pet=oc.pet,
            prn=oc.prn,
            avg_n_per_arm=oc.avg_n_per_arm,
            avg_n_total=oc.avg_n_total,
        )


def rows_to_frame(rows: Sequence[ReportRow]) -> pd.DataFrame:
    frame = pd.DataFrame([asdict(r) for r in rows], columns=list(CSV_COLUMNS))
    return frame.rename(columns=CSV_COLUMNS)


def write_table(rows: Sequence[ReportRow], path: Path) -> Path:
    rows_to_frame(rows).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_table(path: Path) -> List[ReportRow]:
    frame = pd.read_csv(path, dtype={CSV_COLUMNS["scenario"]: str})
    frame = frame.rename(columns={v: k for k, v in CSV_COLUMNS.items()})
    return [ReportRow(**record) for record in frame.to_dict(orient="records")]


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays, enums, paths and frames for json.dump."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, np.generic):
        return jsonable(value.item())
    if isinstance(value, pd.DataFrame):
        return jsonable(value.to_dict(orient="records"))
    if isinstance(value, float) and not np.isfinite(value):
        return None
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "value") and not isinstance(value, (int, float, str, bool)):
        return value.value
    return value


def oc_summary(scenario: Scenario, oc: OperatingCharacteristics) -> Dict[str, Any]:
    """Per-scenario trial log summary for the JSON document."""
    decisions: Dict[str, int] = {}
    for outcome in oc.outcomes:
        decisions[outcome.decision.value] = decisions.get(outcome.decision.value, 0) + 1
    return {
        "scenario": scenario.id,
        "odds_ratios": scenario.effect.odds_ratios.tolist(),
        "mean_utility_difference": scenario.mean_utility_difference,
        "pet": oc.pet,
        "prn": oc.prn,
        "avg_n_per_arm": oc.avg_n_per_arm,
        "avg_n_total": oc.avg_n_total,
        "n_trials": oc.n_trials,
        "n_invalid": oc.n_invalid,
        "n_reruns": oc.n_reruns,
        "npo_selection_rate": oc.npo_selection_rate,
        "decisions": dict(sorted(decisions.items())),
    }


def result_document(command: str, config: Dict[str, Any], results: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": config.get("seed"),
        "config": config,
        "results": results,
    }


def write_document(document: Dict[str, Any], path: Path) -> Path:
    with open(path, "w") as f:
        json.dump(jsonable(document), f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def prepare_output_dir(base: Optional[Path], explicit: bool, overwrite: bool, command: str) -> Path:
    """Directory for this run's artifacts.

    An explicit directory is used as given and must be empty unless
    `overwrite`; otherwise a fresh timestamped directory is created under
    `base` (default ./results) so earlier runs are never touched.
    """
    if explicit:
        if base is None:
            raise ConfigError("out", "an explicit output directory is required")
        if base.exists() and any(base.iterdir()) and not overwrite:
            raise ConfigError("out", f"{base} is not empty; pass --overwrite to replace its contents")
        base.mkdir(parents=True, exist_ok=True)
        return base

    root = base or Path("results")
    stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
    candidate = root / f"{command}-{stamp}"
    suffix = 1
    while candidate.exists():
        candidate = root / f"{command}-{stamp}-{suffix}"
        suffix += 1
    candidate.mkdir(parents=True)
    logger.debug("writing results to %s", candidate)
    return candidate
