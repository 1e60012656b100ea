import json

import numpy as np
import pytest

import main
from main import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, run_command
from src.exceptions import ConfigError, TrialInvalid
from src.ordinal.scenarios import COVID_CONTROL, scenario_catalog
from src.reporting.config import load_run_config, parse_run_config
from src.reporting.report import (
    ReportRow,
    jsonable,
    prepare_output_dir,
    read_table,
    result_document,
    round_sig,
    write_document,
    write_table,
)
from src.trial.config import Design, Method

OC_CONFIG = {
    "control": [0.58, 0.05, 0.17, 0.03, 0.04, 0.13],
    "utility": [100, 80, 65, 25, 10, 0],
    "effects": [1.0, 1.8, [1.5, 1.5, 1.3, 1.3, 1.3]],
    "n_stage": 60,
    "method": "frequentist",
    "n_boot": 100,
    "n_trials": 4,
}


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ("ORDINAL_SEED", "ORDINAL_THREADS", "ORDINAL_OUTPUT_DIR"):
        monkeypatch.delenv(name, raising=False)


def test_parse_oc_config():
    cfg = parse_run_config(OC_CONFIG, "oc-npo")
    assert cfg.design is Design.NPO
    assert cfg.method is Method.FREQUENTIST
    assert [s.id for s in cfg.scenarios] == ["1", "2", "3"]
    assert cfg.scenarios[1].effect.is_proportional
    assert cfg.npo_sizes.stage1 == 60
    design = cfg.design_config()
    assert design.n_boot == 100 and design.c_f == 0.2 and design.c_s == 0.95


def test_missing_control_names_the_key():
    raw = {k: v for k, v in OC_CONFIG.items() if k != "control"}
    with pytest.raises(ConfigError) as err:
        parse_run_config(raw, "oc-po")
    assert err.value.key == "control"
    assert "control" in str(err.value)


@pytest.mark.parametrize(
    "change, key",
    [
        ({"typo_key": 1}, "typo_key"),
        ({"control": [0.5, 0.6, 0.1]}, "control"),
        ({"utility": [0, 50, 100, 0, 0, 0]}, "utility"),
        ({"effects": [[1.2, 1.2]]}, "effects[0]"),
        ({"c_f": 0.96}, "c_s"),
        ({"n_trials": 0}, "n_trials"),
        ({"method": "bootstrap"}, "method"),
        ({"superiority_grid": [0.9, 1.2]}, "superiority_grid"),
        ({"po_n_grid": [60, 40]}, "po_n_grid"),
        ({"mcmc": {"n_keep": 0}}, "mcmc"),
        ({"priors": {"precision": 1}}, "priors.precision"),
    ],
)
def test_invalid_values_name_the_key(change, key):
    with pytest.raises(ConfigError) as err:
        parse_run_config({**OC_CONFIG, **change}, "oc-po")
    assert err.value.key == key


def test_sample_size_needs_an_effect():
    raw = {k: v for k, v in OC_CONFIG.items() if k != "effects"}
    with pytest.raises(ConfigError) as err:
        parse_run_config(raw, "ss-po")
    assert err.value.key == "effect"
    cfg = parse_run_config({**raw, "effect": 1.5}, "ss-po")
    assert cfg.effect.odds_ratios.tolist() == [1.5] * 5
    assert cfg.method is Method.FREQUENTIST


def test_catalog_scenarios_default_the_control():
    cfg = parse_run_config({"scenarios": "catalog"}, "oc-switch")
    assert cfg.control == COVID_CONTROL
    assert len(cfg.scenarios) == 8
    assert cfg.method is Method.BAYESIAN


def test_catalog_is_built_on_the_given_control():
    control = [0.5, 0.1, 0.15, 0.05, 0.05, 0.15]
    cfg = parse_run_config({"control": control, "scenarios": "catalog"}, "oc-po")
    assert all(s.control.probs.tolist() == pytest.approx(control) for s in cfg.scenarios)
    reference = scenario_catalog()
    assert [s.effect.odds_ratios.tolist() for s in cfg.scenarios] == [s.effect.odds_ratios.tolist() for s in reference]
    assert cfg.scenarios[1].mean_utility_difference != pytest.approx(reference[1].mean_utility_difference)
    with pytest.raises(ConfigError) as err:
        parse_run_config({"control": [0.4, 0.3, 0.3], "utility": [100, 50, 0], "scenarios": "catalog"}, "oc-po")
    assert err.value.key == "scenarios"


def test_named_npo_scenario_sets():
    sweep = parse_run_config({"control": OC_CONFIG["control"], "scenarios": "npo_sweep"}, "power-curve")
    assert len(sweep.scenarios) == 9
    assert sweep.scenarios[-1].effect.odds_ratios.tolist() == pytest.approx([1.5, 1.5, 1.4, 1.4, 1.4])
    matrix = parse_run_config({"scenarios": "npo_matrix"}, "oc-npo")
    assert len(matrix.scenarios) == 8
    assert matrix.scenarios[0].is_null
    assert matrix.scenarios[1].effect.odds_ratios.tolist() == pytest.approx([1.5, 1.5, 1.0, 1.0, 1.0])
    five = {"control": [0.3, 0.2, 0.15, 0.05, 0.3], "utility": [100, 75, 50, 25, 0]}
    assert len(parse_run_config({**five, "scenarios": "npo_sweep"}, "oc-npo").scenarios) == 9
    with pytest.raises(ConfigError) as err:
        parse_run_config({**five, "scenarios": "npo_matrix"}, "oc-npo")
    assert err.value.key == "scenarios"
    with pytest.raises(ConfigError) as err:
        parse_run_config({"scenarios": "everything"}, "oc-npo")
    assert err.value.key == "scenarios"


def test_sample_size_runs_confirm_by_default():
    raw = {"control": OC_CONFIG["control"], "effect": 1.5}
    assert parse_run_config(raw, "ss-po").confirm
    assert not parse_run_config({**raw, "confirm": False}, "ss-po").confirm
    assert not parse_run_config(OC_CONFIG, "oc-po").confirm



def test_precedence_flag_file_env_default(monkeypatch):
    monkeypatch.setenv("ORDINAL_SEED", "11")
    monkeypatch.setenv("ORDINAL_THREADS", "3")
    assert parse_run_config(OC_CONFIG, "oc-po").seed == 11
    assert parse_run_config({**OC_CONFIG, "seed": 5}, "oc-po").seed == 5
    cfg = parse_run_config({**OC_CONFIG, "seed": 5}, "oc-po", {"seed": 7, "threads": None})
    assert cfg.seed == 7
    assert cfg.threads == 3
    assert parse_run_config(OC_CONFIG, "oc-po", {"n_trials": 9}).n_trials == 9


def test_bad_environment_value(monkeypatch):
    monkeypatch.setenv("ORDINAL_THREADS", "many")
    with pytest.raises(ConfigError) as err:
        parse_run_config(OC_CONFIG, "oc-po")
    assert err.value.key == "ORDINAL_THREADS"


def test_resolved_config_reproduces_itself():
    cfg = parse_run_config({**OC_CONFIG, "mcmc": {"n_keep": 500}, "priors": {"cutpoint_convention": "variance"}}, "oc-po")
    echo = json.loads(json.dumps(cfg.to_dict()))
    again = parse_run_config(echo, "oc-po")
    assert again.to_dict() == cfg.to_dict()
    assert again.mcmc.n_keep == 500


def test_switch_sizes_from_config():
    raw = {**OC_CONFIG, "po_sizes": [80, 60], "npo_sizes": [100, 90]}
    raw.pop("n_stage")
    cfg = parse_run_config(raw, "oc-switch")
    design = cfg.design_config()
    assert design.stage1_size == 100
    assert design.max_size == 190


def test_power_curve_defaults():
    cfg = parse_run_config({"control": OC_CONFIG["control"], "designs": "po,npo"}, "power-curve")
    assert cfg.designs == (Design.PO, Design.NPO)
    assert len(cfg.scenarios) == 21
    with pytest.raises(ConfigError) as err:
        parse_run_config({"control": OC_CONFIG["control"], "vary": "n"}, "power-curve")
    assert err.value.key == "effect"


def test_load_run_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "missing.json", "oc-po")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError) as err:
        load_run_config(bad, "oc-po")
    assert err.value.key == "config"


def test_round_sig():
    assert round_sig(132.456) == 132.5
    assert round_sig(0.0123456) == 0.01235
    assert round_sig(91.3) == 91.3


def test_csv_round_trip(tmp_path):
    rows = [
        ReportRow("1", 1.0, 68.1234, 5.05, 131.9876, 263.9752),
        ReportRow("8", 5.54431, 0.3, 71.0, 199.85, 399.7),
    ]
    path = write_table(rows, tmp_path / "table.csv")
    assert path.read_text().splitlines()[0] == "Scenario,Effect Size,PET (%),PRN (%),Avg N per arm,Avg N total"
    assert read_table(path) == rows


def test_report_row_from_oc_uses_effect_convention():
    from src.trial.engine import OperatingCharacteristics

    scenario = scenario_catalog()[2]
    oc = OperatingCharacteristics(10.0, 50.0, 150.0, 300.0, 100, 0, 0, None, [])
    assert ReportRow.from_oc(scenario, oc, npo_convention=False).effect_size == 1.4
    assert ReportRow.from_oc(scenario, oc, npo_convention=True).effect_size == round_sig(scenario.mean_utility_difference)


def test_json_document_is_deterministic(tmp_path):
    doc = result_document("oc-po", {"seed": 3, "c_s": np.float64(0.95)}, {"values": np.array([1.0, np.nan])})
    a = write_document(doc, tmp_path / "a.json").read_bytes()
    b = write_document(doc, tmp_path / "b.json").read_bytes()
    assert a == b
    loaded = json.loads(a)
    assert loaded["seed"] == 3
    assert loaded["results"]["values"] == [1.0, None]


def test_jsonable_handles_enums():
    assert jsonable({"design": Design.PO}) == {"design": "po"}


def test_prepare_output_dir(tmp_path):
    fresh = prepare_output_dir(tmp_path / "runs", explicit=False, overwrite=False, command="oc-po")
    second = prepare_output_dir(tmp_path / "runs", explicit=False, overwrite=False, command="oc-po")
    assert fresh != second and fresh.is_dir() and second.is_dir()

    explicit = tmp_path / "out"
    assert prepare_output_dir(explicit, explicit=True, overwrite=False, command="oc-po") == explicit
    (explicit / "table.csv").write_text("x")
    with pytest.raises(ConfigError) as err:
        prepare_output_dir(explicit, explicit=True, overwrite=False, command="oc-po")
    assert err.value.key == "out"
    assert prepare_output_dir(explicit, explicit=True, overwrite=True, command="oc-po") == explicit


def _write_config(tmp_path, raw):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw))
    return str(path)


def test_cli_missing_control_exits_2(tmp_path):
    raw = {k: v for k, v in OC_CONFIG.items() if k != "control"}
    assert run_command(["oc-po", "--config", _write_config(tmp_path, raw), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_cli_oc_run_is_reproducible(tmp_path):
    config = _write_config(tmp_path, OC_CONFIG)
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert run_command(["oc-po", "--config", config, "--seed", "7", "--out", str(out)]) == EXIT_OK
        outputs.append(out)
    for artifact in ("table.csv", "result.json"):
        assert (outputs[0] / artifact).read_bytes() == (outputs[1] / artifact).read_bytes()

    document = json.loads((outputs[0] / "result.json").read_text())
    assert document["seed"] == 7
    assert document["config"]["n_trials"] == 4
    assert len(document["results"]["scenarios"]) == 3
    assert len(read_table(outputs[0] / "table.csv")) == 3


def test_cli_refuses_non_empty_out_without_overwrite(tmp_path):
    out = tmp_path / "o"
    out.mkdir()
    (out / "old.csv").write_text("x")
    config = _write_config(tmp_path, OC_CONFIG)
    assert run_command(["oc-po", "--config", config, "--out", str(out)]) == EXIT_CONFIG


def test_cli_unreachable_target_exits_3(tmp_path):
    raw = {
        "control": OC_CONFIG["control"],
        "effect": 1.0,
        "n_grid": [40],
        "futility_grid": [0.2],
        "superiority_grid": [0.95],
        "n_trials": 6,
        "n_boot": 100,
    }
    code = run_command(["ss-po", "--config", _write_config(tmp_path, raw), "--power", "0.99", "--out", str(tmp_path / "o")])
    assert code == EXIT_INFEASIBLE


def test_cli_all_trials_invalid_exits_3(tmp_path, monkeypatch):
    def all_invalid(*args, **kwargs):
        raise TrialInvalid("no valid trials to aggregate")

    monkeypatch.setattr(main, "operating_characteristics", all_invalid)
    config = _write_config(tmp_path, OC_CONFIG)
    assert run_command(["oc-po", "--config", config, "--out", str(tmp_path / "o")]) == EXIT_INFEASIBLE
