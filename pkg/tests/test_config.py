import json
from pathlib import Path

import pytest

from core.config import DEFAULT_THRESHOLDS, SCENARIOS, ConfigError, GridSpec, ScenarioConfig

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def _error_path(data):
    with pytest.raises(ConfigError) as info:
        ScenarioConfig.from_dict(data)
    return info.value.path


def test_minimal_config_uses_defaults():
    cfg = ScenarioConfig.from_dict({"scenario": "holder"})
    assert cfg.grid == GridSpec()
    assert cfg.seed == 0
    assert cfg.threads == 1
    assert cfg.thresholds == DEFAULT_THRESHOLDS["holder"]
    assert cfg.output.directory == "reports"


def test_round_trip():
    for path in sorted(CONFIG_DIR.glob("*.json")):
        cfg = ScenarioConfig.from_json(path)
        assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg


def test_shipped_configs_cover_every_scenario():
    found = {ScenarioConfig.from_json(path).scenario for path in CONFIG_DIR.glob("*.json")}
    assert found == set(SCENARIOS)


def test_thresholds_merge_over_defaults():
    cfg = ScenarioConfig.from_dict({"scenario": "ap-sweep", "thresholds": {"growth": 2}})
    assert cfg.threshold("growth") == 2.0
    assert cfg.threshold("unit_abs") == DEFAULT_THRESHOLDS["ap-sweep"]["unit_abs"]


def test_missing_threshold_names_path():
    cfg = ScenarioConfig.from_dict({"scenario": "czd-verify"})
    with pytest.raises(ConfigError) as info:
        cfg.threshold("growth")
    assert info.value.path == "thresholds.growth"


@pytest.mark.parametrize(
    "data, path",
    [
        ({"scenario": "nope"}, "scenario"),
        ({"scenario": "holder", "bogus": 1}, "bogus"),
        ({"scenario": "holder", "grid": {"cell_exponent": "x"}}, "grid.cell_exponent"),
        ({"scenario": "holder", "grid": {"dim": 3}}, "grid.dim"),
        ({"scenario": "holder", "grid": {"half_width": 3}}, "grid"),
        ({"scenario": "holder", "grid": {"colour": 1}}, "grid.colour"),
        ({"scenario": "holder", "seed": -1}, "seed"),
        ({"scenario": "holder", "threads": 0}, "threads"),
        ({"scenario": "holder", "refinements": [4, 0]}, "refinements.1"),
        ({"scenario": "holder", "domains": [1, 3]}, "domains.1"),
        ({"scenario": "holder", "exponents": {"p": {"kind": "wiggly"}}}, "exponents.p.kind"),
        ({"scenario": "holder", "weights": {"w1": {"kind": "product", "factors": [{"kind": "x"}, {"kind": "power"}]}}}, "weights.w1.factors.0.kind"),
        ({"scenario": "holder", "kernel": {"kind": "cauchy"}}, "kernel.kind"),
        ({"scenario": "holder", "functions": {"kind": "indicators", "count": 0}}, "functions.count"),
        ({"scenario": "holder", "cases": [{"id": "a"}, {"id": "a"}]}, "cases.1.id"),
        ({"scenario": "holder", "cases": [{"id": "a", "colour": 1}]}, "cases.0.colour"),
        ({"scenario": "holder", "operator": {"tol": [1]}}, "operator.tol"),
        ({"scenario": "holder", "thresholds": {"variable_max": "big"}}, "thresholds.variable_max"),
        ({"scenario": "holder", "output": {"directory": ""}}, "output.directory"),
        ({"scenario": "holder", "translated": "yes"}, "translated"),
    ],
)
def test_errors_name_the_field(data, path):
    assert _error_path(data) == path


def test_grid_budget_is_a_config_error():
    assert _error_path({"scenario": "holder", "grid": {"dim": 2, "half_width": 4, "cell_exponent": 6, "max_cells": 100}}) == "grid"


def test_refinement_over_budget():
    data = {"scenario": "one-third", "grid": {"max_cells": 200}, "refinements": [4, 6]}
    assert _error_path(data) == "refinements.1"


def test_overrides():
    cfg = ScenarioConfig.from_dict({"scenario": "holder", "seed": 3})
    changed = cfg.with_overrides(seed=9, threads=2, out="elsewhere")
    assert (changed.seed, changed.threads, changed.output.directory) == (9, 2, "elsewhere")
    assert cfg.seed == 3
    assert cfg.with_overrides() == cfg
    with pytest.raises(ConfigError):
        cfg.with_overrides(threads=0)


def test_from_json_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        ScenarioConfig.from_json(bad)
    with pytest.raises(ConfigError):
        ScenarioConfig.from_json(tmp_path / "missing.json")


def test_from_json_reads_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"scenario": "one-third", "refinements": [4, 5]}), encoding="utf-8")
    cfg = ScenarioConfig.from_json(path)
    assert cfg.refinements == (4, 5)
    assert cfg.op("delta", 0.25) == 0.25
    assert cfg.op_name("witness", "sigma") == "sigma"


def test_config_is_not_aliased():
    data = {"scenario": "holder", "functions": {"kind": "mixed", "count": 3}}
    cfg = ScenarioConfig.from_dict(data)
    data["functions"]["count"] = 99
    assert cfg.functions["count"] == 3
