import json

import numpy as np
import pandas as pd
import pytest

from core.config import ScenarioConfig
from core.experiments import (
    ROW_COLUMNS,
    Case,
    Report,
    necessity_ratio,
    random_disjoint_cubes,
    run_cases,
    run_scenario,
    summarise,
)
from core.exponents import constant_exponent
from core.grid import build_grid, dyadic_family
from core.weights import VectorWeight, constant_weight, power_weight


def _config(tmp_path, **data):
    data.setdefault("output", {"directory": str(tmp_path / "out")})
    return ScenarioConfig.from_dict(data)


def _boom():
    raise RuntimeError("solver exploded")


def _ok_rows():
    return [{"case": "b", "assertion": "fine", "metric": "fine", "value": 0.0, "ok": True}]


def test_failing_case_becomes_error_row():
    rows = run_cases([Case("b", _ok_rows), Case("a", _boom)], threads=2)
    assert [r["case"] for r in rows] == ["a", "b"]
    assert rows[0]["assertion"] == "case-completed"
    assert rows[0]["ok"] is False
    assert "solver exploded" in rows[0]["error"]
    report = Report("demo", rows, {})
    assert report.verdicts == {"case-completed": False, "fine": True}
    assert not report.passed


def test_report_without_assertions_does_not_pass():
    assert not Report("demo", [], {}).passed


def test_summarise_counts_and_trends():
    rows = [
        {"case": "x", "assertion": "bound", "metric": "bound", "value": 1.0, "ok": True},
        {"case": "x", "assertion": "bound", "metric": "bound", "value": 3.0, "ok": True},
        {"case": "x", "assertion": None, "metric": "ap", "value": 2.0},
        {"case": "x", "assertion": None, "metric": "ap", "value": 4.0},
    ]
    summary = summarise(rows)
    assert summary["assertions"]["bound"] == {"rows": 2, "passed": True, "max": 3.0, "median": 2.0}
    assert summary["trends"] == {"x/ap": [2.0]}


def test_report_write(tmp_path):
    rows = [{"case": "x", "assertion": "bound", "metric": "bound", "value": 1.0, "ok": True}]
    report = Report("demo", rows, {"seed": np.int64(3)})
    report.summary = summarise(rows)
    csv_path, json_path = report.write(tmp_path / "r")
    frame = pd.read_csv(csv_path)
    assert list(frame.columns) == ROW_COLUMNS
    assert len(frame) == 1
    data = json.loads(json_path.read_text(encoding="utf-8"))
    assert data["passed"] is True
    assert data["config"] == {"seed": 3}


def test_necessity_ratio_of_unit_weight():
    grid = build_grid(1, 2, 3)
    p = constant_exponent(grid, 2.0)
    one = constant_weight(grid, 1.0)
    vw = VectorWeight.build(one, one, p, p)
    for witness in ("sigma", "inverse"):
        assert necessity_ratio(vw, p, p, dyadic_family(grid), witness) == pytest.approx(1.0, rel=1e-6)
    with pytest.raises(ValueError):
        necessity_ratio(vw, p, p, dyadic_family(grid), "dual")


def test_necessity_ratio_grows_with_domain():
    values = []
    for L in (1, 4):
        grid = build_grid(1, L, 3)
        p = constant_exponent(grid, 2.0)
        vw = VectorWeight.build(power_weight(grid, 0.75), constant_weight(grid, 1.0), p, p)
        values.append(necessity_ratio(vw, p, p, dyadic_family(grid)))
    assert values[1] > values[0]


def test_random_disjoint_cubes_are_disjoint():
    grid = build_grid(1, 2, 5)
    family = dyadic_family(grid)
    for seed in range(10):
        cubes = random_disjoint_cubes(family, np.random.default_rng(seed))
        assert cubes
        cells = np.concatenate([c.cells for c in cubes])
        assert np.unique(cells).size == cells.size


def test_one_third_scenario(tmp_path):
    cfg = _config(
        tmp_path,
        scenario="one-third",
        grid={"dim": 1, "half_width": 1, "cell_exponent": 3},
        refinements=[3, 4],
        functions={"kind": "indicators", "count": 3, "level": 2},
    )
    report = run_scenario(cfg)
    assert report.verdicts["constant_case"]
    assert "refinement_spread" in report.verdicts
    assert (tmp_path / "out" / "rows.csv").exists()
    assert (tmp_path / "out" / "summary.json").exists()


def test_czd_scenario_passes(tmp_path):
    cfg = _config(
        tmp_path,
        scenario="czd-verify",
        grid={"dim": 1, "half_width": 1, "cell_exponent": 5},
        functions={"kind": "indicators", "count": 4, "terms": 3, "level": 2, "max_value": 6.0},
        threads=2,
    )
    report = run_scenario(cfg, write=False)
    assert report.passed, report.summary
    assert set(report.verdicts) == {"nesting", "coverage", "sandwich", "maximality", "e_disjoint", "density"}
    assert not (tmp_path / "out").exists()


def test_ap_sweep_unit_constants(tmp_path):
    cfg = _config(tmp_path, scenario="ap-sweep", grid={"dim": 1, "half_width": 1, "cell_exponent": 3}, domains=[1, 2])
    report = run_scenario(cfg, write=False)
    assert report.verdicts["unit_scalar"]
    assert report.verdicts["unit_vector"]


def test_necessity_scenario_unit_and_ranking(tmp_path):
    cfg = _config(
        tmp_path,
        scenario="necessity",
        grid={"dim": 1, "half_width": 1, "cell_exponent": 3},
        domains=[1, 2],
        cases=[{"id": "unit"}, {"id": "w1-0.5", "weights": {"w1": {"kind": "power", "a": 0.5}}}],
    )
    report = run_scenario(cfg, write=False)
    assert report.verdicts["unit"]
    assert report.verdicts["rank_agreement"]


def test_scenario_without_family_fails_fast(tmp_path):
    cfg = _config(tmp_path, scenario="necessity")
    with pytest.raises(ValueError):
        run_scenario(cfg, write=False)


def _metrics(report, name):
    return [r["value"] for r in report.rows if r["metric"] == name]


def test_ap_sweep_records_measure_constants(tmp_path):
    cfg = _config(
        tmp_path,
        scenario="ap-sweep",
        grid={"dim": 1, "half_width": 1, "cell_exponent": 3},
        domains=[1, 2],
        cases=[{"id": "power-0.25", "weights": {"w": {"kind": "power", "a": 0.25}}}],
        functions={"kind": "indicators", "count": 3, "level": 1},
    )
    report = run_scenario(cfg, write=False)
    for name in ("unit_ainfty", "unit_harmonic", "weighted_maximal_bound"):
        assert report.verdicts[name], name
    assert all(0.0 < b <= 0.5 for b in _metrics(report, "ainfty_beta"))
    assert len(_metrics(report, "ainfty_u")) == 2
    assert len(_metrics(report, "ainfty_sigma1")) == 2
    assert all(r == pytest.approx(1.0, abs=1e-6) for r in _metrics(report, "harmonic_range"))
    assert all(1.0 - 1e-8 <= r <= 2.0 + 1e-6 for r in _metrics(report, "weighted_maximal"))


def test_norm_sanity_measure_and_integral_checks(tmp_path):
    cfg = _config(
        tmp_path,
        scenario="norm-sanity",
        grid={"dim": 1, "half_width": 2, "cell_exponent": 4},
        functions={"kind": "mixed", "count": 3, "level": 2},
        operator={"lemma_cases": 2, "measure_cases": 3},
    )
    report = run_scenario(cfg, write=False)
    for name in ("measure_identity", "integral_additivity", "midpoint", "lh0_bound", "golden"):
        assert report.verdicts[name], name
    assert len(_metrics(report, "lh0")) == 1
    assert _metrics(report, "lhinf")[0] >= 0.0


def test_sio_domination_weighted_triple(tmp_path):
    cfg = _config(
        tmp_path,
        scenario="sio-domination",
        grid={"dim": 1, "half_width": 1, "cell_exponent": 3},
        refinements=[3, 4],
        weights={"w1": {"kind": "power", "a": 0.1}, "w2": {"kind": "power", "a": -0.1}},
        functions={"kind": "indicators", "count": 2, "terms": 2, "level": 2},
        operator={"samples": 256, "trials": 3},
    )
    report = run_scenario(cfg, write=False)
    assert report.verdicts["weighted_sio"]
    assert "refinement_spread" in report.verdicts
    assert all(v > 1.0 for v in _metrics(report, "triple_constant"))
    assert len(_metrics(report, "weighted_ratio")) == 2
    assert len(_metrics(report, "sharp_separable")) == 2
    assert len(_metrics(report, "weighted_spread")) == 1
