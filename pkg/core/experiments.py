#!/usr/bin/env python3
"""
Scenario runner: turns the toolkit's inequalities into pass/fail experiments.

Each scenario expands into independent cases (run on a thread pool), every case
returns report rows, and the verdict of each assertion is recomputed from the
rows alone. Rows with no assertion are measurements feeding trends and
cross-case checks.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import spearmanr

from core.config import ScenarioConfig
from core.czd import check_invariants, cz_decompose, default_base, density_ratios, split
from core.exponents import Exponent, combine, conjugate, constant_exponent, lh_diagnostics, piecewise_exponent
from core.families import build_exponent, build_functions, build_kernel, build_pairs, build_weight
from core.grid import CubeFamily, DyadicCube, Grid, SampledFunction, box_cells, dyadic_family, integrate, translated_families
from core.norms import DEFAULT_TOL, measure_norm, modular, norm, rescale_check, solve_luxemburg, weighted_norm
from core.norms import generalized_holder_ratio, holder_defect, product_holder_ratio
from core.operators import (
    averaging_TQ,
    bilinear_maximal,
    bilinear_p_averaging,
    cube_average,
    harmonic_compatibility,
    one_third_domination,
    property_g_ratio,
    weighted_dyadic_maximal,
)
from core.sio import (
    DEFAULT_SAMPLES,
    apply_bilinear_sio,
    bump_profile,
    check_kernel_bounds,
    exclusion_radius,
    separable_kernel,
    sharp_domination_test,
    singular_kernel,
    weighted_sio_ratio,
)
from core.weights import (
    VectorWeight,
    Weight,
    ainfty_density,
    ainfty_profile,
    ap_constant,
    constant_weight,
    scalar_characterization,
    sweep_max,
    vec_ap_constant,
)
from utils.helpers import ensure_dir, growth_factors, spread, to_jsonable

logger = logging.getLogger(__name__)

ROW_COLUMNS = [
    "case",
    "assertion",
    "metric",
    "family",
    "dim",
    "half_width",
    "cell_exponent",
    "value",
    "threshold",
    "ok",
    "detail",
    "error",
]

WITNESSES = ("sigma", "inverse")
GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0
TINY = 1e-300

UNIT_WEIGHT = {"kind": "constant", "value": 1.0}
TWO = {"kind": "constant", "value": 2.0}
VARIABLE = {"kind": "bump", "base": 2.5, "amplitude": 0.5}

Row = Dict[str, Any]


@dataclass(frozen=True)
class Case:
    id: str
    run: Callable[[], List[Row]]


def _row(
    case: str,
    *,
    metric: str,
    value: float,
    grid: Optional[Grid] = None,
    assertion: Optional[str] = None,
    threshold: Optional[float] = None,
    ok: Optional[bool] = None,
    family: str = "",
    detail: str = "",
    error: str = "",
) -> Row:
    return {
        "case": case,
        "assertion": assertion,
        "metric": metric,
        "family": family,
        "dim": grid.dim if grid else None,
        "half_width": grid.half_width if grid else None,
        "cell_exponent": grid.cell_exponent if grid else None,
        "value": float(value),
        "threshold": threshold,
        "ok": ok,
        "detail": detail,
        "error": error,
    }


def _check(case: str, assertion: str, value: float, threshold: Optional[float], ok: bool, grid: Optional[Grid] = None, detail: str = "") -> Row:
    return _row(case, metric=assertion, value=value, grid=grid, assertion=assertion, threshold=threshold, ok=bool(ok), detail=detail)


def _info(case: str, metric: str, value: float, grid: Optional[Grid] = None, family: str = "", detail: str = "") -> Row:
    return _row(case, metric=metric, value=value, grid=grid, family=family, detail=detail)


@dataclass
class Report:
    scenario: str
    rows: List[Row]
    config: Dict[str, Any]
    summary: Dict[str, Any] = field(default_factory=dict)

    @property
    def verdicts(self) -> Dict[str, bool]:
        out: Dict[str, bool] = {}
        for row in self.rows:
            name = row.get("assertion")
            if name:
                out[name] = out.get(name, True) and bool(row.get("ok"))
        return out

    @property
    def passed(self) -> bool:
        verdicts = self.verdicts
        return bool(verdicts) and all(verdicts.values())

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=ROW_COLUMNS)

    def to_dict(self) -> Dict[str, Any]:
        return to_jsonable(
            {
                "scenario": self.scenario,
                "passed": self.passed,
                "verdicts": self.verdicts,
                "summary": self.summary,
                "config": self.config,
            }
        )

    def write(self, directory: Path, csv_name: str = "rows.csv", json_name: str = "summary.json") -> Tuple[Path, Path]:
        out = ensure_dir(Path(directory))
        csv_path = out / csv_name
        json_path = out / json_name
        self.frame().to_csv(csv_path, index=False)
        json_path.write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")
        return csv_path, json_path


def summarise(rows: Sequence[Row]) -> Dict[str, Any]:
    """Per-assertion counts and max/median values, plus growth trends of measurements."""
    df = pd.DataFrame(list(rows), columns=ROW_COLUMNS)
    assertions: Dict[str, Any] = {}
    checks = df[df["assertion"].notna()]
    for name, group in checks.groupby("assertion", sort=True):
        values = pd.to_numeric(group["value"], errors="coerce")
        assertions[name] = {
            "rows": int(len(group)),
            "passed": bool(group["ok"].astype(bool).all()),
            "max": float(values.max()),
            "median": float(values.median()),
        }
    trends: Dict[str, List[float]] = {}
    measurements = df[df["assertion"].isna()]
    for (case, metric), group in measurements.groupby(["case", "metric"], sort=True):
        if len(group) > 1:
            trends[f"{case}/{metric}"] = growth_factors(group["value"].astype(float).tolist())
    return {"assertions": assertions, "trends": trends}


def _guarded(case: Case) -> List[Row]:
    try:
        return case.run()
    except Exception as exc:
        logger.warning("Case %s failed: %s", case.id, exc)
        return [
            _row(
                case.id,
                metric="error",
                value=math.nan,
                assertion="case-completed",
                ok=False,
                error=f"{type(exc).__name__}: {exc}",
            )
        ]


def run_cases(cases: Sequence[Case], threads: int = 1) -> List[Row]:
    """Run cases concurrently; rows come back ordered by case id."""
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = dict(zip([c.id for c in cases], pool.map(_guarded, cases)))
    rows: List[Row] = []
    for case_id in sorted(results):
        rows.extend(results[case_id])
    return rows


def _families(config: ScenarioConfig, grid: Grid) -> List[CubeFamily]:
    return translated_families(grid) if config.translated else [dyadic_family(grid)]


def _spec(config: ScenarioConfig, member: Optional[Dict[str, Any]], section: str, role: str, default: Dict[str, Any]) -> Dict[str, Any]:
    own = (member or {}).get(section, {}).get(role)
    if own is not None:
        return own
    shared = getattr(config, section).get(role)
    return shared if shared is not None else default


def vector_weight(config: ScenarioConfig, grid: Grid, member: Optional[Dict[str, Any]] = None) -> VectorWeight:
    p1 = build_exponent(grid, _spec(config, member, "exponents", "p1", TWO))
    p2 = build_exponent(grid, _spec(config, member, "exponents", "p2", TWO))
    w1 = build_weight(grid, _spec(config, member, "weights", "w1", UNIT_WEIGHT))
    w2 = build_weight(grid, _spec(config, member, "weights", "w2", UNIT_WEIGHT))
    return VectorWeight.build(w1, w2, p1, p2)


def _is_unit_member(config: ScenarioConfig, member: Dict[str, Any]) -> bool:
    specs = [_spec(config, member, "weights", r, UNIT_WEIGHT) for r in ("w1", "w2")]
    specs += [_spec(config, member, "exponents", r, TWO) for r in ("p1", "p2")]
    return all(s.get("kind") == "constant" for s in specs)


def necessity_ratio(
    vw: VectorWeight,
    p1: Exponent,
    p2: Exponent,
    families,
    witness: str = "sigma",
    tol: float = DEFAULT_TOL,
) -> float:
    """max over cubes of ||A_Q(f1, f2) w||_p(.) / (||f1 w1||_p1(.) ||f2 w2||_p2(.)) with duality witnesses.

    ``sigma`` uses f_j = sigma_j chi_Q with sigma_j = w_j^-p_j'(.); ``inverse`` uses f_j = w_j^-1 chi_Q.
    """
    if witness not in WITNESSES:
        raise ValueError(f"Unknown witness strategy: {witness}")
    grid = vw.grid
    p = combine(p1, p2)
    if witness == "sigma":
        f1 = vw.w1.inverse().power(conjugate(p1)).values
        f2 = vw.w2.inverse().power(conjugate(p2)).values
    else:
        f1 = 1.0 / vw.w1.values
        f2 = 1.0 / vw.w2.values
    s1 = SampledFunction(grid, f1)
    s2 = SampledFunction(grid, f2)
    g1 = f1 * vw.w1.values
    g2 = f2 * vw.w2.values
    wv = vw.w.values
    cv = grid.cell_volume

    def quantity(cube: DyadicCube) -> float:
        cells = cube.cells
        top = cube_average(s1, cube) * cube_average(s2, cube) * solve_luxemburg(wv[cells], p.values[cells], cv, tol=tol).value
        bottom = (
            solve_luxemburg(g1[cells], p1.values[cells], cv, tol=tol).value
            * solve_luxemburg(g2[cells], p2.values[cells], cv, tol=tol).value
        )
        return top / bottom

    return sweep_max(families, quantity).value


# norm-sanity


def _closed_form_case(config: ScenarioConfig, grid: Grid, f: SampledFunction, i: int, tol: float) -> List[Row]:
    rng = np.random.default_rng([config.seed, i, 1])
    p0 = float(rng.uniform(1.0, 4.0))
    value = norm(f, constant_exponent(grid, p0), tol)
    closed = (math.fsum((np.abs(f.values) ** p0).tolist()) * grid.cell_volume) ** (1.0 / p0)
    err = abs(value - closed) / closed if closed > 0 else abs(value)
    limit = config.threshold("closed_form_rel")
    return [_check(f"closed-{i:03d}", "closed_form", err, limit, err <= limit, grid, f"p={p0:.6g} norm={value:.12g}")]


def _golden_case(config: ScenarioConfig, grid: Grid, tol: float) -> List[Row]:
    f = SampledFunction.box_indicator(grid, 0.0, 2.0)
    value = norm(f, piecewise_exponent(grid, 1.0, 2.0, split=1.0), tol)
    err = abs(value - GOLDEN_RATIO)
    limit = config.threshold("golden_abs")
    return [_check("golden", "golden", err, limit, err <= limit, grid, f"norm={value:.12g}")]


def _lemma_case(config: ScenarioConfig, grid: Grid, f: SampledFunction, other: SampledFunction, p: Exponent, i: int, tol: float) -> List[Row]:
    rng = np.random.default_rng([config.seed, i, 2])
    c = float(rng.uniform(0.5, 5.0)) * (1.0 if rng.random() < 0.5 else -1.0)
    cid = f"lemma-{i:03d}"
    rows = []

    base = norm(f, p, tol)
    scaled = norm(f * c, p, tol)
    hom = abs(scaled - abs(c) * base) / max(abs(c) * base, TINY)
    limit = config.threshold("homogeneity_rel")
    rows.append(_check(cid, "homogeneity", hom, limit, hom <= limit, grid))

    bigger = norm(abs(f) + abs(other) * 0.5, p, tol)
    mono = max(0.0, base / bigger - 1.0) if bigger > 0 else 0.0
    limit = config.threshold("monotone_rel")
    rows.append(_check(cid, "monotonicity", mono, limit, mono <= limit, grid))

    gap = 0.0
    if base > 0:
        rho = modular(f, p)
        if base > 1:
            lower, upper = rho ** (1.0 / p.p_plus), rho ** (1.0 / p.p_minus)
        else:
            lower, upper = rho ** (1.0 / p.p_minus), rho ** (1.0 / p.p_plus)
        gap = max(0.0, lower / base - 1.0, base / upper - 1.0)
    limit = config.threshold("bridge_rel")
    rows.append(_check(cid, "modular_bridge", gap, limit, gap <= limit, grid, f"norm={base:.6g}"))

    s = 0.5 if i % 2 == 0 else 2.0
    defect = rescale_check(f, p, s, tol)
    limit = config.threshold("rescale_rel")
    rows.append(_check(cid, "rescale", defect, limit, defect <= limit, grid, f"s={s:g}"))

    magnitude = np.abs(f.values)
    levels = np.quantile(magnitude, [0.25, 0.5, 0.75, 1.0])
    sequence = [norm(f.with_values(np.minimum(magnitude, t)), p, tol) for t in levels]
    drops = [max(0.0, a / b - 1.0) for a, b in zip(sequence, sequence[1:]) if b > 0]
    fatou = max([0.0] + drops + ([max(0.0, base / sequence[-1] - 1.0)] if sequence[-1] > 0 else []))
    limit = config.threshold("fatou_rel")
    rows.append(_check(cid, "fatou", fatou, limit, fatou <= limit, grid))
    return rows


def _exponent_case(config: ScenarioConfig, grid: Grid, p: Exponent) -> List[Row]:
    lh = lh_diagnostics(p, seed=config.seed)
    rows = [_info("exponent", "lh0", lh.c0, grid, detail=p.name), _info("exponent", "lhinf", lh.cinf, grid, detail=p.name)]
    if p.lh0_bound is not None:
        limit = p.lh0_bound * (1.0 + config.threshold("lh_slack"))
        rows.append(_check("exponent", "lh0_bound", lh.c0, limit, lh.c0 <= limit, grid, p.name))
    return rows


def _midpoint_case(config: ScenarioConfig, grid: Grid) -> List[Row]:
    f = SampledFunction.from_callable(grid, lambda x: x[:, 0])
    err = abs(integrate(f, box_cells(grid, 0.0, 1.0)) - 0.5)
    limit = config.threshold("integral_abs")
    return [_check("midpoint", "midpoint", err, limit, err <= limit, grid)]


def _measure_case(config: ScenarioConfig, grid: Grid, f: SampledFunction, p: Exponent, sigma: Weight, i: int, tol: float) -> List[Row]:
    cid = f"measure-{i:03d}"
    # (sigma^(1/p))^p = sigma
    root = sigma.power(Exponent.from_values(grid, 1.0 / p.values, name=f"1/{p.name}"))
    left = measure_norm(f, p, sigma, tol)
    right = weighted_norm(f, root, p, tol)
    err = abs(left - right) / max(left, right, TINY)
    limit = config.threshold("measure_rel")
    rows = [_check(cid, "measure_identity", err, limit, err <= limit, grid, sigma.name)]

    negative = np.flatnonzero(grid.points[:, 0] < 0.0)
    rest = np.flatnonzero(grid.points[:, 0] >= 0.0)
    total = integrate(f)
    gap = abs(integrate(f, negative) + integrate(f, rest) - total) / max(integrate(abs(f)), TINY)
    limit = config.threshold("integral_abs")
    rows.append(_check(cid, "integral_additivity", gap, limit, gap <= limit, grid))
    return rows


def _norm_sanity(config: ScenarioConfig):
    grid = config.grid.build()
    tol = config.op("tol", DEFAULT_TOL)
    count = int(config.functions.get("count", 50))
    functions = build_functions(grid, config.functions, config.seed, count)
    lemma_count = int(config.op("lemma_cases", 100))
    lemma_functions = build_functions(grid, config.functions, config.seed + 1, lemma_count)
    p = build_exponent(grid, config.exponents.get("p", VARIABLE))
    sigma = build_weight(grid, config.weights.get("sigma", {"kind": "power", "a": 0.5}))

    cases = [Case(f"closed-{i:03d}", partial(_closed_form_case, config, grid, f, i, tol)) for i, f in enumerate(functions)]
    if grid.dim == 1 and grid.half_width >= 2:
        cases.append(Case("golden", partial(_golden_case, config, grid, tol)))
    cases.append(Case("exponent", partial(_exponent_case, config, grid, p)))
    cases.append(Case("midpoint", partial(_midpoint_case, config, grid)))
    for i, f in enumerate(lemma_functions):
        other = lemma_functions[(i + 1) % lemma_count]
        cases.append(Case(f"lemma-{i:03d}", partial(_lemma_case, config, grid, f, other, p, i, tol)))
    for i, f in enumerate(functions[: int(config.op("measure_cases", 10))]):
        cases.append(Case(f"measure-{i:03d}", partial(_measure_case, config, grid, f, p, sigma, i, tol)))
    return cases, None


# holder


def _holder_case(config, grid, f, g, h, exps, i, tol) -> List[Row]:
    p_const, p_var, p1, p2, third = exps
    cid = f"pair-{i:03d}"
    rows = []
    value = holder_defect(f, g, p_const, tol)
    slack = config.threshold("constant_slack")
    rows.append(_check(cid, "holder_constant", value, 1.0 + slack, value <= 1.0 + slack, grid))
    value = holder_defect(f, g, p_var, tol)
    limit = config.threshold("variable_max")
    rows.append(_check(cid, "holder_variable", value, limit, value <= limit, grid))
    limit = config.threshold("product_max")
    value = product_holder_ratio(f, g, p1, p2, tol)
    rows.append(_check(cid, "holder_product", value, limit, value <= limit, grid))
    value = generalized_holder_ratio([f, g, h], [p1, p2, third], tol)
    rows.append(_check(cid, "holder_generalized", value, limit, value <= limit, grid))
    return rows


def _holder_equality(config, grid, tol) -> List[Row]:
    e = SampledFunction.box_indicator(grid, 0.0, 1.0)
    value = holder_defect(e, e, constant_exponent(grid, 2.0), tol)
    limit = config.threshold("equality_abs")
    return [_check("equality", "holder_equality", abs(value - 1.0), limit, abs(value - 1.0) <= limit, grid)]


def _holder(config: ScenarioConfig):
    grid = config.grid.build()
    tol = config.op("tol", DEFAULT_TOL)
    pairs = build_pairs(grid, config.functions, config.seed)
    p_const = build_exponent(grid, config.exponents.get("p_const", {"kind": "constant", "value": 3.0}))
    p_var = build_exponent(grid, config.exponents.get("p_var", VARIABLE))
    p1 = build_exponent(grid, config.exponents.get("p1", {"kind": "bump", "base": 3.0, "amplitude": 0.5}))
    p2 = build_exponent(grid, config.exponents.get("p2", {"kind": "constant", "value": 3.0}))
    exps = (p_const, p_var, p1, p2, conjugate(combine(p1, p2)))
    cases = [Case("equality", partial(_holder_equality, config, grid, tol))]
    for i, (f, g) in enumerate(pairs):
        h = pairs[(i + 1) % len(pairs)][0]
        cases.append(Case(f"pair-{i:03d}", partial(_holder_case, config, grid, f, g, h, exps, i, tol)))
    return cases, None


# ap-sweep


DEFAULT_AP_MEMBERS = (
    {"id": "power-0.25", "weights": {"w": {"kind": "power", "a": 0.25}}, "diverging": False},
    {"id": "power-0.75", "weights": {"w": {"kind": "power", "a": 0.75}}, "diverging": True},
)


def _domain_grids(config: ScenarioConfig, domains: Sequence[float]) -> List[Grid]:
    return [config.grid.build(half_width=L) for L in domains]


def _trend_check(config: ScenarioConfig, cid: str, values: Sequence[float], diverging: bool, grid: Grid, growth_key: str, spread_key: str) -> Row:
    if diverging:
        factors = growth_factors(values)
        limit = config.threshold(growth_key)
        worst = min(factors) if factors else math.nan
        return _check(cid, "divergence", worst, limit, bool(factors) and worst >= limit, grid, f"factors={[round(x, 4) for x in factors]}")
    value = spread(values)
    limit = config.threshold(spread_key)
    return _check(cid, "stability", value, limit, value <= limit, grid)


def _ap_unit(config: ScenarioConfig, domains, tol) -> List[Row]:
    rows = []
    p_value = config.op("unit_p", 2.0)
    limit = config.threshold("unit_abs")
    for grid in _domain_grids(config, domains):
        fams = _families(config, grid)
        p = constant_exponent(grid, p_value)
        for c in (1.0, 3.7):
            value = ap_constant(constant_weight(grid, c), p, fams, tol=tol)
            rows.append(_check("unit-scalar", "unit_scalar", abs(value - 1.0), limit, abs(value - 1.0) <= limit, grid, f"c={c:g}"))
        vw = VectorWeight.build(constant_weight(grid, 1.0), constant_weight(grid, 1.0), p, p)
        value = vec_ap_constant(vw, p, p, fams, tol=tol)
        rows.append(_check("unit-vector", "unit_vector", abs(value - 1.0), limit, abs(value - 1.0) <= limit, grid))
        beta = ainfty_density(constant_weight(grid, 1.0), fams, 0.5)
        rows.append(_check("unit-ainfty", "unit_ainfty", abs(beta - 0.5), limit, abs(beta - 0.5) <= limit, grid))
        lo, hi = harmonic_compatibility(p, fams, tol)
        gap = max(abs(lo - 1.0), abs(hi - 1.0))
        rows.append(_check("unit-harmonic", "unit_harmonic", gap, limit, gap <= limit, grid))
    return rows


def _maximal_ratio(config: ScenarioConfig, grid: Grid, sigma: Weight, p: Exponent, family: CubeFamily, tol: float) -> float:
    worst = 0.0
    for f in build_functions(grid, config.functions, config.seed, int(config.op("maximal_functions", 5))):
        bottom = measure_norm(f, p, sigma, tol)
        if bottom > 0:
            top = measure_norm(weighted_dyadic_maximal(f, sigma, family).result, p, sigma, tol)
            worst = max(worst, top / bottom)
    return worst


def _ap_measures(config: ScenarioConfig, cid: str, grid: Grid, w: Weight, p: Exponent, tol: float) -> List[Row]:
    fams = _families(config, grid)
    alpha = config.op("alpha", 0.5)
    u = w.power(p, name=f"{w.name}^p")
    rows = [_info(cid, "ainfty_beta", ainfty_density(u, fams, alpha), grid, detail=u.name)]
    lo, hi = harmonic_compatibility(p, fams, tol)
    rows.append(_info(cid, "harmonic_range", hi / lo, grid, detail=f"[{lo:.6g}, {hi:.6g}]"))
    if p.p_minus <= 1:
        return rows

    profile = ainfty_profile(VectorWeight.build(w, constant_weight(grid, 1.0), p, p), fams, alpha)
    rows.append(_info(cid, "ainfty_u", profile.beta_u, grid))
    rows.append(_info(cid, "ainfty_sigma1", profile.beta_sigma1, grid))

    sigma = w.inverse().power(conjugate(p), name=f"sigma[{w.name}]")
    ratio = _maximal_ratio(config, grid, sigma, p, fams[0], tol)
    rows.append(_info(cid, "weighted_maximal", ratio, grid, fams[0].tag, sigma.name))
    if p.is_constant:
        # dyadic martingale maximal bound: p'
        limit = p.p_minus / (p.p_minus - 1.0) * (1.0 + config.threshold("doob_slack"))
        rows.append(_check(cid, "weighted_maximal_bound", ratio, limit, ratio <= limit, grid))
    return rows


def _ap_member(config: ScenarioConfig, member: Dict[str, Any], domains, tol) -> List[Row]:
    cid = member["id"]
    rows, values = [], []
    grids = _domain_grids(config, domains)
    for grid in grids:
        w = build_weight(grid, _spec(config, member, "weights", "w", UNIT_WEIGHT))
        p = build_exponent(grid, _spec(config, member, "exponents", "p", TWO))
        value = ap_constant(w, p, _families(config, grid), tol=tol)
        values.append(value)
        rows.append(_info(cid, "ap_constant", value, grid, detail=w.name))
        rows.extend(_ap_measures(config, cid, grid, w, p, tol))
    rows.append(_trend_check(config, cid, values, bool(member.get("diverging")), grids[-1], "growth", "stable_spread"))
    return rows


def _ap_sweep(config: ScenarioConfig):
    domains = config.domains or (1.0, 2.0, 4.0, 8.0)
    tol = config.op("tol", DEFAULT_TOL)
    cases = [Case("unit", partial(_ap_unit, config, domains, tol))]
    for member in config.cases or DEFAULT_AP_MEMBERS:
        cases.append(Case(member["id"], partial(_ap_member, config, member, domains, tol)))
    return cases, None


# characterization


def _char_member(config: ScenarioConfig, member: Dict[str, Any], domains, refinements, tol) -> List[Row]:
    cid = member["id"]
    rows = []
    vec_values, c_values = [], []
    for grid in _domain_grids(config, domains):
        vw = vector_weight(config, grid, member)
        fams = _families(config, grid)
        vec = vec_ap_constant(vw, vw.p1, vw.p2, fams, tol=tol)
        ch = scalar_characterization(vw, vw.p1, vw.p2, fams, tol=tol)
        vec_values.append(vec)
        c_values.append(max(ch))
        rows.append(_info(cid, "vec_ap", vec, grid))
        rows.append(_info(cid, "c_max", max(ch), grid, detail=f"c1={ch.c1:.6g} c2={ch.c2:.6g} c3={ch.c3:.6g}"))

    limit = config.threshold("divergence_growth")
    vec_growth = vec_values[-1] / vec_values[0]
    c_growth = c_values[-1] / c_values[0]
    vec_diverges = vec_growth >= limit
    c_diverges = c_growth >= limit
    last = _domain_grids(config, domains[-1:])[0]
    rows.append(_check(cid, "agreement", c_growth, limit, vec_diverges == c_diverges, last, f"vec growth {vec_growth:.6g}"))
    if "diverging" in member:
        rows.append(_check(cid, "declared", vec_growth, limit, vec_diverges == bool(member["diverging"]), last))
    if vec_diverges:
        return rows

    couplings_a, couplings_b = [], []
    for m in refinements:
        grid = config.grid.build(cell_exponent=m)
        vw = vector_weight(config, grid, member)
        fams = _families(config, grid)
        vec = vec_ap_constant(vw, vw.p1, vw.p2, fams, tol=tol)
        product = scalar_characterization(vw, vw.p1, vw.p2, fams, tol=tol).product
        couplings_a.append(vec / product ** 2)
        couplings_b.append(product / math.sqrt(vec))
        rows.append(_info(cid, "coupling_A", couplings_a[-1], grid))
        rows.append(_info(cid, "coupling_B", couplings_b[-1], grid))
    limit = config.threshold("coupling_spread")
    for name, values in (("coupling_A", couplings_a), ("coupling_B", couplings_b)):
        value = spread(values)
        rows.append(_check(cid, name, value, limit, value <= limit, grid))
    return rows


def _characterization(config: ScenarioConfig):
    domains = config.domains or (1.0, 2.0, 4.0, 8.0)
    m = config.grid.cell_exponent
    refinements = config.refinements or (m, m + 1)
    tol = config.op("tol", DEFAULT_TOL)
    if not config.cases:
        raise ValueError("characterization needs a weight family in 'cases'")
    cases = [Case(member["id"], partial(_char_member, config, member, domains, refinements, tol)) for member in config.cases]
    return cases, None


# necessity


def _nec_member(config: ScenarioConfig, member: Dict[str, Any], domains, tol) -> List[Row]:
    cid = member["id"]
    witness = config.op_name("witness", "sigma")
    rows, vec_values, nec_values = [], [], []
    grids = _domain_grids(config, domains)
    for grid in grids:
        vw = vector_weight(config, grid, member)
        fams = _families(config, grid)
        vec = vec_ap_constant(vw, vw.p1, vw.p2, fams, tol=tol)
        nec = necessity_ratio(vw, vw.p1, vw.p2, fams, witness, tol)
        vec_values.append(vec)
        nec_values.append(nec)
        rows.append(_info(cid, "vec_ap", vec, grid))
        rows.append(_info(cid, "necessity", nec, grid, detail=witness))
    if member.get("diverging"):
        limit = config.threshold("growth")
        for name, values in (("growth_vec", vec_values), ("growth_necessity", nec_values)):
            factors = growth_factors(values)
            worst = min(factors)
            rows.append(_check(cid, name, worst, limit, worst >= limit, grids[-1], f"factors={[round(x, 4) for x in factors]}"))
    if _is_unit_member(config, member):
        limit = config.threshold("unit_rel")
        worst = max(abs(v - 1.0) for v in nec_values)
        rows.append(_check(cid, "unit", worst, limit, worst <= limit, grids[-1]))
    return rows


def _rank_agreement(config: ScenarioConfig, rows: List[Row]) -> List[Row]:
    df = pd.DataFrame(rows, columns=ROW_COLUMNS)
    largest = df["half_width"].max()
    top = df[(df["assertion"].isna()) & (df["half_width"] == largest)]
    table = top.pivot_table(index="case", columns="metric", values="value", aggfunc="first")
    if len(table) < 2 or not {"vec_ap", "necessity"} <= set(table.columns):
        return []
    rho = float(spearmanr(table["vec_ap"], table["necessity"])[0])
    limit = config.threshold("rank_agreement")
    ok = not math.isnan(rho) and rho >= limit - 1e-12
    return [_check("family", "rank_agreement", rho, limit, ok, detail=f"{len(table)} members at L={largest:g}")]


def _necessity(config: ScenarioConfig):
    domains = config.domains or (1.0, 2.0, 4.0, 8.0)
    tol = config.op("tol", DEFAULT_TOL)
    if not config.cases:
        raise ValueError("necessity needs a weight family in 'cases'")
    cases = [Case(member["id"], partial(_nec_member, config, member, domains, tol)) for member in config.cases]
    return cases, partial(_rank_agreement, config)


# sufficiency


def _suff_member(config: ScenarioConfig, member: Dict[str, Any], refinements, tol) -> List[Row]:
    cid = member["id"]
    rows, maxima = [], []
    grid = None
    for m in refinements:
        grid = config.grid.build(cell_exponent=m)
        vw = vector_weight(config, grid, member)
        p = combine(vw.p1, vw.p2)
        family = dyadic_family(grid)
        worst = 0.0
        for f1, f2 in build_pairs(grid, config.functions, config.seed):
            denominator = weighted_norm(f1, vw.w1, vw.p1, tol) * weighted_norm(f2, vw.w2, vw.p2, tol)
            if denominator == 0.0:
                continue
            image = bilinear_maximal(f1, f2, family).result
            worst = max(worst, weighted_norm(image, vw.w, p, tol) / denominator)
        maxima.append(worst)
        rows.append(_info(cid, "max_ratio", worst, grid, family.tag))
    limit = config.threshold("ratio_max")
    rows.append(_check(cid, "bounded", max(maxima), limit, max(maxima) <= limit, grid))
    changes = [abs(g - 1.0) for g in growth_factors(maxima)]
    limit = config.threshold("refinement_change")
    worst = max(changes) if changes else 0.0
    rows.append(_check(cid, "refinement_change", worst, limit, worst <= limit, grid))
    return rows


def _sufficiency(config: ScenarioConfig):
    refinements = config.refinements or (4, 5, 6)
    tol = config.op("tol", DEFAULT_TOL)
    members = config.cases or ({"id": "unit"},)
    return [Case(member["id"], partial(_suff_member, config, member, refinements, tol)) for member in members], None


# czd-verify


def _czd_case(config: ScenarioConfig, grid: Grid, vw: VectorWeight, f1: SampledFunction, f2: SampledFunction, i: int, a: float) -> List[Row]:
    cid = f"input-{i:03d}"
    parts = split(f1, f2)
    g1 = parts.h1 * vw.sigma1.samples
    g2 = parts.h3 * vw.sigma2.samples
    dec = cz_decompose(g1, g2, a)
    checks = check_invariants(dec, g1, g2)
    rows = [_info(cid, "cubes", len(dec.selected()), grid, detail=f"levels={sorted(dec.levels)}")]
    for name in ("nesting", "coverage", "sandwich", "maximality", "e_disjoint"):
        rows.append(_check(cid, name, 0.0 if checks[name] else 1.0, None, checks[name], grid))
    ratios = density_ratios(dec)
    rows.append(_check(cid, "density", min(ratios) if ratios else 1.0, dec.alpha, checks["density"], grid))
    return rows


def _czd_verify(config: ScenarioConfig):
    grid = config.grid.build()
    vw = vector_weight(config, grid)
    a = config.op("a", default_base(grid.dim))
    pairs = build_pairs(grid, config.functions, config.seed)
    return [Case(f"input-{i:03d}", partial(_czd_case, config, grid, vw, f1, f2, i, a)) for i, (f1, f2) in enumerate(pairs)], None


# one-third


def _one_third_level(config: ScenarioConfig, m: int) -> List[Row]:
    grid = config.grid.build(cell_exponent=m)
    cid = f"m{m:02d}"
    one = SampledFunction.constant(grid, 1.0)
    constant = one_third_domination(one, one)
    expected = config.threshold("constant_case")
    rows = [_check(cid, "constant_case", constant, expected, constant == expected, grid)]
    worst = max(one_third_domination(f1, f2) for f1, f2 in build_pairs(grid, config.functions, config.seed))
    rows.append(_info("levels", "domination", worst, grid))
    return rows


def _one_third_spread(config: ScenarioConfig, rows: List[Row]) -> List[Row]:
    values = [r["value"] for r in rows if r["metric"] == "domination" and r["assertion"] is None]
    value = spread(values)
    limit = config.threshold("refinement_spread")
    return [_check("levels", "refinement_spread", value, limit, value <= limit, detail=f"{len(values)} refinements")]


def _one_third(config: ScenarioConfig):
    refinements = config.refinements or (4, 5, 6)
    return [Case(f"m{m:02d}", partial(_one_third_level, config, m)) for m in refinements], partial(_one_third_spread, config)


# sio-domination


def _kernel_case(config: ScenarioConfig, expect_pass: bool) -> List[Row]:
    dim = config.grid.dim
    kernel = build_kernel(dim, config.kernel) if expect_pass else singular_kernel(dim)
    report = check_kernel_bounds(kernel, int(config.op("samples", DEFAULT_SAMPLES)), seed=config.seed)
    name = "kernel_accepts" if expect_pass else "kernel_rejects"
    value = max(report.size_ratio, report.smoothness_ratio)
    return [_check(f"kernel-{kernel.name}", name, value, 1.0, report.passed == expect_pass, detail=f"size={report.size_ratio:.6g} smooth={report.smoothness_ratio:.6g}")]


def _oracle_case(config: ScenarioConfig) -> List[Row]:
    grid = config.grid.build()
    radius = config.op("radius", 0.5)
    kernel = separable_kernel(grid.dim, radius)
    f1, f2 = build_pairs(grid, config.functions, config.seed, 1)[0]
    image = apply_bilinear_sio(kernel, f1, f2).values
    points = grid.points
    dist = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1)
    phi = bump_profile(dist, radius) * (dist >= exclusion_radius(grid))
    expected = (phi @ f1.values) * (phi @ f2.values) * grid.cell_volume ** 2
    err = float(np.max(np.abs(image - expected))) / max(float(np.max(np.abs(expected))), TINY)
    limit = config.threshold("oracle_rel")
    return [_check("oracle", "separable_oracle", err, limit, err <= limit, grid)]


def _sharp_level(config: ScenarioConfig, m: int) -> List[Row]:
    grid = config.grid.build(cell_exponent=m)
    kernel = build_kernel(grid.dim, config.kernel)
    delta = config.op("delta", 0.25)
    f = SampledFunction.box_indicator(grid, 0.0, 1.0)
    rows = [_info("sharp", "sharp_domination", sharp_domination_test(kernel, f, f, delta), grid, detail=kernel.name)]

    surrogate = separable_kernel(grid.dim, config.op("radius", 0.5))
    spec = {**config.functions, "kind": "indicators"}
    trials = build_pairs(grid, spec, config.seed + 5, int(config.op("trials", 20)))
    worst = max(sharp_domination_test(surrogate, f1, f2, delta) for f1, f2 in trials)
    rows.append(_info("separable", "sharp_separable", worst, grid, detail=f"{surrogate.name} over {len(trials)} pairs"))
    return rows


def _weighted_sio_level(config: ScenarioConfig, m: int, tol: float) -> List[Row]:
    grid = config.grid.build(cell_exponent=m)
    kernel = build_kernel(grid.dim, config.kernel)
    vw = vector_weight(config, grid)
    rows = [_info("weighted", "triple_constant", vec_ap_constant(vw, vw.p1, vw.p2, dyadic_family(grid), tol=tol), grid, detail=vw.name)]
    worst = max(weighted_sio_ratio(kernel, f1, f2, vw, vw.p1, vw.p2, tol) for f1, f2 in build_pairs(grid, config.functions, config.seed))
    rows.append(_info("weighted", "weighted_ratio", worst, grid, detail=vw.name))
    limit = config.threshold("weighted_max")
    rows.append(_check("weighted", "weighted_sio", worst, limit, worst <= limit, grid, vw.name))
    return rows


def _sio_spread(config: ScenarioConfig, rows: List[Row]) -> List[Row]:
    out = []
    limit = config.threshold("refinement_spread")
    for case, metric in (("sharp", "sharp_domination"), ("separable", "sharp_separable")):
        values = [r["value"] for r in rows if r["metric"] == metric and r["assertion"] is None]
        value = spread(values)
        ok = value <= limit and all(math.isfinite(v) for v in values)
        out.append(_check(case, "refinement_spread", value, limit, ok, detail=f"{metric} over {len(values)} refinements"))
    ratios = [r["value"] for r in rows if r["metric"] == "weighted_ratio"]
    out.append(_info("weighted", "weighted_spread", spread(ratios), detail=f"{len(ratios)} refinements"))
    return out


def _sio_domination(config: ScenarioConfig):
    refinements = config.refinements or (4, 5, 6)
    tol = config.op("tol", DEFAULT_TOL)
    cases = [
        Case("kernel-accept", partial(_kernel_case, config, True)),
        Case("kernel-reject", partial(_kernel_case, config, False)),
        Case("oracle", partial(_oracle_case, config)),
    ]
    cases += [Case(f"sharp-m{m:02d}", partial(_sharp_level, config, m)) for m in refinements]
    cases += [Case(f"weighted-m{m:02d}", partial(_weighted_sio_level, config, m, tol)) for m in refinements]
    return cases, partial(_sio_spread, config)


# averaging


def random_disjoint_cubes(family: CubeFamily, rng: np.random.Generator) -> List[DyadicCube]:
    """A random level subset plus random uncovered cubes two levels finer."""
    levels = family.levels[1:]
    coarse = int(rng.choice(levels[:-1])) if len(levels) > 1 else levels[0]
    fine = min(coarse + 2, levels[-1])
    chosen = [c for c in family.level_cubes[coarse] if rng.random() < 0.5]
    covered = np.zeros(family.grid.size, dtype=bool)
    for cube in chosen:
        covered[cube.cells] = True
    if fine != coarse:
        for cube in family.level_cubes[fine]:
            if not covered[cube.cells].any() and rng.random() < 0.5:
                chosen.append(cube)
                covered[cube.cells] = True
    return chosen or [family.level_cubes[coarse][0]]


def _averaging_case(config: ScenarioConfig, grid: Grid, vw: VectorWeight, family: CubeFamily, f1, f2, h, i: int, tol: float) -> List[Row]:
    cid = f"trial-{i:03d}"
    rng = np.random.default_rng([config.seed, i, 3])
    cubes = random_disjoint_cubes(family, rng)
    p = combine(vw.p1, vw.p2)
    rows = [_info(cid, "cubes", len(cubes), grid, family.tag)]

    denominator = weighted_norm(f1, vw.w1, vw.p1, tol) * weighted_norm(f2, vw.w2, vw.p2, tol)
    if denominator > 0:
        value = weighted_norm(averaging_TQ(cubes, f1, f2).result, vw.w, p, tol) / denominator
        limit = config.threshold("tq_max")
        rows.append(_check(cid, "tq_bound", value, limit, value <= limit, grid))

    plain = norm(f1, vw.p1, tol) * norm(f2, vw.p2, tol)
    if plain > 0:
        value = norm(bilinear_p_averaging(f1, f2, vw.p1, vw.p2, cubes, tol), p, tol) / plain
        limit = config.threshold("p_average_max")
        rows.append(_check(cid, "p_average_bound", value, limit, value <= limit, grid))

    if p.p_minus > 1:
        value = property_g_ratio(f1, f2, h, vw.p1, vw.p2, cubes, tol)
        limit = config.threshold("property_g_max")
        rows.append(_check(cid, "property_g", value, limit, value <= limit, grid))
    return rows


def _averaging(config: ScenarioConfig):
    grid = config.grid.build()
    tol = config.op("tol", DEFAULT_TOL)
    vw = vector_weight(config, grid)
    family = dyadic_family(grid)
    pairs = build_pairs(grid, config.functions, config.seed)
    thirds = build_functions(grid, config.functions, config.seed + 2, len(pairs))
    cases = [
        Case(f"trial-{i:03d}", partial(_averaging_case, config, grid, vw, family, f1, f2, h, i, tol))
        for i, ((f1, f2), h) in enumerate(zip(pairs, thirds))
    ]
    return cases, None


SCENARIO_BUILDERS = {
    "norm-sanity": _norm_sanity,
    "holder": _holder,
    "ap-sweep": _ap_sweep,
    "characterization": _characterization,
    "necessity": _necessity,
    "sufficiency": _sufficiency,
    "czd-verify": _czd_verify,
    "one-third": _one_third,
    "sio-domination": _sio_domination,
    "averaging": _averaging,
}


def run_scenario(config: ScenarioConfig, *, write: bool = True) -> Report:
    logger.info("Initialising scenario %s (seed %d, %d threads)", config.scenario, config.seed, config.threads)
    cases, finalize = SCENARIO_BUILDERS[config.scenario](config)
    rows = run_cases(cases, config.threads)
    if finalize is not None:
        rows.extend(_guarded(Case("family", partial(finalize, rows))))
    report = Report(config.scenario, rows, config.to_dict())
    report.summary = summarise(rows)
    for name, ok in report.verdicts.items():
        logger.info("Analysing %s: %s", name, "pass" if ok else "FAIL")
    if write:
        csv_path, json_path = report.write(Path(config.output.directory), config.output.csv_name, config.output.json_name)
        logger.info("Report written to %s and %s", csv_path, json_path)
    return report
