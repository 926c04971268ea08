#!/usr/bin/env python3
"""
Scenario configuration: JSON files parsed into frozen dataclasses.

Validation errors carry the dotted path of the offending field, e.g.
``grid.cell_exponent``. ``ScenarioConfig.from_dict(cfg.to_dict()) == cfg``.
"""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from core.families import EXPONENT_KINDS, FUNCTION_KINDS, WEIGHT_KINDS
from core.grid import DEFAULT_MAX_CELLS, build_grid
from core.sio import KERNELS

logger = logging.getLogger(__name__)

SCENARIOS = (
    "norm-sanity",
    "holder",
    "ap-sweep",
    "characterization",
    "necessity",
    "sufficiency",
    "czd-verify",
    "one-third",
    "sio-domination",
    "averaging",
)

DEFAULT_THRESHOLDS: Dict[str, Dict[str, float]] = {
    "norm-sanity": {
        "closed_form_rel": 1e-8,
        "golden_abs": 1e-8,
        "homogeneity_rel": 2e-10,
        "monotone_rel": 1e-10,
        "bridge_rel": 1e-8,
        "rescale_rel": 1e-9,
        "fatou_rel": 1e-10,
        "lh_slack": 1e-9,
        "measure_rel": 1e-8,
        "integral_abs": 1e-12,
    },
    "holder": {"constant_slack": 5e-10, "variable_max": 4.0, "product_max": 4.0, "equality_abs": 1e-9},
    "ap-sweep": {"unit_abs": 1e-6, "stable_spread": 0.10, "growth": 1.15, "doob_slack": 1e-8},
    "characterization": {"divergence_growth": 1.2, "coupling_spread": 0.25},
    "necessity": {"growth": 1.15, "rank_agreement": 1.0, "unit_rel": 0.05},
    "sufficiency": {"refinement_change": 0.05, "ratio_max": 100.0},
    "czd-verify": {},
    "one-third": {"refinement_spread": 0.10, "constant_case": 0.5},
    "sio-domination": {"oracle_rel": 1e-12, "refinement_spread": 0.15, "weighted_max": 1e3},
    "averaging": {"tq_max": 10.0, "p_average_max": 10.0, "property_g_max": 10.0},
}


class ConfigError(ValueError):
    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


def _require(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(path, message)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


@dataclass(frozen=True)
class GridSpec:
    dim: int = 1
    half_width: float = 2.0
    cell_exponent: int = 4
    max_cells: int = DEFAULT_MAX_CELLS

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], path: str = "grid") -> "GridSpec":
        _check_keys(data, ("dim", "half_width", "cell_exponent", "max_cells"), path)
        spec = cls(
            dim=data.get("dim", 1),
            half_width=data.get("half_width", 2.0),
            cell_exponent=data.get("cell_exponent", 4),
            max_cells=data.get("max_cells", DEFAULT_MAX_CELLS),
        )
        _require(spec.dim in (1, 2) and _is_int(spec.dim), f"{path}.dim", f"expected 1 or 2, got {spec.dim!r}")
        _require(_is_number(spec.half_width), f"{path}.half_width", f"expected a number, got {spec.half_width!r}")
        _require(_is_int(spec.cell_exponent), f"{path}.cell_exponent", f"expected an integer, got {spec.cell_exponent!r}")
        _require(_is_int(spec.max_cells) and spec.max_cells > 0, f"{path}.max_cells", "expected a positive integer")
        try:
            build_grid(spec.dim, spec.half_width, spec.cell_exponent, max_cells=spec.max_cells)
        except ValueError as exc:
            raise ConfigError(path, str(exc)) from exc
        return replace(spec, half_width=float(spec.half_width))

    def to_dict(self) -> Dict[str, Any]:
        return {"dim": self.dim, "half_width": self.half_width, "cell_exponent": self.cell_exponent, "max_cells": self.max_cells}

    def build(self, *, half_width: Optional[float] = None, cell_exponent: Optional[int] = None):
        return build_grid(
            self.dim,
            self.half_width if half_width is None else half_width,
            self.cell_exponent if cell_exponent is None else cell_exponent,
            max_cells=self.max_cells,
        )


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "reports"
    csv_name: str = "rows.csv"
    json_name: str = "summary.json"

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], path: str = "output") -> "OutputSpec":
        _check_keys(data, ("directory", "csv_name", "json_name"), path)
        spec = cls(**dict(data))
        for key in ("directory", "csv_name", "json_name"):
            value = getattr(spec, key)
            _require(isinstance(value, str) and value, f"{path}.{key}", "expected a non-empty string")
        return spec

    def to_dict(self) -> Dict[str, Any]:
        return {"directory": self.directory, "csv_name": self.csv_name, "json_name": self.json_name}


def _check_keys(data: Mapping[str, Any], allowed: Tuple[str, ...], path: str) -> None:
    _require(isinstance(data, Mapping), path, f"expected an object, got {type(data).__name__}")
    for key in data:
        _require(key in allowed, f"{path}.{key}" if path else key, "unknown field")


def _check_kind(spec: Any, kinds: Tuple[str, ...], path: str) -> None:
    _require(isinstance(spec, Mapping), path, "expected an object with a 'kind'")
    _require(spec.get("kind") in kinds, f"{path}.kind", f"expected one of {', '.join(kinds)}, got {spec.get('kind')!r}")


def _check_weight(spec: Any, path: str) -> None:
    _check_kind(spec, WEIGHT_KINDS, path)
    if spec["kind"] == "product":
        factors = spec.get("factors")
        _require(isinstance(factors, list) and len(factors) == 2, f"{path}.factors", "expected two weight specs")
        for i, factor in enumerate(factors):
            _check_weight(factor, f"{path}.factors.{i}")
    elif spec["kind"] == "perturbed":
        _check_weight(spec.get("base"), f"{path}.base")


_TOP_LEVEL = (
    "scenario",
    "grid",
    "seed",
    "threads",
    "refinements",
    "domains",
    "exponents",
    "weights",
    "kernel",
    "functions",
    "cases",
    "translated",
    "operator",
    "output",
    "thresholds",
)


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    grid: GridSpec = field(default_factory=GridSpec)
    seed: int = 0
    threads: int = 1
    refinements: Tuple[int, ...] = ()
    domains: Tuple[float, ...] = ()
    exponents: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    weights: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    kernel: Dict[str, Any] = field(default_factory=lambda: {"kind": "odd"})
    functions: Dict[str, Any] = field(default_factory=lambda: {"kind": "indicators", "count": 10})
    cases: Tuple[Dict[str, Any], ...] = ()
    translated: bool = False
    operator: Dict[str, Any] = field(default_factory=dict)
    output: OutputSpec = field(default_factory=OutputSpec)
    thresholds: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ScenarioConfig":
        _check_keys(data, _TOP_LEVEL, "")
        scenario = data.get("scenario")
        _require(scenario in SCENARIOS, "scenario", f"expected one of {', '.join(SCENARIOS)}, got {scenario!r}")

        grid = GridSpec.from_dict(data.get("grid", {}))
        seed = data.get("seed", 0)
        _require(_is_int(seed) and seed >= 0, "seed", f"expected a non-negative integer, got {seed!r}")
        threads = data.get("threads", 1)
        _require(_is_int(threads) and threads >= 1, "threads", f"expected a positive integer, got {threads!r}")

        refinements = data.get("refinements", [])
        _require(isinstance(refinements, list), "refinements", "expected a list")
        for i, m in enumerate(refinements):
            _require(_is_int(m) and m >= 1, f"refinements.{i}", f"expected an integer >= 1, got {m!r}")
        domains = data.get("domains", [])
        _require(isinstance(domains, list), "domains", "expected a list")
        for i, L in enumerate(domains):
            _require(_is_number(L) and L >= 1, f"domains.{i}", f"expected a power of two >= 1, got {L!r}")
        for key, values in (("refinements", refinements), ("domains", domains)):
            for i, value in enumerate(values):
                try:
                    if key == "refinements":
                        grid.build(cell_exponent=value)
                    else:
                        grid.build(half_width=value)
                except ValueError as exc:
                    raise ConfigError(f"{key}.{i}", str(exc)) from exc

        exponents = data.get("exponents", {})
        _require(isinstance(exponents, Mapping), "exponents", "expected an object")
        for role, spec in exponents.items():
            _check_kind(spec, EXPONENT_KINDS, f"exponents.{role}")
        weights = data.get("weights", {})
        _require(isinstance(weights, Mapping), "weights", "expected an object")
        for role, spec in weights.items():
            _check_weight(spec, f"weights.{role}")
        kernel = data.get("kernel", {"kind": "odd"})
        _check_kind(kernel, tuple(KERNELS), "kernel")
        functions = data.get("functions", {"kind": "indicators", "count": 10})
        _check_kind(functions, FUNCTION_KINDS, "functions")
        _require(_is_int(functions.get("count", 10)) and functions.get("count", 10) >= 1, "functions.count", "expected a positive integer")

        cases = data.get("cases", [])
        _require(isinstance(cases, list), "cases", "expected a list")
        seen = set()
        for i, case in enumerate(cases):
            path = f"cases.{i}"
            _check_keys(case, ("id", "exponents", "weights", "diverging"), path)
            _require(isinstance(case.get("id"), str) and case["id"], f"{path}.id", "expected a non-empty string")
            _require(case["id"] not in seen, f"{path}.id", f"duplicate case id {case['id']!r}")
            seen.add(case["id"])
            for role, spec in case.get("exponents", {}).items():
                _check_kind(spec, EXPONENT_KINDS, f"{path}.exponents.{role}")
            for role, spec in case.get("weights", {}).items():
                _check_weight(spec, f"{path}.weights.{role}")

        translated = data.get("translated", False)
        _require(isinstance(translated, bool), "translated", "expected true or false")
        operator = data.get("operator", {})
        _require(isinstance(operator, Mapping), "operator", "expected an object")
        for key, value in operator.items():
            _require(_is_number(value) or isinstance(value, str), f"operator.{key}", f"expected a number or a name, got {value!r}")

        thresholds = dict(DEFAULT_THRESHOLDS[scenario])
        given = data.get("thresholds", {})
        _require(isinstance(given, Mapping), "thresholds", "expected an object")
        for key, value in given.items():
            _require(_is_number(value), f"thresholds.{key}", f"expected a number, got {value!r}")
            thresholds[key] = float(value)

        return cls(
            scenario=scenario,
            grid=grid,
            seed=seed,
            threads=threads,
            refinements=tuple(refinements),
            domains=tuple(float(L) for L in domains),
            exponents=copy.deepcopy(dict(exponents)),
            weights=copy.deepcopy(dict(weights)),
            kernel=copy.deepcopy(dict(kernel)),
            functions=copy.deepcopy(dict(functions)),
            cases=tuple(copy.deepcopy(dict(c)) for c in cases),
            translated=translated,
            operator={k: v for k, v in operator.items()},
            output=OutputSpec.from_dict(data.get("output", {})),
            thresholds=thresholds,
        )

    @classmethod
    def from_json(cls, path: Path) -> "ScenarioConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"{path} is not valid JSON: {exc}") from exc
        except OSError as exc:
            raise ConfigError("", f"cannot read {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario,
            "grid": self.grid.to_dict(),
            "seed": self.seed,
            "threads": self.threads,
            "refinements": list(self.refinements),
            "domains": list(self.domains),
            "exponents": copy.deepcopy(self.exponents),
            "weights": copy.deepcopy(self.weights),
            "kernel": copy.deepcopy(self.kernel),
            "functions": copy.deepcopy(self.functions),
            "cases": [copy.deepcopy(c) for c in self.cases],
            "translated": self.translated,
            "operator": dict(self.operator),
            "output": self.output.to_dict(),
            "thresholds": dict(self.thresholds),
        }

    def with_overrides(self, *, seed: Optional[int] = None, threads: Optional[int] = None, out: Optional[str] = None) -> "ScenarioConfig":
        """Apply CLI flags on top of the file."""
        cfg = self
        if seed is not None:
            _require(seed >= 0, "seed", f"expected a non-negative integer, got {seed}")
            cfg = replace(cfg, seed=seed)
        if threads is not None:
            _require(threads >= 1, "threads", f"expected a positive integer, got {threads}")
            cfg = replace(cfg, threads=threads)
        if out is not None:
            cfg = replace(cfg, output=replace(cfg.output, directory=out))
        return cfg

    def threshold(self, name: str) -> float:
        if name not in self.thresholds:
            raise ConfigError(f"thresholds.{name}", "missing threshold")
        return self.thresholds[name]

    def op(self, name: str, default: float) -> float:
        return float(self.operator.get(name, default))

    def op_name(self, name: str, default: str) -> str:
        return str(self.operator.get(name, default))
