#!/usr/bin/env python3
"""
Named constructors for exponents, weights, kernels and test functions.

Specs are plain dicts from config files, e.g. {"kind": "power", "a": 0.25}.
Unknown kinds and missing parameters raise ValueError naming the offending entry.
"""

from __future__ import annotations

import logging
from typing import Dict, List, Tuple

import numpy as np

from core.exponents import (
    Exponent,
    constant_exponent,
    log_cusp_exponent,
    piecewise_exponent,
    radial_exponent,
    smooth_bump_exponent,
)
from core.grid import Grid, SampledFunction
from core.sio import KERNELS, BilinearKernel, bump_profile
from core.weights import (
    Weight,
    constant_weight,
    perturbed_weight,
    power_weight,
    product_weight,
    shifted_power_weight,
)

logger = logging.getLogger(__name__)

EXPONENT_KINDS = ("constant", "bump", "radial", "logcusp", "piecewise")
WEIGHT_KINDS = ("constant", "power", "shifted_power", "product", "perturbed")
FUNCTION_KINDS = ("indicators", "power", "bump", "mixed")


def _param(spec: Dict, key: str, default=None):
    if key in spec:
        return spec[key]
    if default is None:
        raise ValueError(f"Spec {spec} is missing '{key}'")
    return default


def build_exponent(grid: Grid, spec: Dict) -> Exponent:
    kind = spec.get("kind")
    if kind == "constant":
        return constant_exponent(grid, float(_param(spec, "value")))
    if kind == "bump":
        p_inf = spec.get("p_infty")
        return smooth_bump_exponent(
            grid,
            float(_param(spec, "base")),
            float(_param(spec, "amplitude")),
            float(spec.get("frequency", 1.0)),
            None if p_inf is None else float(p_inf),
        )
    if kind == "radial":
        return radial_exponent(grid, float(_param(spec, "p_infty")), float(_param(spec, "amplitude")))
    if kind == "logcusp":
        return log_cusp_exponent(grid, float(_param(spec, "base")), float(_param(spec, "amplitude")))
    if kind == "piecewise":
        return piecewise_exponent(
            grid,
            float(_param(spec, "left")),
            float(_param(spec, "right")),
            float(spec.get("split", 0.0)),
            int(spec.get("axis", 0)),
        )
    raise ValueError(f"Unknown exponent kind: {kind}")


def build_weight(grid: Grid, spec: Dict) -> Weight:
    kind = spec.get("kind")
    if kind == "constant":
        return constant_weight(grid, float(spec.get("value", 1.0)))
    if kind == "power":
        return power_weight(grid, float(_param(spec, "a")))
    if kind == "shifted_power":
        return shifted_power_weight(grid, float(_param(spec, "a")))
    if kind == "product":
        factors = _param(spec, "factors")
        if len(factors) != 2:
            raise ValueError(f"Product weight needs two factors, got {len(factors)}")
        return product_weight(build_weight(grid, factors[0]), build_weight(grid, factors[1]))
    if kind == "perturbed":
        return perturbed_weight(
            build_weight(grid, _param(spec, "base")),
            float(_param(spec, "epsilon")),
            int(spec.get("seed", 0)),
        )
    raise ValueError(f"Unknown weight kind: {kind}")


def build_kernel(dim: int, spec: Dict) -> BilinearKernel:
    name = spec.get("kind")
    if name not in KERNELS:
        raise ValueError(f"Unknown kernel kind: {name}")
    if name == "separable":
        return KERNELS[name](dim, float(spec.get("radius", 1.0)))
    return KERNELS[name](dim)


def indicator_sum(grid: Grid, rng: np.random.Generator, *, terms: int, level: int, max_value: float) -> SampledFunction:
    """Sum of random dyadic boxes of side 2^-level with amplitudes in (0, max_value]."""
    if level > grid.cell_exponent:
        raise ValueError(f"Indicator level {level} is finer than the grid (m={grid.cell_exponent})")
    side = 2.0 ** -level
    slots = int(round(2 * grid.half_width / side))
    values = np.zeros(grid.size)
    for _ in range(terms):
        corner = -grid.half_width + side * rng.integers(0, slots, grid.dim)
        amplitude = max_value * (1.0 - rng.random())
        values += amplitude * SampledFunction.box_indicator(grid, corner, corner + side).values
    return SampledFunction(grid, values)


def power_profile(grid: Grid, beta: float, radius: float = 1.0) -> SampledFunction:
    if beta < 0:
        raise ValueError(f"Power profile needs beta >= 0, got {beta}")
    r = grid.radius
    return SampledFunction(grid, np.where(r < radius, np.power(r, -beta), 0.0))


def bump_function(grid: Grid, center, radius: float, height: float = 1.0) -> SampledFunction:
    dist = np.linalg.norm(grid.points - np.asarray(center, dtype=float), axis=1)
    return SampledFunction(grid, height * bump_profile(dist, radius))


def _one_function(grid: Grid, spec: Dict, kind: str, rng: np.random.Generator) -> SampledFunction:
    if kind == "indicators":
        return indicator_sum(
            grid,
            rng,
            terms=int(spec.get("terms", 3)),
            level=int(spec.get("level", 1)),
            max_value=float(spec.get("max_value", 3.0)),
        )
    if kind == "power":
        beta_max = float(spec.get("beta_max", 0.3))
        return power_profile(grid, beta_max * rng.random(), float(spec.get("radius", 1.0)))
    if kind == "bump":
        reach = 0.5 * grid.half_width
        center = rng.uniform(-reach, reach, grid.dim)
        return bump_function(grid, center, float(spec.get("radius", 0.5)), float(spec.get("max_value", 3.0)) * (1.0 - rng.random()))
    raise ValueError(f"Unknown test function kind: {kind}")


def build_functions(grid: Grid, spec: Dict, seed: int, count: int = 0) -> List[SampledFunction]:
    """Seeded test functions; function i depends only on (seed, i) and the grid."""
    kind = spec.get("kind", "indicators")
    if kind not in FUNCTION_KINDS:
        raise ValueError(f"Unknown test function kind: {kind}")
    total = count or int(spec.get("count", 10))
    cycle = ("indicators", "power", "bump")
    out = []
    for i in range(total):
        rng = np.random.default_rng([seed, i])
        out.append(_one_function(grid, spec, cycle[i % 3] if kind == "mixed" else kind, rng))
    return out


def build_pairs(grid: Grid, spec: Dict, seed: int, count: int = 0) -> List[Tuple[SampledFunction, SampledFunction]]:
    total = count or int(spec.get("count", 10))
    firsts = build_functions(grid, spec, seed, total)
    seconds = build_functions(grid, spec, seed + 1_000_003, total)
    return list(zip(firsts, seconds))
