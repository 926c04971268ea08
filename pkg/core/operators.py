#!/usr/bin/env python3
"""
Maximal, averaging and sharp maximal operators on sampled functions.

Per-level cube averages come from np.bincount over the family's cell labels.
Single-cube averages (averaging_AQ) go through the same sequential bincount
summation, so pointwise comparisons such as |A_Q(f1, f2)| <= M(f1, f2) hold
bit-for-bit rather than up to rounding.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from core.exponents import Exponent, combine, conjugate, harmonic_mean
from core.grid import CubeFamily, DyadicCube, SampledFunction, as_families, cubes_disjoint, translated_families
from core.norms import DEFAULT_TOL, solve_luxemburg

logger = logging.getLogger(__name__)

DEFAULT_SHARP_DELTA = 0.25

Families = Union[CubeFamily, Iterable[CubeFamily]]


@dataclass(frozen=True, eq=False)
class OperatorOutput:
    result: SampledFunction
    families: Tuple[str, ...]
    argmax: Optional[np.ndarray] = None

    @property
    def values(self) -> np.ndarray:
        return self.result.values


def _same_grid(*functions: SampledFunction) -> None:
    grid = functions[0].grid
    for f in functions[1:]:
        if f.grid != grid:
            raise ValueError("Operator inputs live on different grids")


def level_averages(vals: np.ndarray, family: CubeFamily, level: int) -> np.ndarray:
    labels = family.labels[level]
    sums = np.bincount(labels, weights=vals, minlength=len(family.level_cubes[level]))
    counts = np.bincount(labels, minlength=len(family.level_cubes[level]))
    return sums / counts


def _cube_sum(vals: np.ndarray, cube: DyadicCube) -> float:
    # Same accumulation order as the per-level bincount.
    return float(np.bincount(np.zeros(cube.count, dtype=np.intp), weights=vals[cube.cells], minlength=1)[0])


def cube_average(f: SampledFunction, cube: DyadicCube) -> float:
    return _cube_sum(f.values, cube) / cube.count


def _interval_averages(vals: np.ndarray, length: int) -> np.ndarray:
    prefix = np.concatenate(([0.0], np.cumsum(vals)))
    return (prefix[length:] - prefix[:-length]) / length


def _best_window(per_start: np.ndarray, length: int, size: int) -> np.ndarray:
    pad = np.full(length - 1, -np.inf)
    padded = np.concatenate((pad, per_start, pad))
    return sliding_window_view(padded, length)[:size].max(axis=1)


def _exhaustive_product(values: Sequence[np.ndarray]) -> np.ndarray:
    """Max over all grid-aligned intervals of the product of averages (dim 1)."""
    size = values[0].size
    best = np.zeros(size)
    for length in range(1, size + 1):
        per_start = np.ones(size - length + 1)
        for vals in values:
            per_start = per_start * _interval_averages(vals, length)
        best = np.maximum(best, _best_window(per_start, length, size))
    return best


def _family_product(values: Sequence[np.ndarray], families: List[CubeFamily]) -> Tuple[np.ndarray, np.ndarray]:
    size = values[0].size
    best = np.zeros(size)
    arg = np.full(size, np.iinfo(np.int64).min, dtype=np.int64)
    for family in families:
        for level in family.levels:
            per_cube = np.ones(len(family.level_cubes[level]))
            for vals in values:
                per_cube = per_cube * level_averages(vals, family, level)
            here = per_cube[family.labels[level]]
            better = here > best
            arg[better] = level
            best = np.where(better, here, best)
    return best, arg


def _product_maximal(functions: Sequence[SampledFunction], families: Families, exhaustive: bool) -> OperatorOutput:
    _same_grid(*functions)
    grid = functions[0].grid
    values = [np.abs(f.values) for f in functions]
    if exhaustive:
        if grid.dim != 1:
            raise ValueError(f"Exhaustive interval sweep needs dim 1, got {grid.dim}")
        best = _exhaustive_product(values)
        return OperatorOutput(SampledFunction(grid, best), ("intervals",))
    fams = as_families(families)
    best, arg = _family_product(values, fams)
    return OperatorOutput(SampledFunction(grid, best), tuple(f.tag for f in fams), arg)


def maximal(f: SampledFunction, families: Families, *, exhaustive: bool = False) -> OperatorOutput:
    """Mf(x) = max over enumerated cubes Q containing x of the average of |f| on Q."""
    return _product_maximal([f], families, exhaustive)


def bilinear_maximal(f1: SampledFunction, f2: SampledFunction, families: Families, *, exhaustive: bool = False) -> OperatorOutput:
    """M(f1, f2)(x) = max over cubes Q containing x of <|f1|>_Q <|f2|>_Q."""
    return _product_maximal([f1, f2], families, exhaustive)


def weighted_dyadic_maximal(f: SampledFunction, sigma, family: CubeFamily) -> OperatorOutput:
    """M_sigma f(x) = max over cubes Q containing x of (int_Q |f| sigma) / sigma(Q)."""
    if sigma.grid != f.grid:
        raise ValueError("Function and weight live on different grids")
    weighted = np.abs(f.values) * sigma.values
    best = np.zeros(f.grid.size)
    for level in family.levels:
        labels = family.labels[level]
        n = len(family.level_cubes[level])
        ratio = np.bincount(labels, weights=weighted, minlength=n) / np.bincount(labels, weights=sigma.values, minlength=n)
        best = np.maximum(best, ratio[labels])
    return OperatorOutput(SampledFunction(f.grid, best), (family.tag,))


def one_third_domination(f1: SampledFunction, f2: SampledFunction) -> float:
    """max over cells of M(f1, f2) / sum_t M^{D_t}(f1, f2); 0 when both vanish."""
    grid = f1.grid
    if grid.dim not in (1, 2):
        raise ValueError(f"One-third comparison supports dim 1 or 2, got {grid.dim}")
    families = translated_families(grid)
    if grid.dim == 1:
        full = bilinear_maximal(f1, f2, families, exhaustive=True).values
    else:
        full = bilinear_maximal(f1, f2, families).values
    dyadic_sum = np.zeros(grid.size)
    for family in families:
        dyadic_sum = dyadic_sum + bilinear_maximal(f1, f2, family).values
    mask = dyadic_sum > 0
    if not np.any(mask):
        return 0.0
    ratio = float(np.max(full[mask] / dyadic_sum[mask]))
    logger.debug("Analysing one-third domination on %d cells: %.6g", int(mask.sum()), ratio)
    return ratio


def averaging_AQ(cube: DyadicCube, f1: SampledFunction, f2: SampledFunction) -> OperatorOutput:
    """A_Q(f1, f2) = <f1>_Q <f2>_Q chi_Q."""
    _same_grid(f1, f2)
    out = np.zeros(f1.grid.size)
    out[cube.cells] = cube_average(f1, cube) * cube_average(f2, cube)
    return OperatorOutput(SampledFunction(f1.grid, out), (f"Q{cube.key()}",))


def _check_disjoint(cubes: Sequence[DyadicCube], size: int) -> None:
    if not cubes_disjoint(cubes, size):
        raise ValueError(f"Cube collection of {len(cubes)} cubes is not pairwise disjoint")


def averaging_TQ(cubes: Sequence[DyadicCube], f1: SampledFunction, f2: SampledFunction) -> OperatorOutput:
    """T(f1, f2) = sum over a disjoint collection of A_Q(f1, f2)."""
    _same_grid(f1, f2)
    _check_disjoint(cubes, f1.grid.size)
    out = np.zeros(f1.grid.size)
    for cube in cubes:
        out[cube.cells] = cube_average(f1, cube) * cube_average(f2, cube)
    return OperatorOutput(SampledFunction(f1.grid, out), (f"{len(cubes)} cubes",))


def p_average(h: SampledFunction, p: Exponent, cube: DyadicCube, tol: float = DEFAULT_TOL) -> float:
    """<h>_{p(.),Q} = ||h chi_Q||_p(.) / ||chi_Q||_p(.)."""
    exps = p.values[cube.cells]
    top = solve_luxemburg(np.abs(h.values[cube.cells]), exps, cube.cell_volume, tol=tol).value
    bottom = solve_luxemburg(np.ones(cube.count), exps, cube.cell_volume, tol=tol).value
    return top / bottom


def p_averaging_operator(h: SampledFunction, p: Exponent, cubes: Sequence[DyadicCube], tol: float = DEFAULT_TOL) -> SampledFunction:
    _check_disjoint(cubes, h.grid.size)
    out = np.zeros(h.grid.size)
    for cube in cubes:
        out[cube.cells] = p_average(h, p, cube, tol)
    return SampledFunction(h.grid, out)


def bilinear_p_averaging(
    f1: SampledFunction,
    f2: SampledFunction,
    p1: Exponent,
    p2: Exponent,
    cubes: Sequence[DyadicCube],
    tol: float = DEFAULT_TOL,
) -> SampledFunction:
    _same_grid(f1, f2)
    _check_disjoint(cubes, f1.grid.size)
    out = np.zeros(f1.grid.size)
    for cube in cubes:
        out[cube.cells] = p_average(f1, p1, cube, tol) * p_average(f2, p2, cube, tol)
    return SampledFunction(f1.grid, out)


def property_g_ratio(
    f1: SampledFunction,
    f2: SampledFunction,
    h: SampledFunction,
    p1: Exponent,
    p2: Exponent,
    cubes: Sequence[DyadicCube],
    tol: float = DEFAULT_TOL,
) -> float:
    """sum_Q ||f1 chi_Q|| ||f2 chi_Q|| ||h chi_Q||_p' over ||f1|| ||f2|| ||h||_p'."""
    _same_grid(f1, f2, h)
    _check_disjoint(cubes, f1.grid.size)
    pc = conjugate(combine(p1, p2))
    cv = f1.grid.cell_volume

    def local(f: SampledFunction, q: Exponent, cells: np.ndarray) -> float:
        return solve_luxemburg(np.abs(f.values[cells]), q.values[cells], cv, tol=tol).value

    everything = f1.grid.all_cells
    denominator = local(f1, p1, everything) * local(f2, p2, everything) * local(h, pc, everything)
    if denominator == 0.0:
        return 0.0
    total = math.fsum(local(f1, p1, q.cells) * local(f2, p2, q.cells) * local(h, pc, q.cells) for q in cubes)
    return total / denominator


def harmonic_compatibility(p: Exponent, families: Families, tol: float = DEFAULT_TOL) -> Tuple[float, float]:
    """Range of ||chi_Q||_p(.) / |Q|^(1/p_Q) over the enumerated cubes."""
    lo, hi = math.inf, 0.0
    for family in as_families(families):
        for cube in family:
            top = solve_luxemburg(np.ones(cube.count), p.values[cube.cells], cube.cell_volume, tol=tol).value
            ratio = top / cube.measure ** (1.0 / harmonic_mean(p, cube))
            lo, hi = min(lo, ratio), max(hi, ratio)
    return lo, hi


def sharp_maximal(f: SampledFunction, delta: float, families: Families) -> OperatorOutput:
    """M#_delta f = M#(|f|^delta)^(1/delta); delta = 1 gives the plain sharp maximal function."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    fams = as_families(families)
    g = np.abs(f.values) ** delta
    best = np.zeros(f.grid.size)
    for family in fams:
        for level in family.levels:
            labels = family.labels[level]
            n = len(family.level_cubes[level])
            mean = level_averages(g, family, level)
            osc = np.bincount(labels, weights=np.abs(g - mean[labels]), minlength=n) / np.bincount(labels, minlength=n)
            lo = np.full(n, np.inf)
            hi = np.full(n, -np.inf)
            np.minimum.at(lo, labels, g)
            np.maximum.at(hi, labels, g)
            osc[lo == hi] = 0.0
            best = np.maximum(best, osc[labels])
    return OperatorOutput(SampledFunction(f.grid, best ** (1.0 / delta)), tuple(fam.tag for fam in fams))
