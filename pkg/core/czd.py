#!/usr/bin/env python3
"""
Bilinear Calderon-Zygmund decomposition over the t = 0 dyadic family.

For thresholds a^k the level set Omega_k = {M^d(g1, g2) > a^k} is split into
maximal dyadic cubes Q with <g1>_Q <g2>_Q > a^k. Cubes that touch the edge of
the truncated domain, or whose parent does, are flagged as boundary cubes; the
structural checks that rely on a full parent skip them.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.grid import CubeFamily, DyadicCube, SampledFunction, dyadic_family
from core.operators import level_averages

logger = logging.getLogger(__name__)

RHO = {1: 1, 2: 1, 3: 2, 4: 2}


def default_base(dim: int) -> float:
    return float(2 ** (2 * dim + 1))


@dataclass(frozen=True, eq=False)
class SplitFunctions:
    h1: SampledFunction
    h2: SampledFunction
    h3: SampledFunction
    h4: SampledFunction
    rho: Dict[int, int] = field(default_factory=lambda: dict(RHO))

    def parts(self) -> Tuple[SampledFunction, SampledFunction, SampledFunction, SampledFunction]:
        return (self.h1, self.h2, self.h3, self.h4)


def _split_one(f: SampledFunction) -> Tuple[SampledFunction, SampledFunction]:
    big = f.values > 1.0
    return f.with_values(np.where(big, f.values, 0.0)), f.with_values(np.where(big, 0.0, f.values))


def split(f1: SampledFunction, f2: SampledFunction) -> SplitFunctions:
    """h1 = f1 chi_{f1 > 1}, h2 = f1 chi_{f1 <= 1}; h3, h4 likewise from f2."""
    h1, h2 = _split_one(f1)
    h3, h4 = _split_one(f2)
    return SplitFunctions(h1, h2, h3, h4)


@dataclass(frozen=True, eq=False)
class CZCube:
    threshold: int
    cube: DyadicCube
    product: float
    e_cells: np.ndarray
    boundary: bool

    @property
    def e_measure(self) -> float:
        return self.e_cells.size * self.cube.cell_volume


@dataclass(frozen=True, eq=False)
class CZDecomposition:
    base: float
    family: CubeFamily
    levels: Dict[int, Tuple[CZCube, ...]]
    omega: Dict[int, np.ndarray]
    warnings: Tuple[str, ...] = ()

    @property
    def alpha(self) -> float:
        """Density guaranteed on interior cubes: |E| >= alpha |Q|."""
        return 1.0 - 2.0 ** self.family.grid.dim / math.sqrt(self.base)

    @property
    def is_empty(self) -> bool:
        return not self.levels

    def selected(self) -> List[CZCube]:
        return [c for k in sorted(self.levels) for c in self.levels[k]]


def _level_products(g1: SampledFunction, g2: SampledFunction, family: CubeFamily) -> Dict[int, np.ndarray]:
    return {k: level_averages(g1.values, family, k) * level_averages(g2.values, family, k) for k in family.levels}


def _is_boundary(family: CubeFamily, cube: DyadicCube) -> bool:
    if not cube.interior:
        return True
    parent = family.parent(cube)
    return parent is None or not parent.interior


def cz_decompose(
    g1: SampledFunction,
    g2: SampledFunction,
    a: Optional[float] = None,
    family: Optional[CubeFamily] = None,
) -> CZDecomposition:
    grid = g1.grid
    if g2.grid != grid:
        raise ValueError("Decomposition inputs live on different grids")
    if np.any(g1.values < 0) or np.any(g2.values < 0):
        raise ValueError("Decomposition inputs must be nonnegative")
    base = default_base(grid.dim) if a is None else float(a)
    if base <= 2 ** (2 * grid.dim):
        raise ValueError(f"Base a must exceed 2^(2 dim) = {2 ** (2 * grid.dim)}, got {base}")
    family = family if family is not None else dyadic_family(grid, 0.0)
    if any(family.translate):
        raise ValueError(f"Decomposition runs on the t = 0 family, got {family.tag}")

    products = _level_products(g1, g2, family)
    firsts = {k: np.array([int(c.cells[0]) for c in family.level_cubes[k]]) for k in family.levels}
    maximal = np.zeros(grid.size)
    for k in family.levels:
        maximal = np.maximum(maximal, products[k][family.labels[k]])

    positive = maximal[maximal > 0]
    if positive.size == 0:
        logger.info("Initialising CZ decomposition: inputs vanish, nothing to select")
        return CZDecomposition(base, family, {}, {})

    lowest = math.floor(math.log(float(positive.min()), base))
    highest = math.ceil(math.log(float(positive.max()), base))
    omega: Dict[int, np.ndarray] = {}
    for k in range(lowest, highest + 2):
        cells = np.flatnonzero(maximal > base ** k)
        if cells.size:
            omega[k] = cells

    levels: Dict[int, Tuple[CZCube, ...]] = {}
    warnings: List[str] = []
    for k in sorted(omega):
        threshold = base ** k
        covered = np.zeros(grid.size, dtype=bool)
        chosen: List[Tuple[DyadicCube, float]] = []
        for level in family.levels:
            candidates = np.flatnonzero(products[level] > threshold)
            for idx in candidates[~covered[firsts[level][candidates]]]:
                cube = family.level_cubes[level][int(idx)]
                covered[cube.cells] = True
                chosen.append((cube, float(products[level][idx])))

        upper = omega.get(k + 1)
        next_mask = np.zeros(grid.size, dtype=bool)
        if upper is not None:
            next_mask[upper] = True
        entries = []
        for cube, product in chosen:
            boundary = _is_boundary(family, cube)
            if product > base * threshold:
                warnings.append(f"level {k}: cube {cube.key()} has product {product:.6g} above a^(k+1)")
            entries.append(CZCube(k, cube, product, cube.cells[~next_mask[cube.cells]], boundary))
        if not entries:
            warnings.append(f"level {k}: Omega is nonempty but no cube qualifies")
            continue
        levels[k] = tuple(entries)
        logger.debug("Analysing CZ level %d: %d cubes, %d cells in Omega", k, len(entries), omega[k].size)

    for message in warnings:
        logger.warning("CZ decomposition: %s", message)
    return CZDecomposition(base, family, levels, omega, tuple(warnings))


def check_invariants(dec: CZDecomposition, g1: SampledFunction, g2: SampledFunction) -> Dict[str, bool]:
    """Nesting, coverage, sandwich, maximality, E-disjointness and density."""
    grid = dec.family.grid
    base = dec.base
    keys = sorted(dec.omega)
    products = _level_products(g1, g2, dec.family)

    nesting = all(np.isin(dec.omega[k + 1], dec.omega[k]).all() for k in keys if k + 1 in dec.omega)

    coverage = True
    for k, entries in dec.levels.items():
        union = np.sort(np.concatenate([c.cube.cells for c in entries]))
        coverage &= np.array_equal(union, dec.omega[k])

    sandwich = maximality = density = True
    seen = np.zeros(grid.size, dtype=np.int64)
    for entry in dec.selected():
        np.add.at(seen, entry.e_cells, 1)
        if entry.boundary:
            continue
        threshold = base ** entry.threshold
        sandwich &= threshold < entry.product <= base * threshold
        parent = dec.family.parent(entry.cube)
        parent_product = float(products[parent.level][dec.family.labels[parent.level][parent.cells[0]]])
        maximality &= parent_product <= threshold
        density &= entry.e_cells.size >= dec.alpha * entry.cube.count

    return {
        "nesting": bool(nesting),
        "coverage": bool(coverage),
        "sandwich": bool(sandwich),
        "maximality": bool(maximality),
        "e_disjoint": bool(np.all(seen <= 1)),
        "density": bool(density),
    }


def density_ratios(dec: CZDecomposition) -> List[float]:
    """|E|/|Q| for every interior selected cube."""
    return [c.e_cells.size / c.cube.count for c in dec.selected() if not c.boundary]


def dump(dec: CZDecomposition) -> List[Dict[str, object]]:
    rows = []
    for entry in dec.selected():
        rows.append(
            {
                "threshold": entry.threshold,
                "level": entry.cube.level,
                "offset": list(entry.cube.offset),
                "bounds": [list(b) for b in entry.cube.bounds],
                "measure": entry.cube.measure,
                "e_measure": entry.e_measure,
                "product": entry.product,
                "boundary": entry.boundary,
            }
        )
    return rows
