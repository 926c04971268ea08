#!/usr/bin/env python3
"""
Truncated uniform grids, sampled step functions and dyadic cube lattices.

Everything in this toolkit lives on [-L, L)^dim cut into cells of side h = 2^-m.
A SampledFunction is the step function taking one value per cell; all norms,
averages and suprema are computed for that step function exactly, and every
"supremum over all cubes" becomes a maximum over an enumerated CubeFamily
(a certified lower bound of the continuum constant).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_MAX_CELLS = 1 << 22
ONE_THIRD = 1.0 / 3.0

Translate = Tuple[float, ...]


class GridBudgetError(ValueError):
    """Raised when a grid would exceed the configured cell budget."""


def _is_power_of_two(value: float) -> bool:
    if value < 1 or not float(value).is_integer():
        return False
    n = int(value)
    return n & (n - 1) == 0


@dataclass(frozen=True)
class Grid:
    dim: int
    half_width: float
    cell_exponent: int

    @property
    def h(self) -> float:
        return 2.0 ** -self.cell_exponent

    @property
    def cells_per_axis(self) -> int:
        return int(2 * self.half_width) << self.cell_exponent

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.cells_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.cells_per_axis ** self.dim

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @property
    def volume(self) -> float:
        return (2.0 * self.half_width) ** self.dim

    @property
    def top_level(self) -> int:
        """Level k of the coarsest cubes (side 2L)."""
        return -(int(math.log2(self.half_width)) + 1)

    @property
    def levels(self) -> range:
        return range(self.top_level, self.cell_exponent + 1)

    @cached_property
    def axis_centers(self) -> np.ndarray:
        centers = (np.arange(self.cells_per_axis) + 0.5) * self.h - self.half_width
        centers.setflags(write=False)
        return centers

    @cached_property
    def points(self) -> np.ndarray:
        """Cell centres, shape (size, dim), C order."""
        axes = np.meshgrid(*([self.axis_centers] * self.dim), indexing="ij")
        pts = np.stack([a.reshape(-1) for a in axes], axis=1)
        pts.setflags(write=False)
        return pts

    @cached_property
    def radius(self) -> np.ndarray:
        r = np.linalg.norm(self.points, axis=1)
        r.setflags(write=False)
        return r

    @cached_property
    def all_cells(self) -> np.ndarray:
        cells = np.arange(self.size)
        cells.setflags(write=False)
        return cells

    def describe(self) -> Dict[str, float]:
        return {
            "dim": self.dim,
            "half_width": self.half_width,
            "cell_exponent": self.cell_exponent,
            "h": self.h,
            "cells": self.size,
        }


def build_grid(dim: int, half_width: float, cell_exponent: int, *, max_cells: int = DEFAULT_MAX_CELLS) -> Grid:
    if dim not in (1, 2):
        raise ValueError(f"Unsupported dimension: {dim} (expected 1 or 2)")
    if not _is_power_of_two(half_width):
        raise ValueError(f"Half width must be a power of 2 >= 1, got {half_width}")
    if int(cell_exponent) != cell_exponent or cell_exponent < 1:
        raise ValueError(f"Cell exponent must be an integer >= 1, got {cell_exponent}")
    grid = Grid(dim=int(dim), half_width=float(half_width), cell_exponent=int(cell_exponent))
    if grid.size > max_cells:
        raise GridBudgetError(f"Grid with {grid.size} cells exceeds the budget of {max_cells} cells")
    logger.debug("Initialising grid dim=%d L=%g m=%d (%d cells)", grid.dim, grid.half_width, grid.cell_exponent, grid.size)
    return grid


Scalar = Union[int, float]


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """One finite real value per grid cell."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size != self.grid.size:
            raise ValueError(f"Expected {self.grid.size} samples, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise ValueError("Sampled function has non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> "SampledFunction":
        """Sample ``fn`` at the cell centres; ``fn`` receives the (size, dim) point array."""
        return cls(grid, np.broadcast_to(np.asarray(fn(grid.points), dtype=float), (grid.size,)))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "SampledFunction":
        return cls(grid, np.full(grid.size, float(value)))

    @classmethod
    def indicator(cls, grid: Grid, cells: np.ndarray, value: float = 1.0) -> "SampledFunction":
        values = np.zeros(grid.size)
        values[np.asarray(cells, dtype=int)] = value
        return cls(grid, values)

    @classmethod
    def box_indicator(cls, grid: Grid, lower: Union[float, Sequence[float]], upper: Union[float, Sequence[float]]) -> "SampledFunction":
        return cls.indicator(grid, box_cells(grid, lower, upper))

    def with_values(self, values: np.ndarray) -> "SampledFunction":
        return SampledFunction(self.grid, values)

    def restrict(self, cells: np.ndarray) -> "SampledFunction":
        out = np.zeros(self.grid.size)
        idx = np.asarray(cells, dtype=int)
        out[idx] = self.values[idx]
        return self.with_values(out)

    def power(self, s: Union[float, np.ndarray, "SampledFunction"]) -> "SampledFunction":
        exponent = s.values if isinstance(s, SampledFunction) else s
        return self.with_values(np.power(np.abs(self.values), exponent))

    def _operand(self, other: Union[Scalar, "SampledFunction"]) -> Union[float, np.ndarray]:
        if isinstance(other, SampledFunction):
            if other.grid != self.grid:
                raise ValueError("Sampled functions live on different grids")
            return other.values
        return float(other)

    def __abs__(self) -> "SampledFunction":
        return self.with_values(np.abs(self.values))

    def __neg__(self) -> "SampledFunction":
        return self.with_values(-self.values)

    def __add__(self, other: Union[Scalar, "SampledFunction"]) -> "SampledFunction":
        return self.with_values(self.values + self._operand(other))

    __radd__ = __add__

    def __sub__(self, other: Union[Scalar, "SampledFunction"]) -> "SampledFunction":
        return self.with_values(self.values - self._operand(other))

    def __mul__(self, other: Union[Scalar, "SampledFunction"]) -> "SampledFunction":
        return self.with_values(self.values * self._operand(other))

    __rmul__ = __mul__

    def __truediv__(self, other: Union[Scalar, "SampledFunction"]) -> "SampledFunction":
        return self.with_values(self.values / self._operand(other))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def is_zero(self) -> bool:
        return not np.any(self.values)


def box_cells(grid: Grid, lower: Union[float, Sequence[float]], upper: Union[float, Sequence[float]]) -> np.ndarray:
    """Indices of cells whose centres lie in the half-open box [lower, upper)."""
    lo = np.broadcast_to(np.asarray(lower, dtype=float), (grid.dim,))
    hi = np.broadcast_to(np.asarray(upper, dtype=float), (grid.dim,))
    inside = np.all((grid.points >= lo) & (grid.points < hi), axis=1)
    return np.flatnonzero(inside)


def integrate(f: SampledFunction, region: Optional[np.ndarray] = None) -> float:
    """Riemann sum h^dim * sum f over ``region`` (all cells when omitted), correctly rounded."""
    values = f.values if region is None else f.values[np.asarray(region, dtype=int)]
    return math.fsum(values.tolist()) * f.grid.cell_volume


@dataclass(frozen=True, eq=False)
class DyadicCube:
    level: int
    offset: Tuple[int, ...]
    translate: Translate
    cells: np.ndarray
    cell_volume: float
    interior: bool

    @property
    def side(self) -> float:
        return 2.0 ** -self.level

    @property
    def count(self) -> int:
        return int(self.cells.size)

    @property
    def measure(self) -> float:
        """Measure of the cell set, |Q| as used by every average in the toolkit."""
        return self.count * self.cell_volume

    @property
    def lower(self) -> Tuple[float, ...]:
        sign = -1.0 if self.level % 2 else 1.0
        return tuple(self.side * (j + sign * t) for j, t in zip(self.offset, self.translate))

    @property
    def bounds(self) -> List[Tuple[float, float]]:
        return [(lo, lo + self.side) for lo in self.lower]

    def key(self) -> Tuple[int, Tuple[int, ...], Translate]:
        return (self.level, self.offset, self.translate)

    def describe(self) -> Dict[str, object]:
        return {
            "level": self.level,
            "offset": list(self.offset),
            "translate": list(self.translate),
            "side": self.side,
            "bounds": [list(b) for b in self.bounds],
            "cells": self.count,
            "interior": self.interior,
        }


def _translate_tag(dim: int, translate: Union[float, Sequence[float]]) -> Translate:
    raw = np.broadcast_to(np.asarray(translate, dtype=float), (dim,))
    tag = []
    for t in raw:
        if abs(t) < 1e-12:
            tag.append(0.0)
        elif abs(t - ONE_THIRD) < 1e-9:
            tag.append(ONE_THIRD)
        else:
            raise ValueError(f"Translate must be 0 or 1/3 per axis, got {t}")
    return tuple(tag)


@dataclass(frozen=True, eq=False)
class CubeFamily:
    grid: Grid
    translate: Translate
    level_cubes: Dict[int, Tuple[DyadicCube, ...]]
    labels: Dict[int, np.ndarray]
    all_levels_inside_domain: bool

    @property
    def tag(self) -> str:
        parts = ["1/3" if t else "0" for t in self.translate]
        return "t=(" + ",".join(parts) + ")"

    @property
    def levels(self) -> List[int]:
        return sorted(self.level_cubes)

    @cached_property
    def cubes(self) -> Tuple[DyadicCube, ...]:
        return tuple(c for k in self.levels for c in self.level_cubes[k])

    def __iter__(self) -> Iterator[DyadicCube]:
        return iter(self.cubes)

    def __len__(self) -> int:
        return len(self.cubes)

    def level_counts(self) -> Dict[int, int]:
        return {k: len(self.level_cubes[k]) for k in self.levels}

    def cube_at(self, level: int, cell: int) -> DyadicCube:
        return self.level_cubes[level][int(self.labels[level][cell])]

    def parent(self, cube: DyadicCube) -> Optional[DyadicCube]:
        """Next-coarser cube of this family containing the first cell of ``cube``."""
        if cube.level - 1 not in self.labels:
            return None
        return self.cube_at(cube.level - 1, int(cube.cells[0]))


def dyadic_family(grid: Grid, translate: Union[float, Sequence[float]] = 0.0) -> CubeFamily:
    """All cubes 2^-k([0,1)^n + j + (-1)^k t) meeting the domain, sides h .. 2L."""
    tag = _translate_tag(grid.dim, translate)
    centers = grid.axis_centers
    n = grid.cells_per_axis
    level_cubes: Dict[int, Tuple[DyadicCube, ...]] = {}
    labels: Dict[int, np.ndarray] = {}
    inside_everywhere = True

    for k in grid.levels:
        sign = -1.0 if k % 2 else 1.0
        scale = 2.0 ** k
        axis_codes = [np.floor(scale * centers - sign * t).astype(np.int64) for t in tag]
        mins = [int(c.min()) for c in axis_codes]
        spans = [int(c.max()) - lo + 1 for c, lo in zip(axis_codes, mins)]

        combined = np.zeros(grid.shape, dtype=np.int64)
        for axis, (codes, lo) in enumerate(zip(axis_codes, mins)):
            shape = [1] * grid.dim
            shape[axis] = n
            stride = int(np.prod(spans[axis + 1:], dtype=np.int64))
            combined = combined + (codes - lo).reshape(shape) * stride
        combined = combined.reshape(-1)

        keys, inverse, counts = np.unique(combined, return_inverse=True, return_counts=True)
        inverse = inverse.reshape(-1)
        order = np.argsort(inverse, kind="stable")
        splits = np.cumsum(counts)[:-1]
        cell_groups = np.split(order, splits)

        cubes = []
        for key, cells in zip(keys.tolist(), cell_groups):
            offset = []
            rest = key
            for axis in range(grid.dim):
                stride = int(np.prod(spans[axis + 1:], dtype=np.int64))
                offset.append(rest // stride + mins[axis])
                rest %= stride
            side = 2.0 ** -k
            lower = [side * (j + sign * t) for j, t in zip(offset, tag)]
            interior = all(lo >= -grid.half_width and lo + side <= grid.half_width for lo in lower)
            inside_everywhere &= interior
            cells = np.sort(cells)
            cells.setflags(write=False)
            cubes.append(
                DyadicCube(
                    level=k,
                    offset=tuple(offset),
                    translate=tag,
                    cells=cells,
                    cell_volume=grid.cell_volume,
                    interior=interior,
                )
            )
        inverse.setflags(write=False)
        level_cubes[k] = tuple(cubes)
        labels[k] = inverse

    family = CubeFamily(
        grid=grid,
        translate=tag,
        level_cubes=level_cubes,
        labels=labels,
        all_levels_inside_domain=inside_everywhere,
    )
    logger.debug("Initialising dyadic family %s with %d cubes", family.tag, len(family))
    return family


def translated_families(grid: Grid) -> List[CubeFamily]:
    """The 2^dim families D_t, t in {0, 1/3}^dim, with t = 0 first."""
    tags = [()]
    for _ in range(grid.dim):
        tags = [tag + (t,) for tag in tags for t in (0.0, ONE_THIRD)]
    return [dyadic_family(grid, tag) for tag in tags]


def cubes_disjoint(cubes: Sequence[DyadicCube], size: int) -> bool:
    seen = np.zeros(size, dtype=np.int64)
    for cube in cubes:
        np.add.at(seen, cube.cells, 1)
    return bool(np.all(seen <= 1))


def as_families(families: Union[CubeFamily, Iterable[CubeFamily]]) -> List[CubeFamily]:
    if isinstance(families, CubeFamily):
        return [families]
    out = list(families)
    if not out:
        raise ValueError("At least one cube family is required")
    return out
