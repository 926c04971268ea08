#!/usr/bin/env python3
"""
Variable exponents p(.) on a grid.

Constructors cover the profiles the experiments need: constants, a cosine bump
(Lipschitz, so LH0), a radial profile p_inf + A/log(e+|x|) (LH_inf), a log cusp
at the origin (LH0 but not Lipschitz) and a piecewise jump (deliberately not LH).
Where a constructor can bound the log-Hoelder quotient analytically it records
the bound, and lh_diagnostics() must stay below it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from core.grid import CubeFamily, DyadicCube, Grid, SampledFunction

logger = logging.getLogger(__name__)

DEFAULT_WINDOW_CAP = 4096
DEFAULT_RANDOM_PAIRS = 2048

CellsLike = Union[DyadicCube, np.ndarray, Sequence[int]]


def cells_of(region: CellsLike) -> np.ndarray:
    if isinstance(region, DyadicCube):
        return region.cells
    return np.asarray(region, dtype=int)


def boundary_cells(grid: Grid) -> np.ndarray:
    n = grid.cells_per_axis
    idx = np.indices(grid.shape).reshape(grid.dim, -1)
    on_edge = np.any((idx == 0) | (idx == n - 1), axis=0)
    return np.flatnonzero(on_edge)


class LHDiagnostics(NamedTuple):
    c0: float
    cinf: float


@dataclass(frozen=True, eq=False)
class Exponent:
    """A bounded exponent 0 < p_- <= p(x) <= p_+ < inf with a declared limit p_inf."""

    samples: SampledFunction
    p_infty: Optional[float] = None
    name: str = "custom"
    lh0_bound: Optional[float] = None
    lhinf_bound: Optional[float] = None

    def __post_init__(self) -> None:
        values = self.samples.values
        if np.any(values <= 0):
            raise ValueError(f"Exponent {self.name} must be positive, min is {values.min()}")
        if self.p_infty is None:
            edge = values[boundary_cells(self.samples.grid)]
            object.__setattr__(self, "p_infty", float(np.mean(edge)))
        elif self.p_infty <= 0:
            raise ValueError(f"Declared p_infty must be positive, got {self.p_infty}")

    @classmethod
    def from_values(cls, grid: Grid, values: np.ndarray, **kwargs) -> "Exponent":
        return cls(SampledFunction(grid, values), **kwargs)

    @property
    def grid(self) -> Grid:
        return self.samples.grid

    @property
    def values(self) -> np.ndarray:
        return self.samples.values

    @cached_property
    def p_minus(self) -> float:
        return float(self.values.min())

    @cached_property
    def p_plus(self) -> float:
        return float(self.values.max())

    @property
    def is_constant(self) -> bool:
        return self.p_minus == self.p_plus

    @cached_property
    def lh0_constant(self) -> float:
        return lh_diagnostics(self).c0

    @cached_property
    def lhinf_constant(self) -> float:
        return lh_diagnostics(self).cinf

    def minus_on(self, region: CellsLike) -> float:
        return float(self.values[cells_of(region)].min())

    def plus_on(self, region: CellsLike) -> float:
        return float(self.values[cells_of(region)].max())


def constant_exponent(grid: Grid, value: float) -> Exponent:
    return Exponent.from_values(grid, np.full(grid.size, float(value)), p_infty=float(value), name=f"const({value:g})", lh0_bound=0.0, lhinf_bound=0.0)


def smooth_bump_exponent(grid: Grid, base: float, amplitude: float, frequency: float = 1.0, p_infty: Optional[float] = None) -> Exponent:
    """p(x) = base + amplitude * prod_i cos(frequency * x_i)."""
    if base - abs(amplitude) <= 0:
        raise ValueError(f"Bump exponent would leave (0, inf): base={base}, amplitude={amplitude}")
    values = base + amplitude * np.prod(np.cos(frequency * grid.points), axis=1)
    # |grad p| <= |A| f, so Lip(1/p) <= |A| f / (base - |A|)^2; t(-log t) <= 1/e.
    lip = abs(amplitude) * abs(frequency) / (base - abs(amplitude)) ** 2
    return Exponent.from_values(
        grid,
        values,
        p_infty=p_infty,
        name=f"bump({base:g},{amplitude:g},{frequency:g})",
        lh0_bound=lip / math.e,
    )


def radial_exponent(grid: Grid, p_infty: float, amplitude: float) -> Exponent:
    """p(x) = p_inf + amplitude / log(e + |x|)."""
    values = p_infty + amplitude / np.log(math.e + grid.radius)
    if np.any(values <= 0):
        raise ValueError(f"Radial exponent would leave (0, inf): p_infty={p_infty}, amplitude={amplitude}")
    p_low = float(values.min())
    return Exponent.from_values(
        grid,
        values,
        p_infty=p_infty,
        name=f"radial({p_infty:g},{amplitude:g})",
        lh0_bound=abs(amplitude) / (math.e ** 2 * p_low ** 2),
        lhinf_bound=abs(amplitude) / (p_infty * p_low),
    )


def log_cusp_exponent(grid: Grid, base: float, amplitude: float) -> Exponent:
    """p(x) = base + amplitude / log(e + 1/|x|): continuous at 0 with a log modulus only."""
    if base <= 0 or amplitude < 0:
        raise ValueError(f"Log cusp needs base > 0 and amplitude >= 0, got {base}, {amplitude}")
    values = base + amplitude / np.log(math.e + 1.0 / grid.radius)
    # t -> A/log(e+1/t) is concave and increasing from 0, hence subadditive.
    return Exponent.from_values(grid, values, name=f"logcusp({base:g},{amplitude:g})", lh0_bound=amplitude / base ** 2)


def piecewise_exponent(grid: Grid, left: float, right: float, split: float = 0.0, axis: int = 0) -> Exponent:
    values = np.where(grid.points[:, axis] < split, float(left), float(right))
    return Exponent.from_values(grid, values, p_infty=float(right), name=f"jump({left:g},{right:g})")


def conjugate(p: Exponent) -> Exponent:
    if p.p_minus <= 1:
        raise ValueError(f"Conjugate of {p.name} is unbounded: p_- = {p.p_minus} <= 1")
    values = p.values / (p.values - 1.0)
    p_inf = p.p_infty / (p.p_infty - 1.0) if p.p_infty > 1 else None
    return Exponent.from_values(p.grid, values, p_infty=p_inf, name=f"{p.name}'")


def combine(p1: Exponent, p2: Exponent) -> Exponent:
    if p1.grid != p2.grid:
        raise ValueError("Exponents live on different grids")
    values = 1.0 / (1.0 / p1.values + 1.0 / p2.values)
    p_inf = 1.0 / (1.0 / p1.p_infty + 1.0 / p2.p_infty)
    return Exponent.from_values(p1.grid, values, p_infty=p_inf, name=f"({p1.name}|{p2.name})")


def scale(p: Exponent, s: float) -> Exponent:
    if s <= 0:
        raise ValueError(f"Scale factor must be positive, got {s}")
    return Exponent.from_values(p.grid, s * p.values, p_infty=s * p.p_infty, name=f"{s:g}*{p.name}")


def with_name(p: Exponent, name: str) -> Exponent:
    return replace(p, name=name)


def harmonic_mean(p: Exponent, region: CellsLike) -> float:
    """p_Q with 1/p_Q the average of 1/p over the cells of Q."""
    vals = p.values[cells_of(region)]
    if vals.size == 0:
        raise ValueError("Harmonic mean over an empty region")
    if vals.min() == vals.max():
        return float(vals[0])
    return vals.size / math.fsum((1.0 / vals).tolist())


def _offsets(grid: Grid, cap: int) -> np.ndarray:
    reach = int(math.ceil(0.5 / grid.h))
    if grid.dim == 1:
        d = np.arange(1, reach + 1)[:, None]
    else:
        a = np.arange(-reach, reach + 1)
        dx, dy = np.meshgrid(a, a, indexing="ij")
        d = np.stack([dx.reshape(-1), dy.reshape(-1)], axis=1)
        d = d[(d[:, 0] > 0) | ((d[:, 0] == 0) & (d[:, 1] > 0))]
    dist = np.linalg.norm(d, axis=1) * grid.h
    d = d[dist < 0.5]
    dist = dist[dist < 0.5]
    order = np.argsort(dist, kind="stable")
    return d[order][:cap]


def _shifted_pair(arr: np.ndarray, offset: np.ndarray):
    src, dst = [], []
    for axis, o in enumerate(int(v) for v in offset):
        n = arr.shape[axis]
        if o >= 0:
            src.append(slice(0, n - o))
            dst.append(slice(o, n))
        else:
            src.append(slice(-o, n))
            dst.append(slice(0, n + o))
    return arr[tuple(src)], arr[tuple(dst)]


def lh_diagnostics(
    p: Exponent,
    *,
    window_cap: int = DEFAULT_WINDOW_CAP,
    random_pairs: int = DEFAULT_RANDOM_PAIRS,
    seed: int = 0,
) -> LHDiagnostics:
    """Empirical LH0 and LH_inf constants of 1/p over sampled cell pairs."""
    grid = p.grid
    recip = (1.0 / p.values).reshape(grid.shape)
    c0 = 0.0
    for offset in _offsets(grid, window_cap):
        a, b = _shifted_pair(recip, offset)
        if a.size == 0:
            continue
        dist = float(np.linalg.norm(offset)) * grid.h
        c0 = max(c0, float(np.max(np.abs(a - b))) * -math.log(dist))

    if random_pairs > 0 and grid.size > 1:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, grid.size, random_pairs)
        j = rng.integers(0, grid.size, random_pairs)
        dist = np.linalg.norm(grid.points[i] - grid.points[j], axis=1)
        keep = (dist > 0) & (dist < 0.5)
        if np.any(keep):
            flat = recip.reshape(-1)
            quot = np.abs(flat[i[keep]] - flat[j[keep]]) * -np.log(dist[keep])
            c0 = max(c0, float(quot.max()))

    cinf = float(np.max(np.abs(1.0 / p.values - 1.0 / p.p_infty) * np.log(math.e + grid.radius)))
    logger.debug("Analysing LH constants of %s: C0=%.6g Cinf=%.6g", p.name, c0, cinf)
    return LHDiagnostics(c0=c0, cinf=cinf)


def diening_constant(p: Exponent, family: CubeFamily) -> float:
    """max over cubes of |Q|^(p_-(Q) - p_+(Q))."""
    worst = 0.0
    for cube in family:
        vals = p.values[cube.cells]
        worst = max(worst, cube.measure ** float(vals.min() - vals.max()))
    return worst
