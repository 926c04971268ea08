#!/usr/bin/env python3
"""
Weights and weight-class constants.

Every constant is a maximum over the cubes of one or more CubeFamily objects,
so it is a certified lower bound of the supremum over all cubes. Divergence is
read off from growth under refinement or domain doubling, never from a single
number.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, List, NamedTuple, Optional, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.optimize import bisect

from core.exponents import Exponent, combine, conjugate, scale
from core.grid import CubeFamily, DyadicCube, Grid, SampledFunction, as_families
from core.norms import DEFAULT_TOL, NormConvergenceError, solve_luxemburg

logger = logging.getLogger(__name__)

Families = Union[CubeFamily, Iterable[CubeFamily]]


@dataclass(frozen=True, eq=False)
class Weight:
    """0 < w(x) < inf on every cell."""

    samples: SampledFunction
    name: str = "custom"

    def __post_init__(self) -> None:
        values = self.samples.values
        if np.any(values <= 0):
            raise ValueError(f"Weight {self.name} must be positive on every cell, min is {values.min()}")

    @classmethod
    def from_values(cls, grid: Grid, values: np.ndarray, name: str = "custom") -> "Weight":
        return cls(SampledFunction(grid, values), name)

    @property
    def grid(self) -> Grid:
        return self.samples.grid

    @property
    def values(self) -> np.ndarray:
        return self.samples.values

    def power(self, s: Union[float, Exponent], name: Optional[str] = None) -> "Weight":
        exponent = s.values if isinstance(s, Exponent) else float(s)
        label = s.name if isinstance(s, Exponent) else f"{s:g}"
        return Weight.from_values(self.grid, np.power(self.values, exponent), name or f"{self.name}^{label}")

    def inverse(self) -> "Weight":
        return Weight.from_values(self.grid, 1.0 / self.values, f"1/{self.name}")

    def __mul__(self, other: "Weight") -> "Weight":
        if other.grid != self.grid:
            raise ValueError("Weights live on different grids")
        return Weight.from_values(self.grid, self.values * other.values, f"{self.name}*{other.name}")

    def measure(self, cells: np.ndarray) -> float:
        """w(E) for a set of cells."""
        return math.fsum(self.values[np.asarray(cells, dtype=int)].tolist()) * self.grid.cell_volume


def constant_weight(grid: Grid, value: float = 1.0) -> Weight:
    return Weight.from_values(grid, np.full(grid.size, float(value)), f"const({value:g})")


def power_weight(grid: Grid, a: float) -> Weight:
    """|x|^a; cell centres never sit on the origin, which regularises the singularity."""
    return Weight.from_values(grid, np.power(grid.radius, a), f"|x|^{a:g}")


def shifted_power_weight(grid: Grid, a: float) -> Weight:
    return Weight.from_values(grid, np.power(1.0 + grid.radius, a), f"(1+|x|)^{a:g}")


def product_weight(first: Weight, second: Weight) -> Weight:
    return first * second


def perturbed_weight(w: Weight, epsilon: float, seed: int = 0) -> Weight:
    """w * exp(epsilon * u) with u uniform on [-1, 1) per cell."""
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-1.0, 1.0, w.grid.size)
    return Weight.from_values(w.grid, w.values * np.exp(epsilon * noise), f"{w.name}~{epsilon:g}")


@dataclass(frozen=True, eq=False)
class VectorWeight:
    w1: Weight
    w2: Weight
    w: Weight
    u: Weight
    sigma1: Weight
    sigma2: Weight
    p1: Exponent
    p2: Exponent
    p: Exponent

    @classmethod
    def build(cls, w1: Weight, w2: Weight, p1: Exponent, p2: Exponent) -> "VectorWeight":
        if not (w1.grid == w2.grid == p1.grid == p2.grid):
            raise ValueError("Vector weight components live on different grids")
        p = combine(p1, p2)
        w = w1 * w2
        return cls(
            w1=w1,
            w2=w2,
            w=w,
            u=w.power(p, name=f"u[{w.name}]"),
            sigma1=w1.inverse().power(conjugate(p1), name=f"sigma1[{w1.name}]"),
            sigma2=w2.inverse().power(conjugate(p2), name=f"sigma2[{w2.name}]"),
            p1=p1,
            p2=p2,
            p=p,
        )

    @property
    def grid(self) -> Grid:
        return self.w1.grid

    @property
    def name(self) -> str:
        return f"({self.w1.name}, {self.w2.name})"


class SweepResult(NamedTuple):
    value: float
    cube: Optional[DyadicCube]


def _norm_on(abs_vals: np.ndarray, p: Exponent, cube: DyadicCube, tol: float) -> float:
    return solve_luxemburg(abs_vals[cube.cells], p.values[cube.cells], cube.cell_volume, tol=tol).value


def sweep_max(families: Families, quantity: Callable[[DyadicCube], float]) -> SweepResult:
    """Largest value of ``quantity`` over every cube of every family."""
    best, arg = 0.0, None
    for family in as_families(families):
        for cube in family:
            try:
                value = quantity(cube)
            except NormConvergenceError as exc:
                raise NormConvergenceError(f"Norm failed on cube {cube.describe()}: {exc}", exc.bracket) from exc
            if value > best or arg is None:
                best, arg = value, cube
    return SweepResult(best, arg)


def ap_sweep(w: Weight, p: Exponent, families: Families, *, p_conj: Optional[Exponent] = None, tol: float = DEFAULT_TOL) -> SweepResult:
    pc = p_conj if p_conj is not None else conjugate(p)
    wv = w.values
    inv = 1.0 / wv
    return sweep_max(families, lambda q: _norm_on(wv, p, q, tol) * _norm_on(inv, pc, q, tol) / q.measure)


def ap_constant(w: Weight, p: Exponent, families: Families, *, p_conj: Optional[Exponent] = None, tol: float = DEFAULT_TOL) -> float:
    """sup_Q |Q|^-1 ||w chi_Q||_p(.) ||w^-1 chi_Q||_p'(.) over the enumerated cubes."""
    result = ap_sweep(w, p, families, p_conj=p_conj, tol=tol)
    logger.debug("Analysing A_p(.) constant of %s under %s: %.6g", w.name, p.name, result.value)
    return result.value


def vec_ap_sweep(vw: VectorWeight, p1: Exponent, p2: Exponent, families: Families, *, tol: float = DEFAULT_TOL) -> SweepResult:
    p = combine(p1, p2)
    q1, q2 = conjugate(p1), conjugate(p2)
    wv = vw.w.values
    inv1 = 1.0 / vw.w1.values
    inv2 = 1.0 / vw.w2.values

    def quantity(cube: DyadicCube) -> float:
        return (
            _norm_on(wv, p, cube, tol)
            * _norm_on(inv1, q1, cube, tol)
            * _norm_on(inv2, q2, cube, tol)
            / cube.measure ** 2
        )

    return sweep_max(families, quantity)


def vec_ap_constant(vw: VectorWeight, p1: Exponent, p2: Exponent, families: Families, *, tol: float = DEFAULT_TOL) -> float:
    """sup_Q |Q|^-2 ||w chi_Q||_p(.) ||w1^-1 chi_Q||_p1'(.) ||w2^-1 chi_Q||_p2'(.)."""
    result = vec_ap_sweep(vw, p1, p2, families, tol=tol)
    logger.debug("Analysing vector A_p(.) constant of %s: %.6g", vw.name, result.value)
    return result.value


class Characterization(NamedTuple):
    c1: float
    c2: float
    c3: float

    @property
    def product(self) -> float:
        return self.c1 * self.c2 * self.c3


def scalar_characterization(vw: VectorWeight, p1: Exponent, p2: Exponent, families: Families, *, tol: float = DEFAULT_TOL) -> Characterization:
    """The three scalar constants: w_j^-1/2 in A_{2 p_j'(.)} and w^1/2 in A_{2p(.)}."""
    c1 = ap_constant(vw.w1.power(-0.5), scale(conjugate(p1), 2.0), families, tol=tol)
    c2 = ap_constant(vw.w2.power(-0.5), scale(conjugate(p2), 2.0), families, tol=tol)
    c3 = ap_constant(vw.w.power(0.5), scale(combine(p1, p2), 2.0), families, tol=tol)
    return Characterization(c1, c2, c3)


def _cube_block(values: np.ndarray, cube: DyadicCube, grid: Grid) -> np.ndarray:
    vals = values[cube.cells]
    if grid.dim == 1:
        return vals
    rows = np.unique(cube.cells // grid.cells_per_axis).size
    return vals.reshape(rows, cube.count // rows)


def _window_sums(block: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    windows = sliding_window_view(block, shape)
    return windows.sum(axis=tuple(range(block.ndim, 2 * block.ndim))).reshape(-1)


def _children(block: np.ndarray) -> List[np.ndarray]:
    if any(n % 2 or n < 2 for n in block.shape):
        return []
    halves = [(slice(0, n // 2), slice(n // 2, n)) for n in block.shape]
    if block.ndim == 1:
        return [block[s] for s in halves[0]]
    return [block[a, b] for a in halves[0] for b in halves[1]]


def _dense_subset_sums(block: np.ndarray, alpha: float) -> List[float]:
    """w(E) for the deterministic subsets E with |E| >= alpha |Q|."""
    dims = block.shape
    sums: List[float] = []
    if block.ndim == 1:
        sums.extend(_window_sums(block, (max(1, math.ceil(alpha * dims[0])),)).tolist())
    else:
        nr, nc = dims
        sums.extend(_window_sums(block, (max(1, math.ceil(alpha * nr)), nc)).tolist())
        sums.extend(_window_sums(block, (nr, max(1, math.ceil(alpha * nc)))).tolist())
        root = math.sqrt(alpha)
        sums.extend(_window_sums(block, (max(1, math.ceil(root * nr)), max(1, math.ceil(root * nc)))).tolist())
    total = float(block.sum())
    kids = _children(block)
    if kids and 1.0 - 1.0 / len(kids) >= alpha:
        sums.extend(total - float(child.sum()) for child in kids)
    return sums


def _sparse_subset_sums(block: np.ndarray, gamma: float) -> List[float]:
    """w(E) for the deterministic subsets E with |E| <= gamma |Q|."""
    sums: List[float] = []
    if block.ndim == 1:
        length = math.floor(gamma * block.shape[0])
        if length >= 1:
            sums.extend(_window_sums(block, (length,)).tolist())
    else:
        nr, nc = block.shape
        rows = math.floor(gamma * nr)
        cols = math.floor(gamma * nc)
        if rows >= 1:
            sums.extend(_window_sums(block, (rows, nc)).tolist())
        if cols >= 1:
            sums.extend(_window_sums(block, (nr, cols)).tolist())
    kids = _children(block)
    if kids and 1.0 / len(kids) <= gamma:
        sums.extend(float(child.sum()) for child in kids)
    return sums


def ainfty_density(w: Weight, families: Families, alpha: float) -> float:
    """Empirical beta: min w(E)/w(Q) over cubes Q and subsets |E| >= alpha |Q|."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    beta = 1.0
    for family in as_families(families):
        for cube in family:
            block = _cube_block(w.values, cube, w.grid)
            total = float(block.sum())
            sums = _dense_subset_sums(block, alpha)
            if sums:
                beta = min(beta, min(sums) / total)
    return beta


def ainfty_sparse(w: Weight, families: Families, gamma: float) -> float:
    """Empirical delta: max w(E)/w(Q) over cubes Q and subsets |E| <= gamma |Q|."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    delta = 0.0
    for family in as_families(families):
        for cube in family:
            block = _cube_block(w.values, cube, w.grid)
            sums = _sparse_subset_sums(block, gamma)
            if sums:
                delta = max(delta, max(sums) / float(block.sum()))
    return delta


class AinftyProfile(NamedTuple):
    beta_u: float
    beta_sigma1: float
    beta_sigma2: float


def ainfty_profile(vw: VectorWeight, families: Families, alpha: float = 0.5) -> AinftyProfile:
    """Density constants of u = w^p(.) and sigma_j = w_j^-p_j'(.)."""
    return AinftyProfile(
        ainfty_density(vw.u, families, alpha),
        ainfty_density(vw.sigma1, families, alpha),
        ainfty_density(vw.sigma2, families, alpha),
    )


def weighted_diening_constant(w: Weight, p: Exponent, families: Families, *, tol: float = DEFAULT_TOL) -> float:
    """max over cubes of ||w chi_Q||_p(.)^(p_-(Q) - p_+(Q))."""
    wv = w.values

    def quantity(cube: DyadicCube) -> float:
        vals = p.values[cube.cells]
        return _norm_on(wv, p, cube, tol) ** float(vals.min() - vals.max())

    return sweep_max(families, quantity).value


def infty_integral(w: Weight, p: Exponent, t: float) -> float:
    """int w^p(x) / (e + |x|)^(t n p_-) dx."""
    grid = w.grid
    decay = np.power(math.e + grid.radius, -t * grid.dim * p.p_minus)
    return math.fsum((np.power(w.values, p.values) * decay).tolist()) * grid.cell_volume


def infty_exponent(w: Weight, p: Exponent, *, t_max: float = 1e3, tol: float = 1e-8) -> float:
    """Least t >= 1 with infty_integral(w, p, t) <= 1 (inf if even t_max fails)."""
    if infty_integral(w, p, 1.0) <= 1.0:
        return 1.0
    if infty_integral(w, p, t_max) > 1.0:
        return math.inf
    return float(bisect(lambda t: infty_integral(w, p, t) - 1.0, 1.0, t_max, xtol=tol))


def pinfty_comparison(w: Weight, p: Exponent, families: Families, *, tol: float = DEFAULT_TOL) -> Tuple[float, float]:
    """Range of ||w chi_Q||_p(.) / u(Q)^(1/p_inf) over cubes with u(Q) >= 1."""
    u = w.power(p)
    wv = w.values
    ratios = []
    for family in as_families(families):
        for cube in family:
            mass = u.measure(cube.cells)
            if mass >= 1.0:
                ratios.append(_norm_on(wv, p, cube, tol) / mass ** (1.0 / p.p_infty))
    if not ratios:
        return (math.nan, math.nan)
    return (min(ratios), max(ratios))
