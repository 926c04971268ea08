#!/usr/bin/env python3
"""
Bilinear Calderon-Zygmund kernels and their discrete operators.

T(f1, f2)(x) is the truncated double Riemann sum over cell centres y, z with
|x - y| and |x - z| both at least one cell diameter; this is the computable
surrogate for the principal value.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Optional, Union

import numpy as np
from scipy.stats import qmc

from core.exponents import Exponent, combine
from core.grid import CubeFamily, Grid, SampledFunction, dyadic_family
from core.norms import DEFAULT_TOL, weighted_norm
from core.operators import OperatorOutput, bilinear_maximal, sharp_maximal

logger = logging.getLogger(__name__)

PASS_SLACK = 1e-9
DEFAULT_SAMPLES = 4096
DEFAULT_FLOOR = 1e-12

Evaluator = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
Families = Union[CubeFamily, Iterable[CubeFamily]]


@dataclass(frozen=True)
class BilinearKernel:
    """K(x, y, z) off the diagonal; evaluator broadcasts over leading axes of (..., dim) arrays."""

    evaluator: Evaluator
    A: float
    delta: float
    dim: int
    name: str
    support_radius: Optional[float] = None
    symmetric: bool = False

    def __post_init__(self) -> None:
        if self.A <= 0:
            raise ValueError(f"Kernel constant A must be positive, got {self.A}")
        if not 0 < self.delta <= 1:
            raise ValueError(f"Kernel smoothness delta must lie in (0, 1], got {self.delta}")

    def __call__(self, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
        return self.evaluator(x, y, z)


def _dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.norm(a - b, axis=-1)


def _spread(x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    return _dist(x, y) + _dist(x, z) + _dist(y, z)


def zero_kernel(dim: int) -> BilinearKernel:
    def evaluate(x, y, z):
        return np.zeros(np.broadcast_shapes(x.shape, y.shape, z.shape)[:-1])

    return BilinearKernel(evaluate, 1.0, 1.0, dim, "zero", symmetric=True)


def odd_kernel(dim: int) -> BilinearKernel:
    """((x - y) + (x - z))_1 / S^(2 dim + 1) with S = |x-y| + |x-z| + |y-z|."""
    power = 2 * dim + 1

    def evaluate(x, y, z):
        numerator = (x[..., 0] - y[..., 0]) + (x[..., 0] - z[..., 0])
        return numerator / _spread(x, y, z) ** power

    # |grad K| <= (2 + 2 power) / S^power and S halves at worst along an admissible segment.
    constant = (2.0 + 2.0 * power) * 2.0 ** power
    return BilinearKernel(evaluate, constant, 1.0, dim, "odd", symmetric=True)


def singular_kernel(dim: int) -> BilinearKernel:
    """1/|x - y|^(2 dim + 1); violates the size bound as |x - y| -> 0."""
    power = 2 * dim + 1

    def evaluate(x, y, z):
        return 1.0 / _dist(x, y) ** power * np.ones(np.broadcast_shapes(x.shape, y.shape, z.shape)[:-1])

    return BilinearKernel(evaluate, 1.0, 1.0, dim, "singular")


def bump_profile(r: np.ndarray, radius: float) -> np.ndarray:
    return np.where(r < radius, np.cos(0.5 * math.pi * r / radius) ** 2, 0.0)


def separable_kernel(dim: int, radius: float = 1.0) -> BilinearKernel:
    """phi(x - y) phi(x - z) with phi the cosine bump of the given radius."""
    if radius <= 0:
        raise ValueError(f"Bump radius must be positive, got {radius}")

    def evaluate(x, y, z):
        return bump_profile(_dist(x, y), radius) * bump_profile(_dist(x, z), radius)

    size = (4.0 * radius) ** (2 * dim)
    smooth = (math.pi / radius) * (8.0 * radius) ** (2 * dim + 1)
    return BilinearKernel(evaluate, max(size, smooth), 1.0, dim, f"separable({radius:g})", support_radius=radius, symmetric=True)


KERNELS = {
    "zero": zero_kernel,
    "odd": odd_kernel,
    "singular": singular_kernel,
    "separable": separable_kernel,
}


class KernelReport(NamedTuple):
    size_ratio: float
    smoothness_ratio: float
    samples: int
    passed: bool


def size_ratio(K: BilinearKernel, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    return np.abs(K(x, y, z)) * _spread(x, y, z) ** (2 * K.dim) / K.A


def _smoothness(K: BilinearKernel, x, y, z, moved, replace_at: int) -> np.ndarray:
    args = [x, y, z]
    base = K(*args)
    step = _dist(args[replace_at], moved)
    args[replace_at] = moved
    change = np.abs(K(*args) - base)
    return change * _spread(x, y, z) ** (2 * K.dim + K.delta) / (K.A * step ** K.delta)


def _unit(dim: int, raw: np.ndarray) -> np.ndarray:
    if dim == 1:
        return np.where(raw[:, :1] < 0.5, -1.0, 1.0)
    angle = 2.0 * math.pi * raw[:, 0]
    return np.stack([np.cos(angle), np.sin(angle)], axis=1)


def check_kernel_bounds(
    K: BilinearKernel,
    sample_count: int = DEFAULT_SAMPLES,
    *,
    min_scale: float = 2.0 ** -6,
    max_scale: float = 4.0,
    seed: int = 0,
) -> KernelReport:
    """Quasi-random size and smoothness checks over scales min_scale .. max_scale."""
    if sample_count < 1:
        raise ValueError(f"sample_count must be at least 1, got {sample_count}")
    dim = K.dim
    sampler = qmc.Sobol(d=dim + 8, scramble=True, seed=seed)
    raw = sampler.random_base2(max(0, math.ceil(math.log2(sample_count))))[:sample_count]

    def log_scale(col: np.ndarray) -> np.ndarray:
        return np.exp(math.log(min_scale) + col * (math.log(max_scale) - math.log(min_scale)))

    x = (2.0 * raw[:, :dim] - 1.0) * max_scale
    col = dim
    y = x + log_scale(raw[:, col])[:, None] * _unit(dim, raw[:, col + 1:col + 2])
    z = x + log_scale(raw[:, col + 2])[:, None] * _unit(dim, raw[:, col + 3:col + 4])
    frac = 0.05 + 0.95 * raw[:, col + 4]
    direction = _unit(dim, raw[:, col + 5:col + 6])

    size = size_ratio(K, x, y, z)
    reach_x = 0.5 * np.maximum(_dist(x, y), _dist(x, z))
    reach_y = 0.5 * np.maximum(_dist(y, x), _dist(y, z))
    reach_z = 0.5 * np.maximum(_dist(z, x), _dist(z, y))
    smooth = np.concatenate(
        [
            _smoothness(K, x, y, z, x + (frac * reach_x)[:, None] * direction, 0),
            _smoothness(K, x, y, z, y + (frac * reach_y)[:, None] * direction, 1),
            _smoothness(K, x, y, z, z + (frac * reach_z)[:, None] * direction, 2),
        ]
    )
    worst_size = float(np.max(size))
    worst_smooth = float(np.max(smooth))
    passed = worst_size <= 1.0 + PASS_SLACK and worst_smooth <= 1.0 + PASS_SLACK
    logger.info("Analysing kernel %s: size %.4g, smoothness %.4g, %s", K.name, worst_size, worst_smooth, "pass" if passed else "fail")
    return KernelReport(worst_size, worst_smooth, int(sample_count), passed)


def exclusion_radius(grid: Grid) -> float:
    return grid.h * math.sqrt(grid.dim)


def apply_bilinear_sio(
    K: BilinearKernel,
    f1: SampledFunction,
    f2: SampledFunction,
    *,
    cap: Optional[float] = None,
) -> OperatorOutput:
    """T(f1, f2)(x) = h^(2 dim) sum_{y, z} K(x, y, z) f1(y) f2(z) over admissible y, z."""
    grid = f1.grid
    if f2.grid != grid:
        raise ValueError("SIO inputs live on different grids")
    if K.dim != grid.dim:
        raise ValueError(f"Kernel {K.name} is {K.dim}-dimensional, grid is {grid.dim}-dimensional")
    reach = min(r for r in (cap, K.support_radius, math.inf) if r is not None)
    eps = exclusion_radius(grid)
    points = grid.points
    scale = grid.cell_volume ** 2
    out = np.zeros(grid.size)
    for i in range(grid.size):
        x = points[i]
        dist = np.linalg.norm(points - x, axis=1)
        near = np.flatnonzero((dist >= eps) & (dist <= reach))
        if near.size == 0:
            continue
        a = f1.values[near]
        b = f2.values[near]
        if not (np.any(a) and np.any(b)):
            continue
        sub = points[near]
        matrix = K(x[None, None, :], sub[:, None, :], sub[None, :, :])
        out[i] = float(a @ matrix @ b) * scale
    return OperatorOutput(SampledFunction(grid, out), (f"sio:{K.name}",))


def sharp_domination_test(
    K: BilinearKernel,
    f1: SampledFunction,
    f2: SampledFunction,
    delta: float = 0.25,
    families: Optional[Families] = None,
    *,
    floor: float = DEFAULT_FLOOR,
    cap: Optional[float] = None,
) -> float:
    """max over cells with M(f1, f2) > floor of M#_delta(T(f1, f2)) / M(f1, f2)."""
    if not 0 < delta < 0.5:
        raise ValueError(f"delta must lie in (0, 1/2), got {delta}")
    fams = families if families is not None else dyadic_family(f1.grid, 0.0)
    bilinear = bilinear_maximal(f1, f2, fams).values
    mask = bilinear > floor
    if not np.any(mask):
        return 0.0
    image = apply_bilinear_sio(K, f1, f2, cap=cap).result
    sharp = sharp_maximal(image, delta, fams).values
    return float(np.max(sharp[mask] / bilinear[mask]))


def weighted_sio_ratio(
    K: BilinearKernel,
    f1: SampledFunction,
    f2: SampledFunction,
    vw,
    p1: Exponent,
    p2: Exponent,
    tol: float = DEFAULT_TOL,
    *,
    cap: Optional[float] = None,
) -> float:
    """||T(f1, f2) w||_p(.) / (||f1 w1||_p1(.) ||f2 w2||_p2(.))."""
    denominator = weighted_norm(f1, vw.w1, p1, tol) * weighted_norm(f2, vw.w2, p2, tol)
    if denominator == 0.0:
        return 0.0
    image = apply_bilinear_sio(K, f1, f2, cap=cap).result
    return weighted_norm(image, vw.w, combine(p1, p2), tol) / denominator
