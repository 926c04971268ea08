#!/usr/bin/env python3
"""
Modulars and Luxemburg norms of sampled step functions.

The norms returned here are the exact norms of the step function stored in a
SampledFunction (up to the bisection tolerance), not approximations of some
continuum function behind it. lambda -> rho(f/lambda) is continuous and strictly
decreasing whenever f != 0 and p_+ < inf, so bisection always converges.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect

from core.exponents import CellsLike, Exponent, cells_of, combine, conjugate, scale
from core.grid import SampledFunction

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200
LAMBDA_FLOOR = 1e-12
LAMBDA_CEIL = 1e12
_MIN_RTOL = 4.5 * np.finfo(float).eps


class ModularOverflowError(OverflowError):
    """A modular term exceeded the floating-point range."""


class NormConvergenceError(RuntimeError):
    def __init__(self, message: str, bracket: Tuple[float, float]) -> None:
        super().__init__(f"{message} (bracket {bracket[0]:.6g} .. {bracket[1]:.6g})")
        self.bracket = bracket


@dataclass(frozen=True)
class NormResult:
    value: float
    iterations: int
    bracket: Tuple[float, float]
    residual: float


def _check_grid(f: SampledFunction, p: Exponent) -> None:
    if f.grid != p.grid:
        raise ValueError(f"Function and exponent {p.name} live on different grids")


def _rho(abs_vals: np.ndarray, exps: np.ndarray, cell_volume: float, measure: Optional[np.ndarray], lam: float) -> float:
    with np.errstate(over="ignore"):
        terms = np.power(abs_vals / lam, exps)
        if measure is not None:
            terms = terms * measure
        return float(np.sum(terms)) * cell_volume


def _tight_bracket(
    a: np.ndarray, e: np.ndarray, cell_volume: float, m: Optional[np.ndarray], root: float, rtol: float, lo: float, hi: float
) -> Tuple[float, float]:
    """Short interval around root with rho > 1 at its left end and rho <= 1 at its right end."""
    step = 2.0 * rtol * root
    while step < hi - lo:
        below, above = max(lo, root - step), min(hi, root + step)
        if _rho(a, e, cell_volume, m, below) > 1.0 and _rho(a, e, cell_volume, m, above) <= 1.0:
            return below, above
        step *= 4.0
    return lo, hi


def solve_luxemburg(
    abs_vals: np.ndarray,
    exps: np.ndarray,
    cell_volume: float,
    *,
    measure: Optional[np.ndarray] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> NormResult:
    """Luxemburg norm of raw cell values |f| against exponent values; the workhorse of every norm here."""
    if tol <= 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")
    mask = abs_vals > 0
    if measure is not None:
        mask &= measure > 0
    if not np.any(mask):
        return NormResult(0.0, 0, (0.0, 0.0), 0.0)
    a = abs_vals[mask]
    e = exps[mask]
    m = None if measure is None else measure[mask]

    total = cell_volume * (a.size if m is None else float(np.sum(m)))
    lam0 = float(a.max()) * total ** (1.0 / float(e.min()))
    lam0 = min(max(lam0, LAMBDA_FLOOR), LAMBDA_CEIL)

    lo = hi = lam0
    steps = 0
    while _rho(a, e, cell_volume, m, hi) > 1.0:
        lo, hi = hi, hi * 2.0
        steps += 1
        if steps > 4 * max_iter:
            raise NormConvergenceError("Upper bracket expansion failed", (lo, hi))
    while _rho(a, e, cell_volume, m, lo) <= 1.0:
        if _rho(a, e, cell_volume, m, lo) == 1.0:
            return NormResult(lo, steps, (lo, lo), 0.0)
        hi, lo = lo, lo / 2.0
        steps += 1
        if steps > 4 * max_iter:
            raise NormConvergenceError("Lower bracket expansion failed", (lo, hi))
    logger.debug("Analysing Luxemburg bracket [%.6g, %.6g] after %d expansions", lo, hi, steps)

    # |rho(f/((1+e)lam)) - 1| <= p_+ |e| near the root, so this keeps the residual below tol.
    rtol = max(tol / (4.0 * float(e.max())), _MIN_RTOL)
    root, info = bisect(
        lambda lam: _rho(a, e, cell_volume, m, lam) - 1.0,
        lo,
        hi,
        xtol=1e-300,
        rtol=rtol,
        maxiter=max_iter,
        full_output=True,
        disp=False,
    )
    if not info.converged:
        raise NormConvergenceError(f"Bisection did not converge in {max_iter} iterations", (lo, hi))
    bracket = _tight_bracket(a, e, cell_volume, m, float(root), rtol, lo, hi)
    residual = abs(_rho(a, e, cell_volume, m, root) - 1.0)
    return NormResult(float(root), int(info.iterations) + steps, bracket, residual)


def modular(
    f: SampledFunction,
    p: Exponent,
    *,
    region: Optional[CellsLike] = None,
    measure: Optional[SampledFunction] = None,
) -> float:
    """h^dim * sum |f|^p (times the measure density when given)."""
    _check_grid(f, p)
    idx = f.grid.all_cells if region is None else cells_of(region)
    with np.errstate(over="ignore"):
        terms = np.power(np.abs(f.values[idx]), p.values[idx])
    if measure is not None:
        terms = terms * measure.values[idx]
    if np.any(np.isinf(terms)):
        raise ModularOverflowError(f"Modular of f under {p.name} overflows (max |f| = {f.max_abs():.6g})")
    return float(np.sum(terms)) * f.grid.cell_volume


def luxemburg_norm(
    f: SampledFunction,
    p: Exponent,
    tol: float = DEFAULT_TOL,
    *,
    region: Optional[CellsLike] = None,
    max_iter: int = DEFAULT_MAX_ITER,
) -> NormResult:
    _check_grid(f, p)
    idx = f.grid.all_cells if region is None else cells_of(region)
    return solve_luxemburg(np.abs(f.values[idx]), p.values[idx], f.grid.cell_volume, tol=tol, max_iter=max_iter)


def norm(f: SampledFunction, p: Exponent, tol: float = DEFAULT_TOL, *, region: Optional[CellsLike] = None) -> float:
    return luxemburg_norm(f, p, tol, region=region).value


def weighted_norm(f: SampledFunction, w, p: Exponent, tol: float = DEFAULT_TOL, *, region: Optional[CellsLike] = None) -> float:
    """||f w||_p(.), i.e. the norm of f in L^p(.)(w)."""
    _check_grid(f, p)
    if w.grid != f.grid:
        raise ValueError("Function and weight live on different grids")
    idx = f.grid.all_cells if region is None else cells_of(region)
    return solve_luxemburg(np.abs(f.values[idx] * w.values[idx]), p.values[idx], f.grid.cell_volume, tol=tol).value


def measure_norm(f: SampledFunction, p: Exponent, v, tol: float = DEFAULT_TOL, *, region: Optional[CellsLike] = None) -> float:
    """inf{lambda : int (|f|/lambda)^p(x) v dx <= 1}."""
    _check_grid(f, p)
    if v.grid != f.grid:
        raise ValueError("Function and measure live on different grids")
    idx = f.grid.all_cells if region is None else cells_of(region)
    return solve_luxemburg(
        np.abs(f.values[idx]), p.values[idx], f.grid.cell_volume, measure=np.asarray(v.values[idx]), tol=tol
    ).value


def rescale_check(f: SampledFunction, p: Exponent, s: float, tol: float = DEFAULT_TOL, eps: float = 1e-300) -> float:
    """Relative defect of || |f|^s ||_p(.) = ||f||_{s p(.)}^s."""
    left = norm(f.power(s), p, tol)
    right = norm(f, scale(p, s), tol) ** s
    return abs(left - right) / max(left, right, eps)


def holder_defect(f: SampledFunction, g: SampledFunction, p: Exponent, tol: float = DEFAULT_TOL) -> float:
    """int |fg| / (||f||_p(.) ||g||_p'(.)); 0 when either factor vanishes."""
    nf = norm(f, p, tol)
    ng = norm(g, conjugate(p), tol)
    if nf == 0.0 or ng == 0.0:
        return 0.0
    pairing = math.fsum(np.abs(f.values * g.values).tolist()) * f.grid.cell_volume
    return pairing / (nf * ng)


def product_holder_ratio(f: SampledFunction, g: SampledFunction, p1: Exponent, p2: Exponent, tol: float = DEFAULT_TOL) -> float:
    """||fg||_p(.) / (||f||_p1(.) ||g||_p2(.)) with 1/p = 1/p1 + 1/p2."""
    nf = norm(f, p1, tol)
    ng = norm(g, p2, tol)
    if nf == 0.0 or ng == 0.0:
        return 0.0
    return norm(f * g, combine(p1, p2), tol) / (nf * ng)


def generalized_holder_ratio(functions: Sequence[SampledFunction], exponents: Sequence[Exponent], tol: float = DEFAULT_TOL) -> float:
    """int |f_1 ... f_k| / prod ||f_j||_p_j(.) for exponents with sum 1/p_j = 1."""
    if len(functions) != len(exponents) or len(functions) < 2:
        raise ValueError("Need matching lists of at least two functions and exponents")
    recip = sum(1.0 / p.values for p in exponents)
    if not np.allclose(recip, 1.0, rtol=0, atol=1e-12):
        raise ValueError("Exponents must satisfy sum 1/p_j = 1 pointwise")
    norms = [norm(f, p, tol) for f, p in zip(functions, exponents)]
    if min(norms) == 0.0:
        return 0.0
    product = np.prod([f.values for f in functions], axis=0)
    return math.fsum(np.abs(product).tolist()) * functions[0].grid.cell_volume / float(np.prod(norms))
