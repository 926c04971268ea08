import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.exponents import Exponent, combine, constant_exponent, conjugate, piecewise_exponent, smooth_bump_exponent
from core.grid import SampledFunction, build_grid
from core.norms import (
    ModularOverflowError,
    generalized_holder_ratio,
    holder_defect,
    luxemburg_norm,
    measure_norm,
    modular,
    norm,
    product_holder_ratio,
    rescale_check,
    solve_luxemburg,
    weighted_norm,
)
from core.weights import Weight, constant_weight, power_weight

GRID = build_grid(1, 2, 6)
GOLDEN = (1 + math.sqrt(5)) / 2


def _random_function(seed: int) -> SampledFunction:
    rng = np.random.default_rng(seed)
    values = rng.uniform(0, 3, GRID.size) * (rng.random(GRID.size) < 0.4)
    return SampledFunction(GRID, values)


def test_zero_function_has_zero_norm():
    assert norm(SampledFunction.constant(GRID, 0.0), constant_exponent(GRID, 2.0)) == 0.0


def test_closed_form_constant_exponent():
    for seed in range(10):
        f = _random_function(seed)
        p0 = 1.0 + 3.0 * np.random.default_rng(100 + seed).random()
        expected = (math.fsum((np.abs(f.values) ** p0).tolist()) * GRID.cell_volume) ** (1 / p0)
        assert norm(f, constant_exponent(GRID, p0)) == pytest.approx(expected, rel=1e-8)


def test_golden_ratio_two_piece_exponent():
    f = SampledFunction.box_indicator(GRID, 0.0, 2.0)
    p = piecewise_exponent(GRID, 1.0, 2.0, split=1.0)
    assert abs(norm(f, p) - GOLDEN) <= 1e-8


def test_indicator_norm_with_constant_exponent():
    f = SampledFunction.box_indicator(GRID, 0.0, 1.0)
    assert norm(f, constant_exponent(GRID, 3.0)) == pytest.approx(1.0, rel=1e-9)


def test_residual_and_bracket():
    f = _random_function(3)
    result = luxemburg_norm(f, smooth_bump_exponent(GRID, 2.5, 0.5))
    assert result.residual <= 1e-10
    assert result.bracket[0] <= result.value <= result.bracket[1]


def test_nonpositive_tolerance_rejected():
    with pytest.raises(ValueError):
        solve_luxemburg(np.ones(4), np.full(4, 2.0), 0.25, tol=0.0)


def test_modular_overflow():
    f = SampledFunction.constant(GRID, 1e200)
    with pytest.raises(ModularOverflowError):
        modular(f, constant_exponent(GRID, 4.0))


def test_grid_mismatch():
    other = build_grid(1, 1, 6)
    with pytest.raises(ValueError):
        norm(SampledFunction.constant(other, 1.0), constant_exponent(GRID, 2.0))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), c=st.floats(0.1, 10.0))
def test_homogeneity(seed, c):
    f = _random_function(seed)
    p = smooth_bump_exponent(GRID, 2.5, 0.5)
    base = norm(f, p)
    assert norm(f * c, p) == pytest.approx(c * base, rel=2e-10, abs=1e-300)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_monotonicity(seed):
    f = _random_function(seed)
    g = _random_function(seed + 1)
    p = smooth_bump_exponent(GRID, 2.5, 0.5)
    assert norm(f, p) <= norm(abs(f) + abs(g), p) * (1 + 1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), c=st.floats(0.2, 5.0))
def test_modular_norm_bridge(seed, c):
    f = _random_function(seed) * c
    p = smooth_bump_exponent(GRID, 2.5, 0.5)
    value = norm(f, p)
    rho = modular(f, p)
    if value == 0:
        return
    if value > 1:
        assert rho ** (1 / p.p_plus) <= value * (1 + 1e-8)
        assert value <= rho ** (1 / p.p_minus) * (1 + 1e-8)
    else:
        assert rho ** (1 / p.p_minus) <= value * (1 + 1e-8)
        assert value <= rho ** (1 / p.p_plus) * (1 + 1e-8)


def test_rescaling_identity():
    p = smooth_bump_exponent(GRID, 2.5, 0.5)
    for seed in range(5):
        f = _random_function(seed)
        assert rescale_check(f, p, 0.5) <= 1e-9
        assert rescale_check(f, p, 2.0) <= 1e-9


def test_fatou_truncations_increase():
    f = _random_function(11)
    p = smooth_bump_exponent(GRID, 2.5, 0.5)
    levels = [0.5, 1.0, 2.0, 3.0]
    values = [norm(f.with_values(np.minimum(f.values, t)), p) for t in levels]
    assert all(a <= b * (1 + 1e-10) for a, b in zip(values, values[1:]))
    assert values[-1] == pytest.approx(norm(f, p), rel=1e-10)


def test_holder_constant_exponent():
    p = constant_exponent(GRID, 3.0)
    for seed in range(5):
        assert holder_defect(_random_function(seed), _random_function(seed + 50), p) <= 1 + 5e-10


def test_holder_equality_case():
    e = SampledFunction.box_indicator(GRID, 0.0, 1.0)
    assert holder_defect(e, e, constant_exponent(GRID, 2.0)) == pytest.approx(1.0, abs=1e-9)


def test_product_holder_and_generalized():
    p1 = smooth_bump_exponent(GRID, 3.0, 0.5)
    p2 = constant_exponent(GRID, 3.0)
    third = conjugate(combine(p1, p2))
    f, g, h = (_random_function(s) for s in (1, 2, 3))
    assert product_holder_ratio(f, g, p1, p2) <= 4.0
    assert generalized_holder_ratio([f, g, h], [p1, p2, third]) <= 4.0


def test_generalized_holder_rejects_bad_exponents():
    p = constant_exponent(GRID, 2.0)
    f = _random_function(1)
    with pytest.raises(ValueError):
        generalized_holder_ratio([f, f, f], [p, p, p])


def test_weighted_norm_with_unit_weight():
    f = _random_function(4)
    p = constant_exponent(GRID, 2.0)
    assert weighted_norm(f, constant_weight(GRID, 1.0), p) == norm(f, p)


def test_measure_norm_matches_weighted_for_constant_exponent():
    f = _random_function(5)
    p = constant_exponent(GRID, 2.0)
    w = power_weight(GRID, 0.5)
    # int |f|^2 w^2 = int |f|^2 d(w^2)
    v = w.power(2.0)
    assert measure_norm(f, p, v) == pytest.approx(weighted_norm(f, w, p), rel=1e-9)


def test_bracket_straddles_the_unit_modular():
    for seed in range(5):
        f = _random_function(40 + seed)
        p = smooth_bump_exponent(GRID, 2.5, 0.5)
        result = luxemburg_norm(f, p)
        below, above = result.bracket
        assert below < result.value <= above
        assert modular(f * (1.0 / below), p) > 1.0
        assert modular(f * (1.0 / above), p) <= 1.0
        assert above - below <= 1e-8 * result.value


def test_measure_norm_matches_weighted_for_variable_exponent():
    p = smooth_bump_exponent(GRID, 2.5, 1.0)
    rng = np.random.default_rng(9)
    for seed in range(5):
        f = _random_function(50 + seed)
        sigma = Weight.from_values(GRID, np.exp(rng.normal(0.0, 1.0, GRID.size)))
        # int (|f|/lam)^p sigma = int (|f| sigma^(1/p) / lam)^p
        w = sigma.power(Exponent.from_values(GRID, 1.0 / p.values, name="1/p"))
        assert measure_norm(f, p, sigma) == pytest.approx(weighted_norm(f, w, p), rel=1e-9)
