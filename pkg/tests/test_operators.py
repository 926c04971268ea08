import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.exponents import constant_exponent, smooth_bump_exponent
from core.families import build_pairs
from core.grid import SampledFunction, build_grid, dyadic_family, translated_families
from core.operators import (
    averaging_AQ,
    averaging_TQ,
    bilinear_maximal,
    bilinear_p_averaging,
    harmonic_compatibility,
    maximal,
    one_third_domination,
    p_average,
    p_averaging_operator,
    property_g_ratio,
    sharp_maximal,
    weighted_dyadic_maximal,
)
from core.norms import measure_norm
from core.weights import Weight, constant_weight

GRID = build_grid(1, 2, 6)
SPEC = {"kind": "mixed", "count": 50}


def test_bilinear_below_product_of_maximals_exactly():
    family = dyadic_family(GRID)
    for f1, f2 in build_pairs(GRID, SPEC, 1):
        bilinear = bilinear_maximal(f1, f2, family).values
        product = maximal(f1, family).values * maximal(f2, family).values
        assert np.all(bilinear <= product)


def test_averaging_below_bilinear_maximal_exactly():
    family = dyadic_family(GRID)
    for f1, f2 in build_pairs(GRID, SPEC, 2, 10):
        bilinear = bilinear_maximal(f1, f2, family).values
        for cube in family:
            a = averaging_AQ(cube, f1, f2).values
            assert np.all(np.abs(a[cube.cells]) <= bilinear[cube.cells])


def test_exhaustive_dominates_dyadic():
    f1, f2 = build_pairs(GRID, SPEC, 3, 1)[0]
    dyadic = bilinear_maximal(f1, f2, translated_families(GRID)).values
    full = bilinear_maximal(f1, f2, None, exhaustive=True).values
    assert np.all(full >= dyadic - 1e-12)


def test_exhaustive_needs_dim1():
    grid = build_grid(2, 1, 2)
    f = SampledFunction.constant(grid, 1.0)
    with pytest.raises(ValueError):
        maximal(f, None, exhaustive=True)


def test_maximal_of_indicator():
    f = SampledFunction.box_indicator(GRID, 0.0, 1.0)
    m = maximal(f, dyadic_family(GRID)).values
    assert m.max() == 1.0
    # coarsest cubes seen from x > 1.5 average to 1/2
    assert m[GRID.points[:, 0] > 1.5].min() == pytest.approx(0.5)


def test_argmax_levels_recorded():
    f = SampledFunction.box_indicator(GRID, 0.0, 1.0)
    out = bilinear_maximal(f, f, dyadic_family(GRID))
    assert out.argmax is not None
    assert out.argmax.shape == (GRID.size,)


def test_one_third_constant_case_dim1():
    one = SampledFunction.constant(GRID, 1.0)
    assert one_third_domination(one, one) == 0.5


def test_one_third_constant_case_dim2():
    grid = build_grid(2, 1, 2)
    one = SampledFunction.constant(grid, 1.0)
    assert one_third_domination(one, one) == 0.25


def test_one_third_zero_inputs():
    zero = SampledFunction.constant(GRID, 0.0)
    assert one_third_domination(zero, zero) == 0.0


def test_one_third_bounded():
    for f1, f2 in build_pairs(GRID, {"kind": "indicators", "count": 5}, 4):
        assert one_third_domination(f1, f2) <= 6.0 ** 2


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-5, 5), seed=st.integers(0, 1000))
def test_averaging_is_bilinear(a, seed):
    f, g = build_pairs(GRID, SPEC, seed, 1)[0]
    h = build_pairs(GRID, SPEC, seed + 1, 1)[0][0]
    cube = dyadic_family(GRID).level_cubes[1][2]
    left = averaging_AQ(cube, f * a + g, h).values
    first = a * averaging_AQ(cube, f, h).values
    second = averaging_AQ(cube, g, h).values
    right = first + second
    scale = max((np.abs(first) + np.abs(second)).max(), 1e-300)
    assert np.abs(left - right).max() <= 1e-12 * scale


def test_averaging_is_symmetric():
    f, g = build_pairs(GRID, SPEC, 9, 1)[0]
    cube = dyadic_family(GRID).level_cubes[2][5]
    assert np.array_equal(averaging_AQ(cube, f, g).values, averaging_AQ(cube, g, f).values)


def test_averaging_keeps_sign():
    family = dyadic_family(GRID)
    cube = family.level_cubes[0][0]
    f = SampledFunction.constant(GRID, -2.0)
    g = SampledFunction.constant(GRID, 3.0)
    assert averaging_AQ(cube, f, g).values[cube.cells[0]] == -6.0


def test_tq_rejects_overlap():
    family = dyadic_family(GRID)
    big = family.level_cubes[0][0]
    small = family.parent(family.level_cubes[2][0])
    one = SampledFunction.constant(GRID, 1.0)
    assert np.isin(small.cells, big.cells).all()
    with pytest.raises(ValueError):
        averaging_TQ([big, small], one, one)


def test_tq_of_partition_reproduces_constant():
    family = dyadic_family(GRID)
    one = SampledFunction.constant(GRID, 1.0)
    out = averaging_TQ(list(family.level_cubes[3]), one, one)
    assert np.all(out.values == 1.0)


def test_p_average_of_constant():
    cube = dyadic_family(GRID).level_cubes[2][3]
    h = SampledFunction.constant(GRID, 2.5)
    assert p_average(h, smooth_bump_exponent(GRID, 2.5, 0.5), cube) == pytest.approx(2.5, rel=1e-9)


def test_p_averaging_operators():
    family = dyadic_family(GRID)
    cubes = list(family.level_cubes[1])
    h = SampledFunction.constant(GRID, 2.0)
    p = constant_exponent(GRID, 3.0)
    assert np.allclose(p_averaging_operator(h, p, cubes).values, 2.0)
    assert np.allclose(bilinear_p_averaging(h, h, p, p, cubes).values, 4.0)


def test_property_g_constant_exponents():
    family = dyadic_family(GRID)
    cubes = list(family.level_cubes[2])
    p = constant_exponent(GRID, 4.0)
    for (f1, f2), (h, _) in zip(build_pairs(GRID, SPEC, 5, 5), build_pairs(GRID, SPEC, 6, 5)):
        assert property_g_ratio(f1, f2, h, p, p, cubes) <= 1.0 + 1e-9


def test_harmonic_compatibility_constant():
    lo, hi = harmonic_compatibility(constant_exponent(GRID, 2.0), dyadic_family(GRID))
    assert lo == pytest.approx(1.0, rel=1e-9)
    assert hi == pytest.approx(1.0, rel=1e-9)


def test_sharp_maximal_of_constant_is_zero():
    f = SampledFunction.constant(GRID, 3.0)
    assert np.all(sharp_maximal(f, 0.25, dyadic_family(GRID)).values == 0.0)


def test_sharp_maximal_rejects_bad_delta():
    f = SampledFunction.constant(GRID, 3.0)
    with pytest.raises(ValueError):
        sharp_maximal(f, 0.0, dyadic_family(GRID))


def test_weighted_maximal_with_unit_sigma():
    family = dyadic_family(GRID)
    f = build_pairs(GRID, SPEC, 7, 1)[0][0]
    weighted = weighted_dyadic_maximal(f, constant_weight(GRID, 1.0), family).values
    plain = maximal(f, family).values
    assert np.allclose(weighted, plain, rtol=1e-12, atol=0)


def test_operators_reject_mixed_grids():
    other = build_grid(1, 1, 6)
    with pytest.raises(ValueError):
        bilinear_maximal(SampledFunction.constant(GRID, 1.0), SampledFunction.constant(other, 1.0), dyadic_family(GRID))


def test_weighted_maximal_bounded_on_l2_sigma():
    grid = build_grid(1, 1, 6)
    family = dyadic_family(grid)
    two = constant_exponent(grid, 2.0)
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(30):
        sigma = Weight.from_values(grid, np.exp(rng.normal(0.0, 1.5, grid.size)))
        f = SampledFunction(grid, rng.exponential(1.0, grid.size) * (rng.random(grid.size) < 0.3))
        if f.is_zero():
            continue
        m = weighted_dyadic_maximal(f, sigma, family).result
        worst = max(worst, measure_norm(m, two, sigma) / measure_norm(f, two, sigma))
    # Doob: the dyadic M_sigma has norm at most p' = 2 on L^2(sigma)
    assert 1.0 - 1e-8 <= worst <= 2.0 + 1e-8


def test_sharp_below_twice_maximal():
    family = dyadic_family(GRID)
    for f, g in build_pairs(GRID, SPEC, 12, 10):
        for h in (f, g):
            sharp = sharp_maximal(h, 1.0, family).values
            bound = 2.0 * maximal(h, family).values
            assert np.all(sharp <= bound * (1.0 + 1e-12))


def test_sharp_maximal_of_unit_indicator():
    f = SampledFunction.box_indicator(GRID, 0.0, 1.0)
    out = sharp_maximal(f, 1.0, dyadic_family(GRID)).values
    inside = (GRID.points[:, 0] > 0.0) & (GRID.points[:, 0] < 1.0)
    # only [0, 2) sees both values: oscillation 2 * (1/2) * (1/2)
    assert np.all(out[inside] == 0.5)
    assert out[GRID.points[:, 0] < 0.0].max() == 0.0


def test_bilinear_maximal_of_indicator_pair():
    f = SampledFunction.box_indicator(GRID, 0.0, 1.0)
    out = bilinear_maximal(f, f, dyadic_family(GRID)).values
    right = (GRID.points[:, 0] > 1.0) & (GRID.points[:, 0] < 2.0)
    assert np.all(out[right] == 0.25)
    assert np.all(out[(GRID.points[:, 0] > 0.0) & (GRID.points[:, 0] < 1.0)] == 1.0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 1000), a=st.floats(-3, 3))
def test_bilinear_maximal_is_sublinear(seed, a):
    family = dyadic_family(GRID)
    f, g = build_pairs(GRID, SPEC, seed, 1)[0]
    h = build_pairs(GRID, SPEC, seed + 1, 1)[0][0]
    left = bilinear_maximal(f * a + g, h, family).values
    first = bilinear_maximal(f * a, h, family).values
    second = bilinear_maximal(g, h, family).values
    scale = max((first + second).max(), 1e-300)
    assert np.all(left <= first + second + 1e-12 * scale)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 1000))
def test_bilinear_maximal_is_monotone(seed):
    family = dyadic_family(GRID)
    f, h = build_pairs(GRID, SPEC, seed, 1)[0]
    extra = build_pairs(GRID, SPEC, seed + 1, 1)[0][0]
    bigger = abs(f) + abs(extra)
    assert np.all(bilinear_maximal(f, h, family).values <= bilinear_maximal(bigger, h, family).values)
    assert np.all(bilinear_maximal(h, f, family).values <= bilinear_maximal(h, bigger, family).values)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 1000))
def test_tq_vanishes_off_the_collection(seed):
    family = dyadic_family(GRID)
    rng = np.random.default_rng(seed)
    level = family.levels[int(rng.integers(1, len(family.levels)))]
    cubes = family.level_cubes[level]
    chosen = [cubes[i] for i in np.flatnonzero(rng.random(len(cubes)) < 0.4)]
    f1, f2 = build_pairs(GRID, SPEC, seed, 1)[0]
    out = averaging_TQ(chosen, f1, f2).values
    covered = np.zeros(GRID.size, dtype=bool)
    for cube in chosen:
        covered[cube.cells] = True
    assert np.all(out[~covered] == 0.0)
