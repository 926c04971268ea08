import numpy as np
import pytest

from core.families import (
    build_exponent,
    build_functions,
    build_kernel,
    build_pairs,
    build_weight,
    indicator_sum,
    power_profile,
)
from core.grid import build_grid

GRID = build_grid(1, 2, 5)


def test_functions_are_seeded_per_index():
    spec = {"kind": "mixed", "count": 6}
    first = build_functions(GRID, spec, 4)
    again = build_functions(GRID, spec, 4, 3)
    assert len(first) == 6
    for a, b in zip(first, again):
        assert np.array_equal(a.values, b.values)


def test_pairs_differ_within_a_pair():
    f1, f2 = build_pairs(GRID, {"kind": "indicators", "count": 1}, 2)[0]
    assert not np.array_equal(f1.values, f2.values)


def test_indicator_sum_is_nonnegative_and_bounded():
    rng = np.random.default_rng(0)
    f = indicator_sum(GRID, rng, terms=3, level=2, max_value=2.0)
    assert f.values.min() >= 0.0
    assert f.values.max() <= 6.0
    assert np.count_nonzero(f.values) > 0


def test_indicator_level_must_fit_grid():
    with pytest.raises(ValueError):
        indicator_sum(GRID, np.random.default_rng(0), terms=1, level=6, max_value=1.0)


def test_power_profile_support():
    f = power_profile(GRID, 0.5)
    assert np.all(f.values[GRID.radius >= 1.0] == 0.0)
    assert np.allclose(f.values[GRID.radius < 1.0], GRID.radius[GRID.radius < 1.0] ** -0.5)


def test_build_exponent_kinds():
    assert build_exponent(GRID, {"kind": "constant", "value": 3.0}).p_plus == 3.0
    bump = build_exponent(GRID, {"kind": "bump", "base": 2.5, "amplitude": 0.5})
    assert 2.0 <= bump.p_minus <= bump.p_plus <= 3.0
    jump = build_exponent(GRID, {"kind": "piecewise", "left": 1.5, "right": 3.0})
    assert set(np.unique(jump.values)) == {1.5, 3.0}
    with pytest.raises(ValueError):
        build_exponent(GRID, {"kind": "constant"})
    with pytest.raises(ValueError):
        build_exponent(GRID, {"kind": "wiggly"})


def test_build_weight_kinds():
    product = build_weight(GRID, {"kind": "product", "factors": [{"kind": "power", "a": 0.5}, {"kind": "power", "a": 0.5}]})
    assert np.allclose(product.values, GRID.radius)
    assert np.all(build_weight(GRID, {"kind": "constant"}).values == 1.0)
    noisy = build_weight(GRID, {"kind": "perturbed", "base": {"kind": "constant"}, "epsilon": 0.2, "seed": 1})
    assert np.all(np.abs(np.log(noisy.values)) <= 0.2 + 1e-12)
    with pytest.raises(ValueError):
        build_weight(GRID, {"kind": "power"})


def test_build_kernel():
    assert build_kernel(1, {"kind": "odd"}).name == "odd"
    assert build_kernel(2, {"kind": "separable", "radius": 0.25}).support_radius == 0.25
    with pytest.raises(ValueError):
        build_kernel(1, {"kind": "cauchy"})
