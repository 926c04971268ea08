import numpy as np
import pytest

from core.grid import (
    GridBudgetError,
    SampledFunction,
    as_families,
    box_cells,
    build_grid,
    cubes_disjoint,
    dyadic_family,
    integrate,
    translated_families,
)


def test_grid_counts_dim1():
    grid = build_grid(1, 2, 6)
    assert grid.size == 256
    assert grid.h == 2 ** -6
    assert grid.cell_volume == 2 ** -6


def test_grid_counts_dim2():
    grid = build_grid(2, 1, 3)
    assert grid.shape == (16, 16)
    assert grid.size == 256
    assert grid.points.shape == (256, 2)


def test_cell_centres_never_hit_origin():
    grid = build_grid(2, 1, 2)
    assert grid.radius.min() > 0


def test_invalid_half_width():
    with pytest.raises(ValueError):
        build_grid(1, 3, 4)


def test_invalid_dimension():
    with pytest.raises(ValueError):
        build_grid(3, 1, 2)


def test_invalid_cell_exponent():
    with pytest.raises(ValueError):
        build_grid(1, 1, 0)


def test_budget_error():
    with pytest.raises(GridBudgetError):
        build_grid(2, 4, 8, max_cells=1000)


def test_sampled_function_rejects_wrong_size():
    grid = build_grid(1, 1, 2)
    with pytest.raises(ValueError):
        SampledFunction(grid, np.ones(3))


def test_sampled_function_rejects_nan():
    grid = build_grid(1, 1, 2)
    values = np.ones(grid.size)
    values[0] = np.nan
    with pytest.raises(ValueError):
        SampledFunction(grid, values)


def test_box_indicator_and_integral():
    grid = build_grid(1, 2, 4)
    f = SampledFunction.box_indicator(grid, 0.0, 1.5)
    assert integrate(f) == pytest.approx(1.5, abs=1e-15)
    assert box_cells(grid, -2.0, 2.0).size == grid.size


def test_top_level_has_two_to_dim_cubes():
    for dim in (1, 2):
        grid = build_grid(dim, 2, 2)
        family = dyadic_family(grid)
        top = family.level_cubes[family.levels[0]]
        assert len(top) == 2 ** dim
        assert top[0].side == 4.0


def test_levels_partition_the_domain():
    grid = build_grid(2, 1, 3)
    family = dyadic_family(grid)
    for level in family.levels:
        cubes = family.level_cubes[level]
        assert cubes_disjoint(cubes, grid.size)
        assert sum(c.count for c in cubes) == grid.size


def test_finest_level_is_cells():
    grid = build_grid(1, 1, 3)
    family = dyadic_family(grid)
    finest = family.level_cubes[grid.cell_exponent]
    assert len(finest) == grid.size
    assert all(c.count == 1 for c in finest)


def test_parent_contains_child():
    grid = build_grid(1, 2, 4)
    family = dyadic_family(grid)
    for cube in family.level_cubes[3]:
        parent = family.parent(cube)
        assert parent.level == 2
        assert np.isin(cube.cells, parent.cells).all()


def test_translated_families_dim1():
    grid = build_grid(1, 2, 4)
    families = translated_families(grid)
    assert len(families) == 2
    assert families[0].tag == "t=(0)"
    assert families[1].tag == "t=(1/3)"
    shifted = families[1]
    assert not shifted.all_levels_inside_domain
    for level in shifted.levels:
        assert sum(c.count for c in shifted.level_cubes[level]) == grid.size


def test_translated_families_dim2_count():
    grid = build_grid(2, 1, 2)
    assert len(translated_families(grid)) == 4


def test_bad_translate():
    grid = build_grid(1, 1, 2)
    with pytest.raises(ValueError):
        dyadic_family(grid, 0.25)


def test_as_families():
    grid = build_grid(1, 1, 2)
    family = dyadic_family(grid)
    assert as_families(family) == [family]
    with pytest.raises(ValueError):
        as_families([])


def test_cubes_are_nested_or_disjoint():
    grid = build_grid(1, 1, 4)
    cubes = list(dyadic_family(grid))
    for i, a in enumerate(cubes):
        for b in cubes[i + 1:]:
            shared = np.intersect1d(a.cells, b.cells).size
            assert shared in (0, min(a.count, b.count))


def test_integrate_is_additive_over_disjoint_regions():
    grid = build_grid(1, 2, 5)
    rng = np.random.default_rng(4)
    f = SampledFunction(grid, rng.normal(size=grid.size))
    left = box_cells(grid, -2.0, 0.25)
    right = box_cells(grid, 0.25, 2.0)
    assert integrate(f, left) + integrate(f, right) == pytest.approx(integrate(f), abs=1e-13)


def test_midpoint_rule_exact_for_linear():
    grid = build_grid(1, 1, 4)
    f = SampledFunction.from_callable(grid, lambda x: x[:, 0])
    assert integrate(f, box_cells(grid, 0.0, 1.0)) == 0.5
