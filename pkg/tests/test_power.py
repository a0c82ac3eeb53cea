from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from derivations import BOX, EX1_PD, HALVES, THREE
from fusions import oracles as O
from fusions.measure import Box, ConvexPartition, GridMeasure
from fusions.power import (NotRegular, PowerDiagram, cell_halfspaces, diagram_partition, extract_cells_2d,
                           fit_power_diagram, is_regular, lift)


def test_voronoi_bisector():
    pd = PowerDiagram([(0, 0), (2, 0)], [0, 0], BOX)
    (a, b), = cell_halfspaces(pd, 0).halfspaces
    assert b / a[0] == 1 and a[1] == 0


def test_weighted_bisector_moves_to_zero():
    pd = PowerDiagram([(0, 0), (2, 0)], [0, 4], Box((-2, 0), (2, 1)))
    (a, b), = cell_halfspaces(pd, 0).halfspaces
    assert b == 0 and a[1] == 0


def test_single_site_whole_box():
    pd = PowerDiagram([(1, 1)], [0], BOX)
    assert cell_halfspaces(pd, 0).halfspaces == ()
    assert extract_cells_2d(pd)[0].area == 2


def test_two_rectangles():
    cells = extract_cells_2d(PowerDiagram([(0, 0), (2, 0)], [0, 0], BOX))
    assert [c.area for c in cells] == [1, 1]
    assert {v[0] for v in cells[0].vertices} == {0, 1}


def test_example1_cells_split_at_one():
    cells = extract_cells_2d(EX1_PD)
    assert max(v[0] for v in cells[0].vertices) == 1
    assert min(v[0] for v in cells[1].vertices) == 1


def test_empty_middle_cell():
    cells = extract_cells_2d(PowerDiagram([(0, 0), (1, 0), (2, 0)], [0, -10, 0], BOX))
    assert [c.empty for c in cells] == [False, True, False]


def test_example1_lifting_is_hinge():
    L = lift(EX1_PD)
    for x in [(0, 0), (F(1, 2), F(1, 3)), (1, 1), (F(3, 2), 0), (2, F(1, 2))]:
        assert L(x)[0] - L((0, 0))[0] == max(F(0), x[0] - 1)


def test_affine_single_site():
    L = lift(PowerDiagram([(F(1, 3), F(1, 5))], [2], BOX))
    vals = [L(x)[0] for x in [(0, 0), (1, 0), (2, 0)]]
    assert vals[1] - vals[0] == vals[2] - vals[1]


def test_fit_example1_two_cells():
    pd = fit_power_diagram(HALVES, [(0, 0), (1, 0)], BOX, GridMeasure.uniform(BOX, (8, 4)))
    assert pd.sites == ((0, 0), (F(1, 2), 0))
    assert pd.raw_weights[1] - pd.raw_weights[0] == F(-3, 4)


def test_fit_one_cell():
    pd = fit_power_diagram(ConvexPartition([[]]), [(1, 1)], BOX)
    assert pd.k == 1


def test_example1_three_regions_not_regular():
    with pytest.raises(NotRegular) as e:
        fit_power_diagram(THREE, [(0, 0), (0, 1), (1, 0)], BOX)
    assert e.value.witness is not None
    assert is_regular(THREE, BOX) is None


def test_example1_regular_two_cells():
    assert is_regular(HALVES, BOX) is not None


fr = st.fractions(min_value=0, max_value=1, max_denominator=12)


@st.composite
def diagrams(draw, box=Box((0, 0), (1, 1))):
    k = draw(st.integers(1, 8))
    sites = draw(st.lists(st.tuples(fr, fr), min_size=k, max_size=k, unique=True))
    weights = draw(st.lists(st.fractions(min_value=-1, max_value=1, max_denominator=12), min_size=k, max_size=k))
    return PowerDiagram(sites, weights, box)


GRID = GridMeasure.uniform(Box((0, 0), (1, 1)), (7, 5))


@given(diagrams())
def test_assignment_matches_brute(pd):
    assert np.array_equal(pd.assign(GRID.points, GRID.P), O.brute_cell_assign(pd, GRID))


@given(diagrams(), st.fractions(min_value=-5, max_value=5, max_denominator=7))
def test_weight_shift_invariance(pd, c):
    assert np.array_equal(pd.assign(GRID.points, GRID.P), pd.shifted(c).assign(GRID.points, GRID.P))


@given(diagrams())
def test_voronoi_is_nearest_site(pd):
    vor = PowerDiagram(pd.sites, [0] * pd.k, pd.box)
    lab = vor.assign(GRID.points, GRID.P)
    for x, l in zip(GRID.points, lab):
        d = [sum((a - b) ** 2 for a, b in zip(x, s)) for s in pd.sites]
        assert l == d.index(min(d))


@given(diagrams())
def test_lifting_argmax_matches_cells(pd):
    L = lift(pd)
    lab = pd.assign(GRID.points, GRID.P)
    for x, l in zip(GRID.points, lab):
        vals = [L.piece(i, x) for i in range(pd.k)]
        assert l == vals.index(max(vals))
        assert O.lifted_max(pd, x) == L(x)[0]


@given(diagrams())
def test_cell_areas_sum_to_box(pd):
    assert sum(c.area for c in extract_cells_2d(pd)) == 1


@given(diagrams())
def test_boundary_normals_perpendicular(pd):
    for i in range(pd.k):
        others = [j for j in range(pd.k) if j != i]
        for j, (a, _) in zip(others, cell_halfspaces(pd, i).halfspaces):
            d = tuple(x - y for x, y in zip(pd.sites[j], pd.sites[i]))
            assert a[0] * d[1] - a[1] * d[0] == 0


@given(diagrams())
def test_diagram_partition_round_trip(pd):
    lab = diagram_partition(pd).assign(GRID.points, GRID.P)
    assert np.array_equal(lab, pd.assign(GRID.points, GRID.P))
