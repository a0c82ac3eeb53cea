from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from derivations import BOX, EX1, EX1_PD, EX2, HALVES
from fusions import oracles as O
from fusions.exposure import (Eq1Violated, NotUnique, build_certificate, certify_exposed, check_prop2_condition,
                              diagram_from_partition, gauge_bump, midpoint_convex,
                              necessary_convex_independence)
from fusions.measure import DiscreteMeasure, GridMeasure
from fusions.power import PowerDiagram

MU = GridMeasure.uniform(BOX, (16, 8))
ONE = PowerDiagram([(0, 0)], [0], BOX)


def revealed_left(mu):
    """Left half revealed atom by atom, right half pooled at its barycenter."""
    left = [(p, w) for p, w in zip(mu.points, mu.masses) if p[0] < 1]
    return DiscreteMeasure([p for p, _ in left] + [(F(3, 2), F(1, 2))], [w for _, w in left] + [F(1, 2)])


@pytest.fixture(scope="module")
def ex1_cert():
    return build_certificate(MU, EX1, EX1_PD, mode="rational")


def test_example1_certificate_exact(ex1_cert):
    c = ex1_cert
    assert c.primal == c.dual == F(1, 4)
    assert c.eq1 and c.unique and c.valid
    assert c.counterexample is None or c.counterexample == EX1
    assert c.resolution == (16, 8)


def test_example1_float_values(ex1_cert):
    c = build_certificate(MU, EX1, EX1_PD, mode="float")
    assert abs(c.primal - 0.25) < 1e-12 and c.eq1 and c.unique


def test_u_is_maximal_on_support(ex1_cert):
    # u = q - dist(., S) never exceeds its values at the support
    c = ex1_cert
    assert np.all(c.u_grid <= max(float(v) for v in c.u_support) + 1e-12)


def test_example2_not_unique():
    c = build_certificate(MU, EX2, ONE)
    assert c.eq1 and not c.unique
    lam = c.counterexample
    assert lam != EX2 and set(lam.points) <= set(EX2.points)
    assert O.transport_feasible(MU, lam)
    with pytest.raises(NotUnique) as e:
        certify_exposed(MU, EX2, ONE, strict=True)
    assert e.value.counterexample is not None


def test_full_revelation_cell():
    mu = GridMeasure.uniform(BOX, (4, 2))
    c = build_certificate(mu, revealed_left(mu), EX1_PD, full_revelation_cells=[0], mode="rational")
    assert c.modes[0] != c.modes[1]
    assert 0 in c.bumps and c.eq1 and c.unique
    assert c.primal == c.dual == F(5, 32)
    assert midpoint_convex(lambda P: c.bumps[0].values(P) + np.maximum(0, P[:, 0] - 1), MU.P)


def test_flat_gauge_segments_caught_by_lp():
    # the squared gauge is affine along level-set segments; three collinear
    # revealed atoms there can be pooled, and the LP check must notice
    nu = revealed_left(MU)
    c = build_certificate(MU, nu, EX1_PD, full_revelation_cells=[0])
    assert c.eq1 and not c.unique
    assert c.counterexample != nu and O.transport_feasible(MU, c.counterexample)


def test_full_revelation_mismatch():
    with pytest.raises(Eq1Violated):
        build_certificate(MU, EX1, EX1_PD, full_revelation_cells=[0])


def test_prop2_condition():
    assert check_prop2_condition(MU, EX1, EX1_PD) == (True, None)
    ok, lam = check_prop2_condition(MU, EX2, ONE)
    assert not ok and lam is not None and O.transport_feasible(MU, lam)


def test_convex_independence():
    assert necessary_convex_independence(MU, EX1).holds
    r = necessary_convex_independence(MU, EX2)
    assert not r.holds and r.diagram is None and r.candidates


def test_diagram_from_partition():
    pd = diagram_from_partition(HALVES, BOX)
    lab = pd.assign(MU.points, MU.P)
    assert np.array_equal(lab, HALVES.assign(MU.points, MU.P))


def test_gauge_bump_shape():
    b = gauge_bump(EX1_PD, 0)
    assert b(b.anchor) == -1
    assert b((0, 0)) == 0 and b((2, 1)) == 0
    vals = b.values(MU.P)
    assert np.all(vals <= 0) and np.all(vals >= -1)


@settings(max_examples=30)
@given(st.integers(0, len(MU) - 1), st.integers(0, len(MU) - 1), st.sampled_from([1, F(1, 2), F(1, 8)]))
def test_gauge_bump_lipschitz_and_exact(i, j, scale):
    b = gauge_bump(EX1_PD, 0, scale)
    x, y = MU.points[i], MU.points[j]
    fx, fy = b.values(MU.P[[i, j]])
    assert abs(float(b(x)) - fx) < 1e-12
    assert abs(fx - fy) <= b.lipschitz * np.linalg.norm(MU.P[i] - MU.P[j]) + 1e-12
    # convex on its polygon
    mid = tuple((a + c) / 2 for a, c in zip(x, y))
    if b(x) < 0 and b(y) < 0:
        assert b(mid) <= (b(x) + b(y)) / 2
