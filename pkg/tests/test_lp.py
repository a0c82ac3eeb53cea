from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fusions.lp import (GE, INFEASIBLE, LE, OPTIMAL, RATIONAL, FLOAT, UNBOUNDED, LinearProgram, LpBuilder,
                        MalformedProgram, optimal_face_is_singleton, solve)


def lp1(c, A, senses, b, lower=None, upper=None, maximize=True):
    return LinearProgram.dense(c, A, senses, b, lower, upper, maximize)


@pytest.mark.parametrize("mode", [RATIONAL, FLOAT])
def test_single_bound(mode):
    sol = solve(lp1([1], [[1]], [LE], [3]), mode)
    assert sol.status == OPTIMAL
    assert sol.x[0] == 3 and sol.value == 3


@pytest.mark.parametrize("mode", [RATIONAL, FLOAT])
def test_simplex_face_dual(mode):
    sol = solve(lp1([1, 1], [[1, 1]], [LE], [1]), mode)
    assert sol.value == 1
    assert sol.y[0] == 1


@pytest.mark.parametrize("mode", [RATIONAL, FLOAT])
def test_infeasible(mode):
    sol = solve(lp1([0], [[1]], [LE], [-1]), mode)
    assert sol.status == INFEASIBLE
    assert sol.farkas is not None


def test_unbounded():
    assert solve(lp1([1], [[-1]], [LE], [0]), RATIONAL).status == UNBOUNDED
    assert solve(lp1([1], [[-1]], [LE], [0]), FLOAT).status == UNBOUNDED


def test_malformed():
    with pytest.raises(MalformedProgram):
        LinearProgram.dense([1, 1], [[1]], [LE], [1])
    with pytest.raises(MalformedProgram):
        LinearProgram.dense([1], [[1]], [LE, LE], [1])


def test_rational_residuals_are_zero():
    sol = solve(lp1([3, 2], [[1, 1], [1, 3]], [LE, LE], [4, 6]), RATIONAL)
    assert sol.residuals["primal"] == 0 and sol.residuals["duality"] == 0
    assert sol.value == sol.dual_value == 12


def test_cold_start_matches_warm():
    lp = lp1([3, 2, 1], [[1, 1, 1], [1, 3, 0], [0, 1, 2]], [LE, LE, GE], [4, 6, 1])
    assert solve(lp, RATIONAL, warm=False).value == solve(lp, RATIONAL).value


def test_beale_cycling_example_terminates():
    # the classic cycling instance for Dantzig's rule
    c = [F(3, 4), -150, F(1, 50), -6]
    A = [[F(1, 4), -60, F(-1, 25), 9], [F(1, 2), -90, F(-1, 50), 3], [0, 0, 1, 0]]
    sol = solve(lp1(c, A, [LE, LE, LE], [0, 0, 1]), RATIONAL, warm=False)
    assert sol.status == OPTIMAL and sol.value == F(1, 20)


def test_face_flat_objective():
    lp = lp1([0], [[1]], [LE], [1])
    probe = optimal_face_is_singleton(lp, solve(lp, RATIONAL), 2)
    assert not probe.unique
    assert sorted(w[0] for w in probe.witness) == [0, 1]


def test_face_vertex():
    lp = lp1([1], [[1]], [LE], [1])
    assert optimal_face_is_singleton(lp, solve(lp, RATIONAL), 4).unique


def test_builder_and_dump():
    B = LpBuilder()
    x, y = B.var(0, None, 1), B.var(0, 2, 1)
    B.row({x: 1, y: 1}, LE, F(5, 2))
    lp = B.build(True)
    assert solve(lp, RATIONAL).value == F(5, 2)
    assert "5/2" in lp.dump()


def test_row_scaling_scales_dual():
    base = solve(lp1([1, 2], [[1, 1], [1, 0]], [LE, LE], [3, 2]), RATIONAL)
    scaled = solve(lp1([1, 2], [[4, 4], [1, 0]], [LE, LE], [12, 2]), RATIONAL)
    assert base.x == scaled.x
    assert scaled.y[0] == base.y[0] / 4


small = st.integers(-4, 4)


@given(st.lists(st.lists(small, min_size=3, max_size=3), min_size=1, max_size=4),
       st.lists(st.integers(0, 6), min_size=4, max_size=4), st.lists(small, min_size=3, max_size=3))
def test_modes_agree(A, b, c):
    lp = lp1(c, A, [LE] * len(A), b[:len(A)], upper=[5, 5, 5])
    r, f = solve(lp, RATIONAL), solve(lp, FLOAT)
    assert r.status == f.status
    if r.status == OPTIMAL:
        assert abs(float(r.value) - f.value) <= 1e-7
        assert r.value == r.dual_value
        x = np.array([float(v) for v in r.x])
        assert np.all(np.array(A, float) @ x <= np.array(b[:len(A)], float) + 1e-12)
