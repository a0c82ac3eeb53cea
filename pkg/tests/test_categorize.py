from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from derivations import BOX, EX1
from gen import random_fusion, random_grid
from fusions import oracles as O
from fusions.categorize import (DegenerateObjective, cheap_information_threshold, coarsen_to_convex_partitional,
                                laguerre_split, partial_differences, solve_k_categorization, verify_coarsening)
from fusions.measure import Box, DiscreteMeasure, GridMeasure, barycenter
from fusions.order import NotDominated
from fusions.persuasion import Objective, solve_grid_lp

UNIT = Box((0,), (1,))
SQ = Box((0, 0), (1, 1))
VEE = Objective.max_affine([((1,), 0), ((-1,), 1)])
MAX2 = Objective.max_affine([((1, 0), 0), ((0, 1), 0)])
COST = Objective.quadratic((0, 0), 1, 4)


def test_example1_coarsening():
    mu = GridMeasure.uniform(BOX, (8, 4))
    cat = coarsen_to_convex_partitional(mu, EX1)
    assert sorted(cat.prototypes.points) == [(F(1, 4), F(1, 4)), (F(1, 4), F(3, 4)), (F(3, 4), F(1, 4)),
                                             (F(3, 4), F(3, 4)), (F(3, 2), F(1, 2))]
    assert verify_coarsening(mu, EX1, cat) == (True, True, True)
    assert cat.prototypes != EX1 and cat.convex_partitional


@pytest.mark.parametrize("nu", [DiscreteMeasure([(F(1, 4),), (F(3, 4),)], [F(1, 2), F(1, 2)]),
                                DiscreteMeasure([(F(1, 2),)], [1])], ids=["halves", "barycenter"])
def test_convex_partitional_is_fixed(nu):
    mu = GridMeasure.uniform(UNIT, (8,))
    cat = coarsen_to_convex_partitional(mu, nu)
    assert cat.prototypes == nu and cat.steps == 0
    assert verify_coarsening(mu, nu, cat) == (True, True, True)


def test_not_dominated_rejected():
    mu = GridMeasure.uniform(UNIT, (8,))
    with pytest.raises(NotDominated):
        coarsen_to_convex_partitional(mu, DiscreteMeasure([(0,), (1,)], [F(1, 2), F(1, 2)]))


def test_laguerre_split_masses():
    mu = GridMeasure.uniform(SQ, (4, 4))
    comps = laguerre_split(mu, [(0, 0), (1, 1)], [F(1, 4), F(3, 4)])
    assert [c.total_mass for c in comps] == [F(1, 4), F(3, 4)]
    assert [sum(c.masses[i] for c in comps) for i in range(len(mu))] == list(mu.masses)
    # the lighter component sits in the lower-left corner
    assert sum(barycenter(comps[0])) < sum(barycenter(comps[1]))


@settings(max_examples=20)
@given(st.integers(0, 10_000), st.integers(2, 5), st.sampled_from([1, 2]))
def test_coarsening_property(seed, k, dim):
    rng = np.random.default_rng(seed)
    mu = random_grid(rng, 8, dim)
    nu = random_fusion(mu, rng, k)
    cat = coarsen_to_convex_partitional(mu, nu)
    up, down, cp = verify_coarsening(mu, nu, cat)
    assert up and down and cp
    assert len(cat.prototypes) <= len(nu)
    if mu.dim == 1:
        assert O.convex_partitional_1d(mu, cat.prototypes)


def test_k2_split():
    mu = GridMeasure.uniform(UNIT, (40,))
    cat = solve_k_categorization(mu, VEE, 2)
    assert abs(float(cat.payoff) - 0.75) <= VEE.lipschitz * mu.h
    protos = sorted(float(p[0]) for p in cat.prototypes.points)
    assert protos == pytest.approx([0.25, 0.75], abs=mu.h)
    assert cat.convex_partitional
    split, _, pay = O.split_search_1d(mu, lambda y: max(y[0], 1 - y[0]), 2)
    assert abs(float(split[0]) - 0.5) <= mu.h and abs(float(pay) - float(cat.payoff)) <= VEE.lipschitz * mu.h


def test_k1_is_barycenter():
    mu = GridMeasure.uniform(UNIT, (10,))
    cat = solve_k_categorization(mu, VEE, 1)
    assert cat.prototypes.points == (barycenter(mu),)
    assert cat.payoff == F(1, 2)


def test_payoff_monotone_in_k_and_bounded():
    mu = GridMeasure.uniform(SQ, (5, 5))
    V = Objective.max_affine([((1, 0), 0), ((0, 1), 0), ((-1, -1), F(3, 2))])
    pays = [solve_k_categorization(mu, V, K, restarts=2).payoff for K in range(1, 6)]
    assert all(float(a) <= float(b) + 1e-12 for a, b in zip(pays, pays[1:]))
    ub = solve_grid_lp(mu, V).value
    assert float(pays[-1]) <= float(ub) + 1e-12


def test_lloyd_trace_monotone():
    mu = GridMeasure.uniform(SQ, (5, 5))
    cat = solve_k_categorization(mu, MAX2, 3)
    assert all(a <= b + 1e-12 for a, b in zip(cat.trace, cat.trace[1:]))


def test_many_bins_reach_lp():
    mu = GridMeasure.uniform(UNIT, (6,))
    cat = solve_k_categorization(mu, VEE, 6)
    assert float(cat.payoff) == pytest.approx(float(solve_grid_lp(mu, VEE).value))


def test_threshold_constants():
    mu = GridMeasure.uniform(SQ, (8, 8))
    r = cheap_information_threshold(mu, MAX2, COST, kappa=F(1, 10))
    assert (r.alpha, r.beta, r.kappa_bar) == (2, 1, F(1, 2))
    assert abs(float(r.kappa_bar) - O.gradient_beta([(1, 0), (0, 1)]) / O.fd_alpha(lambda x: x[0] ** 2 + x[1] ** 2, mu)) <= 1e-6
    assert r.verdict == "SinglePrototype"
    # one prototype per cell
    assert len(r.solution.nu) == len(r.solution.cells)


def test_threshold_outside_hypothesis():
    mu = GridMeasure.uniform(SQ, (4, 4))
    assert cheap_information_threshold(mu, MAX2, COST, kappa=1).verdict == "Unchecked"
    with pytest.raises(DegenerateObjective):
        cheap_information_threshold(mu, Objective.max_affine([((1, 1), 0)]), COST)


def test_partial_differences_exact():
    mu = GridMeasure.uniform(SQ, (4, 4))
    D = partial_differences(COST, mu)
    # d/dx of x^2 by central differences is exact: 2x at the nodes
    assert sorted(set(D[0])) == [0, F(1, 2), 1, F(3, 2), 2]
