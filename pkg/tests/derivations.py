"""Derived example values: each entry computes an independent oracle value and
the main-path value for one worked example. scripts/make_fixtures.py freezes
the results into tests/fixtures/oracle_reports.json; test_fixtures.py checks
the frozen file and recomputes the cheap entries."""
from fractions import Fraction as F

import numpy as np

from fusions import oracles as O
from fusions.categorize import cheap_information_threshold, coarsen_to_convex_partitional, solve_k_categorization
from fusions.exposure import build_certificate
from fusions.extremality import discover_partition, max_flow_certificate
from fusions.measure import Box, ConvexPartition, ConvexRegion, DiscreteMeasure, GridMeasure, barycenter
from fusions.order import cartier_decompose, shift_mass
from fusions.persuasion import Objective, concavify, solve_grid_lp
from fusions.power import PowerDiagram, extract_cells_2d, fit_power_diagram, lift

BOX = Box((0, 0), (2, 1))
EX1 = DiscreteMeasure([(F(3, 2), F(1, 2)), (F(3, 8), F(1, 4)), (F(5, 8), F(1, 4)), (F(3, 8), F(3, 4)),
                       (F(5, 8), F(3, 4))], [F(1, 2)] + [F(1, 8)] * 4)
EX2 = DiscreteMeasure([(F(3, 2), F(1, 2)), (F(1, 2), F(1, 4)), (F(1, 2), F(7, 10)), (F(1, 2), F(8, 10))],
                      [F(1, 2), F(1, 4), F(1, 8), F(1, 8)])
EX1_PD = PowerDiagram([(0, 0), (F(1, 2), 0)], [0, F(-3, 4)], BOX)
THREE = ConvexPartition([[((1, 0), 1), ((0, 1), F(1, 2))], [((1, 0), 1), ((0, -1), F(-1, 2))], [((-1, 0), -1)]])
HALVES = ConvexPartition([[((1, 0), 1)], [((-1, 0), -1)]])


def rect(x0, x1, y0, y1):
    return ConvexRegion([((1, 0), x1), ((-1, 0), -x0), ((0, 1), y1), ((0, -1), -y0)])


def windmill():
    t, s = F(1, 3), F(2, 3)
    return ConvexPartition([rect(0, s, 0, t), rect(s, 1, 0, s), rect(t, 1, s, 1), rect(0, t, t, 1), rect(t, s, t, s)])


def _p1(x):
    return max(F(0), x[0] - 1)


def quad_p():
    mu = GridMeasure.uniform(BOX, (40, 20))
    return "quadrature", {"f": "max(0,x1-1)", "grid": [40, 20]}, O.quadrature(_p1, mu), F(1, 4), float(mu.h) / 2


def ex1_diagram_split():
    mu = GridMeasure.uniform(BOX, (40, 20))
    lab = O.brute_cell_assign(EX1_PD, mu)
    xs = [p[0] for p, l in zip(mu.points, lab) if l == 0]
    main = EX1_PD.assign(mu.points, mu.P)
    split = (max(xs) + min(p[0] for p, l in zip(mu.points, lab) if l == 1)) / 2
    mx = (max(p[0] for p, l in zip(mu.points, main) if l == 0) + min(p[0] for p, l in zip(mu.points, main) if l == 1)) / 2
    return "brute_cell_assign", {"diagram": "example1", "grid": [40, 20]}, split, mx, 0


def weighted_boundary():
    box = Box((-2, 0), (2, 1))
    mu = GridMeasure.uniform(box, (16, 2))
    pd = PowerDiagram([(0, 0), (2, 0)], [0, 4], box)
    lab = O.brute_cell_assign(pd, mu)
    main = pd.assign(mu.points, mu.P)
    def cut(l):
        return (max(p[0] for p, c in zip(mu.points, l) if c == 0) + min(p[0] for p, c in zip(mu.points, l) if c == 1)) / 2
    return "brute_cell_assign", {"sites": [[0, 0], [2, 0]], "w": [0, 4]}, cut(lab), cut(main), 0


def empty_middle():
    mu = GridMeasure.uniform(BOX, (16, 8))
    pd = PowerDiagram([(0, 0), (1, 0), (2, 0)], [0, -10, 0], BOX)
    lab = O.brute_cell_assign(pd, mu)
    empty = sum(int(np.sum(lab == k)) == 0 for k in range(3))
    return "brute_cell_assign", {"sites": "collinear", "middle_weight": -10}, empty, \
        sum(c.empty for c in extract_cells_2d(pd)), 0


def lifting_example1():
    mu = GridMeasure.uniform(BOX, (16, 8))
    pd = fit_power_diagram(HALVES, [(0, 0), (1, 0)], BOX, mu)
    L = lift(pd)
    # both sides are compared up to the common shift at the origin
    ora = max(abs((O.lifted_max(pd, x) - O.lifted_max(pd, (0, 0))) - _p1(x)) for x in mu.points)
    main = max(abs((L(x)[0] - L((0, 0))[0]) - _p1(x)) for x in mu.points)
    return "lifted_max", {"partition": "x1<=1", "gradients": [[0, 0], [1, 0]]}, ora, main, 0


def left_bottom_components():
    g = GridMeasure.uniform(Box((0, 0), (1, F(1, 2))), (8, 4), F(1, 4))
    nu = DiscreteMeasure([(F(3, 8), F(1, 4)), (F(5, 8), F(1, 4))], [F(1, 8)] * 2)
    ora = O.transport_feasible(g, nu)
    comps = cartier_decompose(g, nu)
    main = all(c.total_mass == w and barycenter(c) == y for c, y, w in zip(comps, nu.points, nu.masses))
    return "transport_feasible", {"cell": "left-bottom", "grid": [8, 4]}, ora, main, 0


def shift_example():
    m1 = DiscreteMeasure([(F(2 * i + 1, 20),) for i in range(10)], [F(1, 10)] * 10)
    m2 = DiscreteMeasure([(F(1, 2) + F(2 * i + 1, 20),) for i in range(10)], [F(1, 10)] * 10)
    eps = F(1, 100)
    pi = shift_mass(m1, m2, (1,), 0, eps)
    moment = sum((p[0] * w for p, w in zip(pi.points, pi.masses)), F(0))
    return "closed_form", {"shift": "two uniforms", "eps": eps}, [F(0), eps], [pi.total_mass, moment], 0


def flow_halves():
    mu = GridMeasure.uniform(BOX, (8, 4))
    lab = HALVES.assign(mu.points, mu.P)
    return "flow_optimum", {"partition": "x1<=1", "grid": [8, 4]}, O.flow_optimum(mu, lab), \
        max_flow_certificate(mu, HALVES, "rational").optimum, 1e-9


def flow_example2():
    mu = GridMeasure.uniform(BOX, (8, 4))
    lab = THREE.assign(mu.points, mu.P)
    return "flow_optimum", {"partition": "example2", "grid": [8, 4]}, O.flow_optimum(mu, lab), \
        max_flow_certificate(mu, THREE, "rational").optimum, 1e-9


def flow_windmill():
    mu = GridMeasure.uniform(Box((0, 0), (1, 1)), (12, 12))
    part = windmill()
    lab = part.assign(mu.points, mu.P)
    fc = max_flow_certificate(mu, part, "rational")
    return "flow_optimum", {"partition": "windmill", "grid": [12, 12]}, O.flow_optimum(mu, lab), fc.optimum, 1e-8


def ex1_certificate_value():
    mu = GridMeasure.uniform(BOX, (40, 20))
    cert = build_certificate(mu, EX1, EX1_PD)
    return "quadrature", {"certificate": "example1", "grid": [40, 20]}, O.quadrature(_p1, mu), cert.primal, 0


def ex2_counterexample():
    mu = GridMeasure.uniform(BOX, (16, 8))
    cert = build_certificate(mu, EX2, PowerDiagram([(0, 0)], [0], BOX))
    lam = cert.counterexample
    ora = O.transport_feasible(mu, lam) and lam != EX2 and set(lam.points) <= set(EX2.points)
    return "transport_feasible", {"certificate": "example2-trivial", "grid": [16, 8]}, bool(ora), \
        not cert.unique, 0


def abs_value_persuasion():
    mu = GridMeasure.uniform(Box((0,), (1,)), (20,))
    obj = Objective.max_affine([((1,), F(-1, 2)), ((-1,), F(1, 2))])
    out = solve_grid_lp(mu, obj)
    return "quadrature", {"V": "|x-1/2|", "grid": [20]}, O.quadrature(lambda x: abs(x[0] - F(1, 2)), mu), \
        out.value, float(mu.h)


def square_concavify():
    pts = [(0, 0), (1, 0), (0, 1), (1, 1), (F(1, 2), F(1, 2))]
    vals = [1, 1, 1, 1, 0]
    V = {tuple(F(c) for c in p): F(v) for p, v in zip(pts, vals)}
    main = concavify(V, pts, [(F(1, 2), F(1, 2))])[0].value
    return "upper_hull_value", {"V": "corners 1 center 0"}, O.upper_hull_value(pts, vals, (F(1, 2), F(1, 2))), main, 0


def certificate_objective_value():
    mu = GridMeasure.uniform(BOX, (16, 8))
    cert = build_certificate(mu, EX1, EX1_PD)
    out = solve_grid_lp(mu, Objective.from_certificate(cert))
    ora = sum((w * _p1(y) for y, w in zip(EX1.points, EX1.masses)), F(0))
    return "quadrature", {"V": "example1 certificate u", "grid": [16, 8]}, ora, out.value, float(out.bound)


def coarsen_example1():
    mu = GridMeasure.uniform(BOX, (8, 4))
    quads = [(0, F(1, 2), 0, F(1, 2)), (F(1, 2), 1, 0, F(1, 2)), (0, F(1, 2), F(1, 2), 1), (F(1, 2), 1, F(1, 2), 1),
             (1, 2, 0, 1)]
    ora = []
    for x0, x1, y0, y1 in quads:
        pts = [p for p in mu.points if x0 < p[0] < x1 and y0 < p[1] < y1]
        ora.append(tuple(sum(p[a] for p in pts) / len(pts) for a in range(2)))
    cat = coarsen_to_convex_partitional(mu, EX1)
    return "direct_average", {"coarsen": "example1", "grid": [8, 4]}, sorted(ora), sorted(cat.prototypes.points), 0


def split_k2():
    mu = GridMeasure.uniform(Box((0,), (1,)), (40,))
    obj = Objective.max_affine([((1,), 0), ((-1,), 1)])
    split, protos, pay = O.split_search_1d(mu, lambda y: max(y[0], 1 - y[0]), 2)
    cat = solve_k_categorization(mu, obj, 2)
    return "split_search_1d", {"V": "max(m,1-m)", "K": 2, "grid": [40]}, [pay] + sorted(protos), \
        [cat.payoff] + sorted(p[0] for p in cat.prototypes.points), float(mu.h)


def threshold_constants():
    mu = GridMeasure.uniform(Box((0, 0), (1, 1)), (8, 8))
    V = Objective.max_affine([((1, 0), 0), ((0, 1), 0)])
    c = Objective.quadratic((0, 0), 1, 4)
    a, b = O.fd_alpha(lambda x: x[0] ** 2 + x[1] ** 2, mu), O.gradient_beta([(1, 0), (0, 1)])
    r = cheap_information_threshold(mu, V, c)
    return "fd_alpha/gradient_beta", {"cost": "|x|^2", "V": "max(x1,x2)", "grid": [8, 8]}, [a, b, b / a], \
        [r.alpha, r.beta, r.kappa_bar], 1e-6


def discovery_example1():
    mu = GridMeasure.uniform(BOX, (8, 4))
    d = discover_partition(mu, EX1)
    comps = cartier_decompose(mu, EX1)
    # grid atoms carried by each discovered cell must coincide with the three regions
    lab3 = THREE.assign(mu.points, mu.P)
    groups = [sorted({int(lab3[i]) for c in (comps[j] for j in g) for i in c.support()}) for g in d.groups]
    return "region_labels", {"discover": "example1", "grid": [8, 4]}, [[0], [1], [2]], sorted(groups), 0


ALL = {
    "quadrature_p": quad_p,
    "example1_diagram_split": ex1_diagram_split,
    "weighted_boundary": weighted_boundary,
    "empty_middle_cell": empty_middle,
    "lifting_example1": lifting_example1,
    "left_bottom_components": left_bottom_components,
    "shift_mass_two_uniforms": shift_example,
    "flow_halves": flow_halves,
    "flow_example2": flow_example2,
    "flow_windmill": flow_windmill,
    "example1_certificate_value": ex1_certificate_value,
    "example2_counterexample": ex2_counterexample,
    "persuasion_abs": abs_value_persuasion,
    "concavify_square": square_concavify,
    "persuasion_certificate_objective": certificate_objective_value,
    "coarsen_example1": coarsen_example1,
    "categorize_k2": split_k2,
    "threshold_constants": threshold_constants,
    "discovery_example1": discovery_example1,
}

# recomputed in the test suite on every run; the rest are checked from the frozen file
CHEAP = ["quadrature_p", "example1_diagram_split", "weighted_boundary", "empty_middle_cell", "lifting_example1",
         "left_bottom_components", "shift_mass_two_uniforms", "flow_halves", "flow_example2", "persuasion_abs",
         "concavify_square", "categorize_k2", "threshold_constants"]


def report(name):
    oracle, desc, ov, mv, tol = ALL[name]()
    desc = dict(desc, example=name)
    return O.compare(oracle, desc, ov, mv, tol)
