"""Categorization: convex-partitional coarsening, K-bin categorization by
Lloyd-style alternation, and the cheap-information threshold."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .exact import Q
from .extremality import _hull_points, _weak_separate, weak_bsp
from .lp import EQ, OPTIMAL, RATIONAL, LpBuilder, solve
from .measure import ConvexPartition, ConvexRegion, DiscreteMeasure, GridMeasure, MANUAL, barycenter
from .order import (NoCommonInterior, NotDominated, EpsTooLarge, cartier_decompose, check_convex_order,
                    max_shift_eps, shift_mass)
from .persuasion import Objective, canonical_decompose, solve_grid_lp, target_lattice, POOLING

CP_TOL = 1e-7


class StallDetected(RuntimeError):
    def __init__(self, msg, current=None):
        super().__init__(msg)
        self.current = current


class DegenerateObjective(ValueError):
    pass


@dataclass
class Categorization:
    K: int
    prototypes: DiscreteMeasure
    components: list  # one GridMeasure per prototype
    partition: ConvexPartition | None
    payoff: object = None
    upper_bound: object = None
    convex_partitional: bool = False
    trace: list = field(default_factory=list)
    stalled: bool = False
    steps: int = 0

    def cp_defect(self):
        """Largest distance between a prototype and its component barycenter."""
        out = 0.0
        for y, c in zip(self.prototypes.points, self.components):
            b = barycenter(c)
            out = max(out, max(abs(float(a - v)) for a, v in zip(y, b)))
        return out


# ---------------------------------------------------------------- separation


def _as_discrete(c: GridMeasure):
    idx = c.support()
    return DiscreteMeasure([c.points[i] for i in idx], [c.masses[i] for i in idx])


def _support(c: GridMeasure):
    return [c.points[i] for i in c.support()]


def _overlap(ci: GridMeasure, cj: GridMeasure, mode="auto"):
    """True when no line weakly separates the two supports. A common interior
    ball is not required: a segment hull can cut through another hull."""
    return _weak_separate(_hull_points(_support(ci)), _hull_points(_support(cj))) is None


def _partition_of(components):
    supports = [_support(c) for c in components]
    hs = weak_bsp(supports)
    if hs is not None:
        return ConvexPartition([ConvexRegion(h) for h in hs], MANUAL)
    # no recursive split (pinwheel-like arrangements): intersect the pairwise
    # separating halfspaces; the gaps left between cells carry no mass
    hulls = [_hull_points(s) for s in supports]
    cells = [[] for _ in supports]
    for i, j in combinations(range(len(supports)), 2):
        sep = _weak_separate(hulls[i], hulls[j])
        if sep is None:
            return None
        a, b = sep
        cells[i].append((a, b))
        cells[j].append((tuple(-v for v in a), -b))
    return ConvexPartition([ConvexRegion(h) for h in cells], MANUAL)


# ---------------------------------------------------------------- coarsening


def _merge_coincident(atoms, comps):
    out_a, out_c = [], []
    for y, c in zip(atoms, comps):
        if y in out_a:
            k = out_a.index(y)
            out_c[k] = out_c[k].with_masses([u + v for u, v in zip(out_c[k].masses, c.masses)])
        else:
            out_a.append(y)
            out_c.append(c)
    return out_a, out_c


def _lam(atoms, comps):
    return DiscreteMeasure(atoms, [c.total_mass for c in comps])


def _top_split(U, theta, m):
    """Sub-measure of U (dict point -> mass) of mass m with the largest
    theta-projection, splitting the threshold atom."""
    order = sorted(U, key=lambda p: (-sum(t * x for t, x in zip(theta, p)), p))
    out, left = {}, m
    for p in order:
        if left <= 0:
            break
        take = min(U[p], left)
        out[p] = take
        left -= take
    return out


def _gap(U, sigma, m, M):
    """barycenter(sigma) - barycenter(U - sigma)."""
    n = len(next(iter(U)))
    s1 = [sum(w * p[k] for p, w in sigma.items()) for k in range(n)]
    tot = [sum(w * p[k] for p, w in U.items()) for k in range(n)]
    return tuple(a / m - (t - a) / (M - m) for a, t in zip(s1, tot))


def _cross(u, v):
    return u[0] * v[1] - u[1] * v[0]


def _critical_directions(points):
    dirs = set()
    for p, q in combinations(points, 2):
        e = (q[0] - p[0], q[1] - p[1])
        g = max(abs(e[0]), abs(e[1]))
        for s in (1, -1):
            dirs.add((-s * e[1] / g, s * e[0] / g))
    return sorted(dirs, key=lambda t: np.arctan2(float(t[1]), float(t[0])))


def pair_split(ci: GridMeasure, cj: GridMeasure, xi, xj):
    """Maximal push-apart of two components along the line through their
    atoms: a hyperplane split of ci + cj with masses kept and the new atoms
    collinear with (and farther apart than) the old ones. Returns the new
    mass vector of component i."""
    U = {}
    for c in (ci, cj):
        for k in c.support():
            U[c.points[k]] = U.get(c.points[k], Fraction(0)) + c.masses[k]
    m, M = ci.total_mass, ci.total_mass + cj.total_mass
    d = tuple(a - b for a, b in zip(xi, xj))
    if len(d) == 1:
        sigma = _top_split(U, d, m)
    elif len(d) == 2:
        dirs = _critical_directions(list(U))
        arcs = []
        for t in range(len(dirs)):
            a, b = dirs[t], dirs[(t + 1) % len(dirs)]
            theta = (a[0] + b[0], a[1] + b[1])
            if theta == (0, 0):
                continue
            sg = _top_split(U, theta, m)
            arcs.append((sg, _gap(U, sg, m, M)))
        sigma = None
        for t in range(len(arcs)):
            (s0, g0), (s1, g1) = arcs[t], arcs[(t + 1) % len(arcs)]
            c0, c1 = _cross(g0, d), _cross(g1, d)
            if c0 == 0 and sum(x * y for x, y in zip(g0, d)) > 0:
                sigma = s0
                break
            if (c0 < 0 < c1) or (c1 < 0 < c0):
                tau = c0 / (c0 - c1)
                mix = {p: (1 - tau) * s0.get(p, 0) + tau * s1.get(p, 0) for p in set(s0) | set(s1)}
                if sum(x * y for x, y in zip(_gap(U, mix, m, M), d)) > 0:
                    sigma = mix
                    break
        if sigma is None:
            return None
    else:
        return None
    pos = {p: k for k, p in enumerate(ci.points)}
    out = [Fraction(0)] * len(ci)
    for p, w in sigma.items():
        if w:
            out[pos[p]] = Fraction(w)
    return out


def laguerre_split(mu: GridMeasure, sites, masses, mode=RATIONAL):
    """Split mu into components of the given masses maximizing sum_j <x, site_j>.
    An optimal split lives on a power diagram with these sites, so its
    components are separable up to shared boundary atoms."""
    src = [i for i, w in enumerate(mu.masses) if w > 0]
    B = LpBuilder()
    v = {(i, j): B.var(0, None, sum(a * b for a, b in zip(mu.points[i], y)))
         for i in src for j, y in enumerate(sites)}
    for i in src:
        B.row({v[i, j]: 1 for j in range(len(sites))}, EQ, mu.masses[i])
    for j, m in enumerate(masses):
        B.row({v[i, j]: 1 for i in src}, EQ, m)
    sol = solve(B.build(True), mode)
    if sol.status != OPTIMAL:
        return None
    comps = [[Fraction(0)] * len(mu) for _ in sites]
    for (i, j), t in v.items():
        comps[j][i] = Q(sol.x[t])
    return [mu.with_masses(c) for c in comps]


def _laguerre_candidate(mu, nu, atoms, comps, mode):
    """Components of the Laguerre split at the current atoms and masses, when
    the pooled measure still dominates nu and the supports separate."""
    if len(atoms) < 2:
        return None
    new = laguerre_split(mu, atoms, [c.total_mass for c in comps])
    if new is None or any(c.total_mass == 0 for c in new):
        return None
    if _partition_of(new) is None:
        return None
    lam = DiscreteMeasure([barycenter(c) for c in new], [c.total_mass for c in new])
    return new if check_convex_order(lam, nu, mode).dominated else None


def coarsen_to_convex_partitional(mu: GridMeasure, nu: DiscreteMeasure, max_steps=60, mode="auto",
                                  verify=True) -> Categorization:
    """Convex-partitional lambda with nu <= lambda <= mu and at most |supp nu|
    atoms. Each round first tries the Laguerre split at the current atoms
    (accepted only if it still dominates nu); otherwise two components whose
    hulls overlap are pushed apart, which strictly raises lambda in convex
    order. The push-apart alone can converge without terminating."""
    v = check_convex_order(mu, nu, mode, local=True)
    if not v.dominated:
        raise NotDominated("nu is not dominated by mu")
    comps = cartier_decompose(mu, nu, mode)
    atoms = [tuple(p) for p in nu.points]
    steps, stalled = 0, False
    while True:
        pair = next(((i, j) for i, j in combinations(range(len(atoms)), 2)
                     if _overlap(comps[i], comps[j])), None)
        if pair is None:
            break
        lag = _laguerre_candidate(mu, nu, atoms, comps, mode)
        if lag is not None:
            atoms, comps = _merge_coincident([barycenter(c) for c in lag], lag)
            steps += 1
            break
        if steps >= max_steps:
            stalled = True
            break
        i, j = pair
        mi = pair_split(comps[i], comps[j], atoms[i], atoms[j])
        if mi is None:
            # fall back to a mass shift with the largest admissible eps
            d = tuple(a - b for a, b in zip(atoms[i], atoms[j]))
            ci, cj = _as_discrete(comps[i]), _as_discrete(comps[j])
            eps = max_shift_eps(ci, cj, d)
            try:
                pi = shift_mass(ci, cj, d, 0, eps)
            except (NoCommonInterior, EpsTooLarge):
                stalled = True
                break
            if eps <= 0 or len(pi) == 0:
                stalled = True
                break
            pos = {p: k for k, p in enumerate(mu.points)}
            mi = list(comps[i].masses)
            for p, w in zip(pi.points, pi.masses):
                mi[pos[p]] += w
        mj = [a + b - c for a, b, c in zip(comps[i].masses, comps[j].masses, mi)]
        old = _lam(atoms, comps)
        comps[i], comps[j] = comps[i].with_masses(mi), comps[j].with_masses(mj)
        atoms[i], atoms[j] = barycenter(comps[i]), barycenter(comps[j])
        atoms, comps = _merge_coincident(atoms, comps)
        new = _lam(atoms, comps)
        if verify and not check_convex_order(new, old, mode).dominated:
            raise StallDetected("shift did not increase lambda in convex order", new)
        steps += 1
    lam = _lam(atoms, comps)
    part = None if stalled else _partition_of(comps)
    cat = Categorization(len(nu), lam, comps, part, convex_partitional=part is not None and not stalled,
                         stalled=stalled, steps=steps)
    return cat


def verify_coarsening(mu, nu, cat: Categorization, mode="auto"):
    """(nu <= lambda, lambda <= mu, convex partitional within CP_TOL)."""
    lam = cat.prototypes
    up = check_convex_order(lam, nu, mode).dominated
    down = check_convex_order(mu, lam, mode).dominated
    total = [sum(c.masses[k] for c in cat.components) for k in range(len(mu))]
    cp = cat.partition is not None and total == list(mu.masses) and cat.cp_defect() <= CP_TOL
    if cp:
        for c, cell in zip(cat.components, cat.partition.cells):
            if not all(cell.contains(c.points[k]) for k in c.support()):
                cp = False
    return up, down, cp


# ---------------------------------------------------------------- K categorization


def _payoff(obj: Objective, protos, masses):
    vals = [obj.exact(y) if obj.is_exact else None for y in protos]
    if all(v is not None for v in vals):
        return sum((m * v for m, v in zip(masses, vals)), Fraction(0))
    P = np.array([[float(c) for c in y] for y in protos])
    return float(np.dot([float(m) for m in masses], obj.values(P)))


def _bins(mu: GridMeasure, labels, src):
    out = {}
    for i, l in zip(src, labels):
        out.setdefault(int(l), []).append(i)
    return out


def _state(mu, obj, labels, src):
    bins = _bins(mu, labels, src)
    keys = sorted(bins)
    protos, masses = [], []
    for k in keys:
        m = sum((mu.masses[i] for i in bins[k]), Fraction(0))
        protos.append(tuple(sum((mu.masses[i] * mu.points[i][a] for i in bins[k]), Fraction(0)) / m
                            for a in range(mu.dim)))
        masses.append(m)
    return protos, masses, _payoff(obj, protos, masses), [bins[k] for k in keys]


def _lloyd(mu, obj, protos, src, X, start=None, max_iter=100):
    """Alternate tangent-score assignment and barycenter update, accepting only
    strict payoff improvements."""
    best = start
    trace = [] if start is None else [float(start[2])]
    for _ in range(max_iter):
        G = np.array([obj.gradient(y) for y in protos])
        Y = np.array([[float(c) for c in y] for y in protos])
        vY = obj.values(Y)
        S = vY[None, :] + ((X[:, None, :] - Y[None, :, :]) * G[None, :, :]).sum(axis=2)
        labels = S.argmax(axis=1)
        st = _state(mu, obj, labels, src)
        if best is not None and not float(st[2]) > float(best[2]) + 1e-14:
            break
        best = st
        trace.append(float(st[2]))
        if [tuple(p) for p in st[0]] == [tuple(p) for p in protos]:
            break
        protos = st[0]
    return best, trace


def _grid_components(mu, groups):
    out = []
    for g in groups:
        m = [Fraction(0)] * len(mu)
        for i in g:
            m[i] = mu.masses[i]
        out.append(mu.with_masses(m))
    return out


def solve_k_categorization(mu: GridMeasure, obj: Objective, K: int, restarts: int = 4, seed: int = 0,
                           upper=True) -> Categorization:
    """Best K-bin categorization found by Lloyd-style alternation; payoff is a
    lower bound, the unconstrained LP value an upper bound."""
    if K < 1:
        raise ValueError("K must be positive")
    src = [i for i in range(len(mu)) if mu.masses[i] > 0]
    X = mu.P[src]
    w = np.array([float(mu.masses[i]) for i in src])
    best = _state(mu, obj, np.zeros(len(src), dtype=int), src)
    trace = [float(best[2])]
    for k in range(2, K + 1):
        cands = []
        for r in range(restarts):
            rng = np.random.default_rng(seed + 1000 * k + r)
            pick = rng.choice(len(src), size=min(k, len(src)), replace=False, p=w / w.sum())
            init = [mu.points[src[t]] for t in pick]
            cands.append(_lloyd(mu, obj, init, src, X))
        # warm start from the best (k-1)-bin solution plus one extra prototype
        far = int(np.argmax(np.min(np.linalg.norm(X[:, None, :] - np.array(
            [[float(c) for c in y] for y in best[0]])[None], axis=2), axis=1)))
        cands.append(_lloyd(mu, obj, list(best[0]) + [mu.points[src[far]]], src, X, start=best))
        for st, tr in cands:
            if st is not None and float(st[2]) > float(best[2]) + 1e-14:
                best, trace = st, trace + tr
    protos, masses, pay, groups = best
    comps = _grid_components(mu, groups)
    lam = DiscreteMeasure(protos, masses)
    ub = None
    if upper:
        lp = solve_grid_lp(mu, obj)
        ub = lp.value
        if len(lp.nu) <= K and float(lp.value) > float(pay) + 1e-12:
            cat = Categorization(K, lp.nu, [], None, lp.value, ub, False, trace + [float(lp.value)])
            return cat
    part = _partition_of(comps)
    return Categorization(K, lam, comps, part, pay, ub, part is not None, trace)


# ---------------------------------------------------------------- cheap information


def _node_lattice(mu: GridMeasure):
    from itertools import product

    axes = [[lo + k * s for k in range(r + 1)] for lo, s, r in zip(mu.box.lower, mu.spacing, mu.res)]
    return [tuple(p) for p in product(*axes)]


def partial_differences(f: Objective, mu: GridMeasure):
    """Central differences of f along each axis at the grid nodes (box corners
    included); exact when f is."""
    nodes = _node_lattice(mu)
    out = []
    for a, s in enumerate(mu.spacing):
        e = tuple(s / 2 if k == a else Fraction(0) for k in range(mu.dim))
        if f.is_exact:
            D = [(f.exact(tuple(x + t for x, t in zip(p, e))) - f.exact(tuple(x - t for x, t in zip(p, e)))) / s
                 for p in nodes]
        else:
            P = np.array([[float(c) for c in p] for p in nodes])
            E = np.array([float(c) for c in e])
            D = list((f.values(P + E) - f.values(P - E)) / float(s))
        out.append(D)
    return out


def _active_gradients(obj: Objective, mu: GridMeasure):
    pts = list(mu.points) + _node_lattice(mu) + target_lattice(mu)
    used = set()
    for y in pts:
        vals = [sum(a * b for a, b in zip(g, y)) + c for g, c in obj.pieces]
        best = max(vals) if obj.kind == "max_affine" else min(vals)
        used.add(obj.pieces[vals.index(best)][0])
    return sorted(used)


@dataclass
class ThresholdResult:
    alpha: object
    beta: object
    kappa_bar: object
    kappa: object = None
    verdict: str = "Unchecked"
    solution: object = None


def cheap_information_threshold(mu: GridMeasure, obj: Objective, cost: Objective, kappa=None) -> ThresholdResult:
    D = partial_differences(cost, mu)
    alpha = max(max(d) - min(d) for d in D)
    if obj.pieces is not None:
        grads = _active_gradients(obj, mu)
        if len(grads) < 2:
            raise DegenerateObjective("objective has a single active gradient")
        diffs = [abs(g[a] - h[a]) for g, h in combinations(grads, 2) for a in range(mu.dim)]
    else:
        diffs = []
        for d in partial_differences(obj, mu):
            vals = sorted(set(round(float(v), 12) for v in d))
            diffs += [b - a for a, b in zip(vals, vals[1:])]
    diffs = [v for v in diffs if v > 0]
    if not diffs:
        raise DegenerateObjective("objective has no positive partial spread")
    beta = min(diffs)
    if alpha <= 0:
        raise DegenerateObjective("cost has no partial spread")
    kbar = beta / alpha
    res = ThresholdResult(alpha, beta, kbar)
    if kappa is not None:
        res.kappa = Q(kappa)
        if res.kappa < kbar:
            W = obj.minus(cost, res.kappa)
            lp = solve_grid_lp(mu, W)
            cs = canonical_decompose(mu, W, lp)
            res.solution = cs
            single = cs.canonical and all(c.mode == POOLING for c in cs.cells)
            res.verdict = "SinglePrototype" if single else "NotSinglePrototype"
    return res
