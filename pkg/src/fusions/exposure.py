"""Lipschitz-exposure certificates built from power diagrams."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exact import Q
from .extremality import _bsp, _hull_points, discover_partition
from .lp import (EQ, FLOAT, OPTIMAL, RATIONAL, RATIONAL_LIMIT, DEFAULT_TOL, LpBuilder,
                 optimal_face_is_singleton, solve)
from .measure import (ConvexPartition, DiscreteMeasure, GridMeasure, barycenter,
                      convexly_independent)
from .power import PowerDiagram, is_regular, lift, region_vertices

POOLING, FULL_REVELATION = "Pooling", "FullRevelation"
FINITE_CELLS_NOTE = "finitely many cells; uncountable partitions are not represented"


class Eq1Violated(ValueError):
    pass


class NotUnique(ValueError):
    def __init__(self, msg, counterexample=None):
        super().__init__(msg)
        self.counterexample = counterexample


class ConvexityBroken(ValueError):
    pass


# ---------------------------------------------------------------- gauge bump


@dataclass
class GaugeBump:
    """c(x) = gauge(x - x0)^2 - 1 on the polygon A, 0 outside."""
    halfspaces: tuple  # exact (a, b) describing A
    anchor: tuple
    scale: Fraction = Fraction(1)

    def _gauge(self, x):
        return max(sum(ai * (xi - ci) for ai, xi, ci in zip(a, x, self.anchor)) / (b - sum(ai * ci for ai, ci in zip(a, self.anchor)))
                   for a, b in self.halfspaces)

    def __call__(self, x):
        g = self._gauge(x)
        return self.scale * (g * g - 1) if g <= 1 else Fraction(0)

    def values(self, P):
        A = np.array([[float(c) for c in a] for a, _ in self.halfspaces])
        x0 = np.array([float(c) for c in self.anchor])
        den = np.array([float(b) for _, b in self.halfspaces]) - A @ x0
        g = ((P - x0) @ A.T / den).max(axis=1)
        return float(self.scale) * np.where(g <= 1, g * g - 1, 0.0)

    @property
    def lipschitz(self):
        x0 = self.anchor
        rates = [np.linalg.norm([float(c) for c in a]) / float(b - sum(ai * ci for ai, ci in zip(a, x0)))
                 for a, b in self.halfspaces]
        return 2 * float(self.scale) * max(rates)


def gauge_bump(pd: PowerDiagram, cell: int, scale=1) -> GaugeBump:
    from .power import cell_halfspaces

    region = cell_halfspaces(pd, cell)
    box = pd.box
    hs = list(region.halfspaces)
    for a in range(box.dim):
        e = tuple(Fraction(int(k == a)) for k in range(box.dim))
        hs.append((e, box.upper[a]))
        hs.append((tuple(-v for v in e), -box.lower[a]))
    vs = region_vertices(region, box)
    anchor = tuple(sum(v[a] for v in vs) / len(vs) for a in range(box.dim))
    return GaugeBump(tuple(hs), anchor, Q(scale))


# ---------------------------------------------------------------- certificate


@dataclass
class ExposureCertificate:
    diagram: PowerDiagram
    modes: list  # per cell
    bumps: dict  # cell -> GaugeBump
    support: tuple  # the set S where u = q
    u_grid: np.ndarray
    u_support: tuple
    primal: object
    dual: object
    unique: bool
    seed: int
    probes: int
    mode: str  # arithmetic of primal/dual values
    lp_mode: str  # arithmetic of the uniqueness LPs
    resolution: tuple
    counterexample: DiscreteMeasure | None = None
    notes: list = field(default_factory=lambda: [FINITE_CELLS_NOTE])

    @property
    def eq1(self):
        if self.mode == RATIONAL:
            return self.primal == self.dual
        return abs(float(self.primal) - float(self.dual)) <= DEFAULT_TOL.cert

    @property
    def valid(self):
        return self.eq1 and self.unique


def _q_exact(pd, bumps):
    L = lift(pd)

    def q(x):
        v, _ = L(x)
        return v + sum((b(x) for b in bumps.values()), Fraction(0))
    return q


def _q_float(pd, bumps, P):
    v = lift(pd).eval_many(P)
    for b in bumps.values():
        v = v + b.values(P)
    return v


def midpoint_convex(f, P, tol=1e-12):
    """f((x+y)/2) <= (f(x)+f(y))/2 for all pairs of rows of P."""
    fx = f(P)
    n = len(P)
    for i in range(n):
        mid = (P[i] + P[i:]) / 2
        if (f(mid) - (fx[i] + fx[i:]) / 2 > tol * (1 + np.abs(fx).max())).any():
            return False
    return True


def _dist_to(P, S):
    S = np.array([[float(c) for c in s] for s in S], dtype=float)
    return np.min(np.linalg.norm(P[:, None, :] - S[None, :, :], axis=2), axis=1)


def build_certificate(mu: GridMeasure, nu: DiscreteMeasure, pd: PowerDiagram, full_revelation_cells=(),
                      mode="auto", seed=0, probes=4, tol=DEFAULT_TOL) -> ExposureCertificate:
    """u = q - dist(., S) with q = p plus gauge bumps on full-revelation cells;
    checks the primal/dual equality and uniqueness of the maximizer."""
    fr = sorted(set(full_revelation_cells))
    glab = pd.assign(mu.points, mu.P)
    nlab = pd.assign(list(nu.points), nu.P)
    modes = [FULL_REVELATION if k in fr else POOLING for k in range(pd.k)]
    for k in fr:
        mine = [(mu.points[i], mu.masses[i]) for i in range(len(mu)) if glab[i] == k and mu.masses[i] > 0]
        theirs = nu.select(nlab == k)
        if DiscreteMeasure([p for p, _ in mine], [w for _, w in mine]) != theirs if mine else len(theirs):
            raise Eq1Violated(f"nu does not reveal cell {k} atom by atom")
    bumps = {}
    if fr:
        scale = Fraction(1)
        for _ in range(60):
            bumps = {k: gauge_bump(pd, k, scale) for k in fr}
            if midpoint_convex(lambda P: _q_float(pd, bumps, P), mu.P):
                break
            scale /= 2
        else:
            raise ConvexityBroken("no bump scale keeps q convex on the grid")
    q = _q_exact(pd, bumps)
    S = list(nu.points) + [mu.points[i] for i in range(len(mu)) if glab[i] in fr and mu.masses[i] > 0]
    S = list(dict.fromkeys(S))
    u_grid = _q_float(pd, bumps, mu.P) - _dist_to(mu.P, S)
    u_supp = tuple(q(y) for y in S)
    qmu = [q(x) if w else Fraction(0) for x, w in zip(mu.points, mu.masses)]
    primal = sum((w * q(y) for y, w in zip(nu.points, nu.masses)), Fraction(0))
    dual = sum((w * v for w, v in zip(mu.masses, qmu)), Fraction(0))
    if mode == FLOAT:
        primal, dual = float(primal), float(dual)
    unique, lam, lp_value, used = _optimal_face(mu, nu, pd, S, q, glab, fr, mode, seed, probes, tol)
    if used == RATIONAL and mode != FLOAT:
        if lp_value != dual:
            raise Eq1Violated(f"LP optimum {lp_value} differs from the dual value {dual}")
    elif abs(float(lp_value) - float(dual)) > tol.cert:
        raise Eq1Violated(f"LP optimum {float(lp_value)} differs from the dual value {float(dual)}")
    return ExposureCertificate(pd, modes, bumps, tuple(S), u_grid, u_supp, primal, dual, unique, seed, probes,
                               FLOAT if mode == FLOAT else RATIONAL, used, mu.res, lam)


def _blocks(mu, S, pd, glab, fr):
    """Allowed (atom, target) pairs: a grid atom can only feed targets where its
    own cell's affine piece is active, unless full-revelation cells are involved."""
    L = lift(pd)
    pvals = [L(y) for y in S]
    slab = pd.assign(S)
    pairs = []
    for i, (x, w) in enumerate(zip(mu.points, mu.masses)):
        if w == 0:
            continue
        P = glab[i]
        for j, y in enumerate(S):
            if fr and (P in fr or slab[j] in fr):
                pairs.append((i, j))
            elif L.piece(P, y) == pvals[j][0]:
                pairs.append((i, j))
    # connected components of the bipartite graph
    parent = {}

    def find(a):
        while parent.setdefault(a, a) != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a
    for i, j in pairs:
        parent[find(("x", i))] = find(("y", j))
    groups = {}
    for i, j in pairs:
        groups.setdefault(find(("y", j)), []).append((i, j))
    return list(groups.values())


def _optimal_face(mu, nu, pd, S, q, glab, fr, mode, seed, probes, tol):
    """Maximize sum q(y) lambda(y) over fusions supported on S, block by block;
    report uniqueness of lambda and a second optimizer when it is not unique."""
    qS = [q(y) for y in S]
    blocks = _blocks(mu, S, pd, glab, fr)
    covered = {i for blk in blocks for i, _ in blk}
    if any(w > 0 and i not in covered for i, w in enumerate(mu.masses)):
        raise Eq1Violated("some grid atom has no admissible target")
    total = Fraction(0)
    unique = True
    lam_alt = None
    used = RATIONAL
    nu_mass = {y: w for y, w in zip(nu.points, nu.masses)}
    for blk in blocks:
        src = sorted({i for i, _ in blk})
        tgt = sorted({j for _, j in blk})
        B = LpBuilder()
        var = {}
        for i, j in blk:
            var[i, j] = B.var(0, None, qS[j])
        for i in src:
            B.row({var[i, j]: 1 for j in tgt if (i, j) in var}, EQ, mu.masses[i])
        lam = {}
        for j in tgt:
            cols = [i for i in src if (i, j) in var]
            for a in range(mu.dim):
                B.row({var[i, j]: mu.points[i][a] - S[j][a] for i in cols if mu.points[i][a] != S[j][a]}, EQ, 0)
            lam[j] = B.var(None, None)
            B.row({**{var[i, j]: 1 for i in cols}, lam[j]: -1}, EQ, 0)
        lp = B.build(True)
        m = mode if mode in (RATIONAL, FLOAT) else (RATIONAL if lp.n <= RATIONAL_LIMIT else FLOAT)
        if m == FLOAT:
            used = FLOAT
        sol = solve(lp, m, tol)
        if sol.status != OPTIMAL:
            raise Eq1Violated(f"block LP returned {sol.status}")
        total += Q(sol.value) if m == RATIONAL else Fraction(float(sol.value))
        proj = [lam[j] for j in tgt]
        probe = optimal_face_is_singleton(lp, sol, probes, seed, projection=proj, mode=m, tol=tol)
        if not probe.unique and unique:
            unique = False
            w1, w2 = probe.witness
            ref = [nu_mass.get(S[j], Fraction(0)) for j in tgt]
            pick = w2 if np.abs(np.array(w1, dtype=float) - np.array(ref, dtype=float)).max() < \
                np.abs(np.array(w2, dtype=float) - np.array(ref, dtype=float)).max() else w1
            pick = [Q(v) if m == RATIONAL else Fraction(float(v)).limit_denominator(10 ** 9) for v in pick]
            alt = dict(nu_mass)
            for j, v in zip(tgt, pick):
                alt[S[j]] = v
            lam_alt = DiscreteMeasure(list(alt), [max(v, Fraction(0)) for v in alt.values()])
    return unique, lam_alt, total, used


def certify_exposed(mu, nu, pd, full_revelation_cells=(), mode="auto", seed=0, probes=4, strict=False):
    """build_certificate plus the error contract: NotUnique carries the counterexample."""
    cert = build_certificate(mu, nu, pd, full_revelation_cells, mode, seed, probes)
    if strict and not cert.eq1:
        raise Eq1Violated("primal and dual values differ")
    if strict and not cert.unique:
        raise NotUnique("optimal face is not a singleton", cert.counterexample)
    return cert


# ---------------------------------------------------------------- uniqueness condition


def check_prop2_condition(mu: GridMeasure, nu: DiscreteMeasure, pd: PowerDiagram, mode="auto"):
    """Is nu the only lambda supported in supp nu with lambda|_P dominated by mu|_P
    on every cell? Returns (True, None) or (False, witness lambda)."""
    glab = pd.assign(mu.points, mu.P)
    nlab = pd.assign(list(nu.points), nu.P)
    pts, masses = list(nu.points), list(nu.masses)
    for k in range(pd.k):
        tj = [j for j in range(len(pts)) if nlab[j] == k]
        src = [i for i in range(len(mu)) if glab[i] == k and mu.masses[i] > 0]
        if not tj:
            continue
        B = LpBuilder()
        var = {(i, j): B.var() for i in src for j in tj}
        for i in src:
            B.row({var[i, j]: 1 for j in tj}, EQ, mu.masses[i])
        for j in tj:
            for a in range(mu.dim):
                B.row({var[i, j]: mu.points[i][a] - pts[j][a] for i in src if mu.points[i][a] != pts[j][a]}, EQ, 0)
        base = B.build(True)
        m = mode if mode in (RATIONAL, FLOAT) else (RATIONAL if base.n <= RATIONAL_LIMIT else FLOAT)
        for j0 in tj:
            for sgn in (1, -1):
                c = [0] * base.n
                for i in src:
                    c[var[i, j0]] = sgn
                sol = solve(base.with_objective(c, True), m)
                if sol.status != OPTIMAL:
                    return False, None
                gap = sgn * Q(sol.value) - masses[j0] if m == RATIONAL else sgn * float(sol.value) - float(masses[j0])
                if (sgn > 0 and gap > (0 if m == RATIONAL else 1e-7)) or (sgn < 0 and gap < -(0 if m == RATIONAL else 1e-7)):
                    lam = list(masses)
                    for j in tj:
                        v = sum((sol.x[var[i, j]] for i in src), 0 * sol.x[0])
                        lam[j] = Q(v) if m == RATIONAL else Fraction(float(v)).limit_denominator(10 ** 9)
                    return False, DiscreteMeasure(pts, [max(v, Fraction(0)) for v in lam])
    return True, None


# ---------------------------------------------------------------- Cor. 2


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]
        yield [[first]] + part


@dataclass
class IndependenceResult:
    holds: bool
    diagram: PowerDiagram | None
    candidates: list  # (groups, regular?, cells convexly independent?)


def necessary_convex_independence(mu: GridMeasure, nu: DiscreteMeasure, max_groups=6) -> IndependenceResult:
    """Search power diagrams built from merges of the overlap-graph groups for
    one whose cells all carry a convexly independent part of supp nu."""
    box = mu.box
    if len(nu) == 1:
        return IndependenceResult(True, PowerDiagram([barycenter(nu)], [0], box), [])
    disc = discover_partition(mu, nu)
    groups = disc.groups if disc.found and disc.groups else [list(range(len(nu)))]
    if len(groups) > max_groups:
        groups = [list(range(len(nu)))]
    pts = list(nu.points)
    cands = []
    order = sorted(_set_partitions(list(range(len(groups)))), key=len, reverse=True)
    for merge in order:
        merged = [[j for g in blk for j in groups[g]] for blk in merge]
        indep = all(convexly_independent([pts[j] for j in blk]) for blk in merged)
        if len(merged) == 1:
            pd = PowerDiagram([barycenter(nu)], [0], box)
            cands.append((merged, True, indep))
            if indep:
                return IndependenceResult(True, pd, cands)
            continue
        if not indep:
            cands.append((merged, None, False))
            continue
        hulls = [_hull_points(_group_hull(mu, disc, blk, groups, pts)) for blk in merge]
        leaves = _bsp(merged, hulls, RATIONAL)
        if leaves is None:
            cands.append((merged, False, indep))
            continue
        part = ConvexPartition([hs for hs, _ in leaves])
        pd = is_regular(part, box)
        cands.append((merged, pd is not None, indep))
        if pd is not None:
            return IndependenceResult(True, pd, cands)
    return IndependenceResult(False, None, cands)


def _group_hull(mu, disc, blk, groups, pts):
    """Points spanning a merged group: its atoms plus the grid atoms of its
    cells in the discovered partition."""
    out = [pts[j] for g in blk for j in groups[g]]
    if disc.found and len(disc.partition) == len(groups):
        lab = disc.partition.assign(mu.points, mu.P)
        out += [mu.points[i] for i in range(len(mu)) if lab[i] in blk and mu.masses[i] > 0]
    return list(dict.fromkeys(out))


def diagram_from_partition(partition: ConvexPartition, box):
    """Power diagram inducing the partition, or None when it is not regular."""
    return is_regular(partition, box)
