"""Extremality of finitely supported fusions: per-cell necessary conditions,
overlap-graph partition discovery, feasible-flow certificates and witnesses."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .exact import Q, solve_dense_exact
from .lp import EQ, FLOAT, GE, LE, OPTIMAL, RATIONAL, RATIONAL_LIMIT, LpBuilder, solve
from .measure import (OVERLAP, ConvexPartition, ConvexRegion, DiscreteMeasure, GridMeasure,
                      affinely_independent, barycenter, restrict_mask)
from .order import (MassMismatch, NotDominated, check_convex_order,
                    common_interior_radius, kernel_components)

CERTIFIED_EXTREME = "CertifiedExtreme"
CERTIFIED_NOT_EXTREME = "CertifiedNotExtreme"
INCONCLUSIVE = "Inconclusive"
NOT_DOMINATED = "NotDominated"


class AtomOnBoundary(ValueError):
    pass


class EmptyCell(ValueError):
    pass


class PreconditionFailed(ValueError):
    pass


class NoFeasibleDelta(ValueError):
    pass


def trivial_partition():
    return ConvexPartition([ConvexRegion()])


def _mode(mode, nvars):
    if mode == "auto":
        return RATIONAL if nvars <= RATIONAL_LIMIT else FLOAT
    return mode


def nu_labels(nu: DiscreteMeasure, partition: ConvexPartition):
    """Cell index of each atom of nu; atoms on any cell boundary are rejected."""
    for p in nu.points:
        for k, cell in enumerate(partition.cells):
            if cell.contains(p) and not cell.contains(p, strict=True):
                raise AtomOnBoundary(f"atom {tuple(map(float, p))} lies on the boundary of cell {k}")
    lab = partition.assign(list(nu.points), nu.P)
    if (lab < 0).any():
        raise AtomOnBoundary("atom outside every cell")
    return lab


# ---------------------------------------------------------------- necessary conditions


@dataclass
class CellCheck:
    index: int
    mu_mass: Fraction
    nu_mass: Fraction
    atoms: tuple
    dominated: bool
    affinely_independent: bool

    @property
    def balanced(self):
        return abs(float(self.mu_mass - self.nu_mass)) <= 1e-9

    @property
    def ok(self):
        return self.dominated and self.affinely_independent and self.balanced


def verify_prop1_conditions(mu: GridMeasure, nu: DiscreteMeasure, partition: ConvexPartition,
                            mode="auto"):
    """Per cell: nu|_P dominated by mu|_P, affinely independent support, equal mass."""
    nlab = nu_labels(nu, partition)
    glab = partition.assign_grid(mu)
    out = []
    for k in range(len(partition)):
        muk = restrict_mask(mu, glab == k)
        nuk = nu.select(nlab == k)
        if len(nuk) == 0:
            dom = muk.total_mass == 0
        else:
            try:
                dom = check_convex_order(muk, nuk, mode).dominated
            except MassMismatch:
                dom = False
        aff = len(nuk) == 0 or affinely_independent(nuk.points)
        out.append(CellCheck(k, muk.total_mass, nuk.total_mass, tuple(nuk.points), dom, aff))
    return out


# ---------------------------------------------------------------- partition discovery


@dataclass
class Discovery:
    partition: ConvexPartition
    found: bool
    full_revelation: bool = False
    groups: list = field(default_factory=list)  # target atom indices per cell


def _hull_points(pts):
    """Exact extreme points of a planar set (all points when degenerate)."""
    if len(pts) <= 3 or len(pts[0]) != 2:
        return pts
    from scipy.spatial import ConvexHull, QhullError

    try:
        hull = ConvexHull(np.array([[float(c) for c in p] for p in pts]))
    except QhullError:
        return pts
    return [pts[i] for i in hull.vertices]


def _separate(A, B, mode="rational"):
    """Max-margin hyperplane a.x <= b - d on A, a.x >= b + d on B with |a|_inf <= 1."""
    n = len(A[0])
    L = LpBuilder()
    a = [L.var(-1, 1) for _ in range(n)]
    b = L.var(None, None)
    d = L.var(None, 1, 1)
    for p in A:
        L.row({**{a[k]: p[k] for k in range(n) if p[k] != 0}, b: -1, d: 1}, LE, 0)
    for p in B:
        L.row({**{a[k]: p[k] for k in range(n) if p[k] != 0}, b: -1, d: -1}, GE, 0)
    sol = solve(L.build(True), mode)
    if sol.status != OPTIMAL or Q(sol.x[d]) <= 0:
        return None
    return tuple(Q(sol.x[v]) for v in a), Q(sol.x[b]), Q(sol.x[d])


def _bsp(groups, hulls, mode):
    """Recursively split groups by hyperplanes; returns leaves [(halfspaces, group)]."""
    if len(groups) == 1:
        return [([], groups[0])]
    k = len(groups)
    if k <= 8:
        splits = [s for r in range(1, k // 2 + 1) for s in combinations(range(k), r)]
    else:
        splits = [(i,) for i in range(k)]
    best = None
    for left in splits:
        right = [i for i in range(k) if i not in left]
        A = [p for i in left for p in hulls[i]]
        B = [p for i in right for p in hulls[i]]
        sep = _separate(A, B, mode)
        if sep and (best is None or sep[2] > best[0][2]):
            best = (sep, left, right)
    if best is None:
        return None
    (a, b, _), left, right = best
    L = _bsp([groups[i] for i in left], [hulls[i] for i in left], mode)
    R = _bsp([groups[i] for i in right], [hulls[i] for i in right], mode)
    if L is None or R is None:
        return None
    neg = tuple(-v for v in a)
    return [([(a, b)] + hs, g) for hs, g in L] + [([(neg, -b)] + hs, g) for hs, g in R]


def _weak_separate(A, B):
    """Hyperplane a.x = b with A on the closed low side and B on the closed high
    side, oriented so the barycenters of A and B lie strictly apart."""
    n = len(A[0])
    cA = [sum(p[k] for p in A) / len(A) for k in range(n)]
    cB = [sum(p[k] for p in B) / len(B) for k in range(n)]
    L = LpBuilder()
    a = [L.var(-1, 1, cB[k] - cA[k]) for k in range(n)]
    b = L.var(None, None)
    for p in A:
        L.row({**{a[k]: p[k] for k in range(n) if p[k] != 0}, b: -1}, LE, 0)
    for p in B:
        L.row({**{a[k]: p[k] for k in range(n) if p[k] != 0}, b: -1}, GE, 0)
    sol = solve(L.build(True), RATIONAL)
    if sol.status != OPTIMAL or sol.value <= 0:
        return None
    return tuple(sol.x[v] for v in a), sol.x[b]


def weak_bsp(supports):
    """Convex partition with one closed cell per support set, or None."""
    k = len(supports)
    if k == 1:
        return [[]]
    hulls = [list(dict.fromkeys(_hull_points(list(s)))) for s in supports]
    for r in range(1, k // 2 + 1):
        for left in combinations(range(k), r):
            right = [i for i in range(k) if i not in left]
            A = [p for i in left for p in hulls[i]]
            B = [p for i in right for p in hulls[i]]
            sep = _weak_separate(A, B)
            if sep is None:
                continue
            a, b = sep
            Lh = weak_bsp([supports[i] for i in left])
            Rh = weak_bsp([supports[i] for i in right])
            if Lh is None or Rh is None:
                continue
            neg = tuple(-v for v in a)
            out = [None] * k
            for t, i in enumerate(left):
                out[i] = [(a, b)] + Lh[t]
            for t, i in enumerate(right):
                out[i] = [(neg, -b)] + Rh[t]
            return out
    return None


def overlap_groups(comps, margin, mode="rational"):
    """Connected components of the graph linking components whose hull
    interiors share a ball of radius > margin."""
    k = len(comps)
    supports = [[c.points[i] for i in c.support()] for c in comps]
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    n = comps[0].dim
    for i in range(k):
        for j in range(i + 1, k):
            if find(i) == find(j):
                continue
            r, _ = common_interior_radius(_hull_points(supports[i]), _hull_points(supports[j]), mode)
            if float(r) / np.sqrt(n) > float(margin):
                parent[find(i)] = find(j)
    roots = {}
    for i in range(k):
        roots.setdefault(find(i), []).append(i)
    return list(roots.values()), supports


def discover_partition(mu: GridMeasure, nu: DiscreteMeasure, mode="auto") -> Discovery:
    if len(nu) == 1:
        return Discovery(trivial_partition(), True, groups=[[0]])
    if nu == mu.to_discrete():
        return Discovery(trivial_partition(), False, full_revelation=True)
    v = check_convex_order(mu, nu, mode, local=True)
    if not v.dominated:
        raise NotDominated("nu is not dominated by mu")
    comps = kernel_components(mu, v.kernel)
    groups = None
    # coarse grids give thin components, so retry with any interior overlap
    for margin in (min(mu.spacing) / 2, 0):
        groups, supports = overlap_groups(comps, margin)
        if len(groups) == 1:
            return Discovery(trivial_partition(), True, groups=groups)
        hulls = [_hull_points(list(dict.fromkeys(p for i in g for p in supports[i]))) for g in groups]
        leaves = _bsp(groups, hulls, RATIONAL)
        if leaves is None:
            # components may share grid atoms on a common boundary
            hs = weak_bsp(hulls)
            if hs is None:
                continue
            leaves = list(zip(hs, groups))
        part = ConvexPartition([ConvexRegion(hs) for hs, _ in leaves], OVERLAP)
        return Discovery(part, True, groups=[g for _, g in leaves])
    return Discovery(trivial_partition(), False, groups=groups)


# ---------------------------------------------------------------- feasible flows


@dataclass
class FlowSystem:
    labels: np.ndarray  # cell of each grid atom
    flows: list  # flows[P][x], signed masses on grid atoms
    partition: ConvexPartition | None = None

    @property
    def k(self):
        return len(self.flows)

    def cross_mass(self):
        return sum((u[x] for P, u in enumerate(self.flows) for x in range(len(u))
                    if self.labels[x] != P and u[x] > 0), 0 * self.flows[0][0])

    def cross(self, P, Q):
        """u_P restricted to cell Q (total mass)."""
        return sum((self.flows[P][x] for x in np.nonzero(self.labels == Q)[0]), 0 * self.flows[0][0])

    def is_zero(self, tol=0):
        return all(abs(v) <= tol for u in self.flows for v in u)

    def scaled(self, s):
        return FlowSystem(self.labels, [[v * s for v in u] for u in self.flows], self.partition)

    def to_arrays(self):
        return np.array([[float(v) for v in u] for u in self.flows], dtype=float)


def check_flow(mu: GridMeasure, flow: FlowSystem):
    """Worst violation of each of the five feasible-flow conditions, recomputed
    from the raw flow values."""
    lab, masses, pts = flow.labels, mu.masses, mu.points
    zero = 0 * flow.flows[0][0]
    pos = neg = tot = bar = summ = zero
    d = mu.dim
    for P, u in enumerate(flow.flows):
        s = zero
        m = [zero] * d
        for x, v in enumerate(u):
            if lab[x] == P:
                neg = max(neg, v, -masses[x] - v)
            else:
                pos = max(pos, -v, v - masses[x])
            s += v
            if v:
                for a in range(d):
                    m[a] += v * pts[x][a]
        tot = max(tot, abs(s))
        bar = max([bar] + [abs(c) for c in m])
    for x in range(len(masses)):
        summ = max(summ, abs(sum((u[x] for u in flow.flows), zero)))
    return {"u_pos": max(pos, zero), "u_neg": max(neg, zero), "mass": tot, "barycenter": bar, "sum": summ}


def flow_is_feasible(mu, flow, tol=0):
    return all(v <= tol for v in check_flow(mu, flow).values())


@dataclass
class FlowCertificate:
    flow: FlowSystem  # zero, or a nonzero witness scaled strictly inside the bounds
    optimum: object
    mode: str

    @property
    def unique_zero(self):
        return self.optimum == 0 if self.mode == RATIONAL else float(self.optimum) <= 1e-9


def max_flow_certificate(mu: GridMeasure, partition: ConvexPartition, mode="auto", labels=None,
                         zero_cells=()) -> FlowCertificate:
    """Maximize total cross mass over feasible flows. Cells listed in zero_cells
    have their couplings fixed to zero in advance (valid for halfspace cells)."""
    lab = partition.assign_grid(mu) if labels is None else labels
    k = len(partition)
    for P in range(k):
        if sum((mu.masses[x] for x in np.nonzero(lab == P)[0]), Fraction(0)) == 0:
            raise EmptyCell(f"cell {P} has no grid mass")
    atoms = [x for x in range(len(mu.masses)) if mu.masses[x] > 0]
    zc = set(zero_cells)
    B = LpBuilder()
    var = {}
    for P in range(k):
        for x in atoms:
            inside = lab[x] == P
            if P in zc or lab[x] in zc:
                if not inside:
                    continue
            w = mu.masses[x]
            var[P, x] = B.var(-w, 0) if inside else B.var(0, w, 1)
    for P in range(k):
        cols = [x for x in atoms if (P, x) in var]
        B.row({var[P, x]: 1 for x in cols}, EQ, 0)
        for a in range(mu.dim):
            B.row({var[P, x]: mu.points[x][a] for x in cols if mu.points[x][a] != 0}, EQ, 0)
    for x in atoms:
        B.row({var[P, x]: 1 for P in range(k) if (P, x) in var}, EQ, 0)
    lp = B.build(True)
    mode = _mode(mode, lp.n)
    sol = solve(lp, mode)
    if sol.status != OPTIMAL:
        raise RuntimeError(f"flow LP returned {sol.status}")
    zero = Fraction(0) if mode == RATIONAL else 0.0
    flows = [[zero] * len(mu.masses) for _ in range(k)]
    for (P, x), v in var.items():
        flows[P][x] = sol.x[v] if mode == RATIONAL else float(sol.x[v])
    fs = FlowSystem(lab, flows, partition)
    opt = sol.value if mode == RATIONAL else float(sol.value)
    if (opt > 0 and mode == RATIONAL) or (mode == FLOAT and opt > 1e-9):
        fs = fs.scaled(Fraction(1, 2) if mode == RATIONAL else 0.5)
    elif mode == FLOAT:
        fs = FlowSystem(lab, [[0.0] * len(mu.masses) for _ in range(k)], partition)
    return FlowCertificate(fs, opt, mode)


def halfspace_cells(mu: GridMeasure, partition: ConvexPartition, labels=None):
    """Cells whose grid atoms are exactly those of a halfspace (intersected with the box)."""
    lab = partition.assign_grid(mu) if labels is None else labels
    cand = []
    for cell in partition.cells:
        for a, b in cell.halfspaces:
            cand += [ConvexRegion([(a, b)]), ConvexRegion([(tuple(-v for v in a), -b)])]
    live = np.array([w > 0 for w in mu.masses])
    out = []
    for k in range(len(partition)):
        mine = (lab == k) & live
        for h in cand:
            for strict in (False, True):
                if np.array_equal(h.mask(mu.points, mu.P, strict) & live, mine):
                    out.append(k)
                    break
            else:
                continue
            break
    return out


def halfspace_zero_flow_check(flow: FlowSystem, cells, tol=0):
    """Couplings of a halfspace cell with every other cell must vanish."""
    lab = flow.labels
    for H in cells:
        for P in range(flow.k):
            if P == H:
                continue
            if any(abs(flow.flows[H][x]) > tol for x in np.nonzero(lab == P)[0]):
                return False
            if any(abs(flow.flows[P][x]) > tol for x in np.nonzero(lab == H)[0]):
                return False
    return True


# ---------------------------------------------------------------- perturbation


def _measure_with_barycenter(mu, mask, mass, bary, cap, mode):
    """Nonnegative v <= cap*mu on mask with v(X) = mass and barycenter bary."""
    idx = [x for x in np.nonzero(mask)[0] if mu.masses[x] > 0]
    B = LpBuilder()
    v = [B.var(0, cap * mu.masses[x]) for x in idx]
    B.row({t: 1 for t in v}, EQ, mass)
    for a in range(mu.dim):
        B.row({t: mu.points[x][a] - bary[a] for t, x in zip(v, idx)
               if mu.points[x][a] != bary[a]}, EQ, 0)
    sol = solve(B.build(True), mode)
    if sol.status != OPTIMAL:
        return None
    out = [Fraction(0)] * len(mu.masses)
    for t, x in zip(v, idx):
        out[x] = sol.x[t]
    return out


def perturb_partition_flow(mu: GridMeasure, flow: FlowSystem, perturbed: ConvexPartition,
                           correspondence=None, margin=None, max_halvings=30, mode=RATIONAL) -> FlowSystem:
    """Transfer a nonzero feasible flow to a partition whose cells P' sit inside
    the old cells P and contain the barycenters b_QP in their interiors."""
    if flow.is_zero():
        raise PreconditionFailed("input flow is zero")
    k = flow.k
    corr = list(range(k)) if correspondence is None else list(correspondence)
    lab2 = perturbed.assign_grid(mu)
    margin = Fraction(min(mu.spacing) / 4) if margin is None else Q(margin)
    for P in range(k):
        inside = lab2 == corr[P]
        if any(mu.masses[x] > 0 and flow.labels[x] != P for x in np.nonzero(inside)[0]):
            raise PreconditionFailed(f"perturbed cell {corr[P]} is not inside cell {P}")
    moves = []
    for Q_ in range(k):
        for P in range(k):
            if P == Q_:
                continue
            idx = [x for x in np.nonzero(flow.labels == P)[0] if flow.flows[Q_][x] != 0]
            m = sum((Q(flow.flows[Q_][x]) for x in idx), Fraction(0))
            if m <= 0:
                continue
            b = tuple(sum((Q(flow.flows[Q_][x]) * mu.points[x][a] for x in idx), Fraction(0)) / m
                      for a in range(mu.dim))
            cell = perturbed.cells[corr[P]]
            s = cell.slack(b)
            if s is not None and s <= 0:
                raise PreconditionFailed(f"barycenter b_{Q_}{P} is not interior to the perturbed cell")
            if s is not None:
                norms = [np.linalg.norm([float(c) for c in a]) for a, _ in cell.halfspaces]
                dist = min(float(bb - sum(x * y for x, y in zip(a, b))) / nn
                           for (a, bb), nn in zip(cell.halfspaces, norms))
                if dist <= float(margin):
                    raise PreconditionFailed(f"barycenter b_{Q_}{P} is within the interior margin")
            moves.append((Q_, P, m, b))
    kp = len(perturbed)
    delta = Fraction(1)
    for _ in range(max_halvings):
        parts = {}
        ok = True
        for Q_, P, m, b in moves:
            v = _measure_with_barycenter(mu, lab2 == corr[P], delta * m, b, Fraction(1, kp), mode)
            if v is None:
                ok = False
                break
            parts[Q_, P] = v
        if ok:
            flows = [[Fraction(0)] * len(mu.masses) for _ in range(kp)]
            for (Q_, P), v in parts.items():
                for x, val in enumerate(v):
                    if val:
                        flows[corr[Q_]][x] += val
                        flows[corr[P]][x] -= val
            out = FlowSystem(lab2, flows, perturbed)
            if flow_is_feasible(mu, out):
                return out
        delta /= 2
    raise NoFeasibleDelta("no delta made the perturbed flow feasible")


# ---------------------------------------------------------------- non-extreme witnesses


def _simplex(center, delta):
    n = len(center)
    vs = [tuple(delta if a == k else Fraction(0) for a in range(n)) for k in range(n)]
    vs.append(tuple(-delta for _ in range(n)))
    return [tuple(c + v for c, v in zip(center, w)) for w in vs]


def _weights_on(points, mass, bary):
    n = len(points[0])
    A = [[p[a] for p in points] for a in range(n)] + [[Fraction(1)] * len(points)]
    b = [mass * c for c in bary] + [mass]
    return solve_dense_exact(A, b)


@dataclass
class NonExtremeWitness:
    nu: DiscreteMeasure
    members: list  # nu^i with nu = (1/m) sum nu^i
    pair: tuple  # (nu1, nu2) with nu = (nu1 + nu2)/2
    eps: Fraction
    delta: Fraction


def build_nonextreme_from_flow(mu: GridMeasure, flow: FlowSystem, mode=RATIONAL, max_halvings=20):
    """From a nonzero feasible flow, build a fusion nu whose cells satisfy the
    necessary conditions yet nu is the average of other fusions."""
    if flow.is_zero():
        raise PreconditionFailed("flow is zero")
    flows = [[Q(v) for v in u] for u in flow.flows]
    fl = FlowSystem(flow.labels, flows, flow.partition)
    if not flow_is_feasible(mu, fl):
        raise PreconditionFailed("flow must satisfy the five conditions exactly")
    lab = flow.labels
    m = fl.k
    cells = [restrict_mask(mu, lab == P) for P in range(m)]
    bary = [barycenter(c) for c in cells]
    delta = min(mu.spacing)
    for _ in range(max_halvings):
        supp = [_simplex(b, delta) for b in bary]
        pieces = [DiscreteMeasure(s, _weights_on(s, c.total_mass, b)) for s, c, b in zip(supp, cells, bary)]
        if all(check_convex_order(c, p, mode).dominated for c, p in zip(cells, pieces)):
            break
        delta /= 2
    else:
        raise NoFeasibleDelta("could not place a dominated simplex in every cell")
    nu = DiscreteMeasure([p for s in supp for p in s], [w for pc in pieces for w in pc.masses])
    eps = Fraction(1)
    for _ in range(max_halvings):
        members = []
        ok = True
        for i in range(m):
            u = flows[i]
            atoms_i = []
            for P in range(m):
                if P == i:
                    masses = [mu.masses[x] if lab[x] == P else eps * u[x] for x in range(len(u))]
                else:
                    masses = [mu.masses[x] - eps * u_x if lab[x] == P else Fraction(0)
                              for x, u_x in enumerate(flows[i])]
                comp = mu.with_masses(masses)
                if comp.total_mass == 0:
                    ok = False
                    break
                w = _weights_on(supp[P], comp.total_mass, barycenter(comp))
                if w is None or min(w) < 0:
                    ok = False
                    break
                piece = DiscreteMeasure(supp[P], w)
                if not check_convex_order(comp, piece, mode).dominated:
                    ok = False
                    break
                atoms_i += list(zip(supp[P], w))
            if not ok:
                break
            members.append(DiscreteMeasure([p for p, _ in atoms_i], [w for _, w in atoms_i]))
        if ok:
            break
        eps /= 2
    else:
        raise NoFeasibleDelta("no eps made every member a fusion")
    i = next(i for i, nu_i in enumerate(members) if nu_i != nu)
    t = Fraction(1, max(1, m - 1))
    diff = members[i].plus(nu, -1)
    nu1 = nu.plus(diff, t).as_positive()
    nu2 = nu.plus(diff, -t).as_positive()
    return NonExtremeWitness(nu, members, (nu1, nu2), eps, delta)


def decompose_nonextreme(mu: GridMeasure, nu: DiscreteMeasure, mode="auto"):
    """Search for fusions nu1 != nu2 of the grid prior with nu = (nu1 + nu2)/2.
    Probes each atom mass of nu1 upward; returns the pair or None."""
    src = [p for p, w in zip(mu.points, mu.masses) if w > 0]
    smass = [w for w in mu.masses if w > 0]
    tgt, tmass = list(nu.points), list(nu.masses)
    B = LpBuilder()
    v = {}
    for s in (0, 1):
        for i in range(len(src)):
            for j in range(len(tgt)):
                v[s, i, j] = B.var()
        for i, w in enumerate(smass):
            B.row({v[s, i, j]: 1 for j in range(len(tgt))}, EQ, w)
        for j, y in enumerate(tgt):
            for a in range(mu.dim):
                B.row({v[s, i, j]: src[i][a] - y[a] for i in range(len(src)) if src[i][a] != y[a]}, EQ, 0)
    for j, w in enumerate(tmass):
        B.row({**{v[0, i, j]: 1 for i in range(len(src))}, **{v[1, i, j]: 1 for i in range(len(src))}}, EQ, 2 * w)
    base = B.build(True)
    md = _mode(mode, base.n)
    for j0 in range(len(tgt)):
        c = [0] * base.n
        for i in range(len(src)):
            c[v[0, i, j0]] = 1
        sol = solve(base.with_objective(c, True), md)
        if sol.status != OPTIMAL:
            return None
        gain = Q(sol.value) - tmass[j0]
        if (md == RATIONAL and gain > 0) or (md == FLOAT and float(gain) > 1e-7):
            m1 = [sum((Q(sol.x[v[0, i, j]]) for i in range(len(src))), Fraction(0)) for j in range(len(tgt))]
            if md == FLOAT:
                m1 = [w.limit_denominator(10 ** 9) for w in m1]
                m1 = [min(max(w, Fraction(0)), 2 * t) for w, t in zip(m1, tmass)]
            nu1 = DiscreteMeasure(tgt, m1)
            nu2 = DiscreteMeasure(tgt, [2 * t - w for t, w in zip(tmass, m1)])
            if check_convex_order(mu, nu1, mode).dominated and check_convex_order(mu, nu2, mode).dominated:
                return nu1, nu2
    return None


# ---------------------------------------------------------------- report


@dataclass
class ExtremalityReport:
    verdict: str
    partition: ConvexPartition
    cells: list = field(default_factory=list)
    flow: FlowCertificate | None = None
    pair: tuple | None = None
    notes: list = field(default_factory=list)
    resolution: tuple = ()


def certify_extreme(mu: GridMeasure, nu: DiscreteMeasure, partition: ConvexPartition | None = None,
                    mode="auto", search_pair=True) -> ExtremalityReport:
    v = check_convex_order(mu, nu, mode)
    if not v.dominated:
        raise NotDominated("nu is not a fusion of mu")
    if nu == mu.to_discrete():
        return ExtremalityReport(CERTIFIED_EXTREME, trivial_partition(),
                                 notes=["full revelation: the prior itself is extreme"], resolution=mu.res)
    notes = []
    if partition is None:
        disc = discover_partition(mu, nu, mode)
        partition = disc.partition
        if not disc.found:
            notes.append("overlap-graph components could not be separated; using the trivial partition")
    try:
        cells = verify_prop1_conditions(mu, nu, partition, mode)
    except AtomOnBoundary as e:
        cells = []
        notes.append(str(e))
    flow = max_flow_certificate(mu, partition, mode) if cells else None
    if cells and all(c.ok for c in cells) and flow.unique_zero:
        return ExtremalityReport(CERTIFIED_EXTREME, partition, cells, flow, notes=notes, resolution=mu.res)
    if cells and not all(c.ok for c in cells):
        notes.append("necessary conditions fail on this partition")
    if flow is not None and not flow.unique_zero:
        notes.append("nonzero feasible flow exists for this partition")
    pair = decompose_nonextreme(mu, nu, mode) if search_pair else None
    if pair is not None:
        return ExtremalityReport(CERTIFIED_NOT_EXTREME, partition, cells, flow, pair, notes, mu.res)
    return ExtremalityReport(INCONCLUSIVE, partition, cells, flow, notes=notes, resolution=mu.res)


def polygon_region(vertices):
    """ConvexRegion of a counterclockwise convex polygon."""
    hs = []
    k = len(vertices)
    for t in range(k):
        p, q = vertices[t], vertices[(t + 1) % k]
        a = (q[1] - p[1], p[0] - q[0])
        hs.append((a, a[0] * p[0] + a[1] * p[1]))
    return ConvexRegion(hs)


def shrink_partition(partition: ConvexPartition, box, factor):
    """Shrink every 2D cell toward its vertex centroid by `factor` and cover the
    leftover bands with one convex trapezoid per edge. Cell i of the result
    is the shrunk copy of cell i."""
    from .power import region_vertices

    factor = Q(factor)
    shrunk, bands = [], []
    for cell in partition.cells:
        vs = region_vertices(cell, box)
        cen = tuple(sum(v[a] for v in vs) / len(vs) for a in range(2))
        inner = [tuple(c + (1 - factor) * (v[a] - c) for a, c in enumerate(cen)) for v in vs]
        shrunk.append(polygon_region(inner))
        for t in range(len(vs)):
            s = (t + 1) % len(vs)
            bands.append(polygon_region([vs[t], vs[s], inner[s], inner[t]]))
    return ConvexPartition(shrunk + bands, partition.provenance)


def certify_across_resolutions(mu: GridMeasure, nu: DiscreteMeasure, partition: ConvexPartition | None = None,
                               mode="auto", factors=(1, 2, 4)):
    """certify_extreme on mu and on block-coarsenings of it. A verdict of a
    discretized instance is only trusted when all resolutions agree; grids
    too coarse for nu to be a fusion are listed but do not count. Factors that
    do not divide the grid are skipped."""
    reports = []
    for f in factors:
        if any(r % f or r < f for r in mu.res):
            continue
        g = mu.coarsen(f) if f != 1 else mu
        try:
            reports.append(certify_extreme(g, nu, partition, mode, search_pair=False))
        except NotDominated:
            # block averaging can pull the prior below nu in the convex order
            reports.append(ExtremalityReport(NOT_DOMINATED, partition, notes=["nu is not a fusion at this grid"],
                                             resolution=g.res))
    return reports, len({r.verdict for r in reports if r.verdict != NOT_DOMINATED}) <= 1
