"""Moment persuasion on a grid prior: LP solution, dual price, concavification
and the canonical per-cell decomposition."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .exact import Q, Qvec
from .extremality import discover_partition, nu_labels, AtomOnBoundary
from .lp import EQ, FLOAT, OPTIMAL, RATIONAL, RATIONAL_LIMIT, DEFAULT_TOL, LpBuilder, solve
from .measure import ConvexPartition, ConvexRegion, DiscreteMeasure, GridMeasure, barycenter
from .order import check_convex_order

POOLING, SPLIT, FULL, NON_CANONICAL = "Pooling", "Split", "FullRevelation", "NonCanonical"


class DegenerateSamples(ValueError):
    pass


# ---------------------------------------------------------------- objectives


class Objective:
    """Evaluable payoff V with a declared Lipschitz constant. `exact` returns a
    Fraction when V is rational at the point, otherwise None."""

    def __init__(self, vec, lipschitz, exact=None, pieces=None, kind="callable", name=""):
        self._vec = vec
        self._exact = exact
        self.lipschitz = float(lipschitz)
        self.pieces = pieces
        self.kind = kind
        self.name = name

    def __call__(self, x):
        if self._exact is not None:
            return self._exact(Qvec(x))
        return float(self._vec(np.array([[float(c) for c in x]]))[0])

    def exact(self, x):
        return self._exact(Qvec(x)) if self._exact is not None else None

    def values(self, P):
        return np.asarray(self._vec(np.asarray(P, dtype=float)), dtype=float)

    @property
    def is_exact(self):
        return self._exact is not None

    @classmethod
    def max_affine(cls, pieces, name="max-affine"):
        pieces = [(Qvec(g), Q(c)) for g, c in pieces]
        G = np.array([[float(v) for v in g] for g, _ in pieces])
        c = np.array([float(v) for _, v in pieces])
        lip = max(np.linalg.norm(G, axis=1))
        return cls(lambda P: (P @ G.T + c).max(axis=1), lip,
                   lambda x: max(sum(a * b for a, b in zip(g, x)) + k for g, k in pieces),
                   pieces, "max_affine", name)

    @classmethod
    def min_affine(cls, pieces, name="min-affine"):
        pieces = [(Qvec(g), Q(c)) for g, c in pieces]
        G = np.array([[float(v) for v in g] for g, _ in pieces])
        c = np.array([float(v) for _, v in pieces])
        lip = max(np.linalg.norm(G, axis=1))
        return cls(lambda P: (P @ G.T + c).min(axis=1), lip,
                   lambda x: min(sum(a * b for a, b in zip(g, x)) + k for g, k in pieces),
                   pieces, "min_affine", name)

    @classmethod
    def quadratic(cls, center, coef, lipschitz, name="quadratic"):
        """coef * |x - center|^2 (convex for coef > 0, concave for coef < 0)."""
        center, coef = Qvec(center), Q(coef)
        cf = np.array([float(v) for v in center])
        obj = cls(lambda P: float(coef) * ((P - cf) ** 2).sum(axis=1), lipschitz,
                  lambda x: coef * sum((a - b) ** 2 for a, b in zip(x, center)), None, "quadratic", name)
        obj._quad = (center, coef)
        return obj

    @classmethod
    def table(cls, grid: GridMeasure, values, name="table"):
        """Piecewise-affine interpolation of values given at the grid atoms."""
        vals = [Q(v) for v in values]
        pts = grid.P
        lookup = dict(zip(grid.points, vals))
        if grid.dim == 1:
            order = np.argsort(pts[:, 0])
            xs, ys = pts[order, 0], np.array([float(vals[i]) for i in order])

            def vec(P):
                return np.interp(np.asarray(P)[:, 0], xs, ys)
        else:
            from scipy.interpolate import LinearNDInterpolator, NearestNDInterpolator

            fv = np.array([float(v) for v in vals])
            lin = LinearNDInterpolator(pts, fv)
            near = NearestNDInterpolator(pts, fv)

            def vec(P):
                out = lin(P)
                bad = np.isnan(out)
                if bad.any():
                    out[bad] = near(np.asarray(P)[bad])
                return out
        obj = cls(vec, 0.0, None, None, "table", name)
        obj._lookup = lookup
        obj.lipschitz = grid_lipschitz(obj, grid)
        return obj

    @classmethod
    def from_certificate(cls, cert, name="exposure-u"):
        """The objective u = q - dist(., S) of an exposure certificate."""
        from .exposure import _dist_to, _q_float

        pd, bumps, S = cert.diagram, cert.bumps, list(cert.support)
        lip = max(2 * float(np.linalg.norm([float(c) for c in s])) for s in pd.sites) + 1
        lip += sum(b.lipschitz for b in bumps.values())
        return cls(lambda P: _q_float(pd, bumps, P) - _dist_to(P, S), lip, None, None, "certificate", name)

    def gradient(self, y, step=None):
        """A (super/sub)gradient at y: the active affine piece when known,
        otherwise central differences."""
        y = Qvec(y)
        if self.kind in ("max_affine", "min_affine"):
            vals = [sum(a * b for a, b in zip(g, y)) + c for g, c in self.pieces]
            best = max(vals) if self.kind == "max_affine" else min(vals)
            return np.array([float(v) for v in self.pieces[vals.index(best)][0]])
        if self.kind == "quadratic" and getattr(self, "_quad", None):
            center, coef = self._quad
            return np.array([2 * float(coef) * float(a - b) for a, b in zip(y, center)])
        t = 1e-6 if step is None else float(step)
        yf = np.array([float(c) for c in y])
        E = np.eye(len(yf)) * t
        return (self.values(yf + E) - self.values(yf - E)) / (2 * t)

    def minus(self, other, kappa, name=None):
        """self - kappa * other."""
        k = Q(kappa)
        ex = None
        if self.is_exact and other.is_exact:
            ex = lambda x: self.exact(x) - k * other.exact(x)
        return Objective(lambda P: self.values(P) - float(k) * other.values(P),
                         self.lipschitz + float(abs(k)) * other.lipschitz, ex, None, "combined",
                         name or f"{self.name}-{float(k):g}*{other.name}")

    def exact_or_table(self, x):
        lk = getattr(self, "_lookup", None)
        if lk is not None and x in lk:
            return lk[x]
        return self.exact(x)

    def affine_gradients(self):
        if self.pieces is None:
            return None
        return sorted({g for g, _ in self.pieces})


def grid_lipschitz(obj: Objective, grid: GridMeasure):
    """Largest slope of V between axis neighbours of the grid."""
    V = obj.values(grid.P).reshape(grid.res)
    best = 0.0
    for a, s in enumerate(grid.spacing):
        if grid.res[a] > 1:
            best = max(best, float(np.abs(np.diff(V, axis=a)).max()) / float(s))
    return best


# ---------------------------------------------------------------- grid LP


def target_lattice(grid: GridMeasure):
    """Points of the half-spacing lattice of the box: cell centers, faces and
    corners. Nested under dyadic refinement."""
    axes = [[lo + Fraction(k, 2) * s for k in range(2 * r + 1)]
            for lo, s, r in zip(grid.box.lower, grid.spacing, grid.res)]
    return [tuple(p) for p in product(*axes)]


@dataclass
class GridLpResult:
    nu: DiscreteMeasure
    value: object
    price: np.ndarray  # dual convex price at every grid atom
    dual_value: object
    gap: float
    bound: float  # Lip(V) * h
    mode: str
    targets: list
    kernel: dict = field(default_factory=dict)  # (source, target) -> mass


def solve_grid_lp(mu: GridMeasure, obj: Objective, targets="lattice", mode="auto", tol=DEFAULT_TOL,
                  informative=True) -> GridLpResult:
    """max sum_j V(y_j) lambda_j over martingale kernels from the grid atoms to
    the target points. With `informative` (rational mode only, where the value
    floor is exact), ties among optimal fusions are broken towards the largest
    second moment, i.e. the most informative optimum."""
    if isinstance(targets, str):
        T = target_lattice(mu) if targets == "lattice" else list(mu.points)
    else:
        T = [Qvec(t) for t in targets]
    src = [i for i, w in enumerate(mu.masses) if w > 0]
    exact_vals = [obj.exact_or_table(t) for t in T] if obj.is_exact or hasattr(obj, "_lookup") else [None] * len(T)
    nvars = len(src) * len(T)
    m = mode if mode in (RATIONAL, FLOAT) else (RATIONAL if nvars <= RATIONAL_LIMIT else FLOAT)
    if m == RATIONAL and any(v is None for v in exact_vals):
        m = FLOAT
    V = exact_vals if m == RATIONAL else list(obj.values(np.array([[float(c) for c in t] for t in T])))
    B = LpBuilder()
    var = {}
    for i in src:
        for j in range(len(T)):
            var[i, j] = B.var(0, None, V[j])
    for i in src:
        B.row({var[i, j]: 1 for j in range(len(T))}, EQ, mu.masses[i])
    zrow = {}
    for j, y in enumerate(T):
        for a in range(mu.dim):
            zrow[j, a] = B.row({var[i, j]: mu.points[i][a] - y[a] for i in src}, EQ, 0)
    lp = B.build(True)
    sol = solve(lp, m, tol)
    if sol.status != OPTIMAL:
        raise RuntimeError(f"persuasion LP returned {sol.status}")
    duals, primal = sol.y, sol
    if informative and m == RATIONAL:
        sq = [sum(c * c for c in y) for y in T]
        tie = lp.with_rows([(tuple(range(lp.n)), lp.c)], [">="], [sol.value])
        tie = tie.with_objective([sq[j] for (_, j) in var], True)
        alt = solve(tie, m, tol)
        if alt.status == OPTIMAL:
            primal = alt
    lam = [Fraction(0)] * len(T) if m == RATIONAL else [0.0] * len(T)
    kernel = {}
    for (i, j), v in var.items():
        x = primal.x[v]
        if x > (0 if m == RATIONAL else 1e-12):
            lam[j] += x
            kernel[i, j] = x
    keep = [j for j in range(len(T)) if lam[j] > (0 if m == RATIONAL else 1e-12)]
    masses = [lam[j] if m == RATIONAL else Fraction(float(lam[j])).limit_denominator(10 ** 12) for j in keep]
    nu = DiscreteMeasure([T[j] for j in keep], masses, box=mu.box)
    # dual price p(x) = max_j V_j + z_j.(y_j - x)
    Z = np.array([[float(duals[zrow[j, a]]) for a in range(mu.dim)] for j in range(len(T))])
    Tf = np.array([[float(c) for c in t] for t in T])
    Vf = np.array([float(v) for v in V])
    price = np.max(Vf[None, :] + ((Tf[None, :, :] - mu.P[:, None, :]) * Z[None, :, :]).sum(axis=2), axis=1)
    dual_value = float(np.dot(mu.w, price))
    value = sum((lam[j] * V[j] for j in keep), Fraction(0) if m == RATIONAL else 0.0)
    return GridLpResult(nu, value, price, dual_value, abs(float(value) - dual_value),
                        obj.lipschitz * mu.h, m, T, kernel)


# ---------------------------------------------------------------- concavification


@dataclass
class EnvelopePoint:
    value: object
    support: list  # sample points
    weights: list


def concavify(V, samples, queries, mode=RATIONAL):
    """Upper concave envelope of V over the samples, at each query point, with
    a supporting simplex of at most n+1 samples."""
    S = [Qvec(s) for s in samples]
    if not S:
        raise DegenerateSamples("no samples")
    vals = [V(s) if not isinstance(V, dict) else V[s] for s in S]
    if any(not isinstance(v, Fraction) for v in vals):
        mode = FLOAT
        vals = [float(v) for v in vals]
    n = len(S[0])
    out = []
    for q in queries:
        q = Qvec(q)
        B = LpBuilder()
        w = [B.var(0, None, v) for v in vals]
        B.row({t: 1 for t in w}, EQ, 1)
        for a in range(n):
            B.row({t: s[a] for t, s in zip(w, S)}, EQ, q[a])
        sol = solve(B.build(True), mode)
        if sol.status != OPTIMAL:
            raise DegenerateSamples(f"query {tuple(map(float, q))} lies outside the sample hull")
        sup = [(S[k], sol.x[t]) for k, t in enumerate(w) if sol.x[t] > (0 if mode == RATIONAL else 1e-12)]
        out.append(EnvelopePoint(sol.value, [p for p, _ in sup], [x for _, x in sup]))
    return out


# ---------------------------------------------------------------- canonical decomposition


def snap(nu: DiscreteMeasure, radius):
    """Groups of atoms within `radius` of a heavier seed atom (greedy by mass)."""
    r = float(radius) * (1 + 1e-9)
    order = sorted(range(len(nu)), key=lambda j: (-nu.masses[j], nu.points[j]))
    P = nu.P
    taken = np.zeros(len(nu), dtype=bool)
    groups = []
    for j in order:
        if taken[j]:
            continue
        near = [k for k in order if not taken[k] and np.linalg.norm(P[k] - P[j]) <= r]
        taken[near] = True
        groups.append(near)
    return groups


def snapped_components(mu: GridMeasure, lp_out: GridLpResult, radius=None):
    """Merge LP posterior means within one grid spacing and rebuild the merged
    fusion exactly from the kernel: each source row is renormalized to its
    exact mass, so the components sum to mu and the atoms are their exact
    barycenters. Returns (nu, components, group of each LP atom)."""
    lam = lp_out.nu
    groups = snap(lam, mu.h if radius is None else radius)
    tpos = {tuple(t): j for j, t in enumerate(lp_out.targets)}
    atom_group = {}
    for g, members in enumerate(groups):
        for k in members:
            atom_group[tpos[tuple(lam.points[k])]] = g
    rows = {}
    for (i, j), v in lp_out.kernel.items():
        if j in atom_group:
            rows.setdefault(i, {})
            g = atom_group[j]
            rows[i][g] = rows[i].get(g, 0) + (v if isinstance(v, Fraction) else Fraction(float(v)).limit_denominator(10 ** 9))
    comps = [[Fraction(0)] * len(mu) for _ in groups]
    for i, row in rows.items():
        tot = sum(row.values())
        for g, v in row.items():
            comps[g][i] = mu.masses[i] * v / tot
    comps = [mu.with_masses(c) for c in comps]
    keep = [g for g, c in enumerate(comps) if c.total_mass > 0]
    comps = [comps[g] for g in keep]
    remap = {g: t for t, g in enumerate(keep)}
    nu = DiscreteMeasure([barycenter(c) for c in comps], [c.total_mass for c in comps], box=mu.box)
    lab = np.array([remap.get(atom_group[tpos[tuple(p)]], -1) for p in lam.points])
    return nu, comps, lab


@dataclass
class CellSolution:
    index: int
    mode: str
    mu_mass: Fraction
    barycenter: tuple
    value: float  # LP value restricted to the cell
    cav_value: float  # mu(P) * cav_P V(r_P)
    dominated: bool


@dataclass
class CanonicalSolution:
    nu: DiscreteMeasure
    partition: ConvexPartition
    cells: list
    payoff: float
    formula_payoff: float
    price: np.ndarray
    full_revelation: bool = False

    @property
    def canonical(self):
        return all(c.mode != NON_CANONICAL for c in self.cells)


def _is_full_revelation(mu: GridMeasure, lam: DiscreteMeasure, exact):
    at = {p: w for p, w in zip(lam.points, lam.masses)}
    for p, w in zip(mu.points, mu.masses):
        if w == 0:
            continue
        v = at.get(p, 0)
        if (v != w) if exact else abs(float(v) - float(w)) > 1e-9:
            return False
    return abs(float(lam.total_mass - mu.total_mass)) <= 1e-9 and len(lam) == len(mu.support())


def canonical_decompose(mu: GridMeasure, obj: Objective, lp_out: GridLpResult, tol=DEFAULT_TOL) -> CanonicalSolution:
    lam = lp_out.nu
    payoff = float(lp_out.value)
    exact = lp_out.mode == RATIONAL
    # full revelation is optimal whenever it attains the LP value
    if exact and obj.is_exact:
        attains = lp_out.value == sum((w * obj.exact_or_table(x) for x, w in zip(mu.points, mu.masses) if w),
                                      Fraction(0))
    else:
        attains = abs(float(np.dot(mu.w, obj.values(mu.P))) - float(lp_out.value)) <= tol.duality
    if attains or _is_full_revelation(mu, lam, exact):
        cell = CellSolution(0, FULL, mu.total_mass, barycenter(mu), payoff, payoff, True)
        return CanonicalSolution(mu.to_discrete(), ConvexPartition([ConvexRegion()]), [cell], payoff, payoff,
                                 lp_out.price, True)
    snapped, comps, lab = snapped_components(mu, lp_out)
    disc = discover_partition(mu, snapped)
    part = disc.partition
    try:
        slab = nu_labels(snapped, part)
    except AtomOnBoundary:
        slab = part.assign(list(snapped.points), snapped.P)
    cells = []
    formula = 0.0
    lamV = obj.values(lam.P)
    for k in range(len(part)):
        members = [g for g in range(len(snapped)) if slab[g] == k]
        if not members:
            continue
        # mu restricted to the cell: the components of its atoms (boundary
        # grid atoms may be shared between neighbouring cells)
        muk = mu.with_masses([sum((comps[g].masses[i] for g in members), Fraction(0)) for i in range(len(mu))])
        nuk = snapped.select(members)
        value = float(sum(float(lam.masses[j]) * lamV[j] for j in range(len(lam)) if lab[j] in members))
        r = barycenter(muk)
        dom = check_convex_order(muk, nuk).dominated
        supp = [mu.points[i] for i in muk.support()]
        if len(nuk) == 1:
            samples, mode = supp, POOLING
        else:
            samples = list(nuk.points) + [p for p in supp if _in_hull(p, nuk.points)]
            mode = SPLIT
        samples = list(dict.fromkeys(samples + [tuple(p) for p in nuk.points]))
        try:
            env = concavify(obj if obj.is_exact else (lambda x: float(obj(x))), samples, [r], FLOAT)[0]
            cav = float(muk.total_mass) * float(env.value)
        except DegenerateSamples:
            cav = float("nan")
        slack = tol.cert + obj.lipschitz * mu.h * float(muk.total_mass)
        if not dom or not abs(cav - value) <= slack:
            mode = NON_CANONICAL
        formula += cav
        cells.append(CellSolution(k, mode, muk.total_mass, r, value, cav, dom))
    return CanonicalSolution(snapped, part, cells, payoff, formula, lp_out.price)


def _in_hull(p, pts):
    from .measure import in_convex_hull

    return in_convex_hull(p, list(pts), FLOAT)
