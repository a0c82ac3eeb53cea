"""Independent brute-force oracles used to derive and cross-check example
values. Nothing here calls the LP engine, the order module, the power-diagram
code or the certificate builders; only the measure and diagram data types are
shared."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from fractions import Fraction
from itertools import combinations
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from .measure import DiscreteMeasure, GridMeasure


@dataclass
class OracleReport:
    oracle: str
    instance: str  # sha256 of the instance description
    oracle_value: object
    main_value: object
    agree: bool
    tolerance: float

    def to_json(self):
        d = asdict(self)
        d["oracle_value"] = _jsonable(self.oracle_value)
        d["main_value"] = _jsonable(self.main_value)
        return d


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def instance_hash(desc) -> str:
    return hashlib.sha256(json.dumps(_jsonable(desc), sort_keys=True).encode()).hexdigest()[:16]


def _distance(a, b):
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        if len(a) != len(b):
            return float("inf")
        return max((_distance(x, y) for x, y in zip(a, b)), default=0.0)
    return abs(float(a) - float(b))


def compare(oracle, desc, oracle_value, main_value, tol) -> OracleReport:
    agree = _distance(oracle_value, main_value) <= tol
    return OracleReport(oracle, instance_hash(desc), oracle_value, main_value, bool(agree), float(tol))


def write_reports(reports, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps([r.to_json() for r in reports], indent=1, sort_keys=True) + "\n")


def load_reports(path):
    return json.loads(Path(path).read_text())


# ---------------------------------------------------------------- geometry


def brute_cell_assign(pd, grid: GridMeasure):
    """argmin_i |x - s_i|^2 - w_i at every atom, exact, lowest index on ties."""
    out = []
    for x in grid.points:
        best, arg = None, 0
        for i, (s, w) in enumerate(zip(pd.sites, pd.weights)):
            g = sum(((a - b) ** 2 for a, b in zip(x, s)), Fraction(0)) - w
            if best is None or g < best:
                best, arg = g, i
        out.append(arg)
    return np.array(out)


def lifted_max(pd, x):
    """max_i 2 s_i.x + w_i - |s_i|^2 with the raw weights, evaluated directly."""
    raw = [w + pd.offset for w in pd.weights]
    return max(sum(2 * a * b for a, b in zip(s, x)) + w - sum(a * a for a in s) for s, w in zip(pd.sites, raw))


def quadrature(f, m):
    """sum_x f(x) m({x}); exact when f returns Fractions."""
    return sum((w * f(x) for x, w in zip(m.points, m.masses) if w), Fraction(0))


# ---------------------------------------------------------------- 1D searches


def split_search_1d(mu: GridMeasure, V, K=2):
    """Exhaustive scan over contiguous K-bin splits of a 1D grid; returns
    (split points, prototypes, payoff) of the best one (first on ties)."""
    if mu.dim != 1:
        raise ValueError("split_search_1d needs a 1D grid")
    xs, ws = [p[0] for p in mu.points], list(mu.masses)
    n = len(xs)
    best = None
    for cuts in combinations(range(1, n), K - 1):
        bounds = (0,) + cuts + (n,)
        pay, protos = Fraction(0), []
        for a, b in zip(bounds, bounds[1:]):
            m = sum(ws[a:b], Fraction(0))
            if m == 0:
                continue
            y = sum((w * x for w, x in zip(ws[a:b], xs[a:b])), Fraction(0)) / m
            protos.append(y)
            pay += m * V((y,))
        if best is None or pay > best[2]:
            split = [mu.box.lower[0] + c * mu.spacing[0] for c in cuts]
            best = (split, protos, pay)
    return best


def convex_order_1d(mu, nu):
    """Exact 1D decision of nu <= mu: equal mass and mean, and the call
    functions t -> int (x - t)^+ compared at every atom of either measure."""
    def call(m, t):
        return sum((w * max(x[0] - t, 0) for x, w in zip(m.points, m.masses)), Fraction(0))

    def mass(m):
        return sum(m.masses, Fraction(0))

    def mean(m):
        return sum((w * x[0] for x, w in zip(m.points, m.masses)), Fraction(0))

    if mass(mu) != mass(nu) or mean(mu) != mean(nu):
        return False
    ts = sorted({x[0] for x in mu.points} | {x[0] for x in nu.points})
    return all(call(nu, t) <= call(mu, t) for t in ts)


def convex_partitional_1d(mu: GridMeasure, nu: DiscreteMeasure):
    """A 1D fusion is convex partitional iff the quantile intervals carrying
    the sorted atom masses have the atoms as barycenters."""
    atoms = sorted(zip((p[0] for p in nu.points), nu.masses))
    rest = [[x[0], w] for x, w in zip(mu.points, mu.masses) if w]
    for y, m in atoms:
        need, s = m, Fraction(0)
        while need > 0:
            take = min(need, rest[0][1])
            s += take * rest[0][0]
            need -= take
            rest[0][1] -= take
            if rest[0][1] == 0:
                rest.pop(0)
        if s / m != y:
            return False
    return True


# ---------------------------------------------------------------- sampled convex test


def random_convex_functions(dim, rng, count=64, pieces=6):
    """Random convex test functions: maxima of affine pieces, norms and
    quadratics around random centers."""
    fs = []
    for k in range(count):
        kind = k % 3
        if kind == 0:
            G = rng.normal(size=(pieces, dim))
            c = rng.normal(size=pieces)
            fs.append(lambda P, G=G, c=c: (P @ G.T + c).max(axis=1))
        elif kind == 1:
            z = rng.uniform(-0.5, 2.5, size=dim)
            fs.append(lambda P, z=z: np.linalg.norm(P - z, axis=1))
        else:
            A = rng.normal(size=(dim, dim))
            fs.append(lambda P, A=A: ((P @ A) ** 2).sum(axis=1))
    return fs


def sampled_convex_violation(mu, nu, fs):
    """max over the test functions of int f dnu - int f dmu (<= 0 when nu <= mu)."""
    Pm = np.array([[float(c) for c in p] for p in mu.points])
    wm = np.array([float(w) for w in mu.masses])
    Pn = np.array([[float(c) for c in p] for p in nu.points])
    wn = np.array([float(w) for w in nu.masses])
    return max(float(wn @ f(Pn) - wm @ f(Pm)) for f in fs)


# ---------------------------------------------------------------- LP by other means


def transport_feasible(mu, nu):
    """Martingale transport feasibility by scipy's linprog on an independent
    formulation (float)."""
    src = [(p, w) for p, w in zip(mu.points, mu.masses) if w]
    tgt = list(zip(nu.points, nu.masses))
    ns, nt, d = len(src), len(tgt), len(tgt[0][0])
    rows, rhs = [], []
    for i, (_, w) in enumerate(src):
        r = np.zeros(ns * nt)
        r[i * nt:(i + 1) * nt] = 1
        rows.append(r)
        rhs.append(float(w))
    for j, (y, w) in enumerate(tgt):
        r = np.zeros(ns * nt)
        r[j::nt] = 1
        rows.append(r)
        rhs.append(float(w))
        for a in range(d):
            r = np.zeros(ns * nt)
            r[j::nt] = [float(p[a] - y[a]) for p, _ in src]
            rows.append(r)
            rhs.append(0.0)
    res = linprog(np.zeros(ns * nt), A_eq=np.array(rows), b_eq=np.array(rhs), bounds=(0, None), method="highs")
    return res.status == 0


def flow_optimum(mu: GridMeasure, labels, cells=None):
    """Largest total cross mass sum_P u_P(X minus P) of a feasible flow for the
    grid partition given by labels, by an independent linprog formulation."""
    atoms = [i for i, w in enumerate(mu.masses) if w]
    cells = sorted(set(int(labels[i]) for i in atoms)) if cells is None else cells
    k, n, d = len(cells), len(atoms), mu.dim
    idx = {(c, t): c * n + t for c in range(k) for t in range(n)}
    lo, hi, obj = [], [], np.zeros(k * n)
    for c, P in enumerate(cells):
        for t, i in enumerate(atoms):
            w = float(mu.masses[i])
            inside = int(labels[i]) == P
            lo.append(-w if inside else 0.0)
            hi.append(0.0 if inside else w)
            if not inside:
                obj[idx[c, t]] = -1.0
    rows, rhs = [], []
    for c in range(k):
        r = np.zeros(k * n)
        r[c * n:(c + 1) * n] = 1
        rows.append(r)
        rhs.append(0.0)
        for a in range(d):
            r = np.zeros(k * n)
            r[c * n:(c + 1) * n] = [float(mu.points[i][a]) for i in atoms]
            rows.append(r)
            rhs.append(0.0)
    for t in range(n):
        r = np.zeros(k * n)
        r[t::n] = 1
        rows.append(r)
        rhs.append(0.0)
    res = linprog(obj, A_eq=np.array(rows), b_eq=np.array(rhs), bounds=list(zip(lo, hi)), method="highs")
    return -res.fun


def five_conditions(mu: GridMeasure, labels, flows, tol=0):
    """Direct check of a flow {P: per-atom signed masses}: sign and size
    outside and inside P, zero mass, zero first moment, zero sum."""
    ok = True
    total = [Fraction(0)] * len(mu)
    for P, u in flows.items():
        for i, (w, v) in enumerate(zip(mu.masses, u)):
            if int(labels[i]) == P:
                ok &= -w - tol <= v <= tol
            else:
                ok &= -tol <= v <= w + tol
            total[i] += v
        ok &= abs(sum(u)) <= tol
        for a in range(mu.dim):
            ok &= abs(sum(v * p[a] for v, p in zip(u, mu.points))) <= tol
    ok &= all(abs(t) <= tol for t in total)
    return bool(ok)


# ---------------------------------------------------------------- concave envelope


def upper_hull_value(points, values, q):
    """cav at q by brute force over all simplices of sample points containing q."""
    pts = [tuple(Fraction(c) for c in p) for p in points]
    vals = [Fraction(v) for v in values]
    q = tuple(Fraction(c) for c in q)
    d = len(q)
    best = None
    for r in range(1, d + 2):
        for S in combinations(range(len(pts)), r):
            lam = _barycentric(pts, S, q)
            if lam is None:
                continue
            v = sum((l * vals[s] for l, s in zip(lam, S)), Fraction(0))
            if best is None or v > best:
                best = v
    return best


def _barycentric(pts, S, q):
    """Convex weights of q on the points S, or None (small exact elimination)."""
    d = len(q)
    A = [[pts[s][a] for s in S] for a in range(d)] + [[Fraction(1)] * len(S)]
    b = list(q) + [Fraction(1)]
    m, n = len(A), len(S)
    M = [row + [bv] for row, bv in zip(A, b)]
    piv, r = [], 0
    for c in range(n):
        p = next((i for i in range(r, m) if M[i][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        for i in range(m):
            if i != r and M[i][c] != 0:
                f = M[i][c] / M[r][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[r])]
        piv.append(c)
        r += 1
    if any(all(x == 0 for x in M[i][:n]) and M[i][n] != 0 for i in range(m)):
        return None
    if len(piv) < n:
        return None
    lam = [Fraction(0)] * n
    for i, c in enumerate(piv):
        lam[c] = M[i][n] / M[i][c]
    if any(l < 0 for l in lam):
        return None
    return lam


# ---------------------------------------------------------------- threshold constants


def fd_alpha(cost, mu: GridMeasure):
    """Largest per-axis spread of central differences of the cost over the grid
    nodes (box corners included)."""
    from itertools import product

    axes = [[lo + k * s for k in range(r + 1)] for lo, s, r in zip(mu.box.lower, mu.spacing, mu.res)]
    nodes = list(product(*axes))
    best = Fraction(0)
    for a, s in enumerate(mu.spacing):
        D = []
        for p in nodes:
            up = tuple(x + (s / 2 if k == a else 0) for k, x in enumerate(p))
            dn = tuple(x - (s / 2 if k == a else 0) for k, x in enumerate(p))
            D.append((cost(up) - cost(dn)) / s)
        best = max(best, max(D) - min(D))
    return best


def gradient_beta(gradients):
    """Smallest positive per-axis difference between distinct gradients."""
    diffs = [abs(Fraction(g[a]) - Fraction(h[a])) for g, h in combinations(gradients, 2) for a in range(len(g))]
    diffs = [v for v in diffs if v > 0]
    return min(diffs) if diffs else None
