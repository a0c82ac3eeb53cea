"""Convex order by transport LPs: dominance, Cartier components, mass shifting."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exact import Q, Qvec
from .lp import EQ, FLOAT, OPTIMAL, RATIONAL, RATIONAL_LIMIT, LpBuilder, solve
from .measure import DiscreteMeasure, GridMeasure

MASS_TOL = 1e-9


class MassMismatch(ValueError):
    pass


class NotDominated(ValueError):
    pass


class NoCommonInterior(ValueError):
    pass


class EpsTooLarge(ValueError):
    pass


@dataclass
class TransportKernel:
    sources: tuple  # exact points
    source_masses: tuple
    targets: tuple
    target_masses: tuple
    pi: list  # pi[i][j]
    source_index: tuple = ()  # grid indices of the sources when mu is a grid

    @property
    def shape(self):
        return len(self.sources), len(self.targets)

    def column(self, j):
        return [row[j] for row in self.pi]

    def matrix(self):
        return np.array([[float(v) for v in row] for row in self.pi], dtype=float).reshape(self.shape)

    def residuals(self):
        """Worst violation of the three kernel identities (exact when the
        kernel holds Fractions)."""
        zero = self.pi[0][0] * 0 if self.pi and self.pi[0] else 0
        row = max((abs(sum(r, zero) - m) for r, m in zip(self.pi, self.source_masses)), default=zero)
        col, bar, neg = zero, zero, zero
        d = len(self.targets[0]) if self.targets else 0
        for j, (y, nu) in enumerate(zip(self.targets, self.target_masses)):
            cj = [r[j] for r in self.pi]
            col = max(col, abs(sum(cj, zero) - nu))
            for a in range(d):
                s = sum((v * x[a] for v, x in zip(cj, self.sources) if v), zero)
                bar = max(bar, abs(s - nu * y[a]))
            neg = max(neg, max((-v for v in cj), default=zero))
        return {"row": row, "column": col, "barycenter": bar, "negative": max(neg, zero)}


@dataclass
class OrderVerdict:
    dominated: bool
    kernel: TransportKernel | None = None
    ray: tuple | None = None
    resolution: tuple | None = None
    mode: str = RATIONAL


def _atoms(m):
    """(exact points, masses, original indices) of the positive-mass atoms."""
    if isinstance(m, GridMeasure):
        idx = [i for i, w in enumerate(m.masses) if w > 0]
        return [m.points[i] for i in idx], [m.masses[i] for i in idx], idx
    return list(m.points), list(m.masses), list(range(len(m.points)))


def _pick_mode(mode, nvars):
    if mode == "auto":
        return RATIONAL if nvars <= RATIONAL_LIMIT else FLOAT
    return mode


def _transport(src, smass, tgt, tmass, cost=None, maximize=False, mode="auto"):
    """Martingale transport LP from src atoms onto tgt atoms. tmass=None leaves
    the target masses free. Returns (status, pi or None, solution, var map)."""
    B = LpBuilder()
    var = {}
    for i in range(len(src)):
        for j in range(len(tgt)):
            c = 0 if cost is None else cost(i, j)
            var[i, j] = B.var(0, None, c)
    for i, m in enumerate(smass):
        B.row({var[i, j]: 1 for j in range(len(tgt))}, EQ, m)
    d = len(tgt[0]) if tgt else 0
    for j, y in enumerate(tgt):
        if tmass is not None:
            B.row({var[i, j]: 1 for i in range(len(src))}, EQ, tmass[j])
        for a in range(d):
            B.row({var[i, j]: src[i][a] - y[a] for i in range(len(src))}, EQ, 0)
    lp = B.build(maximize=maximize)
    mode = _pick_mode(mode, lp.n)
    sol = solve(lp, mode)
    if sol.status != OPTIMAL:
        return sol.status, None, sol, lp
    pi = [[sol.x[var[i, j]] for j in range(len(tgt))] for i in range(len(src))]
    if mode == FLOAT:
        pi = [[max(0.0, float(v)) for v in row] for row in pi]
    return OPTIMAL, pi, sol, lp


def distance_cost(src, tgt):
    S = np.array([[float(c) for c in p] for p in src], dtype=float)
    T = np.array([[float(c) for c in p] for p in tgt], dtype=float)
    D = np.linalg.norm(S[:, None, :] - T[None, :, :], axis=2)
    return lambda i, j: Fraction(float(D[i, j])).limit_denominator(10 ** 6)


def check_convex_order(mu, nu: DiscreteMeasure, mode="auto", local=False) -> OrderVerdict:
    """Decide nu <= mu in convex order by a Cartier witness LP. With local=True
    the witness minimizes total transport distance, which keeps components
    spatially compact."""
    src, smass, idx = _atoms(mu)
    tgt, tmass = list(nu.points), list(nu.masses)
    if abs(float(sum(smass, Fraction(0)) - sum(tmass, Fraction(0)))) > MASS_TOL:
        raise MassMismatch("measures have different total mass")
    res = mu.res if isinstance(mu, GridMeasure) else None
    cost = distance_cost(src, tgt) if local else None
    st, pi, sol, lp = _transport(src, smass, tgt, tmass, cost, maximize=False, mode=mode)
    if st != OPTIMAL:
        return OrderVerdict(False, None, sol.farkas, res, sol.mode)
    kernel = TransportKernel(tuple(src), tuple(smass), tuple(tgt), tuple(tmass), pi, tuple(idx))
    return OrderVerdict(True, kernel, None, res, sol.mode)


def cartier_decompose(mu: GridMeasure, nu: DiscreteMeasure, mode="auto", local=True):
    """Per-atom components mu_j of mu: mass nu_j, barycenter y_j, summing to mu."""
    v = check_convex_order(mu, nu, mode, local=local)
    if not v.dominated:
        raise NotDominated("nu is not dominated by mu")
    return kernel_components(mu, v.kernel)


def kernel_components(mu: GridMeasure, kernel: TransportKernel):
    out = []
    for j in range(len(kernel.targets)):
        masses = [Fraction(0)] * len(mu.masses)
        for r, i in enumerate(kernel.source_index):
            v = kernel.pi[r][j]
            masses[i] = v if isinstance(v, Fraction) else Q(max(0.0, float(v)))
        out.append(GridMeasure(mu.box, mu.res, masses))
    return out


# ---------------------------------------------------------------- mass shifting


def _joint(mu1: DiscreteMeasure, mu2: DiscreteMeasure):
    pts = list(dict.fromkeys(list(mu1.points) + list(mu2.points)))
    m1 = {p: w for p, w in zip(mu1.points, mu1.masses)}
    m2 = {p: w for p, w in zip(mu2.points, mu2.masses)}
    return pts, [m1.get(p, Fraction(0)) for p in pts], [m2.get(p, Fraction(0)) for p in pts]


def common_interior_radius(s1, s2, mode="rational"):
    """Largest r such that a cross-polytope of radius r around one point z lies
    in both convex hulls. Returns (r, z)."""
    n = len(s1[0])
    B = LpBuilder()
    z = [B.var(None, None) for _ in range(n)]
    r = B.var(0, 1 << 20, 1)
    for S in (s1, s2):
        for k in range(n):
            for sgn in (1, -1):
                lam = [B.var() for _ in S]
                B.row({l: 1 for l in lam}, EQ, 1)
                for a in range(n):
                    coeff = {l: Q(p[a]) for l, p in zip(lam, S)}
                    coeff[z[a]] = coeff.get(z[a], 0) - 1
                    if a == k:
                        coeff[r] = -sgn
                    B.row(coeff, EQ, 0)
    sol = solve(B.build(True), mode)
    if sol.status != OPTIMAL:
        return Fraction(0), None
    return sol.value, tuple(sol.x[a] for a in z)


def max_shift_eps(mu1, mu2, d, mode="rational"):
    """Largest eps such that every |a| <= eps admits a shift pi."""
    pts, m1, m2 = _joint(mu1, mu2)
    n = len(pts[0])
    B = LpBuilder()
    e = B.var(0, 1 << 20, 1)
    for sgn in (1, -1):
        pv = [B.var(-a1, a2) for a1, a2 in zip(m1, m2)]
        B.row({**{v: 1 for v in pv}, e: -sgn}, EQ, 0)
        for a in range(n):
            B.row({**{v: p[a] for v, p in zip(pv, pts) if p[a] != 0}, e: -Q(d[a])}, EQ, 0)
    sol = solve(B.build(True), mode)
    return sol.value if sol.status == OPTIMAL else Fraction(0)


def shift_mass(mu1: DiscreteMeasure, mu2: DiscreteMeasure, d, a, eps, margin=0, mode="rational"):
    """Signed pi with mu1 + pi >= 0, mu2 - pi >= 0, pi(X) = a and
    integral x dpi = eps d; the minimum total variation one is returned."""
    a, eps, d = Q(a), Q(eps), Qvec(d)
    if abs(a) > eps:
        raise ValueError("need |a| <= eps")
    r, _ = common_interior_radius(list(mu1.points), list(mu2.points), mode)
    n = len(d)
    if float(r) / np.sqrt(n) <= float(margin) or r == 0:
        raise NoCommonInterior("convex hulls share no interior ball")
    bound = max_shift_eps(mu1, mu2, d, mode)
    if eps > bound:
        raise EpsTooLarge(f"eps exceeds the admissible bound {float(bound):.3g}")
    pts, m1, m2 = _joint(mu1, mu2)
    B = LpBuilder()
    pp = [B.var(0, w2, 1) for w2 in m2]
    qq = [B.var(0, w1, 1) for w1 in m1]
    B.row({**{v: 1 for v in pp}, **{v: -1 for v in qq}}, EQ, a)
    for k in range(n):
        row = {}
        for v, u, p in zip(pp, qq, pts):
            if p[k] != 0:
                row[v] = p[k]
                row[u] = -p[k]
        B.row(row, EQ, eps * d[k])
    sol = solve(B.build(False), mode)
    if sol.status != OPTIMAL:
        raise EpsTooLarge("shift LP infeasible")
    vals = [sol.x[v] - sol.x[u] for v, u in zip(pp, qq)]
    return DiscreteMeasure(pts, vals, signed=True)
