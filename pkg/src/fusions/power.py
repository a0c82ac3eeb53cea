"""Power diagrams, their lifting functions and regular subdivisions."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exact import Q, Qvec, solve_dense_exact
from .lp import EQ, GE, OPTIMAL, LpBuilder, solve
from .measure import Box, ConvexPartition, ConvexRegion, POWER


class NotRegular(ValueError):
    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


def _dot(a, b):
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


class PowerDiagram:
    """Sites with real weights; cell i = {x : |x-s_i|^2 - w_i <= |x-s_j|^2 - w_j}.
    Weights are stored shifted so the minimum is 0; `offset` keeps the shift so
    the lifting function is reproduced exactly."""

    def __init__(self, sites, weights, box: Box):
        sites = [Qvec(s) for s in sites]
        weights = [Q(w) for w in weights]
        if len(sites) != len(weights) or not sites:
            raise ValueError("need one weight per site")
        if len(set(sites)) != len(sites):
            raise ValueError("sites must be pairwise distinct")
        if any(len(s) != box.dim for s in sites):
            raise ValueError("site dimension differs from the box")
        lo = min(weights)
        self.sites = tuple(sites)
        self.weights = tuple(w - lo for w in weights)
        self.offset = lo
        self.box = box

    @property
    def k(self):
        return len(self.sites)

    @property
    def raw_weights(self):
        return tuple(w + self.offset for w in self.weights)

    def shifted(self, c):
        return PowerDiagram(self.sites, [w + Q(c) for w in self.raw_weights], self.box)

    def g(self, i, x):
        x = Qvec(x)
        return sum(((a - b) ** 2 for a, b in zip(x, self.sites[i])), Fraction(0)) - self.weights[i]

    def assign(self, points, P=None):
        """Cell index of each point (lowest index on ties)."""
        return lift(self).argmax(points, P)


@dataclass(frozen=True)
class LiftingFunction:
    grads: tuple  # 2 s_i
    intercepts: tuple  # w_i - |s_i|^2

    def piece(self, i, x):
        return _dot(self.grads[i], Qvec(x)) + self.intercepts[i]

    def __call__(self, x):
        vals = [self.piece(i, x) for i in range(len(self.grads))]
        v = max(vals)
        return v, vals.index(v)

    def values(self, P):
        G = np.array([[float(c) for c in g] for g in self.grads], dtype=float)
        c = np.array([float(v) for v in self.intercepts], dtype=float)
        return P @ G.T + c

    def argmax(self, points, P=None):
        if P is None:
            P = np.array([[float(c) for c in p] for p in points], dtype=float).reshape(len(points), -1)
        V = self.values(P)
        best = V.max(axis=1)
        scale = 1e-9 * (1 + np.abs(V).max())
        lab = V.argmax(axis=1)
        close = (V >= best[:, None] - scale).sum(axis=1) > 1
        for t in np.nonzero(close)[0]:
            cand = np.nonzero(V[t] >= best[t] - scale)[0]
            vals = [(self.piece(i, points[t]), -i) for i in cand]
            lab[t] = -max(vals)[1]
        return lab

    def eval_many(self, P):
        return self.values(P).max(axis=1)


def lift(pd: PowerDiagram) -> LiftingFunction:
    grads = tuple(tuple(2 * c for c in s) for s in pd.sites)
    inter = tuple(w - _dot(s, s) for s, w in zip(pd.sites, pd.raw_weights))
    return LiftingFunction(grads, inter)


def cell_halfspaces(pd: PowerDiagram, i: int) -> ConvexRegion:
    si, wi = pd.sites[i], pd.weights[i]
    hs = []
    for j, (sj, wj) in enumerate(zip(pd.sites, pd.weights)):
        if j == i:
            continue
        a = tuple(2 * (x - y) for x, y in zip(sj, si))
        b = _dot(sj, sj) - _dot(si, si) + wi - wj
        hs.append((a, b))
    return ConvexRegion(hs)


def diagram_partition(pd: PowerDiagram) -> ConvexPartition:
    return ConvexPartition([cell_halfspaces(pd, i) for i in range(pd.k)], POWER)


# ---------------------------------------------------------------- 2D cells


def clip(poly, a, b):
    """Clip a convex polygon (exact vertices, CCW) by a.x <= b."""
    out = []
    k = len(poly)
    for t in range(k):
        p, q = poly[t], poly[(t + 1) % k]
        fp, fq = _dot(a, p) - b, _dot(a, q) - b
        if fp <= 0:
            out.append(p)
        if (fp < 0 < fq) or (fq < 0 < fp):
            s = fp / (fp - fq)
            out.append(tuple(x + s * (y - x) for x, y in zip(p, q)))
    dedup = []
    for p in out:
        if not dedup or dedup[-1] != p:
            dedup.append(p)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup


def polygon_area(poly):
    k = len(poly)
    if k < 3:
        return Fraction(0)
    s = Fraction(0)
    for t in range(k):
        (x0, y0), (x1, y1) = poly[t], poly[(t + 1) % k]
        s += x0 * y1 - x1 * y0
    return s / 2


def region_vertices(region: ConvexRegion, box: Box):
    """Vertices of region ∩ box: polygon corners (2D) or interval ends (1D)."""
    if box.dim == 1:
        lo, up = box.lower[0], box.upper[0]
        for a, b in region.halfspaces:
            if a[0] > 0:
                up = min(up, b / a[0])
            else:
                lo = max(lo, b / a[0])
        if lo > up:
            return []
        return [(lo,)] if lo == up else [(lo,), (up,)]
    if box.dim != 2:
        raise ValueError("explicit cells need dimension 1 or 2")
    poly = box.polygon()
    for a, b in region.halfspaces:
        poly = clip(poly, a, b)
        if not poly:
            break
    return poly


@dataclass
class Cell2D:
    vertices: list
    site: int
    area: Fraction

    @property
    def empty(self):
        return self.area == 0


def extract_cells_2d(pd: PowerDiagram):
    if pd.box.dim != 2:
        raise ValueError("extract_cells_2d needs a 2D diagram")
    out = []
    for i in range(pd.k):
        poly = region_vertices(cell_halfspaces(pd, i), pd.box)
        out.append(Cell2D(poly, i, polygon_area(poly) if len(poly) >= 3 else Fraction(0)))
    return out


# ---------------------------------------------------------------- regularity


def _shared(verts, region):
    return [v for v in verts if region.contains(v)]


def fit_power_diagram(partition: ConvexPartition, gradients, box: Box, grid=None) -> PowerDiagram:
    """Intercepts making max_i(g_i.x + c_i) induce the partition, from
    continuity across shared boundaries; raises NotRegular with a witness."""
    k = len(partition)
    grads = [Qvec(g) for g in gradients]
    if len(grads) != k:
        raise ValueError("need one gradient per cell")
    if len(set(grads)) != k:
        i, j = next((i, j) for i in range(k) for j in range(i + 1, k) if grads[i] == grads[j])
        raise NotRegular("two cells share a gradient", ("gradient", i, j))
    verts = [region_vertices(c, box) for c in partition.cells]
    A, b, info = [], [], []
    for i in range(k):
        for j in range(i + 1, k):
            for v in _shared(verts[i], partition.cells[j]):
                row = [Fraction(0)] * k
                row[i], row[j] = Fraction(1), Fraction(-1)
                A.append(row)
                b.append(_dot(grads[j], v) - _dot(grads[i], v))
                info.append((i, j, v))
    A.append([Fraction(1)] + [Fraction(0)] * (k - 1))
    b.append(Fraction(0))
    c = solve_dense_exact(A, b)
    if c is None:
        raise NotRegular("continuity equations are inconsistent", ("continuity",))
    pieces = [(g, ci) for g, ci in zip(grads, c)]
    for i in range(k):
        for v in verts[i]:
            fi = _dot(pieces[i][0], v) + pieces[i][1]
            for j in range(k):
                if j == i:
                    continue
                fj = _dot(pieces[j][0], v) + pieces[j][1]
                on_j = partition.cells[j].contains(v)
                if fj > fi or (fj == fi and not on_j):
                    raise NotRegular("induced diagram disagrees with the partition", ("vertex", i, j, v))
    sites = [tuple(x / 2 for x in g) for g in grads]
    weights = [ci + _dot(s, s) for ci, s in zip(c, sites)]
    pd = PowerDiagram(sites, weights, box)
    if grid is not None:
        lab_pd = pd.assign(grid.points, grid.P)
        lab_pt = partition.assign(grid.points, grid.P)
        bad = np.nonzero(lab_pd != lab_pt)[0]
        if len(bad):
            raise NotRegular("grid assignment disagrees", ("atom", int(bad[0])))
    return pd


def regular_gradients(partition: ConvexPartition, box: Box, mode="rational"):
    """Gradients of a convex piecewise-affine function whose affinity cells are
    exactly the partition cells, or None when the subdivision is not regular."""
    k = len(partition)
    n = box.dim
    verts = [region_vertices(c, box) for c in partition.cells]
    if k == 1:
        return [tuple(Fraction(0) for _ in range(n))]
    B = LpBuilder()
    g = [[B.var(None, None) for _ in range(n)] for _ in range(k)]
    c = [B.var(None, None) for _ in range(k)]
    for a in range(n):
        B.row({g[0][a]: 1}, EQ, 0)
    B.row({c[0]: 1}, EQ, 0)
    for i in range(k):
        for v in verts[i]:
            for j in range(k):
                if j == i:
                    continue
                row = {c[i]: 1, c[j]: -1}
                for a in range(n):
                    if v[a] != 0:
                        row[g[i][a]] = row.get(g[i][a], 0) + v[a]
                        row[g[j][a]] = row.get(g[j][a], 0) - v[a]
                if partition.cells[j].contains(v):
                    B.row(row, EQ, 0)
                else:
                    B.row(row, GE, 1)
    sol = solve(B.build(True), mode)
    if sol.status != OPTIMAL:
        return None
    return [tuple(Q(sol.x[v]) for v in gi) for gi in g]


def is_regular(partition: ConvexPartition, box: Box):
    grads = regular_gradients(partition, box)
    if grads is None:
        return None
    try:
        return fit_power_diagram(partition, grads, box)
    except NotRegular:
        return None
