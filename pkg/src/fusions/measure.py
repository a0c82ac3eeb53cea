"""Measures on a box: finitely supported measures, grid priors, convex regions."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product

import numpy as np

from .exact import Q, Qvec
from .lp import EQ, OPTIMAL, LinearProgram, solve

MERGE_EPS = 1e-12


class ZeroMass(ValueError):
    pass


class OutOfDomain(ValueError):
    pass


@dataclass(frozen=True)
class Box:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        object.__setattr__(self, "lower", Qvec(self.lower))
        object.__setattr__(self, "upper", Qvec(self.upper))
        if len(self.lower) != len(self.upper) or not self.lower:
            raise ValueError("box bounds must have the same positive length")
        if any(lo >= up for lo, up in zip(self.lower, self.upper)):
            raise ValueError("box needs lower < upper on every axis")

    @property
    def dim(self):
        return len(self.lower)

    def contains(self, p, exact=True) -> bool:
        if exact:
            return all(lo <= Q(v) <= up for v, lo, up in zip(p, self.lower, self.upper))
        return all(float(lo) - 1e-12 <= float(v) <= float(up) + 1e-12 for v, lo, up in zip(p, self.lower, self.upper))

    def polygon(self):
        """Counterclockwise corners (2D only)."""
        if self.dim != 2:
            raise ValueError("polygon needs a 2D box")
        (x0, y0), (x1, y1) = self.lower, self.upper
        return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]

    def volume(self):
        v = Fraction(1)
        for lo, up in zip(self.lower, self.upper):
            v *= up - lo
        return v


class DiscreteMeasure:
    """Finitely many atoms (point, mass). Points closer than MERGE_EPS merge."""

    def __init__(self, points, masses, signed=False, box: Box | None = None):
        pts, ms, buckets = [], [], {}
        for p, w in zip(points, masses):
            p, w = Qvec(p), Q(w)
            key = tuple(int(np.floor(float(c) / MERGE_EPS)) for c in p)
            # any atom within MERGE_EPS sits in a neighboring bucket
            near = [k for off in product((-1, 0, 1), repeat=len(key))
                    for k in buckets.get(tuple(a + b for a, b in zip(key, off)), ())]
            k = min((k for k in near if max(abs(float(a - b)) for a, b in zip(p, pts[k])) <= MERGE_EPS),
                    default=None)
            if k is None:
                buckets.setdefault(key, []).append(len(pts))
                pts.append(p)
                ms.append(w)
            else:
                ms[k] += w
        keep = [k for k, w in enumerate(ms) if w != 0]
        self.points = tuple(pts[k] for k in keep)
        self.masses = tuple(ms[k] for k in keep)
        self.signed = signed
        self.box = box
        if not signed and any(w < 0 for w in self.masses):
            raise ValueError("negative mass in an unsigned measure")
        if len({len(p) for p in self.points}) > 1:
            raise ValueError("atoms of mixed dimension")
        if box is not None:
            for p in self.points:
                if not box.contains(p):
                    raise OutOfDomain(f"atom {tuple(map(float, p))} outside the box")

    @classmethod
    def from_pairs(cls, pairs, signed=False, box=None):
        pairs = list(pairs)
        return cls([p for p, _ in pairs], [w for _, w in pairs], signed, box)

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        atoms = ", ".join(f"({', '.join(str(c) for c in p)}):{w}" for p, w in zip(self.points, self.masses))
        return f"DiscreteMeasure[{atoms}]"

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return dict(zip(self.points, self.masses)) == dict(zip(other.points, other.masses))

    def __hash__(self):
        return hash(frozenset(zip(self.points, self.masses)))

    @property
    def dim(self):
        return len(self.points[0]) if self.points else (self.box.dim if self.box else 0)

    @cached_property
    def P(self):
        return np.array([[float(c) for c in p] for p in self.points], dtype=float).reshape(len(self.points), -1)

    @cached_property
    def w(self):
        return np.array([float(m) for m in self.masses], dtype=float)

    @property
    def total_mass(self):
        return sum(self.masses, Fraction(0))

    def mass_at(self, p):
        p = Qvec(p)
        for q, w in zip(self.points, self.masses):
            if q == p:
                return w
        return Fraction(0)

    def select(self, keep):
        """Sub-measure on the given atom indices or boolean mask."""
        keep = np.asarray(keep)
        if keep.dtype == bool:
            keep = np.nonzero(keep)[0]
        keep = [int(k) for k in keep]
        return DiscreteMeasure([self.points[k] for k in keep], [self.masses[k] for k in keep], self.signed, self.box)

    def scaled(self, s):
        return DiscreteMeasure(self.points, [Q(s) * w for w in self.masses], self.signed, self.box)

    def plus(self, other, coef=1):
        coef = Q(coef)
        return DiscreteMeasure(self.points + other.points, self.masses + tuple(coef * w for w in other.masses),
                               True, self.box)

    def as_positive(self):
        return DiscreteMeasure(self.points, self.masses, False, self.box)


class GridMeasure:
    """Cell-center atoms of a regular grid on a box, axis 0 varying slowest."""

    def __init__(self, box: Box, res, masses):
        res = tuple(int(r) for r in res)
        if len(res) != box.dim or any(r <= 0 for r in res):
            raise ValueError("resolution must give one positive count per axis")
        masses = tuple(Q(w) for w in masses)
        if len(masses) != int(np.prod(res)):
            raise ValueError("mass table size does not match the resolution")
        if any(w < 0 for w in masses):
            raise ValueError("grid masses must be nonnegative")
        self.box, self.res, self.masses = box, res, masses

    @classmethod
    def uniform(cls, box: Box, res, total=1):
        k = int(np.prod(res))
        return cls(box, res, [Q(total) / k] * k)

    @classmethod
    def from_table(cls, box: Box, table, normalize=True):
        arr = np.asarray(table, dtype=object)
        flat = [Q(v) for v in arr.reshape(-1)]
        if normalize:
            s = sum(flat, Fraction(0))
            if s <= 0:
                raise ZeroMass("cell-mass table has no mass")
            flat = [v / s for v in flat]
        return cls(box, arr.shape, flat)

    def __len__(self):
        return len(self.masses)

    @property
    def dim(self):
        return self.box.dim

    @cached_property
    def spacing(self):
        return tuple((up - lo) / r for lo, up, r in zip(self.box.lower, self.box.upper, self.res))

    @property
    def h(self):
        """Largest grid spacing."""
        return max(float(s) for s in self.spacing)

    @cached_property
    def points(self):
        axes = [[lo + (Fraction(2 * k + 1, 2)) * s for k in range(r)]
                for lo, s, r in zip(self.box.lower, self.spacing, self.res)]
        idx = np.indices(self.res).reshape(self.dim, -1).T
        return tuple(tuple(axes[a][i[a]] for a in range(self.dim)) for i in idx)

    @cached_property
    def P(self):
        return np.array([[float(c) for c in p] for p in self.points], dtype=float)

    @cached_property
    def w(self):
        return np.array([float(m) for m in self.masses], dtype=float)

    @property
    def total_mass(self):
        return sum(self.masses, Fraction(0))

    def with_masses(self, masses):
        return GridMeasure(self.box, self.res, masses)

    def support(self):
        return [i for i, w in enumerate(self.masses) if w > 0]

    def to_discrete(self):
        keep = self.support()
        return DiscreteMeasure([self.points[i] for i in keep], [self.masses[i] for i in keep], box=self.box)

    def refine(self, factor=2):
        """Split each cell into factor**dim equal subcells."""
        res = tuple(r * factor for r in self.res)
        old = np.array(self.masses, dtype=object).reshape(self.res)
        new = old
        for a in range(self.dim):
            new = np.repeat(new, factor, axis=a)
        share = Fraction(1, factor ** self.dim)
        return GridMeasure(self.box, res, [w * share for w in new.reshape(-1)])

    def coarsen(self, factor=2):
        """Merge factor**dim blocks of cells; the resolution must be divisible."""
        if any(r % factor for r in self.res):
            raise ValueError(f"resolution {self.res} is not divisible by {factor}")
        res = tuple(r // factor for r in self.res)
        arr = np.array(self.masses, dtype=object).reshape(sum(((r, factor) for r in res), ()))
        for a in range(self.dim):
            arr = arr.sum(axis=a + 1)
        return GridMeasure(self.box, res, list(arr.reshape(-1)))


class ConvexRegion:
    """Intersection of halfspaces a.x <= b with the ambient box. Coefficients
    are kept exact; `normals` exposes unit normals for display."""

    def __init__(self, halfspaces=()):
        hs = []
        for a, b in halfspaces:
            a, b = Qvec(a), Q(b)
            if all(v == 0 for v in a):
                raise ValueError("zero normal")
            hs.append((a, b))
        self.halfspaces = tuple(hs)

    def __repr__(self):
        return f"ConvexRegion({[(tuple(map(float, a)), float(b)) for a, b in self.halfspaces]})"

    @property
    def normals(self):
        out = []
        for a, b in self.halfspaces:
            v = np.array([float(x) for x in a])
            s = np.linalg.norm(v)
            out.append((v / s, float(b) / s))
        return out

    def contains(self, p, strict=False) -> bool:
        p = Qvec(p)
        for a, b in self.halfspaces:
            s = sum(x * y for x, y in zip(a, p))
            if s > b or (strict and s == b):
                return False
        return True

    def slack(self, p):
        """Minimum of b - a.x over the halfspaces (exact)."""
        p = Qvec(p)
        vals = [b - sum(x * y for x, y in zip(a, p)) for a, b in self.halfspaces]
        return min(vals) if vals else None

    def mask(self, points, P=None, strict=False):
        """Exact membership of many points; floats screen, Fractions decide."""
        n = len(points)
        if P is None:
            P = np.array([[float(c) for c in p] for p in points], dtype=float).reshape(n, -1)
        out = np.ones(n, dtype=bool)
        for a, b in self.halfspaces:
            af = np.array([float(x) for x in a])
            s = P @ af - float(b)
            scale = 1e-9 * (1 + np.abs(af).sum() + abs(float(b)))
            ok = s < -scale
            for i in np.nonzero((np.abs(s) <= scale) & out)[0]:
                e = sum(x * y for x, y in zip(a, points[i])) - b
                ok[i] = e < 0 if strict else e <= 0
            out &= ok
        return out

    def intersect(self, other):
        return ConvexRegion(self.halfspaces + other.halfspaces)


MANUAL, POWER, OVERLAP = "Manual", "PowerDiagram", "OverlapGraph"


class ConvexPartition:
    """Ordered list of convex cells; a point belongs to the first cell containing it."""

    def __init__(self, cells, provenance=MANUAL):
        self.cells = tuple(c if isinstance(c, ConvexRegion) else ConvexRegion(c) for c in cells)
        self.provenance = provenance

    def __len__(self):
        return len(self.cells)

    def assign(self, points, P=None):
        n = len(points)
        lab = np.full(n, -1, dtype=int)
        for k, cell in enumerate(self.cells):
            free = lab < 0
            if not free.any():
                break
            idx = np.nonzero(free)[0]
            sub = cell.mask([points[i] for i in idx], None if P is None else P[idx])
            lab[idx[sub]] = k
        return lab

    def assign_grid(self, grid: GridMeasure):
        lab = self.assign(grid.points, grid.P)
        bad = [i for i in np.nonzero(lab < 0)[0] if grid.masses[i] > 0]
        if bad:
            raise ValueError(f"{len(bad)} grid atoms with mass are not covered by the partition")
        return lab


# ---------------------------------------------------------------- operations


def barycenter(m, exact=True):
    """Mass-weighted mean point."""
    tot = m.total_mass
    if tot == 0:
        raise ZeroMass("barycenter of a zero measure")
    if not exact:
        return tuple((m.w @ m.P) / float(tot))
    d = len(m.points[0])
    acc = [Fraction(0)] * d
    for p, w in zip(m.points, m.masses):
        if w:
            for a in range(d):
                acc[a] += w * p[a]
    return tuple(v / tot for v in acc)


def restrict(m: GridMeasure, r: ConvexRegion) -> GridMeasure:
    inside = r.mask(m.points, m.P)
    return m.with_masses([w if k else Fraction(0) for w, k in zip(m.masses, inside)])


def restrict_mask(m: GridMeasure, mask) -> GridMeasure:
    return m.with_masses([w if k else Fraction(0) for w, k in zip(m.masses, mask)])


def mirror(m: DiscreteMeasure, axis: int, pivot) -> DiscreteMeasure:
    pivot = Q(pivot)
    pts = []
    for p in m.points:
        q = list(p)
        q[axis] = 2 * pivot - q[axis]
        pts.append(tuple(q))
    if m.box is not None:
        for q in pts:
            if not m.box.contains(q):
                raise OutOfDomain("mirrored atom leaves the box")
    return DiscreteMeasure(pts, m.masses, m.signed, m.box)


def _float_rank(M, tol):
    M = np.array(M, dtype=float)
    if M.size == 0:
        return 0
    M = M.copy()
    scale = max(1.0, np.abs(M).max())
    rank = 0
    rows, cols = M.shape
    for _ in range(min(rows, cols)):
        sub = np.abs(M[rank:, rank:])
        if sub.size == 0:
            break
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        if sub[i, j] <= tol * scale:
            break
        i += rank
        j += rank
        M[[rank, i]] = M[[i, rank]]
        M[:, [rank, j]] = M[:, [j, rank]]
        M[rank + 1:] -= np.outer(M[rank + 1:, rank] / M[rank, rank], M[rank])
        rank += 1
    return rank


def affinely_independent(points, tol=1e-9) -> bool:
    pts = np.array([[float(c) for c in p] for p in points], dtype=float)
    if len(pts) == 0:
        raise ValueError("empty point set")
    if len(pts) == 1:
        return True
    return _float_rank(pts[1:] - pts[0], tol) == len(pts) - 1


def in_convex_hull(point, others, mode="rational") -> bool:
    """LP membership of point in conv(others)."""
    k = len(others)
    if k == 0:
        return False
    d = len(point)
    A = [[Q(o[a]) for o in others] for a in range(d)] + [[1] * k]
    b = [Q(v) for v in point] + [1]
    lp = LinearProgram.dense([0] * k, A, EQ, b)
    return solve(lp, mode).status == OPTIMAL


def convexly_independent(points, mode="rational") -> bool:
    pts = [Qvec(p) for p in points]
    if not pts:
        raise ValueError("empty point set")
    for i, p in enumerate(pts):
        if in_convex_hull(p, pts[:i] + pts[i + 1:], mode):
            return False
    return True
