"""Linear programming kernel.

Programs are stored row-wise with sparse coefficient lists. Float mode solves
with HiGHS. Rational mode runs a bounded-variable revised simplex in exact
arithmetic, warm-started from the HiGHS basis when one is available; pricing
is Dantzig's rule and switches permanently to Bland's rule after a streak of
degenerate pivots, so it always terminates.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .exact import Q, Singular, fmt, sparse_solve, sparse_solve_T

LE, EQ, GE = "<=", "==", ">="
OPTIMAL, INFEASIBLE, UNBOUNDED = "Optimal", "Infeasible", "Unbounded"
FLOAT, RATIONAL = "float", "rational"
RATIONAL_LIMIT = 2000


class MalformedProgram(ValueError):
    pass


class LpError(RuntimeError):
    pass


@dataclass(frozen=True)
class Tolerances:
    feas: float = 1e-9
    duality: float = 1e-7
    uniqueness: float = 1e-6
    cert: float = 1e-7
    rank: float = 1e-9


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class LinearProgram:
    c: tuple
    rows: tuple  # ((col indices), (values)) per row
    senses: tuple
    rhs: tuple
    lower: tuple
    upper: tuple  # None means +inf, lower None means -inf
    maximize: bool = True

    def __post_init__(self):
        n = len(self.c)
        if not (len(self.rows) == len(self.senses) == len(self.rhs)):
            raise MalformedProgram("row, sense and rhs counts differ")
        if len(self.lower) != n or len(self.upper) != n:
            raise MalformedProgram("bound vectors must match the objective length")
        for s in self.senses:
            if s not in (LE, EQ, GE):
                raise MalformedProgram(f"unknown sense {s!r}")
        for idx, vals in self.rows:
            if len(idx) != len(vals):
                raise MalformedProgram("ragged row")
            if any(j < 0 or j >= n for j in idx):
                raise MalformedProgram("column index out of range")
        for lo, up in zip(self.lower, self.upper):
            if lo is not None and up is not None and lo > up:
                raise MalformedProgram("lower bound exceeds upper bound")

    @property
    def n(self):
        return len(self.c)

    @property
    def m(self):
        return len(self.rows)

    @classmethod
    def dense(cls, c, A, senses, rhs, lower=None, upper=None, maximize=True):
        c = list(c)
        rows = []
        for r in A:
            r = list(r)
            if len(r) != len(c):
                raise MalformedProgram("row length differs from objective length")
            idx = tuple(j for j, v in enumerate(r) if v != 0)
            rows.append((idx, tuple(r[j] for j in idx)))
        if isinstance(senses, str):
            senses = [senses] * len(rows)
        return cls.build(c, rows, senses, rhs, lower, upper, maximize)

    @classmethod
    def build(cls, c, rows, senses, rhs, lower=None, upper=None, maximize=True):
        n = len(c)
        lower = [0] * n if lower is None else list(lower)
        upper = [None] * n if upper is None else list(upper)
        lower = [None if (v is not None and v == -np.inf) else v for v in lower]
        upper = [None if (v is not None and v == np.inf) else v for v in upper]
        rows = [(tuple(int(j) for j in idx), tuple(vals)) for idx, vals in rows]
        return cls(tuple(c), tuple(rows), tuple(senses), tuple(rhs), tuple(lower), tuple(upper), maximize)

    def with_objective(self, c, maximize=None):
        return replace(self, c=tuple(c), maximize=self.maximize if maximize is None else maximize)

    def with_rows(self, rows, senses, rhs):
        rows = [(tuple(int(j) for j in idx), tuple(vals)) for idx, vals in rows]
        return replace(self, rows=self.rows + tuple(rows), senses=self.senses + tuple(senses),
                       rhs=self.rhs + tuple(rhs))

    def dense_matrix(self):
        A = np.zeros((self.m, self.n))
        for i, (idx, vals) in enumerate(self.rows):
            for j, v in zip(idx, vals):
                A[i, j] += float(v)
        return A

    def dump(self) -> str:
        """Line-oriented plain text with exact rationals, for cross-checking."""
        out = [f"{'max' if self.maximize else 'min'} {self.n} {self.m}",
               "c " + " ".join(fmt(v) for v in self.c)]
        for j, (lo, up) in enumerate(zip(self.lower, self.upper)):
            out.append(f"bound {j} {'-inf' if lo is None else fmt(lo)} {'inf' if up is None else fmt(up)}")
        for (idx, vals), s, b in zip(self.rows, self.senses, self.rhs):
            terms = " ".join(f"{j}:{fmt(v)}" for j, v in zip(idx, vals))
            out.append(f"row {terms} {s} {fmt(b)}")
        return "\n".join(out) + "\n"


class LpBuilder:
    """Incremental construction of a LinearProgram."""

    def __init__(self):
        self.c, self.lower, self.upper = [], [], []
        self.rows, self.senses, self.rhs = [], [], []

    def var(self, lb=0, ub=None, cost=0):
        self.c.append(cost)
        self.lower.append(lb)
        self.upper.append(ub)
        return len(self.c) - 1

    def row(self, coeffs: dict, sense, rhs):
        items = [(j, v) for j, v in coeffs.items() if v != 0]
        self.rows.append((tuple(j for j, _ in items), tuple(v for _, v in items)))
        self.senses.append(sense)
        self.rhs.append(rhs)
        return len(self.rows) - 1

    def build(self, maximize=True):
        return LinearProgram.build(self.c, self.rows, self.senses, self.rhs, self.lower, self.upper, maximize)


@dataclass
class LpSolution:
    status: str
    x: tuple = ()
    y: tuple = ()
    value: object = None
    dual_value: object = None
    basis: tuple = ()
    mode: str = FLOAT
    farkas: tuple | None = None
    iterations: int = 0
    residuals: dict = field(default_factory=dict)


# ---------------------------------------------------------------- HiGHS


def _row_bounds(sense, b):
    if sense == LE:
        return None, b
    if sense == GE:
        return b, None
    return b, b


def _highs(lp: LinearProgram):
    import highspy

    inf = highspy.kHighsInf
    n, m = lp.n, lp.m
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    model = highspy.HighsLp()
    model.num_col_, model.num_row_ = n, m
    model.col_cost_ = np.array([float(v) for v in lp.c], dtype=float)
    model.col_lower_ = np.array([-inf if v is None else float(v) for v in lp.lower], dtype=float)
    model.col_upper_ = np.array([inf if v is None else float(v) for v in lp.upper], dtype=float)
    lo, up = zip(*[_row_bounds(s, b) for s, b in zip(lp.senses, lp.rhs)]) if m else ((), ())
    model.row_lower_ = np.array([-inf if v is None else float(v) for v in lo], dtype=float)
    model.row_upper_ = np.array([inf if v is None else float(v) for v in up], dtype=float)
    cols = [[] for _ in range(n)]
    for i, (idx, vals) in enumerate(lp.rows):
        for j, v in zip(idx, vals):
            cols[j].append((i, float(v)))
    start, index, value = [0], [], []
    for col in cols:
        col.sort()
        for i, v in col:
            index.append(i)
            value.append(v)
        start.append(len(index))
    model.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    model.a_matrix_.start_ = np.array(start, dtype=np.int32)
    model.a_matrix_.index_ = np.array(index, dtype=np.int32)
    model.a_matrix_.value_ = np.array(value, dtype=float)
    model.sense_ = highspy.ObjSense.kMaximize if lp.maximize else highspy.ObjSense.kMinimize
    h.passModel(model)
    h.run()
    st = h.getModelStatus()
    if st == highspy.HighsModelStatus.kUnboundedOrInfeasible:
        h.setOptionValue("presolve", "off")
        h.run()
        st = h.getModelStatus()
    S = highspy.HighsModelStatus
    if st == S.kOptimal:
        sol = h.getSolution()
        b = h.getBasis()
        names = {highspy.HighsBasisStatus.kBasic: "B", highspy.HighsBasisStatus.kLower: "L",
                 highspy.HighsBasisStatus.kUpper: "U", highspy.HighsBasisStatus.kZero: "Z"}
        status = [names.get(s, "L") for s in b.col_status] + [names.get(s, "L") for s in b.row_status]
        return OPTIMAL, np.array(sol.col_value), np.array(sol.row_dual), status if b.valid else None
    if st == S.kInfeasible:
        return INFEASIBLE, None, None, None
    if st == S.kUnbounded:
        return UNBOUNDED, None, None, None
    raise LpError(f"HiGHS returned {st}")


# ---------------------------------------------------------------- exact simplex


class _Exact:
    """Bounded-variable revised simplex over Fractions.

    Variables are the n structural columns followed by one row variable per
    constraint (A x - r = 0, r bounded by the row sense) and, for a cold start,
    one artificial per row.
    """

    DEGENERATE_STREAK = 30

    def __init__(self, lp: LinearProgram):
        self.lp = lp
        n, m = lp.n, lp.m
        self.n, self.m = n, m
        sign = 1 if lp.maximize else -1
        self.cols = [dict() for _ in range(n + m)]
        for i, (idx, vals) in enumerate(lp.rows):
            for j, v in zip(idx, vals):
                v = Q(v)
                if v:
                    self.cols[j][i] = self.cols[j].get(i, Fraction(0)) + v
            self.cols[n + i][i] = Fraction(-1)
        self.lb = [None if v is None else Q(v) for v in lp.lower]
        self.ub = [None if v is None else Q(v) for v in lp.upper]
        for s, b in zip(lp.senses, lp.rhs):
            lo, up = _row_bounds(s, Q(b))
            self.lb.append(lo)
            self.ub.append(up)
        self.cost = [sign * Q(v) for v in lp.c] + [Fraction(0)] * m
        self.iterations = 0

    def _nonbasic_value(self, j, st):
        if st == "L":
            return self.lb[j]
        if st == "U":
            return self.ub[j]
        return Fraction(0)

    def _default_status(self, j):
        if self.lb[j] is not None:
            return "L"
        if self.ub[j] is not None:
            return "U"
        return "Z"

    def _xB(self, basis, status):
        rhs = [Fraction(0)] * self.m
        for j, st in enumerate(status):
            if st == "B":
                continue
            v = self._nonbasic_value(j, st)
            if v:
                for i, a in self.cols[j].items():
                    rhs[i] -= a * v
        return sparse_solve([self.cols[b] for b in basis], rhs, self.m)

    def warm(self, status):
        status = list(status)
        for j, st in enumerate(status):
            if st == "L" and self.lb[j] is None or st == "U" and self.ub[j] is None:
                status[j] = self._default_status(j)
            if st == "Z" and (self.lb[j] is not None or self.ub[j] is not None):
                status[j] = self._default_status(j)
        basis = [j for j, st in enumerate(status) if st == "B"]
        if len(basis) != self.m:
            return None
        try:
            xB = self._xB(basis, status)
        except Singular:
            return None
        viol = {}
        for b, v in zip(basis, xB):
            if self.lb[b] is not None and v < self.lb[b]:
                viol[b] = (v, self.lb[b], 1)
            elif self.ub[b] is not None and v > self.ub[b]:
                viol[b] = (v, self.ub[b], -1)
        if viol and not self._repair(basis, status, viol):
            return None
        return self._run(basis, status, self.cost)

    def _repair(self, basis, status, viol):
        """Phase one from an exactly-infeasible basis: relax each violated bound
        to the current value, cap the variable at its true bound, and push it
        there. Succeeds iff every capped variable reaches its cap."""
        saved = {b: (self.lb[b], self.ub[b]) for b in viol}
        cost = [Fraction(0)] * len(self.cols)
        for b, (v, bound, sgn) in viol.items():
            self.lb[b], self.ub[b] = (v, bound) if sgn > 0 else (bound, v)
            cost[b] = Fraction(sgn)
        out = self._run(basis, status, cost)
        ok = out[0] == OPTIMAL
        if ok:
            xB = dict(zip(basis, out[3]))
            for b, (v, bound, sgn) in viol.items():
                val = xB[b] if status[b] == "B" else self._nonbasic_value(b, status[b])
                ok &= val == bound
        for b, (lo, up) in saved.items():
            if status[b] != "B":
                status[b] = "L" if self.ub[b] == viol[b][1] and viol[b][2] > 0 and status[b] == "U" else status[b]
                status[b] = "U" if viol[b][2] < 0 and status[b] == "L" else status[b]
            self.lb[b], self.ub[b] = lo, up
        return ok

    def cold(self):
        N = len(self.cols)
        status = [self._default_status(j) for j in range(N)]
        res = [Fraction(0)] * self.m
        for j in range(N):
            v = self._nonbasic_value(j, status[j])
            if v:
                for i, a in self.cols[j].items():
                    res[i] -= a * v
        self.art0 = N
        for i in range(self.m):
            self.cols.append({i: Fraction(1) if res[i] >= 0 else Fraction(-1)})
            self.lb.append(Fraction(0))
            self.ub.append(None)
            status.append("B")
        basis = list(range(N, N + self.m))
        cost1 = [Fraction(0)] * N + [Fraction(-1)] * self.m
        out = self._run(basis, status, cost1)
        if out[0] != OPTIMAL:
            raise LpError("phase one cannot be unbounded")
        _, basis, status, xB, y = out
        val = sum((v for b, v in zip(basis, xB) if b >= N), Fraction(0))
        if val > 0:
            return INFEASIBLE, basis, status, xB, y
        for k in range(N, N + self.m):
            self.ub[k] = Fraction(0)
        cost2 = self.cost + [Fraction(0)] * self.m
        return self._run(basis, status, cost2)

    def _run(self, basis, status, cost):
        m = self.m
        bland = False
        streak = 0
        while True:
            self.iterations += 1
            Bcols = [self.cols[b] for b in basis]
            xB = self._xB(basis, status)
            y = sparse_solve_T(Bcols, [cost[b] for b in basis], m)
            best, q, qd = None, None, None
            for j, st in enumerate(status):
                if st == "B":
                    continue
                if self.lb[j] is not None and self.lb[j] == self.ub[j]:
                    continue
                d = cost[j] - sum((a * y[i] for i, a in self.cols[j].items()), Fraction(0))
                if (st == "L" and d > 0) or (st == "U" and d < 0) or (st == "Z" and d != 0):
                    if bland:
                        q, qd = j, d
                        break
                    if best is None or abs(d) > best:
                        best, q, qd = abs(d), j, d
            if q is None:
                return OPTIMAL, basis, status, xB, y
            direction = 1 if qd > 0 else -1
            w = sparse_solve(Bcols, [self.cols[q].get(i, Fraction(0)) for i in range(m)], m)
            cands = []  # (step, variable, basis position or -1 for a bound flip, bound hit)
            if self.lb[q] is not None and self.ub[q] is not None:
                cands.append((self.ub[q] - self.lb[q], q, -1, None))
            for k, b in enumerate(basis):
                rate = -direction * w[k]  # d x_b / d t
                if rate < 0 and self.lb[b] is not None:
                    cands.append(((xB[k] - self.lb[b]) / (-rate), b, k, "L"))
                elif rate > 0 and self.ub[b] is not None:
                    cands.append(((self.ub[b] - xB[k]) / rate, b, k, "U"))
            if not cands:
                return UNBOUNDED, basis, status, xB, y
            t_best = min(c[0] for c in cands)
            _, _, leave, leave_to = min((c for c in cands if c[0] == t_best), key=lambda c: c[1])
            streak = streak + 1 if t_best == 0 else 0
            if streak > self.DEGENERATE_STREAK:
                bland = True
            if leave == -1:
                status[q] = "U" if status[q] == "L" else "L"
                continue
            out = basis[leave]
            status[out] = leave_to
            if self.lb[out] is not None and self.lb[out] == self.ub[out]:
                status[out] = "L"
            status[q] = "B"
            basis[leave] = q

    def solution(self, out):
        st, basis, status, xB, y = out
        n, m = self.n, self.m
        sign = 1 if self.lp.maximize else -1
        full = [self._nonbasic_value(j, s) if s != "B" else None for j, s in enumerate(status)]
        for b, v in zip(basis, xB):
            full[b] = v
        x = tuple(full[:n])
        yy = tuple(sign * v for v in y)
        value = sum((Q(c) * v for c, v in zip(self.lp.c, x)), Fraction(0))
        # dual objective: row bounds at which row variables sit plus bound terms
        dual = Fraction(0)
        for j in range(n + m):
            if status[j] == "B":
                continue
            d = self.cost[j] - sum((a * y[i] for i, a in self.cols[j].items()), Fraction(0))
            dual += sign * d * self._nonbasic_value(j, status[j])
        # row variables carry cost 0 so their reduced cost is y_i and the sum
        # above already includes sum_i y_i r_i over nonbasic rows
        return x, yy, value, dual, tuple(basis)


def _farkas(lp: LinearProgram, mode):
    """Feasibility defect LP: max -(sum p + q) with a x + p - q (sense) b."""
    n, m = lp.n, lp.m
    rows = []
    for i, (idx, vals) in enumerate(lp.rows):
        rows.append((idx + (n + 2 * i, n + 2 * i + 1), vals + (1, -1)))
    c = [0] * n + [-1] * (2 * m)
    aux = LinearProgram.build(c, rows, lp.senses, lp.rhs, list(lp.lower) + [0] * (2 * m),
                              list(lp.upper) + [None] * (2 * m), True)
    sol = solve(aux, mode)
    return sol


def _residuals(lp, x, y):
    xs = np.array([float(v) for v in x])
    viol = 0.0
    cs = 0.0
    for (idx, vals), s, b, yi in zip(lp.rows, lp.senses, lp.rhs, y):
        act = sum(float(v) * xs[j] for j, v in zip(idx, vals))
        b = float(b)
        if s == LE:
            viol = max(viol, act - b)
        elif s == GE:
            viol = max(viol, b - act)
        else:
            viol = max(viol, abs(act - b))
        if s != EQ:
            cs = max(cs, abs(float(yi) * (act - b)))
    for v, lo, up in zip(xs, lp.lower, lp.upper):
        if lo is not None:
            viol = max(viol, float(lo) - v)
        if up is not None:
            viol = max(viol, v - float(up))
    return {"primal": viol, "complementarity": cs}


def solve(lp: LinearProgram, mode: str = "auto", tol: Tolerances = DEFAULT_TOL, warm: bool = True) -> LpSolution:
    """Optimize a LinearProgram. mode is 'float', 'rational' or 'auto' (rational
    up to RATIONAL_LIMIT variables)."""
    if mode == "auto":
        mode = RATIONAL if lp.n <= RATIONAL_LIMIT else FLOAT
    if mode not in (FLOAT, RATIONAL):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == FLOAT:
        return _solve_float(lp, tol)
    return _solve_rational(lp, warm)


def _solve_float(lp, tol):
    st, x, y, basis = _highs(lp)
    if st == INFEASIBLE:
        aux = _farkas(lp, FLOAT)
        return LpSolution(INFEASIBLE, mode=FLOAT, farkas=tuple(aux.y))
    if st == UNBOUNDED:
        return LpSolution(UNBOUNDED, mode=FLOAT)
    value = float(np.dot([float(v) for v in lp.c], x)) if lp.n else 0.0
    sign = 1.0 if lp.maximize else -1.0
    # HiGHS reports duals with the sign convention of the stated sense
    y = tuple(float(v) for v in y)
    dual = 0.0
    for (idx, vals), s, b, yi in zip(lp.rows, lp.senses, lp.rhs, y):
        dual += yi * float(b)
    d = np.array([float(v) for v in lp.c], dtype=float)
    for i, (idx, vals) in enumerate(lp.rows):
        for j, v in zip(idx, vals):
            d[j] -= y[i] * float(v)
    for j in range(lp.n):
        if abs(d[j]) > 0:
            dual += d[j] * x[j]
    res = _residuals(lp, x, y)
    res["duality"] = abs(value - dual)
    b = tuple(j for j, s in enumerate(basis) if s == "B") if basis else ()
    del sign
    return LpSolution(OPTIMAL, tuple(float(v) for v in x), y, value, dual, b, FLOAT, residuals=res)


def _solve_rational(lp, warm):
    ex = _Exact(lp)
    out = None
    if warm and lp.m > 0:
        try:
            st, _, _, status = _highs(lp)
        except LpError:
            st, status = None, None
        if st == INFEASIBLE:
            aux = _farkas(lp, RATIONAL)
            if aux.value < 0:
                return LpSolution(INFEASIBLE, mode=RATIONAL, farkas=tuple(aux.y))
        if st == OPTIMAL and status is not None:
            out = ex.warm(status)
            if out is None:
                ex = _Exact(lp)
    if out is None:
        out = ex.cold()
    if out[0] == INFEASIBLE:
        aux = _farkas(lp, RATIONAL) if warm else None
        return LpSolution(INFEASIBLE, mode=RATIONAL, farkas=tuple(aux.y) if aux else tuple(out[4][: lp.m]),
                          iterations=ex.iterations)
    if out[0] == UNBOUNDED:
        return LpSolution(UNBOUNDED, mode=RATIONAL, iterations=ex.iterations)
    x, y, value, dual, basis = ex.solution(out)
    y = y[: lp.m]
    res = {"primal": _exact_violation(lp, x), "duality": abs(value - dual)}
    return LpSolution(OPTIMAL, x, y, value, dual, basis, RATIONAL, iterations=ex.iterations, residuals=res)


def _exact_violation(lp, x):
    worst = Fraction(0)
    for (idx, vals), s, b in zip(lp.rows, lp.senses, lp.rhs):
        act = sum((Q(v) * x[j] for j, v in zip(idx, vals)), Fraction(0))
        b = Q(b)
        gap = act - b if s == LE else (b - act if s == GE else abs(act - b))
        worst = max(worst, gap)
    for v, lo, up in zip(x, lp.lower, lp.upper):
        if lo is not None:
            worst = max(worst, Q(lo) - v)
        if up is not None:
            worst = max(worst, v - Q(up))
    return worst


# ---------------------------------------------------------------- face probing


@dataclass
class FaceProbe:
    unique: bool
    witness: tuple | None
    seed: int
    probes: int


def optimal_face_is_singleton(lp: LinearProgram, sol: LpSolution, probe_count: int = 4, seed: int = 0,
                              projection=None, mode=None, tol: Tolerances = DEFAULT_TOL) -> FaceProbe:
    """Pin the objective at its optimum and probe the optimal face with seeded
    random functionals and coordinate functionals. When the face is not a
    point (on the projected coordinates) a pair of distinct optimizers is
    returned."""
    if sol.status != OPTIMAL:
        raise LpError("face probing needs an optimal solution")
    mode = mode or sol.mode
    coords = list(range(lp.n)) if projection is None else list(projection)
    nz = [j for j, v in enumerate(lp.c) if v != 0]
    if mode == RATIONAL:
        pin_rhs = Q(sol.value)
        gap = Fraction(0)
    else:
        slack = tol.feas * max(1.0, abs(float(sol.value)))
        pin_rhs = float(sol.value) - (slack if lp.maximize else -slack)
        gap = tol.uniqueness
    pinned = lp.with_rows([(tuple(nz), tuple(lp.c[j] for j in nz))], [GE if lp.maximize else LE], [pin_rhs])
    rng = np.random.default_rng(seed)
    funcs = [dict(zip(coords, rng.integers(-1000, 1001, size=len(coords)).tolist())) for _ in range(probe_count)]
    funcs += [{j: 1} for j in coords]
    count = 0
    for f in funcs:
        c = [0] * lp.n
        for j, v in f.items():
            c[j] = v
        hi = solve(pinned.with_objective(c, True), mode)
        lo = solve(pinned.with_objective(c, False), mode)
        count += 2
        if hi.status != OPTIMAL or lo.status != OPTIMAL:
            raise LpError("probe over the optimal face failed")
        if hi.value - lo.value > gap:
            a = tuple(lo.x[j] for j in coords)
            b = tuple(hi.x[j] for j in coords)
            return FaceProbe(False, (a, b), seed, count)
    return FaceProbe(True, None, seed, count)
