"""Self-contained dense linear programming by two-phase primal simplex.

Deterministic and auditable rather than fast: Bland's pivoting rule for
anti-cycling, dense numpy tableaus, explicit artificial variables.  Intended
for desk-scale systems (hundreds of rows).

Tolerances are centralized: FEAS_EPS for feasibility decisions, PIVOT_EPS for
pivot eligibility.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

FEAS_EPS = 1e-9
PIVOT_EPS = 1e-10

ROW_RELATIONS = ("<=", "=", ">=")


class LpError(ValueError):
    """Malformed linear program."""


@dataclass
class LinearProgram:
    """min or max of objective . x subject to rows and variable bounds.

    Rows are (coefficients, relation, rhs) with relation in {<=, =, >=} and
    finite rhs.  Default variable bounds are [0, +inf); a lower bound of -inf
    makes the variable free.
    """

    objective: Sequence[float]
    maximize: bool = False
    rows: Sequence[tuple[Sequence[float], str, float]] = field(default_factory=list)
    lower: Sequence[float] | None = None
    upper: Sequence[float] | None = None


@dataclass
class LpOutcome:
    status: str  # "optimal" | "unbounded" | "infeasible"
    value: float | None = None
    point: np.ndarray | None = None


def _validate(lp: LinearProgram) -> tuple[np.ndarray, list, np.ndarray, np.ndarray]:
    c = np.asarray(lp.objective, dtype=float)
    n = c.shape[0]
    if np.isnan(c).any():
        raise LpError("NaN coefficient in objective")
    rows = []
    for coeffs, rel, rhs in lp.rows:
        a = np.asarray(coeffs, dtype=float)
        if a.shape != (n,):
            raise LpError(f"row arity {a.shape} does not match objective arity {n}")
        if np.isnan(a).any() or math.isnan(rhs):
            raise LpError("NaN coefficient in row")
        if math.isinf(rhs):
            raise LpError("row rhs must be finite")
        if rel not in ROW_RELATIONS:
            raise LpError(f"unknown row relation {rel!r}")
        rows.append((a, rel, float(rhs)))
    lower = np.zeros(n) if lp.lower is None else np.asarray(lp.lower, dtype=float)
    upper = np.full(n, math.inf) if lp.upper is None else np.asarray(lp.upper, dtype=float)
    if lower.shape != (n,) or upper.shape != (n,):
        raise LpError("bound arity does not match objective arity")
    if np.any(lower > upper):
        raise LpError("variable lower bound exceeds upper bound")
    return c, rows, lower, upper


class _Standardizer:
    """Rewrites original variables into non-negative internal variables.

    Finite lower bound l: x = y + l (shift).  Lower bound -inf: x = y+ - y-
    (split).  Finite upper bounds become extra <= rows on the internal form.
    """

    def __init__(self, lower: np.ndarray, upper: np.ndarray):
        self.n_orig = lower.shape[0]
        self.shift = np.zeros(self.n_orig)
        self.pos_col: list[int] = []
        self.neg_col: list[int] = []
        k = 0
        for j in range(self.n_orig):
            if math.isinf(lower[j]):  # free variable, split
                self.pos_col.append(k)
                self.neg_col.append(k + 1)
                k += 2
            else:
                self.shift[j] = lower[j]
                self.pos_col.append(k)
                self.neg_col.append(-1)
                k += 1
        self.n_internal = k
        self.upper = upper

    def expand_row(self, a: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n_internal)
        for j in range(self.n_orig):
            out[self.pos_col[j]] += a[j]
            if self.neg_col[j] >= 0:
                out[self.neg_col[j]] -= a[j]
        return out

    def internal_rows(self, rows) -> list[tuple[np.ndarray, str, float]]:
        out = []
        for a, rel, rhs in rows:
            out.append((self.expand_row(a), rel, rhs - float(a @ self.shift)))
        for j in range(self.n_orig):
            u = self.upper[j]
            if not math.isinf(u):
                a = np.zeros(self.n_orig)
                a[j] = 1.0
                out.append((self.expand_row(a), "<=", u - self.shift[j]))
        return out

    def restore(self, y: np.ndarray) -> np.ndarray:
        x = np.empty(self.n_orig)
        for j in range(self.n_orig):
            v = y[self.pos_col[j]]
            if self.neg_col[j] >= 0:
                v -= y[self.neg_col[j]]
            x[j] = v + self.shift[j]
        return x


class _Tableau:
    """Dense simplex tableau over equality-standard form A y = b, y >= 0."""

    def __init__(self, internal_rows: list[tuple[np.ndarray, str, float]], n_internal: int):
        m = len(internal_rows)
        # canonicalize rhs >= 0, then add slack/surplus and artificials
        n_slack = sum(1 for _, rel, _ in internal_rows if rel != "=")
        cols = n_internal + n_slack
        body = np.zeros((m, cols))
        rhs = np.zeros(m)
        basis = np.full(m, -1, dtype=int)
        art_rows = []
        s = 0
        for i, (a, rel, b) in enumerate(internal_rows):
            if b < 0:
                a, b = -a, -b
                rel = {"<=": ">=", ">=": "<=", "=": "="}[rel]
            body[i, :n_internal] = a
            rhs[i] = b
            if rel == "<=":
                body[i, n_internal + s] = 1.0
                basis[i] = n_internal + s
                s += 1
            elif rel == ">=":
                body[i, n_internal + s] = -1.0
                s += 1
                art_rows.append(i)
            else:
                art_rows.append(i)
        # artificial columns for rows lacking a basic slack
        n_art = len(art_rows)
        full = np.zeros((m, cols + n_art + 1))
        full[:, :cols] = body
        full[:, -1] = rhs
        for k, i in enumerate(art_rows):
            full[i, cols + k] = 1.0
            basis[i] = cols + k
        self.T = full
        self.basis = basis
        self.n_struct = cols  # structural + slack columns
        self.n_art = n_art
        self.m = m

    def _pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row])
        self.basis[row] = col

    def _run(self, obj_row: np.ndarray, allowed_cols: int) -> str:
        """Bland's rule simplex on the given reduced-cost row (minimization).

        obj_row has length cols+1; its last cell accumulates -objective.
        Returns "optimal" or "unbounded".
        """
        max_iter = 10000 + 200 * (self.m + allowed_cols)
        for _ in range(max_iter):
            T = self.T
            negative = np.flatnonzero(obj_row[:allowed_cols] < -PIVOT_EPS)
            if negative.size == 0:
                return "optimal"
            enter = int(negative[0])  # Bland: lowest eligible index
            col = T[:, enter]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(col > PIVOT_EPS, T[:, -1] / col, math.inf)
            best = ratios.min(initial=math.inf)
            if math.isinf(best):
                return "unbounded"
            ties = np.flatnonzero(ratios <= best + PIVOT_EPS)
            leave = int(ties[np.argmin(self.basis[ties])])  # Bland tie-break
            self._pivot(leave, enter)
            obj_row -= obj_row[enter] * T[leave]
            if log.isEnabledFor(logging.DEBUG):
                log.debug("pivot enter=%d leave=%d basis=%s", enter, leave, self.basis)
        raise RuntimeError("simplex iteration limit exceeded")

    def phase1(self) -> bool:
        """Minimize the sum of artificials; True iff a feasible basis found."""
        if self.n_art == 0:
            return True
        cols = self.T.shape[1] - 1
        obj = np.zeros(cols + 1)
        obj[self.n_struct:cols] = 1.0
        for i in range(self.m):
            if self.basis[i] >= self.n_struct:
                obj -= self.T[i]
        status = self._run(obj, cols)
        if status != "optimal":  # cannot happen: phase-1 objective is bounded below
            raise RuntimeError("phase-1 simplex reported unbounded")
        if -obj[-1] > FEAS_EPS:
            return False
        # drive remaining artificials out of the basis or drop redundant rows
        keep = np.ones(self.m, dtype=bool)
        for i in range(self.m):
            if self.basis[i] >= self.n_struct:
                pivot_col = -1
                for j in range(self.n_struct):
                    if abs(self.T[i, j]) > 1e-7:
                        pivot_col = j
                        break
                if pivot_col >= 0:
                    self._pivot(i, pivot_col)
                else:
                    keep[i] = False
        if not keep.all():
            self.T = self.T[keep]
            self.basis = self.basis[keep]
            self.m = int(keep.sum())
        # discard artificial columns
        self.T = np.hstack([self.T[:, : self.n_struct], self.T[:, -1:]])
        self.n_art = 0
        return True

    def phase2(self, c_internal: np.ndarray) -> str:
        """Minimize c_internal . y from the current feasible basis."""
        cols = self.T.shape[1] - 1
        obj = np.zeros(cols + 1)
        obj[: c_internal.shape[0]] = c_internal
        for i in range(self.m):
            b = self.basis[i]
            if b < cols and obj[b] != 0.0:
                obj -= obj[b] * self.T[i]
        return self._run(obj, cols)

    def solution(self, n_internal: int) -> np.ndarray:
        y = np.zeros(self.T.shape[1] - 1)
        for i in range(self.m):
            y[self.basis[i]] = self.T[i, -1]
        return y[:n_internal]

    def snapshot(self) -> tuple[np.ndarray, np.ndarray, int]:
        return self.T.copy(), self.basis.copy(), self.m

    def restore(self, snap: tuple[np.ndarray, np.ndarray, int]) -> None:
        self.T = snap[0].copy()
        self.basis = snap[1].copy()
        self.m = snap[2]


def solve(lp: LinearProgram) -> LpOutcome:
    """Solve one LP.  Pure function of its input; identical inputs give
    identical outcomes.
    """
    outcomes = solve_many(lp.rows, [(lp.objective, lp.maximize)],
                          lower=lp.lower, upper=lp.upper)
    return outcomes[0]


def solve_many(
    rows: Sequence[tuple[Sequence[float], str, float]],
    objectives: Sequence[tuple[Sequence[float], bool]],
    lower: Sequence[float] | None = None,
    upper: Sequence[float] | None = None,
) -> list[LpOutcome]:
    """Solve several objectives over one constraint set.

    Phase 1 runs once; each objective gets its own phase 2 from a copy of the
    feasible tableau.  Outcomes are identical to independent solve() calls.
    """
    if not objectives:
        return []
    n = len(objectives[0][0])
    probe = LinearProgram(objective=objectives[0][0], maximize=objectives[0][1],
                          rows=rows, lower=lower, upper=upper)
    _, vrows, lo, up = _validate(probe)
    for obj, _ in objectives:
        c = np.asarray(obj, dtype=float)
        if c.shape != (n,):
            raise LpError("objective arity mismatch within batch")
        if np.isnan(c).any():
            raise LpError("NaN coefficient in objective")

    std = _Standardizer(lo, up)
    tab = _Tableau(std.internal_rows(vrows), std.n_internal)
    if not tab.phase1():
        return [LpOutcome(status="infeasible") for _ in objectives]
    snap = tab.snapshot()

    out = []
    for k, (obj, maximize) in enumerate(objectives):
        if k > 0:
            tab.restore(snap)
        c = np.asarray(obj, dtype=float)
        c_int = std.expand_row(c if not maximize else -c)
        status = tab.phase2(c_int)
        if status == "unbounded":
            out.append(LpOutcome(status="unbounded"))
            continue
        x = std.restore(tab.solution(std.n_internal))
        out.append(LpOutcome(status="optimal", value=float(c @ x), point=x))
    return out


def check_point(lp: LinearProgram, x: np.ndarray, eps: float = FEAS_EPS) -> bool:
    """Feasibility certificate: x satisfies every row within eps scaled by
    the row norm, and the bounds within eps."""
    c, rows, lower, upper = _validate(lp)
    for a, rel, rhs in rows:
        scale = eps * (1.0 + float(np.abs(a).sum()) + abs(rhs))
        lhs = float(a @ x)
        if rel == "<=" and lhs > rhs + scale:
            return False
        if rel == ">=" and lhs < rhs - scale:
            return False
        if rel == "=" and abs(lhs - rhs) > scale:
            return False
    big = eps * (1.0 + float(np.abs(x).max(initial=0.0)))
    return bool(np.all(x >= lower - big) and np.all(x <= upper + big))
