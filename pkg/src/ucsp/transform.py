"""Transformation resolution form for interval linear systems.

Pipeline: convert a linear problem with interval coefficients into an
interval linear system, rewrite equalities as inequality pairs, replace each
interval row by the single certain row that preserves the complete solution
set over non-negative variables, then extract per-variable bounds with two
LP solves per variable.

Also houses the finite-set analogue for a single discrete parameter (the
parameter-monotone transform) and the per-orthant decomposition of one
interval inequality over domains that span negative values.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import lp
from .model import (
    Coef,
    Domain,
    ExprConstraint,
    InfiniteDomainError,
    LinearConstraint,
    ModelError,
    Solution,
    TableConstraint,
    UncertainCSP,
    UncertainConstraint,
    UncertaintySet,
    complete_solution_set,
    realize_constraint,
)

INF = math.inf


class TransformError(ModelError):
    """The requested transform does not apply to this input."""


class NonMonotoneError(TransformError):
    """No ordering of the uncertainty set satisfies the implication chain."""


@dataclass(frozen=True)
class RowOrigin:
    """Which source constraint produced a row, and which half of an equality."""

    source: int
    part: str  # "orig" | "ge" | "le"


@dataclass(frozen=True, eq=False)
class IntervalLinearSystem:
    """m rows of interval-coefficient linear constraints over n real variables.

    Entry (i, j) is the closed interval [a_lower[i,j], a_upper[i,j]]; the
    right-hand side of row i is [b_lower[i], b_upper[i]].  Distinct entries
    vary independently.
    """

    variables: tuple[str, ...]
    a_lower: np.ndarray
    a_upper: np.ndarray
    relations: tuple[str, ...]
    b_lower: np.ndarray
    b_upper: np.ndarray
    dom_lower: np.ndarray
    dom_upper: np.ndarray
    provenance: tuple[RowOrigin, ...] = ()

    def __post_init__(self):
        m, n = self.a_lower.shape
        if self.a_upper.shape != (m, n) or len(self.relations) != m:
            raise TransformError("inconsistent system dimensions")
        if self.b_lower.shape != (m,) or self.b_upper.shape != (m,):
            raise TransformError("inconsistent rhs dimensions")
        if self.dom_lower.shape != (n,) or self.dom_upper.shape != (n,):
            raise TransformError("inconsistent domain dimensions")
        if np.any(self.a_lower > self.a_upper) or np.any(self.b_lower > self.b_upper):
            raise TransformError("interval lower bound exceeds upper bound")
        if not (np.isfinite(self.a_lower).all() and np.isfinite(self.a_upper).all()):
            raise TransformError("matrix entries must be finite intervals")
        if not self.provenance:
            object.__setattr__(
                self, "provenance", tuple(RowOrigin(i, "orig") for i in range(m)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.a_lower.shape


@dataclass(frozen=True, eq=False)
class CertainLinearSystem:
    """Interval-free rows, all with relation <=."""

    variables: tuple[str, ...]
    a: np.ndarray
    b: np.ndarray
    dom_lower: np.ndarray
    dom_upper: np.ndarray
    provenance: tuple[RowOrigin, ...] = ()

    def rows(self) -> list[tuple[np.ndarray, str, float]]:
        return [(self.a[i], "<=", float(self.b[i])) for i in range(self.a.shape[0])]


@dataclass(frozen=True)
class Box:
    """Per-variable closed bounds; ``empty`` flags an inconsistent system."""

    variables: tuple[str, ...]
    lower: tuple[float, ...] = ()
    upper: tuple[float, ...] = ()
    empty: bool = False

    def __post_init__(self):
        if not self.empty:
            for lo, hi in zip(self.lower, self.upper):
                if lo > hi:
                    raise TransformError("box lower bound exceeds upper bound")

    def as_dict(self) -> dict[str, tuple[float, float]]:
        return {v: (lo, hi) for v, lo, hi in zip(self.variables, self.lower, self.upper)}

    def contains(self, point: Sequence[float], tol: float = 0.0) -> bool:
        if self.empty:
            return False
        return all(lo - tol <= x <= hi + tol
                   for x, lo, hi in zip(point, self.lower, self.upper))

    def encloses(self, other: "Box", tol: float = 0.0) -> bool:
        if other.empty:
            return True
        if self.empty:
            return False
        return all(slo - tol <= olo and ohi <= shi + tol
                   for slo, shi, olo, ohi in
                   zip(self.lower, self.upper, other.lower, other.upper))


def _coef_interval(c: Coef, sets: Mapping[str, UncertaintySet]) -> tuple[float, float]:
    if c.is_const:
        return c.value, c.value
    u = sets[c.param]
    if u.is_finite:
        if not u.is_singleton:
            raise TransformError(
                f"parameter {c.param!r} has a finite non-singleton set; "
                "use the enumeration form or the parameter-monotone transform")
        return u.values[0], u.values[0]
    return u.lo, u.hi


def ucsp_to_ils(p: UncertainCSP) -> IntervalLinearSystem:
    """Convert a linear problem with interval/singleton parameters to an ILS.

    Each constraint becomes one row; each parameter occurrence becomes its
    uncertainty interval and constants become degenerate intervals.  A
    parameter may occur at most once per constraint (entries of one row are
    independent); a parameter shared between constraints is modelled by
    independent entries, which keeps the result correct but may widen it.
    """
    variables = tuple(p.variables)
    index = {v: j for j, v in enumerate(variables)}
    for v, dom in p.variables.items():
        if dom.is_finite:
            raise TransformError(f"variable {v!r} has a finite domain; "
                                 "the interval path needs real interval domains")
    m, n = len(p.constraints), len(variables)
    a_lo = np.zeros((m, n))
    a_hi = np.zeros((m, n))
    b_lo = np.zeros(m)
    b_hi = np.zeros(m)
    relations = []
    for i, c in enumerate(p.constraints):
        if not isinstance(c, LinearConstraint):
            raise TransformError("relational constraint cannot enter the interval path")
        seen_params: set[str] = set()
        for k, var in c.terms:
            if not k.is_const:
                if k.param in seen_params:
                    raise TransformError(
                        f"parameter {k.param!r} occurs twice in one constraint")
                seen_params.add(k.param)
            lo, hi = _coef_interval(k, p.parameters)
            j = index[var]
            a_lo[i, j] += lo
            a_hi[i, j] += hi
        if not c.rhs.is_const and c.rhs.param in seen_params:
            raise TransformError(
                f"parameter {c.rhs.param!r} occurs on both sides of one constraint")
        b_lo[i], b_hi[i] = _coef_interval(c.rhs, p.parameters)
        relations.append(c.relation)
    dom_lo = np.array([p.variables[v].lo for v in variables])
    dom_hi = np.array([p.variables[v].hi for v in variables])
    return IntervalLinearSystem(
        variables=variables, a_lower=a_lo, a_upper=a_hi,
        relations=tuple(relations), b_lower=b_lo, b_upper=b_hi,
        dom_lower=dom_lo, dom_upper=dom_hi)


def rewrite_equalities(ils: IntervalLinearSystem) -> IntervalLinearSystem:
    """Replace each equality row by a (>=, <=) pair; other rows pass through."""
    a_lo, a_hi, b_lo, b_hi, rels, origin = [], [], [], [], [], []
    for i, rel in enumerate(ils.relations):
        src = ils.provenance[i].source
        if rel == "=":
            for part, r in (("ge", ">="), ("le", "<=")):
                a_lo.append(ils.a_lower[i])
                a_hi.append(ils.a_upper[i])
                b_lo.append(ils.b_lower[i])
                b_hi.append(ils.b_upper[i])
                rels.append(r)
                origin.append(RowOrigin(src, part))
        else:
            a_lo.append(ils.a_lower[i])
            a_hi.append(ils.a_upper[i])
            b_lo.append(ils.b_lower[i])
            b_hi.append(ils.b_upper[i])
            rels.append(rel)
            origin.append(ils.provenance[i])
    return IntervalLinearSystem(
        variables=ils.variables,
        a_lower=np.array(a_lo), a_upper=np.array(a_hi),
        relations=tuple(rels),
        b_lower=np.array(b_lo), b_upper=np.array(b_hi),
        dom_lower=ils.dom_lower, dom_upper=ils.dom_upper,
        provenance=tuple(origin))


def is_poli(ils: IntervalLinearSystem) -> bool:
    """True iff every variable domain lies in the non-negative reals."""
    return bool(np.all(ils.dom_lower >= 0))


def _cet(ils: IntervalLinearSystem, weakest: bool) -> CertainLinearSystem:
    if not is_poli(ils):
        raise TransformError("transform requires non-negative variable domains")
    a_rows, b_vals, origin = [], [], []
    for i, rel in enumerate(ils.relations):
        if rel == "=":
            raise TransformError("equality row present; run rewrite_equalities first")
        le = rel in ("<", "<=")
        if weakest:
            # keep every point some realisation admits
            a = ils.a_lower[i] if le else -ils.a_upper[i]
            b = ils.b_upper[i] if le else -ils.b_lower[i]
        else:
            # keep only points every realisation admits
            a = ils.a_upper[i] if le else -ils.a_lower[i]
            b = ils.b_lower[i] if le else -ils.b_upper[i]
        if math.isinf(b):  # b == +inf: row holds vacuously
            continue
        a_rows.append(a)
        b_vals.append(b)
        origin.append(ils.provenance[i])
    n = ils.shape[1]
    a_arr = np.array(a_rows) if a_rows else np.zeros((0, n))
    return CertainLinearSystem(
        variables=ils.variables, a=a_arr, b=np.array(b_vals),
        dom_lower=ils.dom_lower, dom_upper=ils.dom_upper,
        provenance=tuple(origin))


def cet_poli(ils: IntervalLinearSystem) -> CertainLinearSystem:
    """Certain rows whose solution set over the positive orthant equals the
    union over realisations of the input rows' solution sets.

    Rows with relation < or <= keep their entrywise lower matrix bounds and
    upper rhs bound; > or >= rows are negated and treated symmetrically.
    Equality rows must have been rewritten beforehand.
    """
    return _cet(ils, weakest=True)


def cet_robust(ils: IntervalLinearSystem) -> CertainLinearSystem:
    """Certain rows satisfied exactly by points valid under every realisation
    (the intersection counterpart of cet_poli)."""
    return _cet(ils, weakest=False)


def interval_hull(sys: CertainLinearSystem) -> Box:
    """Tight per-variable bounds of the system intersected with its domains.

    Two LP solves per variable; an infeasible system yields the empty box and
    an unbounded direction yields an infinite bound.  The 2n solves share one
    phase-1 basis but are otherwise independent.
    """
    n = len(sys.variables)
    objectives = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        objectives.append((e.copy(), False))
        objectives.append((e, True))
    outs = lp.solve_many(sys.rows(), objectives,
                         lower=sys.dom_lower, upper=sys.dom_upper)
    if any(o.status == "infeasible" for o in outs):
        return Box(variables=sys.variables, empty=True)
    lower, upper = [], []
    for j in range(n):
        mn, mx = outs[2 * j], outs[2 * j + 1]
        lower.append(-INF if mn.status == "unbounded" else mn.value)
        upper.append(INF if mx.status == "unbounded" else mx.value)
    return Box(variables=sys.variables, lower=tuple(lower), upper=tuple(upper))


def clamp_to_box(sys: CertainLinearSystem, box: Box) -> CertainLinearSystem:
    """The same rows with domains replaced by the box (idempotence checks)."""
    if box.empty:
        raise TransformError("cannot clamp to an empty box")
    return CertainLinearSystem(
        variables=sys.variables, a=sys.a, b=sys.b,
        dom_lower=np.array(box.lower), dom_upper=np.array(box.upper),
        provenance=sys.provenance)


def full_pipeline_hull(p: UncertainCSP) -> Box:
    """ucsp_to_ils -> rewrite_equalities -> cet_poli -> interval_hull."""
    return interval_hull(cet_poli(rewrite_equalities(ucsp_to_ils(p))))


# ---------------------------------------------------------------------------
# discrete single-parameter transform


def _solution_sets_per_value(
    c: UncertainConstraint,
    pid: str,
    variables: Mapping[str, Domain],
    sets: Mapping[str, UncertaintySet],
) -> dict[float, frozenset[Solution]]:
    """Solution set of c for each value of parameter ``pid``, quantifying any
    other parameters existentially."""
    u = sets[pid]
    if not u.is_finite:
        raise InfiniteDomainError(f"uncertainty set of {pid!r} is not finite")
    out = {}
    for value in u.members():
        pinned = dict(sets)
        pinned[pid] = UncertaintySet.singleton(value)
        out[value] = complete_solution_set(c, variables, pinned)
    return out


def _containment_chain(
    per_value: dict[float, frozenset[Solution]]
) -> tuple[float, ...] | None:
    order = sorted(per_value, key=lambda v: (len(per_value[v]), v))
    for a, b in zip(order, order[1:]):
        if not per_value[a] <= per_value[b]:
            return None
    return tuple(order)


def is_parameter_monotone(
    c: UncertainConstraint,
    variables: Mapping[str, Domain],
    sets: Mapping[str, UncertaintySet],
) -> tuple[float, ...] | None:
    """An ordering of the (single) parameter's values under which each value's
    realised constraint implies the next one's, or None if no ordering exists.

    Computed by building per-value solution sets over the finite domains and
    testing chain containment.  The last element realises the weakest
    constraint.
    """
    if len(c.params) != 1:
        raise TransformError("constraint must have exactly one parameter")
    for v in c.scope:
        if not variables[v].is_finite:
            raise InfiniteDomainError(f"domain of {v!r} is not finite")
    return _containment_chain(
        _solution_sets_per_value(c, c.params[0], variables, sets))


def _extremal_candidate(c: UncertainConstraint, pid: str,
                        variables: Mapping[str, Domain],
                        sets: Mapping[str, UncertaintySet]) -> float | None:
    """Extremal member of the set expected to realise the weakest constraint,
    for linear rows over non-negative domains."""
    if not isinstance(c, LinearConstraint) or c.relation == "=":
        return None
    u = sets[pid]
    le = c.relation in ("<", "<=")
    if not c.rhs.is_const and c.rhs.param == pid:
        return u.values[-1] if le else u.values[0]
    for k, var in c.terms:
        if not k.is_const and k.param == pid:
            if not variables[var].is_nonneg:
                return None
            return u.values[0] if le else u.values[-1]
    return None


def cet_parameter_monotone(
    c: UncertainConstraint,
    variables: Mapping[str, Domain],
    sets: Mapping[str, UncertaintySet],
) -> UncertainConstraint:
    """Realise every parameter of c at the top of its monotone ordering.

    Each parameter is handled in turn with the others quantified
    existentially (term-wise extremal selection for linear rows over
    non-negative variables).  The result is a certain constraint whose
    solution set equals the full closure of c; raises NonMonotoneError when
    some parameter admits no ordering.
    """
    for v in c.scope:
        if not variables[v].is_finite:
            raise InfiniteDomainError(f"domain of {v!r} is not finite")
    chosen: dict[str, float] = {}
    for pid in sorted(c.params):
        per_value = _solution_sets_per_value(c, pid, variables, sets)
        order = _containment_chain(per_value)
        if order is None:
            raise NonMonotoneError(
                f"no monotone ordering exists for parameter {pid!r}")
        top_set = per_value[order[-1]]
        tops = sorted(v for v in per_value if per_value[v] == top_set)
        candidate = _extremal_candidate(c, pid, variables, sets)
        chosen[pid] = candidate if candidate in tops else tops[0]
    return realize_constraint(c, chosen)


# ---------------------------------------------------------------------------
# one interval row over domains spanning negative values


@dataclass(frozen=True)
class OrthantPiece:
    """One certain inequality valid on an axis-aligned part of the domain box.

    ``signs`` records, per variable, '+', '-' or '*' (no split needed); the
    region bounds are closed on both sides, so pieces overlap on the
    coordinate hyperplanes where the choice of coefficient does not matter.
    """

    variables: tuple[str, ...]
    signs: tuple[str, ...]
    region_lower: tuple[float, ...]
    region_upper: tuple[float, ...]
    coeffs: tuple[float, ...]
    rhs: float

    def contains_point(self, x: Sequence[float], tol: float = 1e-9) -> bool:
        inside = all(lo - tol <= xi <= hi + tol for xi, lo, hi in
                     zip(x, self.region_lower, self.region_upper))
        if not inside:
            return False
        return float(np.dot(self.coeffs, x)) <= self.rhs + tol


def closure_single_row_general(
    variables: tuple[str, ...],
    a_lower: Sequence[float],
    a_upper: Sequence[float],
    relation: str,
    b_lower: float,
    b_upper: float,
    dom_lower: Sequence[float],
    dom_upper: Sequence[float],
) -> tuple[OrthantPiece, ...]:
    """Decompose one interval inequality into certain per-orthant pieces.

    The union of the pieces is the set of points some realisation admits.
    Variables are split by sign only where the coefficient interval is
    non-degenerate and the domain actually spans both signs, so a fully
    certain row comes back as a single piece.  Both region boundaries are
    closed.  Equality rows are rejected (rewrite them first); >= rows are
    negated into <= form.
    """
    if relation == "=":
        raise TransformError("equality row: rewrite into inequalities first")
    a_lo = np.asarray(a_lower, dtype=float)
    a_hi = np.asarray(a_upper, dtype=float)
    d_lo = np.asarray(dom_lower, dtype=float)
    d_hi = np.asarray(dom_upper, dtype=float)
    if relation in (">", ">="):
        a_lo, a_hi = -a_hi, -a_lo
        b_lower, b_upper = -b_upper, -b_lower
    rhs = float(b_upper)

    options: list[list[str]] = []
    for j in range(len(variables)):
        degenerate = a_lo[j] == a_hi[j]
        if degenerate or d_lo[j] >= 0:
            options.append(["+" if not degenerate else "*"])
        elif d_hi[j] <= 0:
            options.append(["-"])
        else:
            options.append(["+", "-"])

    pieces = []
    for signs in itertools.product(*options):
        coeffs = np.empty(len(variables))
        r_lo = d_lo.copy()
        r_hi = d_hi.copy()
        for j, s in enumerate(signs):
            if s == "-":
                coeffs[j] = a_hi[j]
                r_hi[j] = min(r_hi[j], 0.0)
            elif s == "+":
                coeffs[j] = a_lo[j]
                r_lo[j] = max(r_lo[j], 0.0)
            else:  # degenerate coefficient: sign of x is irrelevant
                coeffs[j] = a_lo[j]
        pieces.append(OrthantPiece(
            variables=variables, signs=signs,
            region_lower=tuple(r_lo), region_upper=tuple(r_hi),
            coeffs=tuple(coeffs), rhs=rhs))
    return tuple(pieces)


def pieces_cover(pieces: Sequence[OrthantPiece], x: Sequence[float],
                 tol: float = 1e-9) -> bool:
    return any(p.contains_point(x, tol) for p in pieces)
