"""Core data model: constraint problems whose coefficients may be uncertain.

A problem couples ordinary decision variables with *parameters*, each ranging
over a declared set of possible values (a finite value set or a closed real
interval).  Fixing every parameter to one of its values yields an ordinary,
certain problem; the solution concept for the uncertain problem is a
*closure*: a set of assignments each of which solves at least one such fixing.

All types here are immutable value objects once constructed and may be shared
freely between threads; the operations are pure functions.
"""

from __future__ import annotations

import ast
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence, Union

INF = math.inf

RELATIONS = ("<", "<=", "=", ">=", ">")


class ModelError(ValueError):
    """Malformed model data."""


class UnknownIdError(ModelError):
    """A constraint references an undeclared variable or parameter."""


class MembershipError(ModelError):
    """A value assigned to a parameter lies outside its uncertainty set."""


class PartialAssignmentError(ModelError):
    """An operation needing a total assignment received a partial one."""


class InfiniteDomainError(ModelError):
    """An enumeration-based operation received an infinite domain or set."""


def _check_interval(lo: float, hi: float) -> None:
    if math.isnan(lo) or math.isnan(hi):
        raise ModelError("interval bound is NaN")
    if lo > hi:
        raise ModelError(f"empty interval [{lo}, {hi}]")


@dataclass(frozen=True)
class Domain:
    """A variable domain: a finite set of integers or a closed real interval.

    Interval bounds are extended reals; ``hi`` may be +inf and ``lo`` -inf.
    """

    kind: str  # "int_set" | "interval"
    values: tuple[int, ...] = ()
    lo: float = 0.0
    hi: float = 0.0

    @staticmethod
    def int_set(values: Iterable[int]) -> "Domain":
        vals = tuple(sorted(set(int(v) for v in values)))
        if not vals:
            raise ModelError("finite domain must be non-empty")
        return Domain("int_set", values=vals)

    @staticmethod
    def int_range(lo: int, hi: int) -> "Domain":
        return Domain.int_set(range(lo, hi + 1))

    @staticmethod
    def interval(lo: float, hi: float) -> "Domain":
        _check_interval(lo, hi)
        return Domain("interval", lo=float(lo), hi=float(hi))

    @property
    def is_finite(self) -> bool:
        return self.kind == "int_set"

    @property
    def is_nonneg(self) -> bool:
        """Positive-orthant flag: every member is >= 0."""
        if self.is_finite:
            return self.values[0] >= 0
        return self.lo >= 0

    def members(self) -> tuple[int, ...]:
        if not self.is_finite:
            raise InfiniteDomainError("interval domain cannot be enumerated")
        return self.values

    def contains(self, v: float) -> bool:
        if self.is_finite:
            return v in self.values
        return self.lo <= v <= self.hi

    def bounds(self) -> tuple[float, float]:
        if self.is_finite:
            return float(self.values[0]), float(self.values[-1])
        return self.lo, self.hi


@dataclass(frozen=True)
class UncertaintySet:
    """The set of values a parameter may take.

    A singleton set marks a coefficient that is in fact certain.  Finite sets
    enumerate their members; an interval set has infinite cardinality.
    """

    kind: str  # "finite" | "interval"
    values: tuple[float, ...] = ()
    lo: float = 0.0
    hi: float = 0.0

    @staticmethod
    def finite(values: Iterable[float]) -> "UncertaintySet":
        vals = tuple(sorted(set(float(v) for v in values)))
        if not vals:
            raise ModelError("uncertainty set must be non-empty")
        if any(math.isnan(v) or math.isinf(v) for v in vals):
            raise ModelError("finite uncertainty set must hold finite values")
        return UncertaintySet("finite", values=vals)

    @staticmethod
    def singleton(value: float) -> "UncertaintySet":
        return UncertaintySet.finite([value])

    @staticmethod
    def interval(lo: float, hi: float) -> "UncertaintySet":
        _check_interval(lo, hi)
        return UncertaintySet("interval", lo=float(lo), hi=float(hi))

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    @property
    def cardinality(self) -> float:
        if self.is_finite:
            return len(self.values)
        return INF

    @property
    def is_singleton(self) -> bool:
        return self.is_finite and len(self.values) == 1

    def members(self) -> tuple[float, ...]:
        if not self.is_finite:
            raise InfiniteDomainError("interval uncertainty set cannot be enumerated")
        return self.values

    def contains(self, v: float) -> bool:
        if self.is_finite:
            return any(v == m for m in self.values)
        return self.lo <= v <= self.hi

    def bounds(self) -> tuple[float, float]:
        if self.is_finite:
            return self.values[0], self.values[-1]
        return self.lo, self.hi


@dataclass(frozen=True)
class Coef:
    """A linear coefficient: either a numeric constant or a parameter reference."""

    value: float | None = None
    param: str | None = None

    def __post_init__(self):
        if (self.value is None) == (self.param is None):
            raise ModelError("coefficient must be exactly one of constant or parameter")
        if self.value is not None and math.isnan(self.value):
            raise ModelError("coefficient is NaN")

    @staticmethod
    def const(v: float) -> "Coef":
        return Coef(value=float(v))

    @staticmethod
    def ref(param: str) -> "Coef":
        return Coef(param=param)

    @property
    def is_const(self) -> bool:
        return self.value is not None


@dataclass(frozen=True)
class LinearConstraint:
    """sum(coef_k * var_k)  REL  rhs, with coefficients possibly uncertain."""

    terms: tuple[tuple[Coef, str], ...]
    relation: str
    rhs: Coef

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ModelError(f"unknown relation {self.relation!r}")

    @property
    def scope(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for _, v in self.terms:
            seen.setdefault(v)
        return tuple(seen)

    @property
    def params(self) -> tuple[str, ...]:
        out: dict[str, None] = {}
        for c, _ in self.terms:
            if not c.is_const:
                out.setdefault(c.param)
        if not self.rhs.is_const:
            out.setdefault(self.rhs.param)
        return tuple(out)


@dataclass(frozen=True)
class TableConstraint:
    """Relational constraint given extensionally over (variables, parameters)."""

    variables: tuple[str, ...]
    parameters: tuple[str, ...]
    allowed: frozenset[tuple]

    @property
    def scope(self) -> tuple[str, ...]:
        return self.variables

    @property
    def params(self) -> tuple[str, ...]:
        return self.parameters


_EXPR_ALLOWED_CALLS = {"abs": abs, "min": min, "max": max}


def _compile_predicate(source: str) -> Callable[..., bool]:
    """Compile a restricted arithmetic/boolean expression over named values.

    Permits arithmetic, comparisons (including chained), boolean operators and
    the calls abs/min/max.  Anything else is rejected before evaluation.
    """
    tree = ast.parse(source, mode="eval")
    allowed = (
        ast.Expression, ast.BoolOp, ast.And, ast.Or, ast.UnaryOp, ast.Not,
        ast.USub, ast.UAdd, ast.BinOp, ast.Add, ast.Sub, ast.Mult, ast.Div,
        ast.FloorDiv, ast.Mod, ast.Pow, ast.Compare, ast.Eq, ast.NotEq,
        ast.Lt, ast.LtE, ast.Gt, ast.GtE, ast.Name, ast.Load, ast.Constant,
        ast.Call,
    )
    for node in ast.walk(tree):
        if not isinstance(node, allowed):
            raise ModelError(f"disallowed syntax in predicate: {ast.dump(node)[:40]}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _EXPR_ALLOWED_CALLS:
                raise ModelError("only abs/min/max calls are allowed in predicates")
            if node.keywords:
                raise ModelError("keyword arguments are not allowed in predicates")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float, bool)):
            raise ModelError("only numeric constants are allowed in predicates")
    code = compile(tree, "<predicate>", "eval")

    def predicate(**env) -> bool:
        return bool(eval(code, {"__builtins__": {}}, {**_EXPR_ALLOWED_CALLS, **env}))

    return predicate


@dataclass(frozen=True)
class ExprConstraint:
    """Relational constraint given by an arithmetic predicate over its scope.

    ``bound`` records parameter values substituted by realisation; equality
    and hashing use the source text plus bindings so realised constraints
    remain value objects.
    """

    variables: tuple[str, ...]
    parameters: tuple[str, ...]
    source: str
    bound: tuple[tuple[str, float], ...] = ()
    _predicate: Callable[..., bool] | None = field(
        default=None, compare=False, repr=False, hash=False)

    def predicate(self) -> Callable[..., bool]:
        pred = object.__getattribute__(self, "_predicate")
        if pred is None:
            pred = _compile_predicate(self.source)
            object.__setattr__(self, "_predicate", pred)
        return pred

    @property
    def scope(self) -> tuple[str, ...]:
        return self.variables

    @property
    def params(self) -> tuple[str, ...]:
        return self.parameters


UncertainConstraint = Union[LinearConstraint, TableConstraint, ExprConstraint]

#: A realisation fixes every parameter to a single value.
Realization = Mapping[str, float]

#: A solution is a total variable assignment, stored as a sorted tuple of
#: (variable id, value) pairs so it is hashable and orders lexicographically.
Solution = tuple[tuple[str, float], ...]


def solution_from(assignment: Mapping[str, float]) -> Solution:
    return tuple(sorted(assignment.items()))


def is_certain(c: UncertainConstraint, sets: Mapping[str, UncertaintySet]) -> bool:
    """True iff every parameter of the constraint has a singleton set."""
    return all(sets[p].is_singleton for p in c.params)


@dataclass(frozen=True)
class UncertainCSP:
    """Variables with domains, parameters with uncertainty sets, constraints.

    Parameters are mutually independent; a parameter id used by several
    constraints takes one shared value per realisation.
    """

    variables: Mapping[str, Domain]
    parameters: Mapping[str, UncertaintySet]
    constraints: tuple[UncertainConstraint, ...]

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        both = set(self.variables) & set(self.parameters)
        if both:
            raise ModelError(f"ids declared as both variable and parameter: {sorted(both)}")
        for c in self.constraints:
            for v in c.scope:
                if v not in self.variables:
                    raise UnknownIdError(f"undeclared variable {v!r}")
            for p in c.params:
                if p not in self.parameters:
                    raise UnknownIdError(f"undeclared parameter {p!r}")

    @property
    def is_certain(self) -> bool:
        return all(u.is_singleton for u in self.parameters.values())


def _realize_coef(c: Coef, r: Realization) -> Coef:
    if c.is_const:
        return c
    return Coef.const(r[c.param])


def realize_constraint(c: UncertainConstraint, r: Realization) -> UncertainConstraint:
    """Substitute parameter values into one constraint."""
    if isinstance(c, LinearConstraint):
        return LinearConstraint(
            terms=tuple((_realize_coef(k, r), v) for k, v in c.terms),
            relation=c.relation,
            rhs=_realize_coef(c.rhs, r),
        )
    if isinstance(c, TableConstraint):
        nv = len(c.variables)
        vals = tuple(r[p] for p in c.parameters)
        projected = frozenset(t[:nv] for t in c.allowed if t[nv:] == vals)
        return TableConstraint(c.variables, (), projected)
    if isinstance(c, ExprConstraint):
        bound = dict(c.bound)
        bound.update({p: r[p] for p in c.parameters})
        return ExprConstraint(c.variables, (), c.source, tuple(sorted(bound.items())))
    raise ModelError(f"unknown constraint type {type(c)!r}")


def realize(p: UncertainCSP, r: Realization) -> UncertainCSP:
    """The certain problem obtained by fixing every parameter per ``r``.

    ``r`` must be total over the declared parameters and every value must be
    a member of its uncertainty set.
    """
    for pid, u in p.parameters.items():
        if pid not in r:
            raise PartialAssignmentError(f"realisation misses parameter {pid!r}")
        if not u.contains(r[pid]):
            raise MembershipError(f"value {r[pid]!r} outside uncertainty set of {pid!r}")
    for pid in r:
        if pid not in p.parameters:
            raise UnknownIdError(f"unknown parameter {pid!r} in realisation")
    return UncertainCSP(
        variables=p.variables,
        parameters={},
        constraints=tuple(realize_constraint(c, r) for c in p.constraints),
    )


def evaluate_certain(c: UncertainConstraint, v: Mapping[str, float]) -> bool:
    """Evaluate a parameter-free constraint under a total assignment.

    Strict relations are honoured exactly; this is the finite-domain path.
    """
    if c.params:
        raise ModelError("evaluate_certain requires a certain constraint")
    for x in c.scope:
        if x not in v:
            raise PartialAssignmentError(f"assignment misses variable {x!r}")
    if isinstance(c, LinearConstraint):
        lhs = sum(k.value * v[x] for k, x in c.terms)
        return _compare(lhs, c.relation, c.rhs.value)
    if isinstance(c, TableConstraint):
        return tuple(v[x] for x in c.variables) in c.allowed
    if isinstance(c, ExprConstraint):
        env = dict(c.bound)
        env.update({x: v[x] for x in c.variables})
        return c.predicate()(**env)
    raise ModelError(f"unknown constraint type {type(c)!r}")


def _compare(lhs: float, relation: str, rhs: float) -> bool:
    if relation == "<":
        return lhs < rhs
    if relation == "<=":
        return lhs <= rhs
    if relation == "=":
        return lhs == rhs
    if relation == ">=":
        return lhs >= rhs
    if relation == ">":
        return lhs > rhs
    raise ModelError(f"unknown relation {relation!r}")


def satisfies(c: UncertainConstraint, v: Mapping[str, float],
              sets: Mapping[str, UncertaintySet]) -> bool:
    """True iff some values of the constraint's own parameters make it hold.

    This is a local check quantifying only over this constraint's parameters.
    Interval parameters in linear constraints are resolved by exact interval
    evaluation (each parameter's contribution is linear, so extremes occur at
    its endpoints); finite sets are enumerated; relational constraints
    require finite sets.
    """
    for x in c.scope:
        if x not in v:
            raise PartialAssignmentError(f"assignment misses variable {x!r}")
    if not c.params:
        return evaluate_certain(c, v)

    if isinstance(c, (TableConstraint, ExprConstraint)):
        for combo in _finite_combos(c.params, sets):
            if evaluate_certain(realize_constraint(c, combo), v):
                return True
        return False

    # linear: evaluate lhs - rhs as an interval over the parameter box
    base = 0.0
    mult: dict[str, float] = {}
    for k, x in c.terms:
        if k.is_const:
            base += k.value * v[x]
        else:
            mult[k.param] = mult.get(k.param, 0.0) + v[x]
    if c.rhs.is_const:
        base -= c.rhs.value
    else:
        mult[c.rhs.param] = mult.get(c.rhs.param, 0.0) - 1.0

    finite = [(pid, m) for pid, m in sorted(mult.items()) if sets[pid].is_finite]
    ivals = [(pid, m) for pid, m in sorted(mult.items()) if not sets[pid].is_finite]

    for combo in itertools.product(*(sets[pid].members() for pid, _ in finite)):
        val = base + sum(m * w for (_, m), w in zip(finite, combo))
        lo = val
        hi = val
        for pid, m in ivals:
            a, b = sets[pid].lo * m, sets[pid].hi * m
            lo += min(a, b)
            hi += max(a, b)
        if _interval_admits(lo, hi, c.relation):
            return True
    return False


def _interval_admits(lo: float, hi: float, relation: str) -> bool:
    """Can expr in [lo, hi] satisfy ``expr REL 0`` for some attained value?"""
    if relation == "<":
        return lo < 0
    if relation == "<=":
        return lo <= 0
    if relation == "=":
        return lo <= 0 <= hi
    if relation == ">=":
        return hi >= 0
    if relation == ">":
        return hi > 0
    raise ModelError(f"unknown relation {relation!r}")


def _finite_combos(params: Sequence[str], sets: Mapping[str, UncertaintySet]):
    ids = sorted(params)
    pools = [sets[p].members() for p in ids]
    for combo in itertools.product(*pools):
        yield dict(zip(ids, combo))


ConstraintOrConjunction = Union[UncertainConstraint, Sequence[UncertainConstraint]]


def _as_conjunction(c: ConstraintOrConjunction) -> tuple[UncertainConstraint, ...]:
    if isinstance(c, (LinearConstraint, TableConstraint, ExprConstraint)):
        return (c,)
    return tuple(c)


def complete_solution_set(
    constraints: ConstraintOrConjunction,
    variables: Mapping[str, Domain],
    sets: Mapping[str, UncertaintySet],
) -> frozenset[Solution]:
    """Brute-force complete solution set over finite witness domains.

    Parameters shared between conjuncts are quantified jointly: a point is in
    the set iff one realisation of all referenced parameters satisfies every
    conjunct at once.
    """
    conj = _as_conjunction(constraints)
    var_ids = sorted(variables)
    for x in var_ids:
        if not variables[x].is_finite:
            raise InfiniteDomainError(f"domain of {x!r} is not finite")
    pids = sorted({p for c in conj for p in c.params})
    for p in pids:
        if not sets[p].is_finite:
            raise InfiniteDomainError(f"uncertainty set of {p!r} is not finite")

    realized = [
        [realize_constraint(c, combo) for c in conj]
        for combo in _finite_combos(pids, sets)
    ]
    out = set()
    for point in itertools.product(*(variables[x].members() for x in var_ids)):
        v = dict(zip(var_ids, point))
        for batch in realized:
            if all(evaluate_certain(c, v) for c in batch):
                out.add(solution_from(v))
                break
    return frozenset(out)


def subsumes(
    c1: ConstraintOrConjunction,
    c2: ConstraintOrConjunction,
    variables: Mapping[str, Domain],
    sets: Mapping[str, UncertaintySet],
) -> bool:
    """c1 is subsumed by c2: every potential solution of c1 solves c2.

    Decided by brute force over the supplied finite witness domains; this is
    the test oracle for transform correctness, not a production path.
    """
    s1 = complete_solution_set(c1, variables, sets)
    s2 = complete_solution_set(c2, variables, sets)
    return s1 <= s2


@dataclass(frozen=True)
class Closure:
    """A set of solutions, optionally with support and a projected box.

    ``kind`` is one of full, robust-set, most-robust, covering-set,
    projected-box.  ``support`` maps each solution to the indices of the
    realisations it covers; ``box`` holds per-variable closed intervals for
    the projected-box kind.
    """

    kind: str
    solutions: tuple[Solution, ...] = ()
    support: Mapping[Solution, frozenset[int]] | None = None
    box: Mapping[str, tuple[float, float]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "solutions", tuple(sorted(set(self.solutions))))

    @property
    def is_empty(self) -> bool:
        if self.kind == "projected-box":
            return self.box is None
        return not self.solutions
