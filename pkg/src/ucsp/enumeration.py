"""Enumeration resolution form: iterate realisations, solve each certain
problem by backtracking, assemble closures with support information.

Everything here is deterministic: realisations are produced in lexicographic
order over sorted parameter ids, the backtracking solver assigns variables in
id order and values in ascending domain order, and all tie-breaks are
lexicographic.  Realised problems are independent of each other, so the
per-realisation solves may be fanned out as long as aggregation preserves
this ordering; the support table is the only join point.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .model import (
    Closure,
    Domain,
    InfiniteDomainError,
    LinearConstraint,
    ModelError,
    Realization,
    Solution,
    TableConstraint,
    UncertainCSP,
    UncertaintySet,
    evaluate_certain,
    realize,
    solution_from,
)
from .transform import Box, TransformError

DEFAULT_REALISATION_CAP = 10 ** 6
DEFAULT_COVER_CAP = 20


class CapExceededError(ModelError):
    """The instance is larger than the configured enumeration cap."""


@dataclass(frozen=True)
class SupportTable:
    """Realisations, their good/bad status, solutions, and the cover matrix.

    A realisation is good iff some solution covers it; every listed solution
    covers at least one realisation.
    """

    realisations: tuple[Realization, ...]
    status: tuple[str, ...]
    solutions: tuple[Solution, ...]
    cover: Mapping[Solution, frozenset[int]]

    @property
    def good(self) -> frozenset[int]:
        return frozenset(i for i, s in enumerate(self.status) if s == "good")


def realizations(p: UncertainCSP,
                 cap: int = DEFAULT_REALISATION_CAP) -> list[dict[str, float]]:
    """All realisations, ordered lexicographically over sorted parameter ids
    with each set in ascending value order.  Zero parameters give exactly one
    empty realisation."""
    pids = sorted(p.parameters)
    pools = []
    total = 1
    for pid in pids:
        u = p.parameters[pid]
        if not u.is_finite:
            raise InfiniteDomainError(
                f"uncertainty set of {pid!r} is an interval; enumeration needs finite sets")
        pools.append(u.members())
        total *= len(u.members())
        if total > cap:
            raise CapExceededError(f"realisation count exceeds cap {cap}")
    return [dict(zip(pids, combo)) for combo in itertools.product(*pools)]


def solve_realized(csp: UncertainCSP) -> tuple[Solution, ...]:
    """All solutions of a certain finite problem by backtracking search.

    Variables are assigned in id order, values in ascending domain order; a
    constraint is checked as soon as its scope is fully assigned.
    """
    if any(not u.is_singleton for u in csp.parameters.values()):
        raise ModelError("solve_realized needs a certain problem")
    singles = {pid: u.values[0] for pid, u in csp.parameters.items()}
    constraints = (tuple(csp.constraints) if not singles
                   else tuple(realize(csp, singles).constraints))

    var_ids = sorted(csp.variables)
    for v in var_ids:
        if not csp.variables[v].is_finite:
            raise InfiniteDomainError(f"domain of {v!r} is not finite")
    position = {v: i for i, v in enumerate(var_ids)}
    # schedule each constraint at the latest variable of its scope
    due: list[list] = [[] for _ in var_ids]
    trivial = []
    for c in constraints:
        if c.scope:
            due[max(position[v] for v in c.scope)].append(c)
        else:
            trivial.append(c)
    if not all(evaluate_certain(c, {}) for c in trivial):
        return ()

    solutions: list[Solution] = []
    assignment: dict[str, float] = {}

    def backtrack(i: int) -> None:
        if i == len(var_ids):
            solutions.append(solution_from(assignment))
            return
        var = var_ids[i]
        for value in csp.variables[var].members():
            assignment[var] = value
            if all(evaluate_certain(c, assignment) for c in due[i]):
                backtrack(i + 1)
            del assignment[var]

    backtrack(0)
    return tuple(solutions)


def full_closure(p: UncertainCSP,
                 cap: int = DEFAULT_REALISATION_CAP) -> tuple[Closure, SupportTable]:
    """Union of the solution sets of all good realisations, with support."""
    reals = realizations(p, cap)
    cover: dict[Solution, set[int]] = {}
    status = []
    for i, r in enumerate(reals):
        sols = solve_realized(realize(p, r))
        status.append("good" if sols else "bad")
        for s in sols:
            cover.setdefault(s, set()).add(i)
    solutions = tuple(sorted(cover))
    table = SupportTable(
        realisations=tuple(reals),
        status=tuple(status),
        solutions=solutions,
        cover={s: frozenset(ix) for s, ix in cover.items()},
    )
    closure = Closure(kind="full", solutions=solutions,
                      support=dict(table.cover))
    return closure, table


def robust_set(p: UncertainCSP, cap: int = DEFAULT_REALISATION_CAP) -> Closure:
    """Solutions covering every good realisation; may be empty."""
    _, table = full_closure(p, cap)
    good = table.good
    sols = tuple(s for s in table.solutions if table.cover[s] >= good)
    return Closure(kind="robust-set", solutions=sols,
                   support={s: table.cover[s] for s in sols})


@dataclass(frozen=True)
class MostRobust:
    """All coverage maximizers (lexicographically smallest first) and their
    shared coverage count; empty when the closure is empty."""

    solutions: tuple[Solution, ...]
    coverage: int


def most_robust_solution(p: UncertainCSP,
                         cap: int = DEFAULT_REALISATION_CAP) -> MostRobust:
    _, table = full_closure(p, cap)
    if not table.solutions:
        return MostRobust(solutions=(), coverage=0)
    best = max(len(table.cover[s]) for s in table.solutions)
    winners = tuple(s for s in table.solutions if len(table.cover[s]) == best)
    return MostRobust(solutions=winners, coverage=best)


@dataclass(frozen=True)
class CoveringSets:
    """Minimum-cardinality covers of the good realisations.

    ``exact`` is False when the greedy fallback ran; then ``covers`` holds a
    single cover that is not guaranteed minimal.
    """

    covers: tuple[tuple[Solution, ...], ...]
    size: int
    exact: bool


def covering_sets_minimal(p: UncertainCSP,
                          cap: int = DEFAULT_REALISATION_CAP,
                          exact_cap: int = DEFAULT_COVER_CAP) -> CoveringSets:
    """All covering sets of minimum cardinality, by breadth-first search over
    solution subsets ordered by size.

    Beyond ``exact_cap`` good realisations a greedy heuristic runs instead,
    flagged not guaranteed minimal.  Every good realisation is coverable by
    construction (it has a solution), which is asserted.
    """
    _, table = full_closure(p, cap)
    good = table.good
    for i in good:
        assert any(i in table.cover[s] for s in table.solutions), \
            "good realisation without any covering solution"
    if not good:
        return CoveringSets(covers=((),), size=0, exact=True)

    solutions = table.solutions
    if len(good) > exact_cap:
        uncovered = set(good)
        chosen: list[Solution] = []
        while uncovered:
            best = min(solutions,
                       key=lambda s: (-len(table.cover[s] & uncovered), s))
            gain = table.cover[best] & uncovered
            if not gain:
                break
            chosen.append(best)
            uncovered -= gain
        return CoveringSets(covers=(tuple(sorted(chosen)),),
                            size=len(chosen), exact=False)

    for size in range(1, len(solutions) + 1):
        found = []
        for subset in itertools.combinations(solutions, size):
            covered: set[int] = set()
            for s in subset:
                covered |= table.cover[s]
            if covered >= good:
                found.append(subset)
        if found:
            return CoveringSets(covers=tuple(sorted(found)), size=size, exact=True)
    raise AssertionError("unreachable: the full solution pool covers all good realisations")


def promote_parameters(p: UncertainCSP) -> UncertainCSP:
    """The classical problem obtained by turning parameters into variables.

    Finite sets become variable domains and each constraint is tabulated by
    direct evaluation over its joint (variables, parameters) scope.  The
    result is satisfiable iff the original has a potential solution.
    """
    variables = dict(p.variables)
    for pid, u in p.parameters.items():
        if not u.is_finite:
            raise InfiniteDomainError("promotion needs finite uncertainty sets")
        if any(v != int(v) for v in u.members()):
            raise ModelError("promotion needs integer-valued sets")
        variables[pid] = Domain.int_set(int(v) for v in u.members())
    constraints = []
    for c in p.constraints:
        scope = tuple(c.scope) + tuple(sorted(c.params))
        pools = [variables[x].members() for x in scope]
        nv = len(c.scope)
        allowed = set()
        for combo in itertools.product(*pools):
            env = dict(zip(scope, combo))
            realised = _bind_params(c, {q: env[q] for q in c.params})
            if evaluate_certain(realised, env):
                allowed.add(tuple(float(x) for x in combo))
        constraints.append(TableConstraint(scope, (), frozenset(allowed)))
    return UncertainCSP(variables=variables, parameters={}, constraints=tuple(constraints))


def _bind_params(c, values: Mapping[str, float]):
    from .model import realize_constraint
    return realize_constraint(c, values)


def closure_box(closure: Closure, variables: Sequence[str]) -> Box:
    """Bounding box of a finite closure's solutions."""
    if not closure.solutions:
        return Box(variables=tuple(variables), empty=True)
    cols = {v: [] for v in variables}
    for s in closure.solutions:
        d = dict(s)
        for v in variables:
            cols[v].append(d[v])
    return Box(variables=tuple(variables),
               lower=tuple(min(cols[v]) for v in variables),
               upper=tuple(max(cols[v]) for v in variables))


def hull_oracle(p: UncertainCSP, step: float,
                param_samples: int = 11,
                max_vars: int = 3, max_params: int = 3) -> Box:
    """Grid-sampling bounding box of the points some realisation admits.

    Discretizes every variable domain with the given step and every
    uncertainty interval with ``param_samples`` points including both
    endpoints.  A grid point passes a row when some sampled realisation of
    that row admits it; since rows are linear and per-term parameters enter
    one entry each, the per-row extremes over the sampled grid are the sums
    of per-term extremes, and equality rows admit a point when zero lies
    between those extremes.  Independent of the transform path.
    """
    if len(p.variables) > max_vars:
        raise CapExceededError(f"oracle capped at {max_vars} variables")
    if len(p.parameters) > max_params:
        raise CapExceededError(f"oracle capped at {max_params} parameters")
    occurrences: dict[str, int] = {}
    for c in p.constraints:
        if not isinstance(c, LinearConstraint):
            raise TransformError("oracle handles linear constraints only")
        for coef, _ in c.terms:
            if not coef.is_const:
                occurrences[coef.param] = occurrences.get(coef.param, 0) + 1
        if not c.rhs.is_const:
            occurrences[c.rhs.param] = occurrences.get(c.rhs.param, 0) + 1
    if any(n > 1 for n in occurrences.values()):
        raise TransformError("oracle assumes each parameter occurs in one entry")

    var_ids = tuple(p.variables)
    axes = []
    for v in var_ids:
        dom = p.variables[v]
        if dom.is_finite or math.isinf(dom.lo) or math.isinf(dom.hi):
            raise TransformError(f"oracle needs bounded interval domains ({v!r})")
        count = int(round((dom.hi - dom.lo) / step))
        axes.append(np.linspace(dom.lo, dom.lo + count * step, count + 1))
    grids = np.meshgrid(*axes, indexing="ij")

    def coef_samples(coef) -> np.ndarray:
        if coef.is_const:
            return np.array([coef.value])
        u = p.parameters[coef.param]
        if u.is_finite:
            return np.array(u.members())
        return np.linspace(u.lo, u.hi, param_samples)

    feasible = np.ones(grids[0].shape, dtype=bool)
    for c in p.constraints:
        lo = np.zeros(grids[0].shape)
        hi = np.zeros(grids[0].shape)
        for coef, var in c.terms:
            samples = coef_samples(coef)
            x = grids[var_ids.index(var)]
            contrib = samples.reshape((-1,) + (1,) * x.ndim) * x
            lo += contrib.min(axis=0)
            hi += contrib.max(axis=0)
        rs = coef_samples(c.rhs)
        lo -= rs.max()
        hi -= rs.min()
        if c.relation in ("<", "<="):
            ok = lo <= 0
        elif c.relation in (">", ">="):
            ok = hi >= 0
        else:
            ok = (lo <= 0) & (hi >= 0)
        feasible &= ok

    if not feasible.any():
        return Box(variables=var_ids, empty=True)
    lower, upper = [], []
    for j, g in enumerate(grids):
        vals = g[feasible]
        lower.append(float(vals.min()))
        upper.append(float(vals.max()))
    return Box(variables=var_ids, lower=tuple(lower), upper=tuple(upper))
