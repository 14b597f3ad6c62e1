"""Core MIP model data structures and interval reasoning primitives.

A model is a list of bounded variables plus two-sided linear rows
``lhs <= sum(a_i * x_i) <= rhs``.  Everything downstream (detection,
propagation, search, verification) works on these objects and on
:class:`DomainBox`, a mutable bounds workspace detached from the model.

Numeric policy: plain floats with ``math.inf`` sentinels, feasibility and
integrality tolerance ``1e-6``, coefficients below ``1e-9`` never divided by.
Integer bounds are always rounded inward when tightened.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, NamedTuple, Sequence

INF = math.inf
FEAS_TOL = 1e-6
INT_TOL = 1e-6
COEFF_FLOOR = 1e-9


class Integrality(Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer"
    BINARY = "binary"


@dataclass(frozen=True, slots=True)
class Variable:
    """A decision variable; ``id`` is its dense column index in the model."""

    id: int
    name: str
    lower: float
    upper: float
    integrality: Integrality = Integrality.CONTINUOUS

    def __post_init__(self) -> None:
        if self.integrality is Integrality.BINARY:
            if self.lower < -0.0 or self.upper > 1.0:
                raise ValueError(
                    f"binary variable {self.name!r} must have bounds within [0, 1], "
                    f"got [{self.lower}, {self.upper}]"
                )

    @property
    def is_integer(self) -> bool:
        return self.integrality is not Integrality.CONTINUOUS


@dataclass(frozen=True, slots=True)
class LinearRow:
    """A two-sided linear row.  Equality rows have ``lhs == rhs``."""

    id: int
    name: str
    terms: tuple[tuple[int, float], ...]
    lhs: float
    rhs: float

    def __post_init__(self) -> None:
        if self.lhs > self.rhs:
            raise ValueError(f"row {self.name!r}: lhs {self.lhs} > rhs {self.rhs}")
        seen = set()
        cleaned = []
        for var, coeff in self.terms:
            if var in seen:
                raise ValueError(f"row {self.name!r}: duplicate variable id {var}")
            seen.add(var)
            if coeff != 0.0:
                cleaned.append((var, float(coeff)))
        cleaned.sort()  # canonical order, term order carries no meaning
        object.__setattr__(self, "terms", tuple(cleaned))

    @property
    def is_equality(self) -> bool:
        return self.lhs == self.rhs

    def support(self) -> tuple[int, ...]:
        return tuple(var for var, _ in self.terms)


class MipModel:
    """Immutable-after-construction container for variables, rows, objective.

    The objective is stored in minimization form; ``objective_sense`` keeps
    the declared sense so writers can restore it.
    """

    __slots__ = ("name", "variables", "rows", "objective", "objective_sense")

    def __init__(
        self,
        variables: Sequence[Variable],
        rows: Sequence[LinearRow],
        objective: Sequence[tuple[int, float]] = (),
        objective_sense: str = "min",
        name: str = "model",
    ) -> None:
        variables = tuple(variables)
        for idx, var in enumerate(variables):
            if var.id != idx:
                raise ValueError(f"variable {var.name!r} has id {var.id}, expected {idx}")
        n = len(variables)
        rows = tuple(rows)
        for idx, row in enumerate(rows):
            if row.id != idx:
                raise ValueError(f"row {row.name!r} has id {row.id}, expected {idx}")
            for var, _ in row.terms:
                if not 0 <= var < n:
                    raise ValueError(f"row {row.name!r} references unknown variable {var}")
        if objective_sense not in ("min", "max"):
            raise ValueError(f"objective sense must be 'min' or 'max', got {objective_sense!r}")
        for var, _ in objective:
            if not 0 <= var < n:
                raise ValueError(f"objective references unknown variable {var}")
        self.name = name
        self.variables = variables
        self.rows = rows
        self.objective = tuple(
            sorted((v, float(c)) for v, c in objective if c != 0.0)
        )
        self.objective_sense = objective_sense

    @property
    def flagged_infeasible(self) -> bool:
        """True when some variable was declared with crossing bounds."""
        return any(v.lower > v.upper for v in self.variables)

    def variable_by_name(self, name: str) -> Variable:
        for var in self.variables:
            if var.name == name:
                return var
        raise KeyError(name)

    def row_by_name(self, name: str) -> LinearRow:
        for row in self.rows:
            if row.name == name:
                return row
        raise KeyError(name)

    def binary_mask(self) -> list[bool]:
        return [v.integrality is Integrality.BINARY for v in self.variables]


def models_equal(a: MipModel, b: MipModel) -> bool:
    """Structural equality: same variables, rows, objective, sense, in order."""
    if len(a.variables) != len(b.variables) or len(a.rows) != len(b.rows):
        return False
    for va, vb in zip(a.variables, b.variables):
        if (va.name, va.lower, va.upper, va.integrality) != (
            vb.name,
            vb.lower,
            vb.upper,
            vb.integrality,
        ):
            return False
    for ra, rb in zip(a.rows, b.rows):
        if (ra.name, ra.lhs, ra.rhs, ra.terms) != (rb.name, rb.lhs, rb.rhs, rb.terms):
            return False
    return a.objective == b.objective and a.objective_sense == b.objective_sense


class RowActivity(NamedTuple):
    min_activity: float
    max_activity: float


@dataclass(frozen=True, slots=True)
class BoundChange:
    var: int
    which: str  # "lb" or "ub"
    old: float
    new: float


@dataclass(slots=True)
class PropagationOutcome:
    """Result of one or more propagation calls.

    ``cutoff`` means the reduced box is empty (no feasible point survives).
    Counters follow the benchmark diagnostics: ``calls`` counts propagator
    invocations, ``domain_reductions`` counts recorded bound changes,
    ``cutoffs`` counts invocations that ended in a cutoff, ``prop_time`` is
    wall time spent inside propagators.
    """

    bound_changes: list[BoundChange] = field(default_factory=list)
    cutoff: bool = False
    calls: int = 0
    domain_reductions: int = 0
    cutoffs: int = 0
    prop_time: float = 0.0
    budget_hit: bool = False

    def record(self, var: int, which: str, old: float, new: float) -> None:
        self.bound_changes.append(BoundChange(var, which, old, new))
        self.domain_reductions += 1

    def absorb(self, other: "PropagationOutcome") -> None:
        self.bound_changes.extend(other.bound_changes)
        self.cutoff = self.cutoff or other.cutoff
        self.calls += other.calls
        self.domain_reductions += other.domain_reductions
        self.cutoffs += other.cutoffs
        self.prop_time += other.prop_time
        self.budget_hit = self.budget_hit or other.budget_hit

    @property
    def changed(self) -> bool:
        return bool(self.bound_changes) or self.cutoff


class DomainBox:
    """Mutable per-variable bounds, the workspace propagation acts on.

    Carries the integer mask of its source model so tightening can round
    integer bounds inward.  Each propagation session owns its box
    exclusively; copy before sharing.
    """

    __slots__ = ("lower", "upper", "integer_mask")

    def __init__(
        self,
        lower: Sequence[float],
        upper: Sequence[float],
        integer_mask: Sequence[bool] | None = None,
    ) -> None:
        if len(lower) != len(upper):
            raise ValueError("lower/upper length mismatch")
        self.lower = list(lower)
        self.upper = list(upper)
        if integer_mask is None:
            integer_mask = [False] * len(self.lower)
        if len(integer_mask) != len(self.lower):
            raise ValueError("integer mask length mismatch")
        self.integer_mask = list(integer_mask)

    @classmethod
    def from_model(cls, model: MipModel) -> "DomainBox":
        return cls(
            [v.lower for v in model.variables],
            [v.upper for v in model.variables],
            [v.is_integer for v in model.variables],
        )

    def copy(self) -> "DomainBox":
        return DomainBox(self.lower, self.upper, self.integer_mask)

    def __len__(self) -> int:
        return len(self.lower)

    def is_empty(self, tol: float = FEAS_TOL) -> bool:
        return any(lo > up + tol for lo, up in zip(self.lower, self.upper))

    def contains(self, point: Mapping[int, float], tol: float = FEAS_TOL) -> bool:
        for var, value in point.items():
            if value < self.lower[var] - tol or value > self.upper[var] + tol:
                return False
        return True

    def fix(self, var: int, value: float) -> None:
        self.lower[var] = value
        self.upper[var] = value

    def width(self, var: int) -> float:
        return self.upper[var] - self.lower[var]


def round_lower(value: float, is_integer: bool, int_tol: float = INT_TOL) -> float:
    if is_integer and math.isfinite(value):
        return math.ceil(value - int_tol)
    return value


def round_upper(value: float, is_integer: bool, int_tol: float = INT_TOL) -> float:
    if is_integer and math.isfinite(value):
        return math.floor(value + int_tol)
    return value


def compute_activity(row: LinearRow, box: DomainBox) -> RowActivity:
    """Interval image of the row's sum over the box, with inf sentinels."""
    sums = _ActivitySums.of(row, box)
    return RowActivity(sums.min_value(), sums.max_value())


class _ActivitySums:
    """Finite partial sums plus infinity counters for both activity sides.

    Residual activities (the sum with one term removed) come out of this
    without ever forming inf - inf: if the removed term is the only infinite
    contributor the residual is the finite part, otherwise it stays infinite.
    """

    __slots__ = ("min_finite", "min_inf", "max_finite", "max_inf")

    def __init__(self) -> None:
        self.min_finite = 0.0
        self.min_inf = 0
        self.max_finite = 0.0
        self.max_inf = 0

    @classmethod
    def of(cls, row: LinearRow, box: DomainBox) -> "_ActivitySums":
        sums = cls()
        for var, coeff in row.terms:
            lo_c, hi_c = _term_range(coeff, box.lower[var], box.upper[var])
            if lo_c == -INF:
                sums.min_inf += 1
            else:
                sums.min_finite += lo_c
            if hi_c == INF:
                sums.max_inf += 1
            else:
                sums.max_finite += hi_c
        return sums

    def min_value(self) -> float:
        return -INF if self.min_inf else self.min_finite

    def max_value(self) -> float:
        return INF if self.max_inf else self.max_finite

    def residual_min(self, coeff: float, lo: float, up: float) -> float:
        """Min activity with the term (coeff, [lo, up]) removed."""
        lo_c, _ = _term_range(coeff, lo, up)
        if lo_c == -INF:
            return -INF if self.min_inf > 1 else self.min_finite
        return -INF if self.min_inf else self.min_finite - lo_c

    def residual_max(self, coeff: float, lo: float, up: float) -> float:
        _, hi_c = _term_range(coeff, lo, up)
        if hi_c == INF:
            return INF if self.max_inf > 1 else self.max_finite
        return INF if self.max_inf else self.max_finite - hi_c


def _term_range(coeff: float, lo: float, up: float) -> tuple[float, float]:
    """Contribution interval of one term; handles 0 * inf as 0."""
    if coeff > 0.0:
        return _mul(coeff, lo), _mul(coeff, up)
    return _mul(coeff, up), _mul(coeff, lo)


def _mul(coeff: float, bound: float) -> float:
    if bound == INF:
        return INF if coeff > 0 else -INF
    if bound == -INF:
        return -INF if coeff > 0 else INF
    return coeff * bound


def tighten_row(
    row: LinearRow,
    box: DomainBox,
    tolerance: float = FEAS_TOL,
    *,
    int_tol: float = INT_TOL,
    coeff_floor: float = COEFF_FLOOR,
) -> PropagationOutcome:
    """One residual-activity pass over a single row, mutating ``box``.

    For each term the candidate bounds are
    ``x_j <= (rhs - minact_without_j) / a_j`` and
    ``x_j >= (lhs - maxact_without_j) / a_j`` (sides swapped for negative
    coefficients).  A change is recorded only when it beats the old bound by
    more than ``tolerance`` after integer rounding.  Passes repeat with fresh
    activities until the row is stable, so the operation is idempotent.
    Detects empty boxes and violated activities as cutoffs.
    """
    started = time.perf_counter()
    outcome = PropagationOutcome(calls=1)
    while True:
        sums = _ActivitySums.of(row, box)
        if sums.min_value() > row.rhs + tolerance or sums.max_value() < row.lhs - tolerance:
            outcome.cutoff = True
            outcome.cutoffs = 1
            break
        changes_before = len(outcome.bound_changes)
        for var, coeff in row.terms:
            if abs(coeff) < coeff_floor:
                continue
            lo = box.lower[var]
            up = box.upper[var]
            is_int = box.integer_mask[var]
            res_min = sums.residual_min(coeff, lo, up)
            res_max = sums.residual_max(coeff, lo, up)
            if coeff > 0.0:
                if row.rhs != INF and res_min != -INF:
                    cand = round_upper((row.rhs - res_min) / coeff, is_int, int_tol)
                    if cand < up - tolerance:
                        box.upper[var] = cand
                        outcome.record(var, "ub", up, cand)
                        up = cand
                if row.lhs != -INF and res_max != INF:
                    cand = round_lower((row.lhs - res_max) / coeff, is_int, int_tol)
                    if cand > lo + tolerance:
                        box.lower[var] = cand
                        outcome.record(var, "lb", lo, cand)
                        lo = cand
            else:
                if row.rhs != INF and res_min != -INF:
                    cand = round_lower((row.rhs - res_min) / coeff, is_int, int_tol)
                    if cand > lo + tolerance:
                        box.lower[var] = cand
                        outcome.record(var, "lb", lo, cand)
                        lo = cand
                if row.lhs != -INF and res_max != INF:
                    cand = round_upper((row.lhs - res_max) / coeff, is_int, int_tol)
                    if cand < up - tolerance:
                        box.upper[var] = cand
                        outcome.record(var, "ub", up, cand)
                        up = cand
            if lo > up + tolerance:
                outcome.cutoff = True
                outcome.cutoffs = 1
                break
        if outcome.cutoff or len(outcome.bound_changes) == changes_before:
            break

    outcome.prop_time = time.perf_counter() - started
    return outcome


def is_valid_reduction(
    original: DomainBox,
    reduced: DomainBox,
    feasible_points: Iterable[Mapping[int, float]],
    tol: float = FEAS_TOL,
) -> bool:
    """Check ``X(c) subseteq reduced subseteq original`` on sampled points.

    ``feasible_points`` are assignments (possibly projections onto a scope);
    every one of them must lie inside the reduced box.  Raises ``ValueError``
    on dimension mismatch.  An empty reduced box is valid exactly when there
    are no feasible points.
    """
    if len(original) != len(reduced):
        raise ValueError(
            f"box dimension mismatch: {len(original)} vs {len(reduced)}"
        )
    points = list(feasible_points)
    if reduced.is_empty(tol):
        return not points
    for lo_r, up_r, lo_o, up_o in zip(
        reduced.lower, reduced.upper, original.lower, original.upper
    ):
        if lo_r < lo_o - tol or up_r > up_o + tol:
            return False
    return all(reduced.contains(point, tol) for point in points)
