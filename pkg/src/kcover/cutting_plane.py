"""Cutting-plane optimization over emitted extended-formulation rows.

The loop starts from the n built-in nonnegativity rows, solves the exact LP
over the rows collected so far, asks a separator for a violated weakened
cover inequality, and on violation emits the corresponding protocol row and
repeats.  Two separators are provided: half-rounding (check only the set
A = {i : x*_i >= 1/2}; accepting either because the rounded set is feasible
or because its inequality holds) and exhaustive exact separation at
enumeration scale.  Every added row is checked to strictly increase the rank
of the equality system, which bounds iterations by r + 1 for r materialized
EF variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InputError
from .factorization import EFSystem, reserved_key
from .kc_protocol import build_kc_protocol
from .knapsack import (
    ENUMERATION_CAP,
    KnapsackInstance,
    alpha_of,
    enumerate_rows_and_columns,
    residual_and_clipped,
)
from .rationals import parse_rational
from . import simplex

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class LPRow:
    """Equality  sum_i x_coeffs[i] x_i - constant = sum_k y_coeffs[k] y_k."""

    x_coeffs: tuple[Fraction, ...]
    constant: Fraction
    y_coeffs: dict


@dataclass
class LinearProgram:
    """min costs.x over the equality rows with y >= 0 and x free.

    Nonnegativity of x is not a bound; it enters through the built-in rows
    x_i = y_{e_i} when they are part of the row set.
    """

    n: int
    costs: tuple[Fraction, ...]
    rows: list[LPRow]
    y_keys: list

    def __post_init__(self):
        if len(self.costs) != self.n:
            raise InputError("objective length differs from x dimension")
        if any(c < 0 for c in self.costs):
            raise InputError("objective costs must be nonnegative")


@dataclass
class LPResult:
    status: str
    x: tuple[Fraction, ...] | None
    y: dict | None
    value: Fraction | None


def nonnegativity_rows(n: int) -> list[LPRow]:
    """The built-in rows x_i = y_{e_i} over the n reserved variables."""
    rows = []
    for i in range(n):
        coeffs = tuple(ONE if j == i else ZERO for j in range(n))
        rows.append(LPRow(coeffs, ZERO, {reserved_key(i): ONE}))
    return rows


def lp_from_system(system: EFSystem, costs) -> LinearProgram:
    costs = tuple(parse_rational(c) for c in costs)
    rows = nonnegativity_rows(system.n)
    for row in system.rows:
        rows.append(LPRow(row.lhs, row.constant, row.y_coeffs))
    y_keys = [reserved_key(i) for i in range(system.n)] + list(system.leaves)
    return LinearProgram(n=system.n, costs=costs, rows=rows, y_keys=y_keys)


def solve_lp(lp: LinearProgram) -> LPResult:
    """Exact optimum of LP(I); x is split into two nonnegative parts."""
    n, m = lp.n, len(lp.rows)
    key_pos = {key: i for i, key in enumerate(lp.y_keys)}
    columns: list[dict] = []
    costs: list[Fraction] = []
    # x+ block, x- block
    for sign in (ONE, -ONE):
        for i in range(n):
            col = {}
            for r, row in enumerate(lp.rows):
                if row.x_coeffs[i] != 0:
                    col[r] = sign * row.x_coeffs[i]
            columns.append(col)
            costs.append(sign * lp.costs[i])
    # y block (moved to the left-hand side, hence negated)
    y_cols = [dict() for _ in lp.y_keys]
    for r, row in enumerate(lp.rows):
        for key, value in row.y_coeffs.items():
            if value != 0:
                y_cols[key_pos[key]][r] = -value
    columns.extend(y_cols)
    costs.extend([ZERO] * len(lp.y_keys))

    rhs = []
    flip = []
    for r, row in enumerate(lp.rows):
        if row.constant < 0:
            flip.append(r)
        rhs.append(abs(row.constant))
    for r in flip:
        for col in columns:
            if r in col:
                col[r] = -col[r]

    result = simplex.solve_standard(columns, costs, rhs)
    if result.status != simplex.OPTIMAL:
        return LPResult(result.status, None, None, None)
    x = tuple(
        result.values.get(i, ZERO) - result.values.get(n + i, ZERO) for i in range(n)
    )
    y = {}
    for j, key in enumerate(lp.y_keys):
        value = result.values.get(2 * n + j, ZERO)
        if value != 0:
            y[key] = value
    value = sum((c * xi for c, xi in zip(lp.costs, x)), ZERO)
    return LPResult(simplex.OPTIMAL, x, y, value)


# ---------------------------------------------------------------------------
# separation


@dataclass(frozen=True)
class Separation:
    accepted: bool
    row_set: frozenset | None = None
    rounded_set: frozenset | None = None  # feasible rounding certificate


def _row_slack(inst: KnapsackInstance, items: frozenset, x, eps) -> Fraction:
    residual, clipped = residual_and_clipped(inst, items)
    lhs = sum(
        (Fraction(clipped[i]) * x[i] for i in range(inst.n) if i not in items), ZERO
    )
    return lhs - alpha_of(eps) * residual


def separate_halfround(inst: KnapsackInstance, x, eps) -> Separation:
    """Pseudo-separation: check only the half-rounded support's inequality."""
    if len(x) != inst.n:
        raise InputError("point has wrong dimension")
    if any(v < 0 for v in x):
        raise InputError("pseudo-separation expects a nonnegative point")
    half = Fraction(1, 2)
    rounded = frozenset(i for i in range(inst.n) if x[i] >= half)
    if inst.total(rounded) >= inst.demand:
        return Separation(accepted=True, rounded_set=rounded)
    if _row_slack(inst, rounded, x, eps) < 0:
        return Separation(accepted=False, row_set=rounded)
    return Separation(accepted=True)


def separate_exact(inst: KnapsackInstance, x, eps, cap: int = ENUMERATION_CAP) -> Separation:
    """Most-violated weakened cover inequality by exhaustive enumeration."""
    if len(x) != inst.n:
        raise InputError("point has wrong dimension")
    rows, _ = enumerate_rows_and_columns(inst, cap)
    best = None
    for a in rows:
        violation = -_row_slack(inst, a, x, eps)
        if violation > 0:
            key = (-violation, tuple(sorted(a)))
            if best is None or key < best[0]:
                best = (key, a)
    if best is None:
        return Separation(accepted=True)
    return Separation(accepted=False, row_set=best[1])


SEPARATORS = {"halfround": separate_halfround, "exact": separate_exact}


# ---------------------------------------------------------------------------
# the loop


class _RankTracker:
    """Incremental exact rank of the equality rows over (x, y) coefficients."""

    def __init__(self):
        self.echelon = []  # (pivot key, normalized sparse row)
        self.key_order = {}

    def _key_rank(self, key):
        if key not in self.key_order:
            self.key_order[key] = len(self.key_order)
        return self.key_order[key]

    def add(self, row: LPRow) -> bool:
        """True iff the row increased the rank."""
        vec = {}
        for i, c in enumerate(row.x_coeffs):
            if c != 0:
                vec[("x", i)] = c
        for key, c in row.y_coeffs.items():
            if c != 0:
                vec[("y", key)] = -c
        for key in vec:
            self._key_rank(key)
        for pivot, base in self.echelon:
            coeff = vec.get(pivot)
            if coeff:
                for key, value in base.items():
                    updated = vec.get(key, ZERO) - coeff * value
                    if updated == 0:
                        vec.pop(key, None)
                    else:
                        vec[key] = updated
        if not vec:
            return False
        pivot = min(vec, key=self._key_rank)
        scale = vec[pivot]
        self.echelon.append((pivot, {k: v / scale for k, v in vec.items()}))
        return True


@dataclass
class CutResult:
    value: Fraction
    x: tuple[Fraction, ...]
    iterations: int
    rows_used: list[tuple[int, ...]]
    separator: str
    variable_count: int  # materialized EF variables (reserved + leaves)
    rounded_set: tuple[int, ...] | None = None
    rounded_cost: Fraction | None = None
    y: dict = field(default_factory=dict)


def cutting_plane_solve(inst: KnapsackInstance, costs, eps, separator: str = "exact",
                        cap: int = ENUMERATION_CAP, circuit_builder=None,
                        max_iterations: int = 10_000) -> CutResult:
    """Optimize min costs.x over lazily emitted weakened-cover EF rows."""
    eps = Fraction(eps)
    costs = tuple(parse_rational(c) for c in costs)
    if separator not in SEPARATORS:
        raise InputError(f"unknown separator {separator!r}")
    separate = SEPARATORS[separator]

    kwargs = {} if circuit_builder is None else {"circuit_builder": circuit_builder}
    tree = build_kc_protocol(inst, eps, **kwargs)
    system = EFSystem(n=inst.n, eps=eps)
    rank = _RankTracker()
    for row in nonnegativity_rows(inst.n):
        assert rank.add(row)
    seen = set()
    iterations = 0
    while True:
        iterations += 1
        if iterations > max_iterations:
            raise RuntimeError("cutting-plane loop exceeded the iteration guard")
        lp = lp_from_system(system, costs)
        res = solve_lp(lp)
        if res.status != simplex.OPTIMAL:
            raise RuntimeError(f"LP over the current rows is {res.status}")
        if separator == "exact":
            outcome = separate(inst, res.x, eps, cap)
        else:
            outcome = separate(inst, res.x, eps)
        if outcome.accepted:
            result = CutResult(
                value=res.value,
                x=res.x,
                iterations=iterations,
                rows_used=[row.row_set for row in system.rows],
                separator=separator,
                variable_count=system.variable_count,
                y=res.y,
            )
            if outcome.rounded_set is not None:
                result.rounded_set = tuple(sorted(outcome.rounded_set))
                result.rounded_cost = sum(
                    (costs[i] for i in outcome.rounded_set), ZERO
                )
            if iterations > result.variable_count + 1:
                raise RuntimeError("iteration count exceeded the r + 1 bound")
            return result
        a = outcome.row_set
        key = tuple(sorted(a))
        if key in seen:
            raise RuntimeError(f"separator returned an already-emitted row {key}")
        seen.add(key)
        row = system.add_row(tree, inst, a)
        if not rank.add(LPRow(row.lhs, row.constant, row.y_coeffs)):
            raise RuntimeError(f"emitted row {key} is linearly dependent")


def weakened_lp_value(inst: KnapsackInstance, costs, eps,
                      cap: int = ENUMERATION_CAP) -> Fraction:
    """Optimum of the monolithic weakened-cover LP, via its dual.

    The primal has one inequality per infeasible set; the dual has only n
    rows, which keeps the exact simplex small.  Strong duality over the
    rationals makes the values equal.
    """
    costs = tuple(parse_rational(c) for c in costs)
    if any(c < 0 for c in costs):
        raise InputError("costs must be nonnegative")
    rows, _ = enumerate_rows_and_columns(inst, cap)
    alpha = alpha_of(eps)
    columns = []
    obj = []
    for a in rows:
        residual, clipped = residual_and_clipped(inst, a)
        col = {
            i: Fraction(clipped[i]) for i in range(inst.n) if i not in a and clipped[i]
        }
        columns.append(col)
        obj.append(-alpha * residual)  # maximize via negated minimization
    n_struct = len(columns)
    for i in range(inst.n):  # slack seeds the basis since costs are >= 0
        columns.append({i: ONE})
        obj.append(ZERO)
    result = simplex.solve_standard(
        columns, obj, [Fraction(c) for c in costs],
        basis_hint=list(range(n_struct, n_struct + inst.n)),
    )
    if result.status != simplex.OPTIMAL:
        raise RuntimeError(f"dual of the monolithic LP is {result.status}")
    return -result.objective
