"""Exact rational revised simplex with Bland's rule.

Solves min c.v subject to M v = d, v >= 0 with sparse columns and an
explicit basis inverse.  Bland's rule (lowest eligible index in, lowest
basic index out) guarantees termination; all arithmetic is on Fractions, so
results are exact and runs are deterministic.  Dependent equality rows are
eliminated exactly up front, with inconsistency reported as infeasible.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InputError

ZERO = Fraction(0)
ONE = Fraction(1)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_RHS = -1  # sentinel key for the augmented entry during row elimination


@dataclass
class StandardResult:
    status: str
    values: dict[int, Fraction]  # nonzero variable values by column index
    objective: Fraction | None


class _Tableau:
    def __init__(self, columns, rhs, basis):
        self.columns = columns
        self.m = len(rhs)
        self.basis = list(basis)
        self.binv = [[ONE if i == j else ZERO for j in range(self.m)] for i in range(self.m)]
        self.xb = list(rhs)

    def direction(self, col: dict) -> list[Fraction]:
        u = [ZERO] * self.m
        for r, value in col.items():
            if value == 0:
                continue
            for i in range(self.m):
                b = self.binv[i][r]
                if b != 0:
                    u[i] += b * value
        return u

    def duals(self, costs) -> list[Fraction]:
        y = [ZERO] * self.m
        for i, var in enumerate(self.basis):
            c = costs[var]
            if c == 0:
                continue
            row = self.binv[i]
            for j in range(self.m):
                if row[j] != 0:
                    y[j] += c * row[j]
        return y

    def pivot(self, entering: int, leave_row: int, u: list[Fraction]):
        scale = u[leave_row]
        self.binv[leave_row] = [v / scale for v in self.binv[leave_row]]
        self.xb[leave_row] = self.xb[leave_row] / scale
        pivot_row = self.binv[leave_row]
        pivot_x = self.xb[leave_row]
        for i in range(self.m):
            if i == leave_row or u[i] == 0:
                continue
            factor = u[i]
            row = self.binv[i]
            for j in range(self.m):
                if pivot_row[j] != 0:
                    row[j] -= factor * pivot_row[j]
            self.xb[i] -= factor * pivot_x
        self.basis[leave_row] = entering

    def run(self, costs, candidate_count: int) -> str:
        while True:
            y = self.duals(costs)
            basic = set(self.basis)
            entering = -1
            for j in range(candidate_count):
                if j in basic:
                    continue
                col = self.columns[j]
                reduced = costs[j] - sum(y[r] * v for r, v in col.items())
                if reduced < 0:
                    entering = j
                    break
            if entering < 0:
                return OPTIMAL
            u = self.direction(self.columns[entering])
            leave_row, best = -1, None
            for i in range(self.m):
                if u[i] > 0:
                    ratio = self.xb[i] / u[i]
                    if best is None or ratio < best or (
                        ratio == best and self.basis[i] < self.basis[leave_row]
                    ):
                        best, leave_row = ratio, i
            if leave_row < 0:
                return UNBOUNDED
            self.pivot(entering, leave_row, u)


def _independent_rows(columns, rhs):
    """Row elimination on the augmented system; returns kept row indices.

    Raises nothing; returns None if the system is inconsistent.
    """
    m = len(rhs)
    rows = [dict() for _ in range(m)]
    for j, col in enumerate(columns):
        for r, value in col.items():
            if value != 0:
                rows[r][j] = value
    echelon = []  # (pivot column, normalized row dict)
    kept = []
    for r in range(m):
        row = dict(rows[r])
        row[_RHS] = rhs[r]
        for pivot, base in echelon:
            coeff = row.get(pivot)
            if coeff:
                for key, value in base.items():
                    updated = row.get(key, ZERO) - coeff * value
                    if updated == 0:
                        row.pop(key, None)
                    else:
                        row[key] = updated
        structural = [key for key in row if key != _RHS]
        if not structural:
            if row.get(_RHS, ZERO) != 0:
                return None
            continue  # dependent, consistent: drop
        pivot = min(structural)
        scale = row[pivot]
        base = {key: value / scale for key, value in row.items()}
        echelon.append((pivot, base))
        kept.append(r)
    return kept


def solve_standard(columns: list[dict], costs: list[Fraction], rhs: list[Fraction],
                   basis_hint: list[int] | None = None) -> StandardResult:
    """Two-phase simplex on equality-standard form with d >= 0 required.

    ``basis_hint`` bypasses phase 1; the hinted columns must be the identity
    in row order (e.g. freshly added slacks).
    """
    if any(d < 0 for d in rhs):
        raise InputError("standard form needs a nonnegative right-hand side")
    if len(columns) != len(costs):
        raise InputError("columns and costs disagree")
    n_struct = len(columns)

    if basis_hint is not None:
        tab = _Tableau(columns, rhs, basis_hint)
    else:
        kept = _independent_rows(columns, rhs)
        if kept is None:
            return StandardResult(INFEASIBLE, {}, None)
        if len(kept) != len(rhs):
            remap = {r: i for i, r in enumerate(kept)}
            columns = [
                {remap[r]: v for r, v in col.items() if r in remap} for col in columns
            ]
            rhs = [rhs[r] for r in kept]
        m = len(rhs)
        art = [{i: ONE} for i in range(m)]
        tab = _Tableau(columns + art, rhs, range(n_struct, n_struct + m))
        phase1 = [ZERO] * n_struct + [ONE] * m
        tab.run(phase1, n_struct)
        if sum(tab.xb[i] for i in range(m) if tab.basis[i] >= n_struct) > 0:
            return StandardResult(INFEASIBLE, {}, None)
        for i in range(m):
            # rows are independent now, so zero-level artificials always leave
            if tab.basis[i] >= n_struct:
                for j in range(n_struct):
                    if j in tab.basis:
                        continue
                    u = tab.direction(columns[j])
                    if u[i] != 0:
                        tab.pivot(j, i, u)
                        break
                else:
                    raise AssertionError("artificial stuck despite independent rows")

    status = tab.run(costs, n_struct)
    if status != OPTIMAL:
        return StandardResult(status, {}, None)
    values = {tab.basis[i]: tab.xb[i] for i in range(tab.m) if tab.xb[i] != 0}
    objective = sum((costs[v] * x for v, x in values.items()), ZERO)
    return StandardResult(OPTIMAL, values, objective)
