"""Nonnegative factorization of slack matrices from protocol trees.

Each tree leaf is one rank-1 term.  The row factor F[a, leaf] multiplies
Alice-owned branch probabilities along the path (evaluated at the row's set)
and folds in the leaf output when Alice owns the leaf; the column factor
V[leaf, b] mirrors this on Bob's side.  By the ownership split,

    sum over leaves of F[a, leaf] * V[leaf, b]  =  expected output at (a, b),

so the emitted equality rows

    sum_i s'_i x_i - alpha*U = F_a . y,    y >= 0

together with the built-in nonnegativity rows x_i = y_{e_i} form an extended
formulation squeezed between the integral hull and the weakened-cover
relaxation.  Leaves never reached by an emitted row carry coefficient zero
everywhere and are omitted from the variable registry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DomainError, InputError
from .knapsack import (
    KnapsackInstance,
    alpha_of,
    check_items,
    enumerate_rows_and_columns,
    exact_slack_matrix,
    is_feasible,
    residual_and_clipped,
)
from .protocol import ALICE, BOB, ONE, _root_of

ZERO_F = Fraction(0)


def row_vector(tree, row_set) -> dict[str, Fraction]:
    """Alice-side factor of every leaf with nonzero entry, keyed by path."""
    a = frozenset(row_set)
    out: dict[str, Fraction] = {}
    parts: list[str] = []

    def rec(node, weight):
        if node.is_leaf:
            if node.owner == ALICE:
                weight = weight * node.value(a)
            if weight != 0:
                out["".join(parts)] = weight
            return
        if node.owner == ALICE:
            p = node.prob(a)
            if p > 0:
                parts.append("0")
                rec(node.left, weight * p)
                parts.pop()
            if p < 1:
                parts.append("1")
                rec(node.right, weight * (1 - p))
                parts.pop()
        else:
            parts.append("0")
            rec(node.left, weight)
            parts.pop()
            parts.append("1")
            rec(node.right, weight)
            parts.pop()

    rec(_root_of(tree), ONE)
    return out


def column_vector(tree, col, leaves=None) -> dict[str, Fraction]:
    """Bob-side factor per leaf.  With ``leaves`` given, only those paths are
    evaluated; otherwise the materialized portion of the tree is swept."""
    root = _root_of(tree)
    if leaves is not None:
        out = {}
        for path in leaves:
            value = _column_entry(root, path, col)
            if value != 0:
                out[path] = value
        return out

    out: dict[str, Fraction] = {}
    parts: list[str] = []

    def rec(node, weight):
        if node.is_leaf:
            if node.owner == BOB:
                weight = weight * node.value(col)
            if weight != 0:
                out["".join(parts)] = weight
            return
        if node.owner == BOB:
            p = node.prob(col)
            if p > 0 and node._left is not None:
                parts.append("0")
                rec(node._left, weight * p)
                parts.pop()
            if p < 1 and node._right is not None:
                parts.append("1")
                rec(node._right, weight * (1 - p))
                parts.pop()
        else:
            if node._left is not None:
                parts.append("0")
                rec(node._left, weight)
                parts.pop()
            if node._right is not None:
                parts.append("1")
                rec(node._right, weight)
                parts.pop()

    rec(root, ONE)
    return out


def _column_entry(root, path: str, col) -> Fraction:
    node = root
    weight = ONE
    for bit in path:
        if node.is_leaf:
            raise InputError(f"path {path!r} overruns a leaf")
        if node.owner == BOB:
            p = node.prob(col)
            weight = weight * (p if bit == "0" else 1 - p)
            if weight == 0:
                return ZERO_F
        node = node.left if bit == "0" else node.right
    if not node.is_leaf:
        raise InputError(f"path {path!r} stops at an internal node")
    if node.owner == BOB:
        weight = weight * node.value(col)
    return weight


@dataclass(frozen=True)
class Factorization:
    row_sets: tuple[frozenset, ...]
    col_bits: tuple[tuple[int, ...], ...]
    leaves: tuple[str, ...]
    F: tuple[dict, ...]  # per row: path -> Fraction
    V: tuple[dict, ...]  # per column: path -> Fraction

    @property
    def rank(self) -> int:
        return len(self.leaves)

    def product_entry(self, i: int, j: int) -> Fraction:
        fa, vb = self.F[i], self.V[j]
        small, other = (fa, vb) if len(fa) <= len(vb) else (vb, fa)
        total = ZERO_F
        for path, value in small.items():
            w = other.get(path)
            if w is not None:
                total += value * w
        return total


def factorize_full(tree, inst: KnapsackInstance, eps, cap: int = 16) -> Factorization:
    """F and V over all enumerable rows and columns, with F.V = slack matrix."""
    rows, cols = enumerate_rows_and_columns(inst, cap)
    F = []
    registry: dict[str, None] = {}
    for a in rows:
        fa = row_vector(tree, a)
        F.append(fa)
        for path in fa:
            registry.setdefault(path)
    leaves = tuple(registry)
    leaf_set = set(leaves)
    V = []
    for b in cols:
        vb = column_vector(tree, b)
        V.append({path: value for path, value in vb.items() if path in leaf_set})
    return Factorization(
        row_sets=tuple(rows),
        col_bits=tuple(cols),
        leaves=leaves,
        F=tuple(F),
        V=tuple(V),
    )


def verify_factorization(fact: Factorization, inst: KnapsackInstance, eps) -> bool:
    """Entrywise exact check of F.V against the brute-force slack matrix."""
    oracle = exact_slack_matrix(inst, eps)
    assert oracle.rows == fact.row_sets and oracle.cols == fact.col_bits
    for i in range(len(fact.row_sets)):
        for j in range(len(fact.col_bits)):
            if fact.product_entry(i, j) != oracle.entries[i][j]:
                return False
    for fa in fact.F:
        if any(v < 0 for v in fa.values()):
            return False
    for vb in fact.V:
        if any(v < 0 for v in vb.values()):
            return False
    return True


RESERVED_PREFIX = "e"


def reserved_key(i: int) -> str:
    """Key of the reserved variable backing the nonnegativity row x_i >= 0."""
    return f"{RESERVED_PREFIX}{i}"


@dataclass(frozen=True)
class EFRow:
    """One emitted equality: sum_i lhs_i x_i - constant = sum_l y_coeffs_l y_l."""

    row_set: tuple[int, ...]
    lhs: tuple[Fraction, ...]
    constant: Fraction
    y_coeffs: dict[str, Fraction]


@dataclass
class EFSystem:
    """Emitted rows over a leaf registry, plus n built-in nonnegativity rows.

    The nonnegativity rows are x_i = y_{e_i} over reserved variables e_i;
    they are implicit in the serialized form.
    """

    n: int
    eps: Fraction
    leaves: list[str] = field(default_factory=list)
    rows: list[EFRow] = field(default_factory=list)
    _leaf_index: dict = field(default_factory=dict, repr=False)

    def register(self, path: str):
        if path not in self._leaf_index:
            self._leaf_index[path] = len(self.leaves)
            self.leaves.append(path)

    @property
    def variable_count(self) -> int:
        """Materialized EF variables: reserved ones plus registered leaves."""
        return self.n + len(self.leaves)

    def add_row(self, tree, inst: KnapsackInstance, row_set):
        a = check_items(inst, row_set)
        residual, clipped = residual_and_clipped(inst, a)  # raises if feasible
        lhs = tuple(
            Fraction(0) if i in a else Fraction(clipped[i]) for i in range(inst.n)
        )
        constant = alpha_of(self.eps) * residual
        coeffs = row_vector(tree, a)
        for path in coeffs:
            self.register(path)
        row = EFRow(
            row_set=tuple(sorted(a)),
            lhs=lhs,
            constant=constant,
            y_coeffs=coeffs,
        )
        self.rows.append(row)
        return row


def emit_ef(tree, inst: KnapsackInstance, eps, row_sets) -> EFSystem:
    """Extended-formulation rows for the requested infeasible sets."""
    system = EFSystem(n=inst.n, eps=Fraction(eps))
    for row_set in row_sets:
        system.add_row(tree, inst, row_set)
    return system


def canonical_lift(tree, system: EFSystem, inst: KnapsackInstance, col_bits) -> dict[str, Fraction]:
    """The y assignment certifying that a feasible column satisfies the rows."""
    if not is_feasible(inst, col_bits):
        raise DomainError("column must be feasible to lift")
    lift = column_vector(tree, col_bits, leaves=system.leaves)
    for i, bit in enumerate(col_bits):
        if bit:
            lift[reserved_key(i)] = ONE
    return lift


def system_to_json(system: EFSystem) -> str:
    from .rationals import format_rational

    doc = {
        "n": system.n,
        "epsilon": format_rational(system.eps),
        "leaves": list(system.leaves),
        "rows": [
            {
                "set": list(row.row_set),
                "constant": format_rational(row.constant),
                "x_coeffs": [format_rational(c) for c in row.lhs],
                "y_coeffs": {
                    path: format_rational(v) for path, v in sorted(row.y_coeffs.items())
                },
            }
            for row in system.rows
        ],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def system_from_json(text: str) -> EFSystem:
    from .rationals import parse_rational

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"EF file is not valid JSON: {exc}") from exc
    system = EFSystem(n=doc["n"], eps=parse_rational(doc["epsilon"]))
    for path in doc["leaves"]:
        system.register(path)
    for entry in doc["rows"]:
        row = EFRow(
            row_set=tuple(entry["set"]),
            lhs=tuple(parse_rational(c) for c in entry["x_coeffs"]),
            constant=parse_rational(entry["constant"]),
            y_coeffs={p: parse_rational(v) for p, v in entry["y_coeffs"].items()},
        )
        for path in row.y_coeffs:
            system.register(path)
        system.rows.append(row)
    return system
