"""Min-knapsack instances, cover inequalities, and exact brute-force oracles.

Items are 0-indexed throughout.  For an infeasible item set A the residual
demand is U = demand - s(A), clipped sizes are s'_i = min(s_i, U), and the
weakened cover inequality reads

    sum_{i not in A} s'_i x_i  >=  (2 / (2 + eps)) * U.

All arithmetic on slacks, costs, and LP data is exact (fractions.Fraction).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .errors import CapacityError, DomainError, InputError
from .rationals import format_rational, parse_rational

ENUMERATION_CAP = 16
DP_CROSSOVER = 20


def alpha_of(eps: Fraction) -> Fraction:
    """Right-hand-side shrink factor 2/(2+eps) of the weakened inequality."""
    eps = Fraction(eps)
    if eps <= 0:
        raise DomainError("eps must be positive")
    return Fraction(2, 1) / (2 + eps)


@dataclass(frozen=True)
class KnapsackInstance:
    """Positive integer item sizes and a demand with max s_i <= D <= sum s_i."""

    sizes: tuple[int, ...]
    demand: int
    costs: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        if not self.sizes:
            raise InputError("instance needs at least one item")
        if any((not isinstance(s, int)) or s <= 0 for s in self.sizes):
            raise InputError("item sizes must be positive integers")
        if not isinstance(self.demand, int) or self.demand <= 0:
            raise InputError("demand must be a positive integer")
        # Normalization is required, not repaired: silently rewriting demand
        # would hide user errors.
        if max(self.sizes) > self.demand:
            raise InputError("normalization violated: max size exceeds demand")
        if self.demand > sum(self.sizes):
            raise InputError("normalization violated: demand exceeds total size")
        if self.costs is not None:
            if len(self.costs) != len(self.sizes):
                raise InputError("costs length differs from item count")
            if any(c < 0 for c in self.costs):
                raise InputError("costs must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.sizes)

    def total(self, items) -> int:
        """s(J) = sum of sizes over the item set J."""
        return sum(self.sizes[i] for i in items)


def check_items(inst: KnapsackInstance, items) -> frozenset:
    items = frozenset(items)
    if any((not isinstance(i, int)) or i < 0 or i >= inst.n for i in items):
        raise InputError(f"item indices out of range [0, {inst.n})")
    return items


def as_bits(items, n: int) -> tuple[int, ...]:
    items = frozenset(items)
    return tuple(1 if i in items else 0 for i in range(n))


def bits_to_set(x) -> frozenset:
    return frozenset(i for i, b in enumerate(x) if b)


def is_feasible(inst: KnapsackInstance, x) -> bool:
    """Weighted threshold check: sum s_i x_i >= demand."""
    if len(x) != inst.n:
        raise InputError(f"bit vector has length {len(x)}, expected {inst.n}")
    return sum(s for s, b in zip(inst.sizes, x) if b) >= inst.demand


def residual_and_clipped(inst: KnapsackInstance, items) -> tuple[int, tuple[int, ...]]:
    """Residual demand U = D - s(A) and clipped sizes min(s_i, U)."""
    items = check_items(inst, items)
    held = inst.total(items)
    if held >= inst.demand:
        raise DomainError("set is feasible; residual demand undefined")
    residual = inst.demand - held
    return residual, tuple(min(s, residual) for s in inst.sizes)


def weakened_kc_slack(inst: KnapsackInstance, items, x, eps) -> Fraction:
    """Exact slack of the weakened cover inequality for row A at column x."""
    if len(x) != inst.n:
        raise InputError(f"bit vector has length {len(x)}, expected {inst.n}")
    if not is_feasible(inst, x):
        raise DomainError("column vector is infeasible")
    residual, clipped = residual_and_clipped(inst, items)
    items = frozenset(items)
    lhs = sum(clipped[i] for i in range(inst.n) if i not in items and x[i])
    return Fraction(lhs) - alpha_of(eps) * residual


def enumerate_rows_and_columns(inst: KnapsackInstance, cap: int = ENUMERATION_CAP):
    """All infeasible sets (rows) and feasible bit vectors (columns)."""
    if inst.n > cap:
        raise CapacityError(f"n={inst.n} exceeds enumeration cap {cap}")
    rows, cols = [], []
    for mask in range(1 << inst.n):
        x = tuple((mask >> i) & 1 for i in range(inst.n))
        if is_feasible(inst, x):
            cols.append(x)
        else:
            rows.append(bits_to_set(x))
    key = lambda s: tuple(sorted(s))
    rows.sort(key=key)
    cols.sort()
    return rows, cols


@dataclass(frozen=True)
class SlackMatrix:
    rows: tuple[frozenset, ...]
    cols: tuple[tuple[int, ...], ...]
    entries: tuple[tuple[Fraction, ...], ...]

    def entry(self, row_set, col_bits) -> Fraction:
        i = self.rows.index(frozenset(row_set))
        j = self.cols.index(tuple(col_bits))
        return self.entries[i][j]


def exact_slack_matrix(inst: KnapsackInstance, eps, cap: int = ENUMERATION_CAP) -> SlackMatrix:
    """Brute-force oracle for the weakened-cover slack matrix."""
    rows, cols = enumerate_rows_and_columns(inst, cap)
    entries = tuple(
        tuple(weakened_kc_slack(inst, a, b, eps) for b in cols) for a in rows
    )
    return SlackMatrix(tuple(rows), tuple(cols), entries)


def _dp_table(sizes, costs, demand):
    """T[i][j] = min cost of covering residual j using items i..n-1."""
    n = len(sizes)
    inf = None
    table = [[inf] * (demand + 1) for _ in range(n + 1)]
    table[n][0] = Fraction(0)
    for i in range(n - 1, -1, -1):
        for j in range(demand + 1):
            best = table[i + 1][j]
            take = table[i + 1][max(0, j - sizes[i])]
            if take is not None:
                take = take + costs[i]
                if best is None or take < best:
                    best = take
            table[i][j] = best
    return table


def dp_optimum(inst: KnapsackInstance, costs=None) -> tuple[Fraction, tuple[int, ...]]:
    """Exact IP optimum min{c.x : sum s_i x_i >= D} with a witness set.

    Ties break to the lexicographically smallest witness (as a sorted index
    tuple).  Subset enumeration up to n=20, demand-indexed DP beyond.
    """
    if costs is None:
        costs = inst.costs
    if costs is None:
        raise InputError("no costs given and instance carries none")
    costs = tuple(parse_rational(c) for c in costs)
    if len(costs) != inst.n:
        raise InputError("costs length differs from item count")
    if any(c < 0 for c in costs):
        raise InputError("costs must be nonnegative")

    if inst.n <= DP_CROSSOVER:
        best = None
        for mask in range(1 << inst.n):
            picked = [i for i in range(inst.n) if (mask >> i) & 1]
            if sum(inst.sizes[i] for i in picked) < inst.demand:
                continue
            value = sum((costs[i] for i in picked), Fraction(0))
            key = (value, tuple(picked))
            if best is None or key < best:
                best = key
        assert best is not None  # full set is feasible by normalization
        return best[0], best[1]

    table = _dp_table(inst.sizes, costs, inst.demand)
    value = table[0][inst.demand]
    witness, residual = [], inst.demand
    remaining = value
    for i in range(inst.n):
        take = table[i + 1][max(0, residual - inst.sizes[i])]
        # Greedy inclusion of the earliest usable index yields the
        # lexicographically smallest optimal witness.
        if take is not None and costs[i] + take == remaining:
            witness.append(i)
            remaining -= costs[i]
            residual = max(0, residual - inst.sizes[i])
    return value, tuple(witness)


def to_json(inst: KnapsackInstance) -> str:
    doc = {"n": inst.n, "sizes": list(inst.sizes), "demand": inst.demand}
    if inst.costs is not None:
        doc["costs"] = [format_rational(c) for c in inst.costs]
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def from_json(text: str) -> KnapsackInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"instance file is not valid JSON: {exc}") from exc
    for field in ("sizes", "demand"):
        if field not in doc:
            raise InputError(f"instance file lacks field {field!r}")
    sizes = tuple(doc["sizes"])
    if "n" in doc and doc["n"] != len(sizes):
        raise InputError("field 'n' disagrees with the sizes array")
    costs = None
    if doc.get("costs") is not None:
        costs = tuple(parse_rational(c) for c in doc["costs"])
    return KnapsackInstance(sizes=sizes, demand=doc["demand"], costs=costs)


def random_instance(rng, n: int, max_size: int) -> KnapsackInstance:
    """Random normalized instance: sizes in [1, max_size], demand in [max, sum]."""
    if n <= 0 or max_size <= 0:
        raise InputError("n and max-size must be positive")
    sizes = tuple(rng.randint(1, max_size) for _ in range(n))
    demand = rng.randint(max(sizes), sum(sizes))
    return KnapsackInstance(sizes=sizes, demand=demand)
