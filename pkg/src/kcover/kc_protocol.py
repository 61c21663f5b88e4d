"""Randomized protocol computing weakened cover-inequality slacks in expectation.

Alice holds an infeasible item set A, Bob holds a feasible bit vector b.  A
deterministic prefix communicates the identity of the large items (index of a
smallest large item, or an empty token), the scale exponent k with
(1+d)^k <= U < (1+d)^(k+1), and the step index l locating
D - s(large items in A) on the (1+l*d) grid.  Bob then announces which of two
regimes applies:

* large route: some large item separates the players; a game walk on a
  truncated threshold circuit finds an index i* outside A that b covers, and
  an n-way sample emits clipped sizes with the i* slot emitting U - alpha*U;

* small route: Alice additionally sends her rounded small-item total, and an
  (n+2)-way sample emits clipped large sizes, small sizes of items in A that
  b skips, plus one Bob-owned and one Alice-owned correction term.

Every positively reachable leaf output is nonnegative and the expectation
equals the weakened slack exactly, for every admissible pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .circuit import build_truncation_circuit, circuit_stats, cnf_threshold_circuit
from .errors import DomainError
from .knapsack import KnapsackInstance, alpha_of, as_bits, check_items
from .protocol import (
    ALICE,
    BOB,
    Leaf,
    ProtocolTree,
    alice_bit,
    bit_width,
    bob_bit,
    deterministic_cascade,
    kw_subtree,
    uniform_gadget,
    zero_leaf,
)


def delta_of(eps: Fraction) -> Fraction:
    """Grid step d with (1-2d)/(1+d) = 2/(2+eps)."""
    eps = Fraction(eps)
    if eps <= 0:
        raise DomainError("eps must be positive")
    return eps / (6 + 2 * eps)


class Case(Enum):
    A = "large-route"
    B = "small-route"


@dataclass(frozen=True)
class Discretization:
    """Grid quantities the protocol prefix communicates for one row set."""

    alpha: Fraction
    delta: Fraction
    residual: int                 # U = demand - s(A)
    i_large: frozenset
    i_small: frozenset
    k: int                        # (1+d)^k <= U < (1+d)^(k+1)
    u_tilde: Fraction             # (1+d)^k
    ell: int                      # integer >= -1 locating D - s(large in A)
    delta_tilde: Fraction         # (1 + ell*d) * u_tilde
    sigma_tilde: Fraction         # grid round-down of s(small items in A)

    def clipped(self, sizes, i: int) -> int:
        return min(sizes[i], self.residual)


@dataclass(frozen=True)
class LargeSmallSplit:
    i_large: frozenset
    i_small: frozenset


def large_small_split(inst: KnapsackInstance, items) -> LargeSmallSplit:
    """Items at least as big as the residual demand versus the rest."""
    disc = discretize(inst, items, Fraction(1))
    return LargeSmallSplit(disc.i_large, disc.i_small)


def _discretize_core(sizes, demand, items, eps) -> Discretization:
    alpha = alpha_of(eps)
    delta = delta_of(eps)
    held = sum(sizes[i] for i in items)
    if held >= demand:
        raise DomainError("set is feasible; nothing to discretize")
    residual = demand - held
    i_large = frozenset(i for i, s in enumerate(sizes) if s >= residual)
    i_small = frozenset(range(len(sizes))) - i_large

    step = 1 + delta
    k, power = 0, Fraction(1)
    while power * step <= residual:
        power *= step
        k += 1
    u_tilde = power

    # l is the unique integer >= -1 with
    #   (1 + l*d)*u_tilde < D - s(large in A) <= (1 + (l+1)*d)*u_tilde.
    gap = demand - sum(sizes[i] for i in items if i in i_large)
    bound = (gap - u_tilde) / (delta * u_tilde)
    ell = math.ceil(bound) - 1
    delta_tilde = (1 + ell * delta) * u_tilde
    assert ell >= -1 and delta_tilde < gap <= delta_tilde + delta * u_tilde

    small_held = sum(sizes[i] for i in items if i in i_small)
    multiple = math.floor(Fraction(small_held) / (delta * u_tilde))
    sigma_tilde = multiple * delta * u_tilde
    assert sigma_tilde <= small_held < sigma_tilde + delta * u_tilde
    # Slack of the Alice-owned correction leaf must stay positive.
    assert (1 - 2 * delta) * u_tilde - alpha * residual > 0

    return Discretization(
        alpha=alpha,
        delta=delta,
        residual=residual,
        i_large=i_large,
        i_small=i_small,
        k=k,
        u_tilde=u_tilde,
        ell=ell,
        delta_tilde=delta_tilde,
        sigma_tilde=sigma_tilde,
    )


def discretize(inst: KnapsackInstance, items, eps) -> Discretization:
    """All grid quantities for row set A at accuracy eps."""
    items = check_items(inst, items)
    return _discretize_core(inst.sizes, inst.demand, items, Fraction(eps))


def case_of(inst: KnapsackInstance, items, x, disc: Discretization) -> Case:
    """Large route iff b's large items alone reach D - delta_tilde."""
    covered = sum(inst.sizes[i] for i in disc.i_large if x[i])
    return Case.A if covered >= inst.demand - disc.delta_tilde else Case.B


def _smallest_large_token(sizes, i_large) -> int:
    """Index of a smallest large item (ties to the smallest index), or n."""
    if not i_large:
        return len(sizes)
    return min(i_large, key=lambda i: (sizes[i], i))


def build_kc_protocol(inst: KnapsackInstance, eps,
                      circuit_builder=cnf_threshold_circuit) -> ProtocolTree:
    """Protocol tree whose expectation is the weakened cover slack, exactly.

    Alice's input is an infeasible item set (frozenset), Bob's input is a
    feasible bit vector.  Children materialize lazily; only traversed parts
    of the quasi-polynomial tree are ever built.
    """
    eps = Fraction(eps)
    n = inst.n
    sizes = inst.sizes
    demand = inst.demand
    alpha = alpha_of(eps)
    delta = delta_of(eps)
    total_size = sum(sizes)

    disc_cache: dict[frozenset, Discretization] = {}

    def disc(a: frozenset) -> Discretization:
        d = disc_cache.get(a)
        if d is None:
            d = _discretize_core(sizes, demand, a, eps)
            disc_cache[a] = d
        return d

    step = 1 + delta
    powers = [Fraction(1)]
    while powers[-1] * step <= demand:
        powers.append(powers[-1] * step)
    k_max = len(powers) - 1
    token_bits = bit_width(n)
    k_bits = bit_width(k_max)

    circuits: dict = {}

    def truncation(cutoff: int, threshold: int):
        key = (cutoff, threshold)
        if key not in circuits:
            circuits[key] = build_truncation_circuit(
                inst, cutoff, threshold, builder=circuit_builder
            )
        return circuits[key]

    def ell_max_for(u_tilde: Fraction) -> int:
        # largest l with (1 + l*d)*u_tilde < demand
        return math.ceil((demand - u_tilde) / (delta * u_tilde)) - 1

    def sigma_count_for(u_tilde: Fraction) -> int:
        return math.floor(Fraction(total_size) / (delta * u_tilde))

    def clipped_leaf_value(i: int, scale: int):
        return lambda a: scale * Fraction(min(sizes[i], disc(a).residual))

    def case_a_exit(i_star: int, large_set: frozenset):
        def make_exit(i: int):
            if i == i_star:
                return Leaf(
                    ALICE,
                    lambda a: n * (1 - alpha) * disc(a).residual,
                    tag=f"hit:{i_star}",
                    index=i_star,
                )
            reply = lambda i=i: bob_bit(
                lambda b: bool(b[i]),
                lambda i=i: Leaf(ALICE, clipped_leaf_value(i, n), tag=f"emit:{i}", index=i),
                zero_leaf,
                tag=f"b[{i}]",
            )
            return alice_bit(
                lambda a, i=i: i in a,
                zero_leaf,
                reply,
                tag=f"a-held:{i}",
            )

        return uniform_gadget(n, ALICE, make_exit, tag="pick")

    def make_case_a(large_set: frozenset, cutoff, delta_tilde: Fraction):
        if not large_set:
            return zero_leaf("dead:no-large")
        threshold = math.ceil(demand - delta_tilde)
        circuit = truncation(cutoff, threshold)
        if circuit.is_constant:
            return zero_leaf("dead:constant-truncation")
        return kw_subtree(
            circuit,
            alice_view=lambda a: as_bits(a, n),
            bob_view=lambda b: tuple(b),
            continuation=lambda i_star: case_a_exit(i_star, large_set),
        )

    def make_case_b(large_set: frozenset, small_set: frozenset, u_tilde: Fraction):
        sigma_bits = bit_width(sigma_count_for(u_tilde))

        def small_held(a) -> int:
            return sum(sizes[i] for i in a if i in small_set)

        def sigma_message(a) -> int:
            return math.floor(Fraction(small_held(a)) / (delta * u_tilde))

        def with_sigma(multiple: int):
            if multiple > sigma_count_for(u_tilde):
                return zero_leaf("dead:sigma-range")
            sigma = multiple * delta * u_tilde
            scale = n + 2

            def make_exit(i: int):
                if i == n:  # Bob's correction term
                    def bob_value(b):
                        covered = sum(sizes[j] for j in small_set if b[j])
                        return scale * (covered - sigma - (1 - delta) * u_tilde)

                    return Leaf(BOB, bob_value, tag="small-cover", index=i)
                if i == n + 1:  # Alice's correction term
                    def alice_value(a):
                        d = disc(a)
                        return scale * (
                            sigma - small_held(a) + (1 - delta) * u_tilde
                            - alpha * d.residual
                        )

                    return Leaf(ALICE, alice_value, tag="grid-slack", index=i)
                if i in large_set:
                    reply = lambda i=i: bob_bit(
                        lambda b: bool(b[i]),
                        lambda i=i: Leaf(
                            ALICE, clipped_leaf_value(i, scale), tag=f"emit:{i}", index=i
                        ),
                        zero_leaf,
                        tag=f"b[{i}]",
                    )
                    return alice_bit(
                        lambda a, i=i: i in a, zero_leaf, reply, tag=f"a-held:{i}"
                    )
                # small item: pays only when Alice holds it and b skips it
                reply = lambda i=i: bob_bit(
                    lambda b: bool(b[i]),
                    zero_leaf,
                    lambda i=i: Leaf(
                        ALICE, lambda _a, v=scale * Fraction(sizes[i]): v,
                        tag=f"skip:{i}", index=i,
                    ),
                    tag=f"b[{i}]",
                )
                return alice_bit(
                    lambda a, i=i: i in a, reply, zero_leaf, tag=f"a-held:{i}"
                )

            return uniform_gadget(n + 2, ALICE, make_exit, tag="pick")

        return deterministic_cascade(
            ALICE, sigma_bits, sigma_message, with_sigma, tag="sigma"
        )

    def after_ell(token: int, k: int, ell: int):
        u_tilde = powers[k]
        if ell > ell_max_for(u_tilde):
            return zero_leaf("dead:ell-range")
        delta_tilde = (1 + ell * delta) * u_tilde
        if token < n:
            cutoff = sizes[token]
            large_set = frozenset(i for i in range(n) if sizes[i] >= cutoff)
        else:
            cutoff = None
            large_set = frozenset()
        small_set = frozenset(range(n)) - large_set

        def case_test(b) -> bool:
            covered = sum(sizes[i] for i in large_set if b[i])
            return covered >= demand - delta_tilde

        return bob_bit(
            case_test,
            lambda: make_case_a(large_set, cutoff, delta_tilde),
            lambda: make_case_b(large_set, small_set, u_tilde),
            tag="route",
        )

    def after_k(token: int, k: int):
        if k > k_max:
            return zero_leaf("dead:k-range")
        u_tilde = powers[k]
        ell_bits = bit_width(ell_max_for(u_tilde) + 1)
        return deterministic_cascade(
            ALICE,
            ell_bits,
            lambda a: disc(a).ell + 1,
            lambda shifted: after_ell(token, k, shifted - 1),
            tag="ell",
        )

    def after_token(token: int):
        if token > n:
            return zero_leaf("dead:token-range")
        return deterministic_cascade(
            ALICE, k_bits, lambda a: disc(a).k, lambda k: after_k(token, k), tag="scale"
        )

    root = deterministic_cascade(
        ALICE,
        token_bits,
        lambda a: _smallest_large_token(sizes, disc(a).i_large),
        after_token,
        tag="token",
    )
    return ProtocolTree(
        root=root,
        kind="kc-slack",
        meta={"n": n, "eps": eps, "demand": demand, "sizes": sizes},
    )


def verify_sweep(inst: KnapsackInstance, eps, mode: str = "all", samples: int = 200,
                 seed: int = 0, workers: int = 1,
                 circuit_builder=cnf_threshold_circuit, cap: int = 16) -> dict:
    """Compare tree expectations against the slack oracle over row/column pairs.

    ``mode="all"`` sweeps every pair; ``mode="sample"`` checks ``samples``
    random ones.  Pairs are independent, so the sweep can fan out over
    worker threads; results are aggregated order-independently.
    """
    import random as _random

    from .knapsack import enumerate_rows_and_columns, weakened_kc_slack
    from .protocol import exact_expectation, pair_height

    eps = Fraction(eps)
    rows, cols = enumerate_rows_and_columns(inst, cap)
    if mode == "all":
        pairs = [(a, b) for a in rows for b in cols]
    elif mode == "sample":
        rng = _random.Random(seed)
        pairs = [(rng.choice(rows), rng.choice(cols)) for _ in range(samples)]
    else:
        raise DomainError(f"unknown sweep mode {mode!r}")

    tree = build_kc_protocol(inst, eps, circuit_builder=circuit_builder)

    def check(pair):
        a, b = pair
        expected = weakened_kc_slack(inst, a, b, eps)
        got = exact_expectation(tree, a, b)
        return got == expected, pair_height(tree, a, b)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(check, pairs))
    else:
        outcomes = [check(pair) for pair in pairs]

    failures = sum(1 for ok, _ in outcomes if not ok)
    max_height = max((h for _, h in outcomes), default=0)
    return {
        "pairs": len(pairs),
        "failures": failures,
        "max_height": max_height,
        "height_budget": height_budget(inst, eps, cap),
        "status": "PASS" if failures == 0 else "FAIL",
    }


def height_budget(inst: KnapsackInstance, eps, cap: int = 16) -> int:
    """Instance-level bound on the pair height of the cover-slack tree.

    Sums the per-stage maxima: message widths, the route bit, the deepest
    truncation circuit over all enumerable row sets, and the sampling stage.
    """
    from .knapsack import enumerate_rows_and_columns

    eps = Fraction(eps)
    n = inst.n
    delta = delta_of(eps)
    step = 1 + delta
    powers = [Fraction(1)]
    while powers[-1] * step <= inst.demand:
        powers.append(powers[-1] * step)
    k_max = len(powers) - 1
    ell_bits = bit_width(math.ceil((inst.demand - 1) / delta) - 1 + 1)
    sigma_bits = bit_width(math.floor(Fraction(sum(inst.sizes)) / delta))

    rows, _ = enumerate_rows_and_columns(inst, cap)
    max_depth = 0
    for a in rows:
        disc = discretize(inst, a, eps)
        if not disc.i_large:
            continue
        threshold = math.ceil(inst.demand - disc.delta_tilde)
        cutoff = inst.sizes[_smallest_large_token(inst.sizes, disc.i_large)]
        circuit = build_truncation_circuit(inst, cutoff, threshold,
                                           builder=cnf_threshold_circuit)
        if not circuit.is_constant:
            max_depth = max(max_depth, circuit_stats(circuit)[0])

    gadget = lambda m: math.ceil(math.log2(m)) if m > 1 else 0
    prefix = bit_width(n) + bit_width(k_max) + ell_bits + 1
    route_a = max_depth + gadget(n) + 2
    route_b = sigma_bits + gadget(n + 2) + 2
    return prefix + max(route_a, route_b)
