"""Flow-cover inequalities for single-demand facility location.

A facility instance has integer capacities s_i and a demand D with
sum s_i >= D (capacities may exceed D).  A solution opens facilities
(y in {0,1}^n) and routes demand fractions (x in [0,1]^n, sum x_i = 1,
x_i D <= s_i y_i).  For an infeasible tuple (A, F1, F2) partitioning the
facilities with s(A) < D, the weakened flow-cover inequality is

    s'(F1 cap B) + x(F2 cap B)  >=  alpha * U,

with B the open set, U = D - s(A), s'_i = min(s_i, U), x(J) = sum x_i D,
and alpha = 2/(2+eps).  ``build_fci_protocol`` assembles a protocol tree
computing the slack in expectation: Bob first samples a canonical solution
from the convex decomposition of his input (at most one partially loaded
open facility per component), a fair coin splits off the contribution of
open-but-idle facilities, and the main part reuses the knapsack-cover
discretization with a short announcement of the partially loaded facility.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .circuit import cnf_threshold_circuit
from .errors import CapacityError, DomainError, InputError
from .knapsack import alpha_of
from .kc_protocol import Discretization, _discretize_core, _smallest_large_token, delta_of
from .protocol import (
    ALICE,
    BOB,
    Internal,
    Leaf,
    ONE,
    ProtocolTree,
    ZERO,
    alice_bit,
    bit_width,
    bob_bit,
    deterministic_cascade,
    kw_subtree,
    uniform_gadget,
    zero_leaf,
)
from .rationals import format_rational, parse_rational

CANONICAL_FAMILY_CAP = 4096


@dataclass(frozen=True)
class FacilityInstance:
    """Facility capacities and a single demand; costs are carried, unused."""

    capacities: tuple[int, ...]
    demand: int
    open_costs: tuple[Fraction, ...] | None = None
    unit_costs: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        if not self.capacities:
            raise InputError("instance needs at least one facility")
        if any((not isinstance(s, int)) or s <= 0 for s in self.capacities):
            raise InputError("capacities must be positive integers")
        if not isinstance(self.demand, int) or self.demand <= 0:
            raise InputError("demand must be a positive integer")
        if sum(self.capacities) < self.demand:
            raise InputError("total capacity cannot meet the demand")
        for costs in (self.open_costs, self.unit_costs):
            if costs is not None and len(costs) != len(self.capacities):
                raise InputError("cost vector length differs from facility count")

    @property
    def n(self) -> int:
        return len(self.capacities)

    def total(self, items) -> int:
        return sum(self.capacities[i] for i in items)


@dataclass(frozen=True)
class FlowSolution:
    """Open indicators y and served demand fractions x (exact rationals)."""

    y: tuple[int, ...]
    x: tuple[Fraction, ...]

    @property
    def support(self) -> frozenset:
        return frozenset(i for i, open_ in enumerate(self.y) if open_)

    def served(self, inst: FacilityInstance, i: int) -> Fraction:
        return self.x[i] * inst.demand


def check_solution(inst: FacilityInstance, sol: FlowSolution):
    if len(sol.y) != inst.n or len(sol.x) != inst.n:
        raise InputError("solution dimensions differ from the instance")
    if any(b not in (0, 1) for b in sol.y):
        raise InputError("y must be a bit vector")
    if sum(sol.x) != 1:
        raise DomainError("demand is not met exactly")
    for i in range(inst.n):
        load = sol.x[i] * inst.demand
        if load < 0 or load > sol.y[i] * inst.capacities[i]:
            raise DomainError(f"facility {i} load violates its capacity bound")


@dataclass(frozen=True)
class FlowTuple:
    """Partition (A, F1, F2) of the facilities with A infeasible."""

    a: frozenset
    f1: frozenset
    f2: frozenset


def check_tuple(inst: FacilityInstance, t: FlowTuple):
    universe = frozenset(range(inst.n))
    if t.a | t.f1 | t.f2 != universe or len(t.a) + len(t.f1) + len(t.f2) != inst.n:
        raise InputError("tuple does not partition the facilities")
    if inst.total(t.a) >= inst.demand:
        raise DomainError("A covers the demand; tuple is not infeasible")


@dataclass(frozen=True)
class SupportPartition:
    """Open facilities split by load: full, strictly partial, idle."""

    f1_t: frozenset
    f2_t: frozenset
    f3_t: frozenset


def partition_support(inst: FacilityInstance, sol: FlowSolution) -> SupportPartition:
    check_solution(inst, sol)
    full, partial, idle = set(), set(), set()
    for i in sol.support:
        load = sol.x[i] * inst.demand
        if load == 0:
            idle.add(i)
        elif load == inst.capacities[i]:
            full.add(i)
        else:
            partial.add(i)
    return SupportPartition(frozenset(full), frozenset(partial), frozenset(idle))


def is_canonical(inst: FacilityInstance, sol: FlowSolution) -> bool:
    """At most one open facility carries a strictly partial load."""
    return len(partition_support(inst, sol).f2_t) <= 1


def fci_slack(inst: FacilityInstance, t: FlowTuple, sol: FlowSolution, eps) -> Fraction:
    """Exact slack of the weakened flow-cover inequality."""
    check_tuple(inst, t)
    check_solution(inst, sol)
    residual = inst.demand - inst.total(t.a)
    open_set = sol.support
    clipped = sum(
        min(inst.capacities[i], residual) for i in t.f1 if i in open_set
    )
    routed = sum(
        (sol.x[i] * inst.demand for i in t.f2 if i in open_set), Fraction(0)
    )
    return clipped + routed - alpha_of(eps) * residual


def gamma(inst: FacilityInstance, t: FlowTuple, sol: FlowSolution,
          part: SupportPartition, disc: Discretization) -> Fraction:
    """Contribution of the single partially loaded facility, by its class."""
    if len(part.f2_t) > 1:
        raise DomainError("gamma is defined for canonical solutions only")
    if not part.f2_t:
        return Fraction(0)
    (j,) = part.f2_t
    if j in t.f1:
        return Fraction(min(inst.capacities[j], disc.residual))
    if j in t.f2:
        return sol.x[j] * inst.demand
    return Fraction(0)


def facility_discretize(inst: FacilityInstance, items, eps) -> Discretization:
    items = frozenset(items)
    if any(i < 0 or i >= inst.n for i in items):
        raise InputError("facility indices out of range")
    return _discretize_core(inst.capacities, inst.demand, items, Fraction(eps))


# ---------------------------------------------------------------------------
# canonical solutions


def enumerate_canonical(inst: FacilityInstance,
                        cap: int = CANONICAL_FAMILY_CAP) -> tuple[FlowSolution, ...]:
    """Every canonical feasible solution, in a deterministic order.

    For each open set these are the vertices of the routing polytope: a set
    of fully loaded facilities plus at most one partially loaded one.
    """
    n = inst.n
    demand = Fraction(inst.demand)
    family: dict = {}
    for mask in range(1, 1 << n):
        support = [i for i in range(n) if (mask >> i) & 1]
        if sum(inst.capacities[i] for i in support) < inst.demand:
            continue
        y = tuple(1 if i in support else 0 for i in range(n))
        caps = {i: Fraction(inst.capacities[i]) / demand for i in support}
        fillable = [i for i in support if caps[i] <= 1]
        for sub in range(1 << len(fillable)):
            full = [fillable[k] for k in range(len(fillable)) if (sub >> k) & 1]
            used = sum((caps[i] for i in full), Fraction(0))
            if used > 1:
                continue
            rem = 1 - used
            if rem == 0:
                x = tuple(caps.get(i, ZERO) if i in full else ZERO for i in range(n))
                family.setdefault((y, x), FlowSolution(y, x))
                continue
            for j in support:
                if j in full or caps[j] <= rem:
                    continue
                x = tuple(
                    caps[i] if i in full else (rem if i == j else ZERO)
                    for i in range(n)
                )
                family.setdefault((y, x), FlowSolution(y, x))
        if len(family) > cap:
            raise CapacityError(
                f"canonical family exceeds the cap of {cap} solutions"
            )
    return tuple(family[key] for key in sorted(family))


def canonical_decompose(inst: FacilityInstance, sol: FlowSolution
                        ) -> list[tuple[Fraction, FlowSolution]]:
    """Write a feasible solution as an exact convex combination of canonical
    ones with the same open set, by repeated two-coordinate transfers."""
    check_solution(inst, sol)
    demand = Fraction(inst.demand)
    caps = tuple(
        Fraction(inst.capacities[i]) * sol.y[i] / demand for i in range(inst.n)
    )

    out: dict[tuple, Fraction] = {}

    def interior(z):
        return [i for i in range(inst.n) if 0 < z[i] < caps[i]]

    def rec(z, weight):
        inner = interior(z)
        if len(inner) <= 1:
            key = tuple(z)
            out[key] = out.get(key, ZERO) + weight
            return
        i, j = inner[0], inner[1]
        up = min(caps[i] - z[i], z[j])      # push z_i up, z_j down
        down = min(z[i], caps[j] - z[j])    # push z_i down, z_j up
        z_up = list(z)
        z_up[i] += up
        z_up[j] -= up
        z_down = list(z)
        z_down[i] -= down
        z_down[j] += down
        total = up + down
        rec(z_up, weight * down / total)
        rec(z_down, weight * up / total)

    rec(list(sol.x), ONE)
    return [(w, FlowSolution(sol.y, x)) for x, w in sorted(out.items())]


# ---------------------------------------------------------------------------
# the protocol


@dataclass(frozen=True)
class _Component:
    """Path-known data of one sampled canonical solution."""

    sol: FlowSolution
    full: frozenset      # fully loaded open facilities
    partial: frozenset   # zero or one facility
    idle: frozenset
    projected: frozenset  # full | partial

    @classmethod
    def of(cls, inst, sol):
        part = partition_support(inst, sol)
        return cls(
            sol=sol,
            full=part.f1_t,
            partial=part.f2_t,
            idle=part.f3_t,
            projected=part.f1_t | part.f2_t,
        )


def build_fci_protocol(inst: FacilityInstance, eps,
                       circuit_builder=cnf_threshold_circuit,
                       family_cap: int = CANONICAL_FAMILY_CAP) -> ProtocolTree:
    """Protocol tree whose expectation equals the weakened flow-cover slack.

    Alice's input is a FlowTuple, Bob's is any feasible FlowSolution.
    """
    eps = Fraction(eps)
    n = inst.n
    sizes = inst.capacities
    demand = inst.demand
    alpha = alpha_of(eps)
    delta = delta_of(eps)
    total_size = sum(sizes)

    family = enumerate_canonical(inst, cap=family_cap)
    index_of = {(sol.y, sol.x): k for k, sol in enumerate(family)}
    components = [_Component.of(inst, sol) for sol in family]

    weight_cache: dict[FlowSolution, dict[int, Fraction]] = {}

    def weights_for(sol: FlowSolution) -> dict[int, Fraction]:
        table = weight_cache.get(sol)
        if table is None:
            table = {}
            for w, comp in canonical_decompose(inst, sol):
                k = index_of[(comp.y, comp.x)]
                table[k] = table.get(k, ZERO) + w
            weight_cache[sol] = table
        return table

    disc_cache: dict[frozenset, Discretization] = {}

    def disc(t: FlowTuple) -> Discretization:
        d = disc_cache.get(t.a)
        if d is None:
            d = _discretize_core(sizes, demand, t.a, eps)
            disc_cache[t.a] = d
        return d

    step = 1 + delta
    powers = [Fraction(1)]
    while powers[-1] * step <= demand:
        powers.append(powers[-1] * step)
    k_max = len(powers) - 1
    token_bits = bit_width(n)
    k_bits = bit_width(k_max)
    j_bits = bit_width(n - 1 if n > 1 else 1)

    circuits: dict = {}

    def truncation(cutoff: int, threshold: int):
        from .circuit import ThresholdSpec

        key = (cutoff, threshold)
        if key not in circuits:
            weights = tuple(s if s >= cutoff else 0 for s in sizes)
            circuits[key] = circuit_builder(ThresholdSpec(weights, threshold))
        return circuits[key]

    def clipped(i: int, t: FlowTuple) -> Fraction:
        return Fraction(min(sizes[i], disc(t).residual))

    def class_exit(comp, i, scale):
        """Alice classifies a fully loaded facility: clipped size if hers to
        cover (F1), full size if demand-routed (F2), nothing if in A."""
        return alice_bit(
            lambda t, i=i: i in t.f1,
            lambda i=i: Leaf(
                ALICE, lambda t, i=i, scale=scale: scale * clipped(i, t),
                tag=f"emit:{i}", index=i,
            ),
            lambda i=i: alice_bit(
                lambda t, i=i: i in t.f2,
                lambda i=i: Leaf(
                    ALICE, lambda _t, v=scale * Fraction(sizes[i]): v,
                    tag=f"emit-full:{i}", index=i,
                ),
                zero_leaf,
                tag=f"class2:{i}",
            ),
            tag=f"class1:{i}",
        )

    def item_exit_holds(comp: _Component, i: int, scale: int, exclude):
        """Sampling for the game route: every fully loaded facility except
        the agreed index contributes by its class."""
        if i == exclude or i not in comp.full:
            return zero_leaf(f"dead:{i}")
        return class_exit(comp, i, scale)

    def item_exit_fails(comp: _Component, i: int, scale: int, large: frozenset):
        """Sampling for the correction route: large loaded facilities by
        class, plus small facilities in A outside the projected support."""
        if i in large:
            if i not in comp.full:
                return zero_leaf(f"dead:{i}")
            return class_exit(comp, i, scale)
        if i in comp.projected:
            return zero_leaf(f"dead:open:{i}")
        return alice_bit(
            lambda t, i=i: i in t.a,
            lambda i=i: Leaf(
                ALICE, lambda _t, v=scale * Fraction(sizes[i]): v,
                tag=f"skip:{i}", index=i,
            ),
            zero_leaf,
            tag=f"a-held:{i}",
        )


    def holds_route(comp, j, j_class, large, cutoff, delta_tilde, u_tilde):
        """Threshold reached: play the game on the truncated circuit."""
        threshold = math.ceil(demand - delta_tilde)
        circuit = truncation(cutoff, threshold)
        if circuit.is_constant:
            return zero_leaf("dead:constant-truncation")
        case2 = j_class == 2
        bob_side = comp.full if case2 else comp.projected
        bob_bits = tuple(1 if (i in bob_side and i in large) else 0 for i in range(n))

        def after_istar(i_star: int):
            def full_gadget(i_star=i_star, pulled_from_f1=None):
                scale = n + 2 if case2 else n + 1

                def corrected(t, i_star=i_star):
                    d = disc(t)
                    if not case2 and j is not None and i_star == j:
                        pulled = ZERO
                        gam = clipped(j, t)
                    else:
                        pulled = (
                            clipped(i_star, t)
                            if i_star in t.f1
                            else Fraction(sizes[i_star])
                        )
                        gam = ZERO if case2 or j is None or j_class != 1 else clipped(j, t)
                    return scale * (gam + pulled - alpha * d.residual)

                def make_exit(i: int):
                    if i == n:
                        return Leaf(ALICE, corrected, tag="pulled-term", index=i)
                    if i == n + 1:  # case 2 only: Bob pays the partial load
                        load = comp.sol.x[j] * demand
                        return Leaf(
                            BOB, lambda _b, v=(n + 2) * load: v,
                            tag=f"partial:{j}", index=i,
                        )
                    return item_exit_holds(comp, i, scale, exclude=i_star)

                return uniform_gadget(scale, ALICE, make_exit, tag="pick")

            return full_gadget()

        return kw_subtree(
            circuit,
            alice_view=lambda t: tuple(1 if i in t.a else 0 for i in range(n)),
            bob_view=lambda _b, bits=bob_bits: bits,
            continuation=after_istar,
        )

    def fails_route(comp, j, j_class, large, small, u_tilde, sigma):
        """Threshold missed: three sampled sums plus scalar corrections."""
        case2 = j_class == 2
        scale = n + 2 if case2 else n + 3
        small_full = sum(sizes[i] for i in comp.full if i in small)
        partial_small_load = ZERO
        partial_load = ZERO
        if j is not None:
            partial_load = comp.sol.x[j] * demand
            if j in small:
                partial_small_load = partial_load

        def make_exit(i: int):
            if i == n:  # Bob: sampled small cover against the grid
                extra = partial_load if case2 else partial_small_load
                value = scale * (
                    small_full + extra - sigma - (1 - delta) * u_tilde
                )
                return Leaf(BOB, lambda _b, v=value: v, tag="small-cover", index=i)
            if i == n + 1:  # Alice: grid slack
                def grid_slack(t):
                    d = disc(t)
                    held = sum(sizes[k] for k in t.a if k in small)
                    return scale * (
                        sigma + (1 - delta) * u_tilde - alpha * d.residual - held
                    )

                return Leaf(ALICE, grid_slack, tag="grid-slack", index=i)
            if i == n + 2:  # case 1 only: the partial facility's balance
                if j is None:
                    return zero_leaf("dead:no-partial")
                if j in small:
                    value = scale * (Fraction(sizes[j]) - partial_load)
                    return Leaf(BOB, lambda _b, v=value: v, tag=f"balance:{j}", index=i)

                def large_gamma(t):
                    return scale * (clipped(j, t) if j in t.f1 else ZERO)

                return Leaf(ALICE, large_gamma, tag=f"balance:{j}", index=i)
            return item_exit_fails(comp, i, scale, large)

        return uniform_gadget(scale, ALICE, make_exit, tag="pick")

    def main_protocol(comp: _Component):
        def after_sigma(token, k, ell, multiple):
            u_tilde = powers[k]
            if multiple > math.floor(Fraction(total_size) / (delta * u_tilde)):
                return zero_leaf("dead:sigma-range")
            sigma = multiple * delta * u_tilde
            delta_tilde = (1 + ell * delta) * u_tilde
            if token < n:
                cutoff = sizes[token]
                large = frozenset(i for i in range(n) if sizes[i] >= cutoff)
            else:
                cutoff = None
                large = frozenset()
            small = frozenset(range(n)) - large

            def with_class(j, j_class):
                if j is not None and j_class == 3:
                    return zero_leaf("dead:class-range")
                if j_class == 2:
                    threshold_set = comp.full
                else:
                    threshold_set = comp.projected
                covered = sum(sizes[i] for i in threshold_set if i in large)
                holds = covered >= demand - delta_tilde

                def make_holds():
                    if not large:
                        return zero_leaf("dead:no-large")
                    return holds_route(
                        comp, j, j_class, large, cutoff, delta_tilde, u_tilde
                    )

                def make_fails():
                    return fails_route(comp, j, j_class, large, small, u_tilde, sigma)

                return bob_bit(
                    lambda _b, h=holds: h,
                    make_holds,
                    make_fails,
                    tag="route",
                )

            if not comp.partial:
                return with_class(None, None)
            (j,) = comp.partial
            return deterministic_cascade(
                BOB, j_bits, lambda _b, j=j: j,
                lambda decoded, j=j: (
                    zero_leaf("dead:j-range") if decoded != j else
                    deterministic_cascade(
                        ALICE, 2,
                        lambda t, j=j: 0 if j in t.a else (1 if j in t.f1 else 2),
                        lambda cls, j=j: with_class(j, cls),
                        tag="class",
                    )
                ),
                tag="announce-j",
            )

        def after_ell(token, k, ell):
            u_tilde = powers[k]
            bound = math.ceil((demand - u_tilde) / (delta * u_tilde)) - 1
            if ell > bound:
                return zero_leaf("dead:ell-range")
            sigma_bits = bit_width(math.floor(Fraction(total_size) / (delta * u_tilde)))

            def sigma_message(t):
                held = sum(
                    sizes[i] for i in t.a if sizes[i] < disc(t).residual
                )
                return math.floor(Fraction(held) / (delta * powers[k]))

            return deterministic_cascade(
                ALICE, sigma_bits, sigma_message,
                lambda multiple: after_sigma(token, k, ell, multiple), tag="sigma",
            )

        def after_k(token, k):
            if k > k_max:
                return zero_leaf("dead:k-range")
            u_tilde = powers[k]
            ell_bits = bit_width(
                math.ceil((demand - u_tilde) / (delta * u_tilde)) - 1 + 1
            )
            return deterministic_cascade(
                ALICE, ell_bits, lambda t: disc(t).ell + 1,
                lambda shifted: after_ell(token, k, shifted - 1), tag="ell",
            )

        def after_token(token):
            if token > n:
                return zero_leaf("dead:token-range")
            return deterministic_cascade(
                ALICE, k_bits, lambda t: disc(t).k,
                lambda k: after_k(token, k), tag="scale",
            )

        return deterministic_cascade(
            ALICE, token_bits,
            lambda t: _smallest_large_token(sizes, disc(t).i_large),
            after_token, tag="token",
        )

    def idle_side(comp: _Component):
        """Doubled contribution of open-but-idle facilities assigned to F1."""

        def make_exit(i: int):
            if i not in comp.idle:
                return zero_leaf(f"dead:not-idle:{i}")
            return alice_bit(
                lambda t, i=i: i in t.f1,
                lambda i=i: Leaf(
                    ALICE, lambda t, i=i: 2 * n * clipped(i, t),
                    tag=f"idle:{i}", index=i,
                ),
                zero_leaf,
                tag=f"f1:{i}",
            )

        return uniform_gadget(n, BOB, make_exit, tag="idle-pick")

    def doubled_main(comp: _Component):
        # outputs of the main part are doubled to undo the fair coin
        tree = main_protocol(comp)

        def double(node):
            if node.is_leaf:
                original = node.value
                return Leaf(
                    node.owner, lambda inp, f=original: 2 * f(inp),
                    tag=node.tag, index=node.index,
                )
            return Internal(
                node.owner, node.prob,
                lambda node=node: double(node.left),
                lambda node=node: double(node.right),
                tag=node.tag,
            )

        return double(tree)

    def after_component(k: int):
        comp = components[k]
        return Internal(
            ALICE,
            lambda _t: Fraction(1, 2),
            lambda comp=comp: idle_side(comp),
            lambda comp=comp: doubled_main(comp),
            tag="coin",
        )

    def sample_component(lo: int, hi: int):
        if hi - lo == 1:
            return after_component(lo)
        mid = (lo + hi + 1) // 2

        def prob(sol: FlowSolution):
            table = weights_for(sol)
            total = sum(
                (w for k, w in table.items() if lo <= k < hi), ZERO
            )
            if total == 0:
                return ZERO
            left = sum((w for k, w in table.items() if lo <= k < mid), ZERO)
            return left / total

        return Internal(
            BOB, prob,
            lambda lo=lo, mid=mid: sample_component(lo, mid),
            lambda mid=mid, hi=hi: sample_component(mid, hi),
            tag=f"decompose[{lo},{hi})",
        )

    root = sample_component(0, len(components))
    return ProtocolTree(
        root=root,
        kind="flow-cover-slack",
        meta={"n": n, "eps": eps, "demand": demand, "capacities": sizes,
              "family_size": len(components)},
    )


# ---------------------------------------------------------------------------
# deterministic verification family


def all_tuples(inst: FacilityInstance):
    """Every infeasible tuple (A, F1, F2), in a deterministic order."""
    import itertools

    n = inst.n
    for assign in itertools.product((0, 1, 2), repeat=n):
        a = frozenset(i for i in range(n) if assign[i] == 0)
        if inst.total(a) >= inst.demand:
            continue
        yield FlowTuple(
            a,
            frozenset(i for i in range(n) if assign[i] == 1),
            frozenset(i for i in range(n) if assign[i] == 2),
        )


def solution_grid(inst: FacilityInstance) -> list[FlowSolution]:
    """Canonical solutions plus same-support mixtures: a deterministic grid
    of feasible solutions covering partial loads and idle facilities."""
    import itertools

    family = enumerate_canonical(inst)
    sols = list(family)
    by_support: dict = {}
    for sol in family:
        by_support.setdefault(sol.y, []).append(sol)
    for group in by_support.values():
        for s1, s2 in itertools.combinations(group, 2):
            sols.append(FlowSolution(s1.y, tuple((a + b) / 2 for a, b in zip(s1.x, s2.x))))
        if len(group) >= 3:
            mean = tuple(
                sum(col, Fraction(0)) / len(group) for col in zip(*(s.x for s in group))
            )
            sols.append(FlowSolution(group[0].y, mean))
    seen: dict = {}
    for sol in sols:
        seen.setdefault((sol.y, sol.x), sol)
    return list(seen.values())


def verify_sweep(inst: FacilityInstance, eps, circuit_builder=cnf_threshold_circuit) -> dict:
    """Exactness sweep of the protocol over all tuples and the solution grid."""
    from .protocol import exact_expectation, pair_height

    tree = build_fci_protocol(inst, eps, circuit_builder=circuit_builder)
    pairs = failures = 0
    max_height = 0
    for t in all_tuples(inst):
        for sol in solution_grid(inst):
            pairs += 1
            if exact_expectation(tree, t, sol) != fci_slack(inst, t, sol, eps):
                failures += 1
            max_height = max(max_height, pair_height(tree, t, sol))
    return {
        "pairs": pairs,
        "failures": failures,
        "max_height": max_height,
        "family_size": tree.meta["family_size"],
        "status": "PASS" if failures == 0 else "FAIL",
    }


# ---------------------------------------------------------------------------
# file formats


def instance_to_json(inst: FacilityInstance) -> str:
    doc = {
        "n": inst.n,
        "capacities": list(inst.capacities),
        "demand": inst.demand,
    }
    if inst.open_costs is not None:
        doc["open_costs"] = [format_rational(c) for c in inst.open_costs]
    if inst.unit_costs is not None:
        doc["unit_costs"] = [format_rational(c) for c in inst.unit_costs]
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def instance_from_json(text: str) -> FacilityInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"facility file is not valid JSON: {exc}") from exc
    for field_ in ("capacities", "demand"):
        if field_ not in doc:
            raise InputError(f"facility file lacks field {field_!r}")
    caps = tuple(doc["capacities"])
    if "n" in doc and doc["n"] != len(caps):
        raise InputError("field 'n' disagrees with the capacities array")
    open_costs = unit_costs = None
    if doc.get("open_costs") is not None:
        open_costs = tuple(parse_rational(c) for c in doc["open_costs"])
    if doc.get("unit_costs") is not None:
        unit_costs = tuple(parse_rational(c) for c in doc["unit_costs"])
    return FacilityInstance(caps, doc["demand"], open_costs, unit_costs)


def solution_to_json(sol: FlowSolution) -> str:
    return json.dumps(
        {"y": list(sol.y), "x": [format_rational(v) for v in sol.x]},
        sort_keys=True, separators=(",", ":"),
    )


def solution_from_json(text: str) -> FlowSolution:
    doc = json.loads(text)
    return FlowSolution(tuple(doc["y"]), tuple(parse_rational(v) for v in doc["x"]))
