"""Flow-cover slacks, canonical structure, and the facility protocol."""

import random
from fractions import Fraction

import pytest

from kcover.errors import DomainError, InputError
from kcover.flow_cover import (
    FacilityInstance,
    FlowSolution,
    FlowTuple,
    all_tuples,
    build_fci_protocol,
    canonical_decompose,
    enumerate_canonical,
    facility_discretize,
    fci_slack,
    gamma,
    instance_from_json,
    instance_to_json,
    is_canonical,
    partition_support,
    solution_from_json,
    solution_grid,
    solution_to_json,
    verify_sweep,
)
from kcover.kc_protocol import build_kc_protocol
from kcover.knapsack import KnapsackInstance, weakened_kc_slack
from kcover.protocol import exact_expectation

F = Fraction


@pytest.fixture
def duo():
    return FacilityInstance((3, 2), 4)


@pytest.fixture
def duo_solution():
    return FlowSolution((1, 1), (F(3, 4), F(1, 4)))


def test_slack_single_facility():
    inst = FacilityInstance((3,), 3)
    t = FlowTuple(frozenset(), frozenset({0}), frozenset())
    sol = FlowSolution((1,), (F(1),))
    assert fci_slack(inst, t, sol, 1) == F(3) - F(2, 3) * 3 == F(1)


def test_slack_partial_route(duo, duo_solution):
    t = FlowTuple(frozenset({0}), frozenset(), frozenset({1}))
    assert fci_slack(duo, t, duo_solution, 1) == F(1, 3)


def test_slack_reduces_to_cover_slack_without_f2():
    inst = FacilityInstance((3, 2), 4)
    knap = KnapsackInstance((3, 2), 4)
    sol = FlowSolution((1, 1), (F(3, 4), F(1, 4)))
    for a in (frozenset(), frozenset({0}), frozenset({1})):
        t = FlowTuple(a, frozenset(range(2)) - a, frozenset())
        b = tuple(sol.y)
        assert fci_slack(inst, t, sol, 1) == weakened_kc_slack(knap, a, b, 1)


def test_tuple_and_solution_validation(duo):
    with pytest.raises(DomainError):
        check = FlowTuple(frozenset({0, 1}), frozenset(), frozenset())
        fci_slack(duo, check, FlowSolution((1, 1), (F(3, 4), F(1, 4))), 1)
    with pytest.raises(InputError):
        bad = FlowTuple(frozenset({0}), frozenset({0}), frozenset({1}))
        fci_slack(duo, bad, FlowSolution((1, 1), (F(3, 4), F(1, 4))), 1)
    with pytest.raises(DomainError):
        t = FlowTuple(frozenset({0}), frozenset(), frozenset({1}))
        fci_slack(duo, t, FlowSolution((1, 1), (F(1, 2), F(1, 4))), 1)  # demand unmet
    with pytest.raises(DomainError):
        t = FlowTuple(frozenset({0}), frozenset(), frozenset({1}))
        fci_slack(duo, t, FlowSolution((0, 1), (F(3, 4), F(1, 4))), 1)  # closed use


def test_partition_examples(duo, duo_solution):
    part = partition_support(duo, duo_solution)
    assert part.f1_t == frozenset({0})
    assert part.f2_t == frozenset({1})
    assert part.f3_t == frozenset()
    assert is_canonical(duo, duo_solution)

    inst = FacilityInstance((4, 4), 4)
    halves = FlowSolution((1, 1), (F(1, 2), F(1, 2)))
    part = partition_support(inst, halves)
    assert part.f2_t == frozenset({0, 1})
    assert not is_canonical(inst, halves)

    lopsided = FlowSolution((1, 1), (F(1), F(0)))
    part = partition_support(inst, lopsided)
    assert part.f1_t == frozenset({0}) and part.f3_t == frozenset({1})
    assert is_canonical(inst, lopsided)


def test_gamma_cases():
    inst = FacilityInstance((4, 3), 5)
    disc = facility_discretize(inst, {1}, 1)  # residual 2
    sol = FlowSolution((1, 1), (F(2, 5), F(3, 5)))  # facility 0 partial
    part = partition_support(inst, sol)
    assert part.f2_t == frozenset({0})
    t_f1 = FlowTuple(frozenset({1}), frozenset({0}), frozenset())
    assert gamma(inst, t_f1, sol, part, disc) == 2  # clipped to the residual
    t_f2 = FlowTuple(frozenset({1}), frozenset(), frozenset({0}))
    assert gamma(inst, t_f2, sol, part, disc) == 2  # load 2/5 * 5
    t_a = FlowTuple(frozenset({0}), frozenset({1}), frozenset())
    disc_a = facility_discretize(inst, {0}, 1)
    assert gamma(inst, t_a, sol, part, disc_a) == 0
    both_interior = partition_support(inst, FlowSolution((1, 1), (F(3, 5), F(2, 5))))
    assert both_interior.f2_t == frozenset({0, 1})
    with pytest.raises(DomainError):
        gamma(inst, t_f1, sol, both_interior, disc)
    no_partial = partition_support(inst, FlowSolution((1, 1), (F(4, 5), F(1, 5))))
    assert no_partial.f2_t == frozenset({1})  # facility 0 is exactly full
    assert gamma(inst, t_a, sol, partition_support(inst, sol), disc_a) == 0


def test_decompose_two_halves():
    inst = FacilityInstance((4, 4), 4)
    sol = FlowSolution((1, 1), (F(1, 2), F(1, 2)))
    parts = canonical_decompose(inst, sol)
    assert sorted((w, c.x) for w, c in parts) == [
        (F(1, 2), (F(0), F(1))),
        (F(1, 2), (F(1), F(0))),
    ]


def test_decompose_identity_on_canonical(duo, duo_solution):
    parts = canonical_decompose(duo, duo_solution)
    assert parts == [(F(1), duo_solution)]


def test_decompose_recombines_exactly():
    rng = random.Random(6)
    instances = [
        FacilityInstance((3, 2), 4),
        FacilityInstance((2, 2, 3), 5),
        FacilityInstance((9, 2, 1), 4),
    ]
    for inst in instances:
        for sol in solution_grid(inst):
            parts = canonical_decompose(inst, sol)
            assert sum(w for w, _ in parts) == 1
            assert all(w >= 0 for w, _ in parts)
            for w, comp in parts:
                assert is_canonical(inst, comp)
                assert comp.support == sol.support
            for i in range(inst.n):
                assert sum(w * comp.x[i] for w, comp in parts) == sol.x[i]


def test_canonical_family_members_are_canonical():
    inst = FacilityInstance((4, 3, 2), 6)
    family = enumerate_canonical(inst)
    assert family
    for sol in family:
        assert is_canonical(inst, sol)
        assert sum(sol.x) == 1


def test_protocol_worked_example(duo, duo_solution):
    tree = build_fci_protocol(duo, 1)
    t = FlowTuple(frozenset({0}), frozenset(), frozenset({1}))
    assert exact_expectation(tree, t, duo_solution) == F(1, 3)


def test_protocol_exactness_sweep():
    for inst in (FacilityInstance((3, 2), 4), FacilityInstance((5, 1, 2), 6)):
        report = verify_sweep(inst, 1)
        assert report["status"] == "PASS" and report["failures"] == 0


def test_protocol_with_idle_facilities():
    inst = FacilityInstance((2, 2, 3), 5)
    tree = build_fci_protocol(inst, 1)
    sol = FlowSolution((1, 1, 1), (F(2, 5), F(0), F(3, 5)))  # facility 1 idle
    for t in all_tuples(inst):
        assert exact_expectation(tree, t, sol) == fci_slack(inst, t, sol, 1)


def test_degenerate_agreement_with_cover_protocol():
    inst = FacilityInstance((3, 2), 4)
    knap = KnapsackInstance((3, 2), 4)
    fci_tree = build_fci_protocol(inst, 1)
    kc_tree = build_kc_protocol(knap, 1)
    # integral solutions: every open facility fully loaded or idle
    for sol in solution_grid(inst):
        part = partition_support(inst, sol)
        if part.f2_t:
            continue
        b = tuple(sol.y)
        for a in (frozenset(), frozenset({0}), frozenset({1})):
            if inst.total(a) >= inst.demand:
                continue
            t = FlowTuple(a, frozenset(range(2)) - a, frozenset())
            assert exact_expectation(fci_tree, t, sol) == exact_expectation(
                kc_tree, a, b
            )


def test_capacity_above_demand_is_handled():
    inst = FacilityInstance((9, 2, 1), 4)
    report = verify_sweep(inst, F(1, 2))
    assert report["status"] == "PASS"


def test_json_round_trips(duo, duo_solution):
    text = instance_to_json(
        FacilityInstance((3, 2), 4, open_costs=(F(1), F(2)), unit_costs=(F(1, 2), F(3)))
    )
    parsed = instance_from_json(text)
    assert parsed.capacities == (3, 2) and parsed.demand == 4
    assert parsed.open_costs == (F(1), F(2))
    assert parsed.unit_costs == (F(1, 2), F(3))
    sol = solution_from_json(solution_to_json(duo_solution))
    assert sol == duo_solution
    with pytest.raises(InputError):
        instance_from_json('{"demand": 3}')
