"""Separators and the cutting-plane loop: values, certificates, bounds."""

import random
from fractions import Fraction

import pytest

from helpers import vertex_lp_min, weakened_rows
from kcover.cutting_plane import (
    cutting_plane_solve,
    separate_exact,
    separate_halfround,
    weakened_lp_value,
)
from kcover.errors import InputError
from kcover.knapsack import KnapsackInstance, dp_optimum, random_instance

F = Fraction


def test_halfround_examples(e1):
    out = separate_halfround(e1, (F(0), F(0), F(0)), 1)
    assert not out.accepted and out.row_set == frozenset()
    out = separate_halfround(e1, (F(10, 27),) * 3, 1)
    assert out.accepted and out.rounded_set is None
    out = separate_halfround(e1, (F(1), F(1), F(1)), 1)
    assert out.accepted and out.rounded_set == frozenset({0, 1, 2})


def test_exact_most_violated(e1):
    out = separate_exact(e1, (F(0), F(0), F(0)), 1)
    assert not out.accepted and out.row_set == frozenset()  # violation 10/3 tops
    satisfied = (F(4, 15), F(2, 5), F(2, 5))
    assert separate_exact(e1, satisfied, 1).accepted


def test_exact_accept_implies_halfround_accept():
    rng = random.Random(23)
    for _ in range(10):
        inst = random_instance(rng, rng.randint(1, 6), 9)
        for _ in range(30):
            x = tuple(F(rng.randint(0, 6), 4) for _ in range(inst.n))
            for eps in (F(1), F(1, 2)):
                if separate_exact(inst, x, eps).accepted:
                    assert separate_halfround(inst, x, eps).accepted


def test_e1_both_separators_reach_the_lp_optimum(e1):
    oracle = vertex_lp_min(weakened_rows(e1, 1), (1, 1, 1))
    assert oracle == F(16, 15)
    for separator in ("exact", "halfround"):
        result = cutting_plane_solve(e1, (1, 1, 1), 1, separator=separator)
        assert result.value == oracle
        assert result.iterations <= result.variable_count + 1
        opt, _ = dp_optimum(e1, (1, 1, 1))
        assert result.value <= opt <= 3 * result.value


def test_single_item_instance():
    inst = KnapsackInstance((5,), 5)
    result = cutting_plane_solve(inst, (1,), 1, separator="exact")
    assert result.value == F(2, 3) and result.x == (F(2, 3),)
    opt, _ = dp_optimum(inst, (1,))
    assert opt == 1 <= 3 * result.value


def test_exact_separation_matches_monolithic_lp():
    rng = random.Random(41)
    for _ in range(12):
        inst = random_instance(rng, rng.randint(1, 7), 9)
        costs = tuple(rng.randint(0, 20) for _ in range(inst.n))
        for eps in (F(1), F(1, 4)):
            result = cutting_plane_solve(inst, costs, eps, separator="exact")
            assert result.value == weakened_lp_value(inst, costs, eps)
            # accepted point satisfies every weakened inequality
            assert separate_exact(inst, result.x, eps).accepted


def test_gap_sandwich_on_random_instances():
    rng = random.Random(59)
    for _ in range(15):
        inst = random_instance(rng, rng.randint(1, 8), 9)
        costs = tuple(rng.randint(0, 20) for _ in range(inst.n))
        opt, _ = dp_optimum(inst, costs)
        for eps in (F(1), F(1, 4)):
            for separator in ("exact", "halfround"):
                result = cutting_plane_solve(inst, costs, eps, separator=separator)
                assert result.value <= opt <= (2 + eps) * result.value
                assert result.iterations <= result.variable_count + 1


def test_rounding_certificate_cost_is_reported(e1):
    # zero costs make x = (1,1,1) optimal immediately, triggering the
    # feasible-rounding acceptance path
    result = cutting_plane_solve(e1, (0, 0, 0), 1, separator="halfround")
    if result.rounded_set is not None:
        assert result.rounded_cost == 0


def test_rows_are_never_repeated(e1):
    result = cutting_plane_solve(e1, (1, 1, 1), 1, separator="exact")
    assert len(set(result.rows_used)) == len(result.rows_used)


def test_negative_costs_rejected(e1):
    with pytest.raises(InputError):
        cutting_plane_solve(e1, (-1, 1, 1), 1)
