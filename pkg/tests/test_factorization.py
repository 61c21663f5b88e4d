"""Row/column factors, the factorization identity, and EF row emission."""

import random
from fractions import Fraction

import pytest

from kcover.errors import DomainError
from kcover.factorization import (
    canonical_lift,
    column_vector,
    emit_ef,
    factorize_full,
    reserved_key,
    row_vector,
    system_from_json,
    system_to_json,
    verify_factorization,
)
from kcover.kc_protocol import build_kc_protocol, height_budget
from kcover.knapsack import (
    KnapsackInstance,
    alpha_of,
    enumerate_rows_and_columns,
    exact_slack_matrix,
    random_instance,
)
from kcover.protocol import ALICE, Leaf, exact_expectation, side_products

F = Fraction


def test_row_times_column_reproduces_expectation(e1):
    tree = build_kc_protocol(e1, 1)
    rows, cols = enumerate_rows_and_columns(e1)
    for a in rows:
        fa = row_vector(tree, a)
        assert all(v > 0 for v in fa.values())
        for b in cols:
            vb = column_vector(tree, b, leaves=fa.keys())
            total = sum(fa[p] * vb.get(p, F(0)) for p in fa)
            assert total == exact_expectation(tree, a, b)


def test_root_only_tree_single_entry():
    leaf = Leaf(ALICE, lambda _a: F(7, 2), tag="const")
    assert row_vector(leaf, frozenset()) == {"": F(7, 2)}
    assert column_vector(leaf, (1,), leaves=[""]) == {"": F(1)}


def test_factorize_full_identity(e1):
    tree = build_kc_protocol(e1, 1)
    fact = factorize_full(tree, e1, 1)
    assert verify_factorization(fact, e1, 1)
    oracle = exact_slack_matrix(e1, 1)
    i = fact.row_sets.index(frozenset({2}))
    j = fact.col_bits.index((1, 1, 0))
    assert fact.product_entry(i, j) == F(4, 3) == oracle.entries[i][j]


def test_factorize_single_item_instance():
    inst = KnapsackInstance((5,), 5)
    tree = build_kc_protocol(inst, 1)
    fact = factorize_full(tree, inst, 1)
    assert fact.product_entry(0, 0) == F(5, 3)
    assert verify_factorization(fact, inst, 1)


def test_factorization_random_instances_and_eps():
    rng = random.Random(71)
    for _ in range(8):
        inst = random_instance(rng, rng.randint(1, 6), 9)
        for eps in (F(1), F(1, 2)):
            tree = build_kc_protocol(inst, eps)
            fact = factorize_full(tree, inst, eps)
            assert verify_factorization(fact, inst, eps)
            assert fact.rank == len(fact.leaves)


def test_ownership_separation_on_random_pairs(e1):
    tree = build_kc_protocol(e1, F(1, 2))
    rows, cols = enumerate_rows_and_columns(e1)
    rng = random.Random(5)
    for _ in range(8):
        a, b = rng.choice(rows), rng.choice(cols)
        fa = row_vector(tree, a)
        vb = column_vector(tree, b)
        sides = side_products(tree, a, b)
        for path, (alice_part, bob_part) in sides.items():
            assert fa.get(path, F(0)) == alice_part
            if alice_part:
                assert vb.get(path, F(0)) == bob_part


def test_row_support_within_tree_height_bound(e1, case_b_instance):
    for inst in (e1, case_b_instance):
        tree = build_kc_protocol(inst, 1)
        budget = height_budget(inst, 1)
        rows, _ = enumerate_rows_and_columns(inst)
        for a in rows:
            support = row_vector(tree, a)
            assert len(support) <= 2 ** budget
            assert all(len(path) <= budget for path in support)


def test_emit_ef_canonical_lifts_satisfy_rows(e1):
    tree = build_kc_protocol(e1, 1)
    rows, cols = enumerate_rows_and_columns(e1)
    system = emit_ef(tree, e1, 1, rows)
    assert len(system.rows) == 4
    for b in cols:
        lift = canonical_lift(tree, system, e1, b)
        for row in system.rows:
            lhs = sum(c * x for c, x in zip(row.lhs, b)) - row.constant
            rhs = sum(v * lift.get(p, F(0)) for p, v in row.y_coeffs.items())
            assert lhs == rhs
        for i in range(e1.n):
            assert lift.get(reserved_key(i), F(0)) == b[i]


def test_emit_ef_empty_row_list(e1):
    tree = build_kc_protocol(e1, 1)
    system = emit_ef(tree, e1, 1, [])
    assert system.rows == [] and system.leaves == []
    assert system.variable_count == e1.n  # reserved variables only


def test_emit_ef_root_row_transcription(e1):
    tree = build_kc_protocol(e1, 1)
    system = emit_ef(tree, e1, 1, [frozenset()])
    (row,) = system.rows
    assert row.lhs == (F(2), F(3), F(4))
    assert row.constant == alpha_of(1) * 5
    assert all(v >= 0 for v in row.y_coeffs.values())


def test_emit_ef_rejects_feasible_sets(e1):
    tree = build_kc_protocol(e1, 1)
    with pytest.raises(DomainError):
        emit_ef(tree, e1, 1, [frozenset({1, 2})])


def test_row_forces_weakened_inequality(e1):
    # any (x, y >= 0) satisfying an emitted equality satisfies the inequality
    tree = build_kc_protocol(e1, 1)
    system = emit_ef(tree, e1, 1, [frozenset({2})])
    (row,) = system.rows
    rng = random.Random(9)
    keys = list(row.y_coeffs)
    for _ in range(20):
        y = {k: F(rng.randint(0, 5), rng.randint(1, 4)) for k in rng.sample(keys, 3)}
        rhs = sum(row.y_coeffs[k] * v for k, v in y.items())
        # choose x on the equality: x0 + x1 = rhs + 2/3, x free otherwise
        x0 = F(rng.randint(0, 3), rng.randint(1, 3))
        x = (x0, rhs + row.constant - x0, F(rng.randint(0, 3)))
        lhs = sum(c * v for c, v in zip(row.lhs, x))
        assert lhs - row.constant == rhs >= 0


def test_system_json_round_trip(e1):
    tree = build_kc_protocol(e1, F(1, 2))
    rows, _ = enumerate_rows_and_columns(e1)
    system = emit_ef(tree, e1, F(1, 2), rows[:2])
    text = system_to_json(system)
    parsed = system_from_json(text)
    assert parsed.n == system.n and parsed.eps == system.eps
    assert parsed.leaves == system.leaves
    assert [r.row_set for r in parsed.rows] == [r.row_set for r in system.rows]
    for old, new in zip(system.rows, parsed.rows):
        assert old.lhs == new.lhs and old.constant == new.constant
        assert old.y_coeffs == new.y_coeffs
