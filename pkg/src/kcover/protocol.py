"""Executable two-party protocol trees with exact rational probabilities.

A tree node is owned by Alice or Bob.  An internal node carries a branch
function mapping the owner's input to the exact probability of taking the
left child; a leaf carries an output function mapping the owner's input to a
nonnegative rational.  Deterministic message exchanges are branch cascades
with probabilities in {0, 1}; sampling steps use input-independent
probabilities.

Children are materialized lazily and cached on first access.  Expansion is
idempotent (factories are deterministic), so concurrent traversals that race
on expansion resolve to identical nodes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .circuit import KIND_AND, KIND_INPUT, KIND_OR, MonotoneCircuit, evaluate
from .errors import DomainError, InputError, ProtocolInvariantError

ALICE = "alice"
BOB = "bob"

ZERO = Fraction(0)
ONE = Fraction(1)


class Leaf:
    __slots__ = ("owner", "value", "tag", "index")

    def __init__(self, owner, value, tag="", index=None):
        self.owner = owner
        self.value = value  # callable: owner's input -> Fraction
        self.tag = tag
        self.index = index  # carries e.g. the game's agreed item index

    is_leaf = True


class Internal:
    __slots__ = ("owner", "prob", "tag", "_make_left", "_make_right", "_left", "_right")

    def __init__(self, owner, prob, make_left, make_right, tag=""):
        self.owner = owner
        self.prob = prob  # callable: owner's input -> Fraction in [0, 1]
        self.tag = tag
        self._make_left = make_left
        self._make_right = make_right
        self._left = None
        self._right = None

    is_leaf = False

    @property
    def left(self):
        if self._left is None:
            self._left = self._make_left()
        return self._left

    @property
    def right(self):
        if self._right is None:
            self._right = self._make_right()
        return self._right


@dataclass
class ProtocolTree:
    """A root node plus descriptive metadata."""

    root: object
    kind: str = "generic"
    meta: dict = field(default_factory=dict)


def _root_of(tree):
    return tree.root if isinstance(tree, ProtocolTree) else tree


def constant_leaf(owner, value: Fraction, tag=""):
    value = Fraction(value)
    return Leaf(owner, lambda _inp, _v=value: _v, tag=tag)


def zero_leaf(tag="zero"):
    return Leaf(ALICE, lambda _inp: ZERO, tag=tag)


def _branch_prob(node, a, b) -> Fraction:
    p = node.prob(a if node.owner == ALICE else b)
    if p < 0 or p > 1:
        raise ProtocolInvariantError(f"branch probability {p} outside [0,1] at {node.tag!r}")
    return p


def _leaf_value(node, a, b) -> Fraction:
    value = node.value(a if node.owner == ALICE else b)
    if value < 0:
        raise ProtocolInvariantError(
            f"negative output {value} at positively reachable leaf {node.tag!r}"
        )
    return value


def exact_expectation(tree, a, b) -> Fraction:
    """Sum over leaves of reach probability times output, exactly."""

    def rec(node):
        if node.is_leaf:
            return _leaf_value(node, a, b)
        p = _branch_prob(node, a, b)
        acc = ZERO
        if p > 0:
            acc += p * rec(node.left)
        if p < 1:
            acc += (1 - p) * rec(node.right)
        return acc

    return rec(_root_of(tree))


def reach_distribution(tree, a, b) -> dict:
    """Map leaf path -> exact reach probability (only positive entries)."""
    out = {}

    def rec(node, path, weight):
        if node.is_leaf:
            out[path] = weight
            return
        p = _branch_prob(node, a, b)
        if p > 0:
            rec(node.left, path + "0", weight * p)
        if p < 1:
            rec(node.right, path + "1", weight * (1 - p))

    rec(_root_of(tree), "", ONE)
    return out


def leaf_at(tree, path: str):
    node = _root_of(tree)
    for bit in path:
        node = node.left if bit == "0" else node.right
    return node


def simulate(tree, a, b, seed) -> Fraction:
    """One sampled protocol output; deterministic for a fixed seed."""
    rng = random.Random(seed) if not isinstance(seed, random.Random) else seed
    node = _root_of(tree)
    path = []
    while not node.is_leaf:
        p = _branch_prob(node, a, b)
        take_left = rng.randrange(p.denominator) < p.numerator
        path.append("0" if take_left else "1")
        node = node.left if take_left else node.right
    try:
        return _leaf_value(node, a, b)
    except ProtocolInvariantError as exc:
        raise ProtocolInvariantError(f"{exc} (path {''.join(path)})") from exc


def pair_height(tree, a, b) -> int:
    """Longest positively reachable root-to-leaf path for this input pair."""

    def rec(node):
        if node.is_leaf:
            return 0
        p = _branch_prob(node, a, b)
        best = 0
        if p > 0:
            best = max(best, 1 + rec(node.left))
        if p < 1:
            best = max(best, 1 + rec(node.right))
        return best

    return rec(_root_of(tree))


def side_products(tree, a, b):
    """Per leaf: (alice factor, bob factor), each folding its owner's output.

    The product of the two factors reproduces reach probability times leaf
    output; this is the nonnegative rank-1 structure the factorization uses.
    """
    out = {}

    def rec(node, path, wa, wb):
        if node.is_leaf:
            value = _leaf_value(node, a, b)
            if node.owner == ALICE:
                out[path] = (wa * value, wb)
            else:
                out[path] = (wa, wb * value)
            return
        p = _branch_prob(node, a, b)
        if node.owner == ALICE:
            if p > 0:
                rec(node.left, path + "0", wa * p, wb)
            if p < 1:
                rec(node.right, path + "1", wa * (1 - p), wb)
        else:
            if p > 0:
                rec(node.left, path + "0", wa, wb * p)
            if p < 1:
                rec(node.right, path + "1", wa, wb * (1 - p))

    rec(_root_of(tree), "", ONE, ONE)
    return out


# ---------------------------------------------------------------------------
# fragment builders


def uniform_gadget(m: int, owner=ALICE, make_exit=None, tag="sample"):
    """Binary subtree whose m exits each have exact reach probability 1/m.

    Branch probabilities are input-independent rationals; height is
    ceil(log2 m).  ``make_exit(i)`` supplies the subtree below exit i; the
    default marks exits with unit-output leaves for standalone inspection.
    """
    if m < 1:
        raise InputError("gadget needs at least one exit")
    if make_exit is None:
        make_exit = lambda i: Leaf(owner, lambda _inp: ONE, tag=f"exit:{i}", index=i)

    def build(lo, hi):
        if hi - lo == 1:
            return make_exit(lo)
        mid = (lo + hi + 1) // 2  # left half gets the ceiling
        p = Fraction(mid - lo, hi - lo)
        return Internal(
            owner,
            lambda _inp, _p=p: _p,
            lambda lo=lo, mid=mid: build(lo, mid),
            lambda mid=mid, hi=hi: build(mid, hi),
            tag=f"{tag}[{lo},{hi})",
        )

    return build(0, m)


def bit_width(max_value: int) -> int:
    return max(1, int(max_value).bit_length())


def deterministic_cascade(owner, width: int, value_fn, make_child, tag="msg"):
    """Send a ``width``-bit integer (MSB first) as a {0,1}-probability cascade.

    ``value_fn`` maps the owner's input to the integer message;
    ``make_child(v)`` builds the subtree for each decoded value v.
    """

    def build(pos, prefix):
        if pos == width:
            return make_child(prefix)

        def prob(inp):
            bit = (value_fn(inp) >> (width - 1 - pos)) & 1
            return ONE if bit == 0 else ZERO

        return Internal(
            owner,
            prob,
            lambda pos=pos, prefix=prefix: build(pos + 1, prefix << 1),
            lambda pos=pos, prefix=prefix: build(pos + 1, (prefix << 1) | 1),
            tag=f"{tag}[{pos}]",
        )

    return build(0, 0)


def bob_bit(test_fn, make_yes, make_no, tag="bob-bit"):
    """Single Bob-owned deterministic branch on a predicate of his input."""
    return Internal(
        BOB,
        lambda b: ONE if test_fn(b) else ZERO,
        make_yes,
        make_no,
        tag=tag,
    )


def alice_bit(test_fn, make_yes, make_no, tag="alice-bit"):
    return Internal(
        ALICE,
        lambda a: ONE if test_fn(a) else ZERO,
        make_yes,
        make_no,
        tag=tag,
    )


def kw_subtree(circuit: MonotoneCircuit, alice_view=None, bob_view=None,
               continuation=None, tag="kw"):
    """Game tree walking a monotone circuit from the output gate to an input.

    At an AND gate Alice branches to a child evaluating to 0 on her (viewed)
    input; at an OR gate Bob branches to a child evaluating to 1 on his.
    Whenever the circuit separates the pair (0 on Alice's view, 1 on Bob's),
    the reached input index i satisfies a_i = 0 and b_i = 1.  Constant
    circuits are refused.
    """
    if circuit.is_constant:
        raise DomainError("game tree of a constant circuit is undefined")
    alice_view = alice_view or (lambda a: a)
    bob_view = bob_view or (lambda b: b)
    if continuation is None:
        continuation = lambda i: Leaf(ALICE, lambda _inp: ONE, tag=f"{tag}-index:{i}", index=i)

    def gate_value(gid, bits):
        return circuit.eval_all(bits)[gid]

    def build(gid):
        gate = circuit.gates[gid]
        if gate.kind == KIND_INPUT:
            return continuation(gate.a)
        if gate.kind == KIND_AND:
            def prob(a, _l=gate.a):
                return ONE if gate_value(_l, tuple(alice_view(a))) == 0 else ZERO
            owner = ALICE
        elif gate.kind == KIND_OR:
            def prob(b, _l=gate.a):
                return ONE if gate_value(_l, tuple(bob_view(b))) == 1 else ZERO
            owner = BOB
        else:
            raise DomainError("constant gate inside a game tree; builder must simplify")
        return Internal(
            owner,
            prob,
            lambda _c=gate.a: build(_c),
            lambda _c=gate.b: build(_c),
            tag=f"{tag}:{gate.kind}{gid}",
        )

    return build(circuit.output)


@dataclass(frozen=True)
class KWInstance:
    """A separated pair for the game on a monotone circuit."""

    circuit: MonotoneCircuit
    alice_input: tuple
    bob_input: tuple

    def __post_init__(self):
        if evaluate(self.circuit, self.alice_input) != 0:
            raise DomainError("alice input does not evaluate to 0")
        if evaluate(self.circuit, self.bob_input) != 1:
            raise DomainError("bob input does not evaluate to 1")


def kw_index(circuit: MonotoneCircuit, a, b) -> int:
    """Play the game to completion; returns i with a_i = 0 and b_i = 1."""
    KWInstance(circuit, tuple(a), tuple(b))
    tree = kw_subtree(circuit)
    node = tree
    while not node.is_leaf:
        p = _branch_prob(node, a, b)
        node = node.left if p == 1 else node.right
    return node.index


def to_dot(tree, max_nodes: int = 4000) -> str:
    """Graphviz rendering of the materialized (already expanded) portion."""
    lines = ["digraph protocol {"]
    count = 0

    def rec(node, path):
        nonlocal count
        if count >= max_nodes:
            return
        count += 1
        name = f"n{path or 'root'}"
        shape = "box" if node.is_leaf else "ellipse"
        owner = "A" if node.owner == ALICE else "B"
        lines.append(f'  {name} [shape={shape},label="{owner}:{node.tag}"];')
        if node.is_leaf:
            return
        for bit, child in (("0", node._left), ("1", node._right)):
            if child is not None:
                child_name = f"n{path + bit}"
                rec(child, path + bit)
                lines.append(f"  {name} -> {child_name} [label={bit}];")

    rec(_root_of(tree), "")
    lines.append("}")
    return "\n".join(lines)
