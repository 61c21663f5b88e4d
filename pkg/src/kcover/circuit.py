"""Monotone fan-in-2 circuits for weighted threshold functions.

Two builders are provided:

* ``build_threshold_circuit`` expands each item into unit wires and counts
  them with a divide-and-conquer construction,

      TH_T(block) = OR over j of ( TH_j(left half) AND TH_{T-j}(right half) ),

  with balanced OR trees and memoized sub-blocks.  Its depth satisfies
  depth <= DEPTH_BOUND_C * (ceil(log2 m) + 1)**2 over m unit wires
  (DEPTH_BOUND_C = 1, checked in the test suite up to m = 64).

* ``cnf_threshold_circuit`` writes the same function as an AND over the
  maximal infeasible item sets of an OR over the items outside each set.
  Depth is logarithmic in the clause count; more importantly the game tree
  derived from it stays narrow on the row side, which keeps emitted
  extended-formulation rows small.  Protocol construction uses this builder
  by default; the builder argument is the plug-in point for alternatives.

Truncations zero out every weight below a cutoff U and keep the rest.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, log2

from .errors import DomainError, InputError

KIND_INPUT = "in"
KIND_TRUE = "true"
KIND_FALSE = "false"
KIND_AND = "and"
KIND_OR = "or"

DEPTH_BOUND_C = 1


@dataclass(frozen=True)
class Gate:
    kind: str
    a: int = -1  # input index for KIND_INPUT, else left child gate id
    b: int = -1  # right child gate id


@dataclass(frozen=True)
class ThresholdSpec:
    """Nonnegative integer weights and a threshold."""

    weights: tuple[int, ...]
    threshold: int

    def __post_init__(self):
        if any((not isinstance(w, int)) or w < 0 for w in self.weights):
            raise InputError("weights must be nonnegative integers")
        if not isinstance(self.threshold, int) or self.threshold < 0:
            raise InputError("threshold must be a nonnegative integer")

    def value(self, x) -> int:
        if len(x) != len(self.weights):
            raise InputError("input length mismatch")
        return 1 if sum(w for w, b in zip(self.weights, x) if b) >= self.threshold else 0


class MonotoneCircuit:
    """Gate DAG over {INPUT, CONST, AND, OR}; children precede parents."""

    def __init__(self, n_inputs: int):
        self.n_inputs = n_inputs
        self.gates: list[Gate] = []
        self._interned: dict[Gate, int] = {}
        self.output: int = -1
        self._eval_cache: dict[tuple, tuple] = {}

    def _add(self, gate: Gate) -> int:
        gid = self._interned.get(gate)
        if gid is None:
            gid = len(self.gates)
            self.gates.append(gate)
            self._interned[gate] = gid
        return gid

    def wire_input(self, index: int) -> int:
        if index < 0 or index >= self.n_inputs:
            raise InputError("input index out of range")
        return self._add(Gate(KIND_INPUT, index))

    def const(self, value: bool) -> int:
        return self._add(Gate(KIND_TRUE if value else KIND_FALSE))

    def gate_and(self, a: int, b: int) -> int:
        ka, kb = self.gates[a].kind, self.gates[b].kind
        if ka == KIND_FALSE or kb == KIND_FALSE:
            return self.const(False)
        if ka == KIND_TRUE:
            return b
        if kb == KIND_TRUE:
            return a
        return self._add(Gate(KIND_AND, a, b))

    def gate_or(self, a: int, b: int) -> int:
        ka, kb = self.gates[a].kind, self.gates[b].kind
        if ka == KIND_TRUE or kb == KIND_TRUE:
            return self.const(True)
        if ka == KIND_FALSE:
            return b
        if kb == KIND_FALSE:
            return a
        return self._add(Gate(KIND_OR, a, b))

    def balanced(self, op, gate_ids: list[int], empty: bool) -> int:
        """Balanced op-tree over a gate list; empty list gives the identity."""
        if not gate_ids:
            return self.const(empty)
        layer = list(gate_ids)
        while len(layer) > 1:
            nxt = [op(layer[k], layer[k + 1]) for k in range(0, len(layer) - 1, 2)]
            if len(layer) % 2:
                nxt.append(layer[-1])
            layer = nxt
        return layer[0]

    def set_output(self, gid: int):
        self.output = gid

    @property
    def is_constant(self) -> bool:
        return self.gates[self.output].kind in (KIND_TRUE, KIND_FALSE)

    def eval_all(self, x) -> tuple:
        """Values of every gate on input x (cached per input vector)."""
        x = tuple(x)
        if len(x) != self.n_inputs:
            raise InputError(f"input has length {len(x)}, expected {self.n_inputs}")
        cached = self._eval_cache.get(x)
        if cached is not None:
            return cached
        values = []
        for gate in self.gates:
            if gate.kind == KIND_INPUT:
                values.append(1 if x[gate.a] else 0)
            elif gate.kind == KIND_TRUE:
                values.append(1)
            elif gate.kind == KIND_FALSE:
                values.append(0)
            elif gate.kind == KIND_AND:
                values.append(values[gate.a] & values[gate.b])
            else:
                values.append(values[gate.a] | values[gate.b])
        result = tuple(values)
        if len(self._eval_cache) < 1 << 16:
            self._eval_cache[x] = result
        return result


def evaluate(circuit: MonotoneCircuit, x) -> int:
    """Standard gate semantics; 0/1 result."""
    return circuit.eval_all(x)[circuit.output]


def circuit_stats(circuit: MonotoneCircuit) -> tuple[int, int]:
    """(depth, internal gate count); depth is the longest input-to-output path."""
    depth = [0] * len(circuit.gates)
    reachable = [False] * len(circuit.gates)
    reachable[circuit.output] = True
    for gid in range(len(circuit.gates) - 1, -1, -1):
        if reachable[gid]:
            gate = circuit.gates[gid]
            if gate.kind in (KIND_AND, KIND_OR):
                reachable[gate.a] = reachable[gate.b] = True
    internal = 0
    for gid, gate in enumerate(circuit.gates):
        if gate.kind in (KIND_AND, KIND_OR):
            depth[gid] = 1 + max(depth[gate.a], depth[gate.b])
            if reachable[gid]:
                internal += 1
    return depth[circuit.output], internal


def depth_bound(m: int) -> int:
    """Documented divide-and-conquer depth budget for m unit wires."""
    if m <= 0:
        return 0
    return DEPTH_BOUND_C * (ceil(log2(m)) + 1) ** 2


def build_threshold_circuit(spec: ThresholdSpec) -> MonotoneCircuit:
    """Unary-expansion divide-and-conquer circuit for [sum w_i x_i >= T]."""
    n = len(spec.weights)
    circuit = MonotoneCircuit(n)
    wires = [i for i in range(n) for _ in range(spec.weights[i])]
    total = len(wires)
    if spec.threshold == 0:
        circuit.set_output(circuit.const(True))
        return circuit
    if spec.threshold > total:
        circuit.set_output(circuit.const(False))
        return circuit

    memo: dict[tuple[int, int, int], int] = {}

    def th(lo: int, hi: int, t: int) -> int:
        if t <= 0:
            return circuit.const(True)
        if t > hi - lo:
            return circuit.const(False)
        if hi - lo == 1:
            return circuit.wire_input(wires[lo])
        key = (lo, hi, t)
        gid = memo.get(key)
        if gid is not None:
            return gid
        mid = (lo + hi) // 2
        left_cap, right_cap = mid - lo, hi - mid
        terms = []
        for j in range(max(0, t - right_cap), min(t, left_cap) + 1):
            terms.append(circuit.gate_and(th(lo, mid, j), th(mid, hi, t - j)))
        gid = circuit.balanced(circuit.gate_or, terms, empty=False)
        memo[key] = gid
        return gid

    circuit.set_output(th(0, total, spec.threshold))
    return circuit


def cnf_threshold_circuit(spec: ThresholdSpec, support_cap: int = 24) -> MonotoneCircuit:
    """AND over maximal infeasible sets of OR over the items outside each."""
    n = len(spec.weights)
    circuit = MonotoneCircuit(n)
    support = [i for i in range(n) if spec.weights[i] > 0]
    if spec.threshold == 0:
        circuit.set_output(circuit.const(True))
        return circuit
    if len(support) > support_cap:
        raise DomainError(
            f"support of {len(support)} items exceeds the clause-builder cap {support_cap}"
        )
    k = len(support)
    zero_masks = []
    for mask in range(1 << k):
        weight = sum(spec.weights[support[j]] for j in range(k) if (mask >> j) & 1)
        if weight < spec.threshold:
            zero_masks.append(mask)
    zero_set = set(zero_masks)
    clauses = []
    for mask in zero_masks:
        if any((mask | (1 << j)) in zero_set for j in range(k) if not (mask >> j) & 1):
            continue  # not maximal
        literals = [circuit.wire_input(support[j]) for j in range(k) if not (mask >> j) & 1]
        clauses.append(circuit.balanced(circuit.gate_or, literals, empty=False))
    circuit.set_output(circuit.balanced(circuit.gate_and, clauses, empty=True))
    return circuit


def truncation_weights(sizes, cutoff: int) -> tuple[int, ...]:
    """Keep sizes at or above the cutoff, zero out the rest."""
    return tuple(s if s >= cutoff else 0 for s in sizes)


def build_truncation_circuit(inst, cutoff: int, threshold: int, builder=None) -> MonotoneCircuit:
    """Circuit for the truncated threshold function of a knapsack instance.

    Items smaller than ``cutoff`` get weight zero (their inputs are ignored).
    """
    if threshold > inst.demand:
        raise DomainError("truncation threshold exceeds the demand")
    if threshold <= 0:
        raise DomainError("truncation threshold must be positive")
    spec = ThresholdSpec(truncation_weights(inst.sizes, cutoff), threshold)
    builder = builder or build_threshold_circuit
    return builder(spec)


def to_dot(circuit: MonotoneCircuit) -> str:
    """Graphviz rendering of the gate DAG (reachable portion)."""
    labels = {
        KIND_AND: "AND",
        KIND_OR: "OR",
        KIND_TRUE: "1",
        KIND_FALSE: "0",
    }
    lines = ["digraph circuit {", "  rankdir=BT;"]
    seen = set()
    stack = [circuit.output]
    while stack:
        gid = stack.pop()
        if gid in seen:
            continue
        seen.add(gid)
        gate = circuit.gates[gid]
        if gate.kind == KIND_INPUT:
            lines.append(f'  g{gid} [shape=box,label="x{gate.a}"];')
        else:
            lines.append(f'  g{gid} [label="{labels[gate.kind]}"];')
        if gate.kind in (KIND_AND, KIND_OR):
            lines.append(f"  g{gate.a} -> g{gid};")
            lines.append(f"  g{gate.b} -> g{gid};")
            stack.extend((gate.a, gate.b))
    lines.append("  out [shape=plaintext,label=out];")
    lines.append(f"  g{circuit.output} -> out;")
    lines.append("}")
    return "\n".join(lines)
