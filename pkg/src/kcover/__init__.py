"""Quasi-polynomial LP relaxations of min-knapsack from slack protocols.

The pipeline: a monotone threshold circuit feeds a two-party game, the game
anchors a randomized protocol computing weakened cover-inequality slacks in
expectation, the protocol tree factorizes the slack matrix nonnegatively,
the factorization emits extended-formulation rows, and a cutting-plane loop
optimizes over lazily emitted rows.  A flow-cover extension handles
single-demand facility location.
"""

from .errors import CapacityError, DomainError, InputError, ProtocolInvariantError
from .knapsack import (
    KnapsackInstance,
    dp_optimum,
    enumerate_rows_and_columns,
    exact_slack_matrix,
    is_feasible,
    residual_and_clipped,
    weakened_kc_slack,
)
from .circuit import (
    MonotoneCircuit,
    ThresholdSpec,
    build_threshold_circuit,
    build_truncation_circuit,
    circuit_stats,
    cnf_threshold_circuit,
    evaluate,
)
from .protocol import (
    ProtocolTree,
    exact_expectation,
    kw_index,
    kw_subtree,
    reach_distribution,
    simulate,
    uniform_gadget,
)
from .kc_protocol import Case, Discretization, build_kc_protocol, case_of, discretize
from .factorization import emit_ef, factorize_full, row_vector, column_vector
from .cutting_plane import (
    cutting_plane_solve,
    separate_exact,
    separate_halfround,
    solve_lp,
    weakened_lp_value,
)
from .flow_cover import (
    FacilityInstance,
    FlowSolution,
    FlowTuple,
    build_fci_protocol,
    canonical_decompose,
    fci_slack,
    is_canonical,
    partition_support,
)

__version__ = "0.1.0"
