"""Independent test oracles: basic-solution LP enumeration, row builders."""

from fractions import Fraction
from itertools import combinations

from kcover.knapsack import alpha_of, enumerate_rows_and_columns, residual_and_clipped

ZERO = Fraction(0)


def weakened_rows(inst, eps):
    """[(coefficients, rhs)] of every weakened cover inequality."""
    rows = []
    alpha = alpha_of(eps)
    for a in enumerate_rows_and_columns(inst)[0]:
        residual, clipped = residual_and_clipped(inst, a)
        coeffs = tuple(
            ZERO if i in a else Fraction(clipped[i]) for i in range(inst.n)
        )
        rows.append((coeffs, alpha * residual))
    return rows


def _solve_square(matrix, rhs):
    """Exact Gaussian elimination; None if singular."""
    n = len(matrix)
    aug = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            return None
        aug[col], aug[pivot] = aug[pivot], aug[col]
        scale = aug[col][col]
        aug[col] = [v / scale for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [v - factor * w for v, w in zip(aug[r], aug[col])]
    return [aug[r][n] for r in range(n)]


def vertex_lp_min(rows, costs):
    """min costs.x over {x >= 0, coeffs.x >= rhs} by basic-solution search.

    Enumerates every choice of n constraints (inequalities plus axes) made
    tight, solves the square system exactly, filters feasible points, and
    takes the best objective.  Exponential, usable only at desk scale.
    """
    n = len(costs)
    costs = tuple(Fraction(c) for c in costs)
    all_rows = list(rows) + [
        (tuple(Fraction(1) if j == i else ZERO for j in range(n)), ZERO)
        for i in range(n)
    ]
    best = None
    for tight in combinations(range(len(all_rows)), n):
        matrix = [all_rows[r][0] for r in tight]
        rhs = [all_rows[r][1] for r in tight]
        point = _solve_square(matrix, rhs)
        if point is None:
            continue
        if any(v < 0 for v in point):
            continue
        if any(
            sum(c * v for c, v in zip(coeffs, point)) < b for coeffs, b in all_rows
        ):
            continue
        value = sum((c * v for c, v in zip(costs, point)), ZERO)
        if best is None or value < best:
            best = value
    return best
