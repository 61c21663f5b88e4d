"""Desk-scale sweep reports: CSV tables with matplotlib figures alongside.

Three reports are rendered into the output directory:

* circuit_depth:  divide-and-conquer threshold-circuit depth against the
  documented quadratic-in-log budget, over unit-weight counts up to 64;
* gap_ratios:     integer optimum over LP value for random instances, both
  separators, against the 2+eps bound;
* tree_heights:   measured protocol-tree heights against the per-instance
  budget.
"""

from __future__ import annotations

import csv
import random
from fractions import Fraction
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .circuit import ThresholdSpec, build_threshold_circuit, circuit_stats, depth_bound
from .cutting_plane import cutting_plane_solve
from .kc_protocol import verify_sweep
from .knapsack import dp_optimum, random_instance
from .rationals import format_rational


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _depth_report(out_dir: Path, max_wires: int = 64):
    rows = []
    for m in range(1, max_wires + 1):
        spec = ThresholdSpec((1,) * m, (m + 1) // 2)
        depth, gates = circuit_stats(build_threshold_circuit(spec))
        rows.append((m, depth, gates, depth_bound(m)))
    table = out_dir / "circuit_depth.csv"
    _write_csv(table, ("unit_wires", "depth", "gates", "bound"), rows)

    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    ms = [r[0] for r in rows]
    ax.step(ms, [r[1] for r in rows], where="post", label="measured depth")
    ax.plot(ms, [r[3] for r in rows], "--", label="budget $(\\lceil\\log_2 m\\rceil+1)^2$")
    ax.set_xlabel("unit wires $m$")
    ax.set_ylabel("circuit depth")
    ax.legend()
    figure = out_dir / "circuit_depth.png"
    fig.savefig(figure, dpi=150)
    plt.close(fig)
    return table.name, figure.name


def _gap_report(out_dir: Path, seed: int, eps: Fraction, count: int):
    rng = random.Random(seed)
    rows = []
    points = {"exact": [], "halfround": []}
    for idx in range(count):
        inst = random_instance(rng, rng.randint(1, 6), 9)
        costs = tuple(rng.randint(0, 20) for _ in range(inst.n))
        opt, _ = dp_optimum(inst, costs)
        for separator in ("exact", "halfround"):
            result = cutting_plane_solve(inst, costs, eps, separator=separator)
            ratio = opt / result.value if result.value else Fraction(0)
            rows.append((
                idx, inst.n, list(inst.sizes), inst.demand, list(costs), separator,
                format_rational(result.value), format_rational(opt),
                format_rational(ratio), result.iterations,
            ))
            points[separator].append((idx, float(ratio)))
    table = out_dir / "gap_ratios.csv"
    _write_csv(
        table,
        ("instance", "n", "sizes", "demand", "costs", "separator",
         "lp_value", "opt", "ratio", "iterations"),
        rows,
    )

    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    for separator, marker in (("exact", "o"), ("halfround", "x")):
        xs = [p[0] for p in points[separator]]
        ys = [p[1] for p in points[separator]]
        ax.scatter(xs, ys, marker=marker, s=18, label=separator)
    ax.axhline(float(2 + eps), color="tab:red", linestyle="--",
               label=f"bound 2+eps = {float(2 + eps):g}")
    ax.set_xlabel("instance")
    ax.set_ylabel("opt / lp value")
    ax.set_ylim(bottom=0.9)
    ax.legend()
    figure = out_dir / "gap_ratios.png"
    fig.savefig(figure, dpi=150)
    plt.close(fig)
    return table.name, figure.name


def _height_report(out_dir: Path, seed: int, eps: Fraction, count: int):
    rng = random.Random(seed)
    rows = []
    for idx in range(count):
        inst = random_instance(rng, rng.randint(1, 6), 9)
        sweep = verify_sweep(inst, eps)
        rows.append((idx, inst.n, list(inst.sizes), inst.demand,
                     sweep["max_height"], sweep["height_budget"], sweep["status"]))
    table = out_dir / "tree_heights.csv"
    _write_csv(
        table,
        ("instance", "n", "sizes", "demand", "max_height", "budget", "status"),
        rows,
    )

    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    ax.scatter([r[1] for r in rows], [r[4] for r in rows], s=18, label="measured")
    ax.scatter([r[1] for r in rows], [r[5] for r in rows], s=18, marker="_",
               label="budget")
    ax.set_xlabel("items $n$")
    ax.set_ylabel("tree height")
    ax.legend()
    figure = out_dir / "tree_heights.png"
    fig.savefig(figure, dpi=150)
    plt.close(fig)
    return table.name, figure.name


def write_report(out_dir: Path, seed: int = 0, eps: Fraction = Fraction(1, 2),
                 instances: int = 24) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    tables = []
    figures = []
    for maker in (
        lambda: _depth_report(out_dir),
        lambda: _gap_report(out_dir, seed, eps, instances),
        lambda: _height_report(out_dir, seed + 1, eps, max(4, instances // 2)),
    ):
        table, figure = maker()
        tables.append(table)
        figures.append(figure)
    return {
        "out_dir": str(out_dir),
        "tables": tables,
        "figures": figures,
        "eps": format_rational(eps),
        "seed": seed,
    }
