"""Command-line surface: determinism, JSON output, exit codes."""

import json
from fractions import Fraction

import pytest

from kcover.cli import main
from kcover.factorization import system_from_json
from kcover.flow_cover import FacilityInstance, instance_to_json
from kcover.knapsack import KnapsackInstance, to_json

F = Fraction


@pytest.fixture
def e1_file(tmp_path):
    path = tmp_path / "e1.json"
    path.write_text(to_json(KnapsackInstance((2, 3, 4), 5)))
    return str(path)


@pytest.fixture
def facility_file(tmp_path):
    path = tmp_path / "fac.json"
    path.write_text(instance_to_json(FacilityInstance((3, 2), 4)))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out.strip()
    return code, out


def test_gen_is_byte_identical(capsys):
    code, first = run(capsys, "gen", "--n", "5", "--max-size", "10", "--seed", "7")
    assert code == 0
    code, second = run(capsys, "gen", "--n", "5", "--max-size", "10", "--seed", "7")
    assert code == 0 and first == second
    doc = json.loads(first)
    assert doc["n"] == 5 and len(doc["sizes"]) == 5
    assert max(doc["sizes"]) <= doc["demand"] <= sum(doc["sizes"])


def test_opt_command(capsys, e1_file):
    code, out = run(capsys, "opt", e1_file, "--costs", "4,3,2")
    assert code == 0
    assert json.loads(out) == {"value": "5", "witness": [1, 2]}


def test_verify_protocol_pass(capsys, e1_file):
    code, out = run(capsys, "verify-protocol", e1_file, "--eps", "1", "--mode", "all")
    doc = json.loads(out)
    assert code == 0
    assert doc["status"] == "PASS" and doc["pairs"] == 16 and doc["failures"] == 0
    assert doc["max_height"] <= doc["height_budget"]


def test_verify_protocol_sampled_and_workers(capsys, e1_file):
    code, out = run(capsys, "verify-protocol", e1_file, "--eps", "1/2",
                    "--mode", "sample", "--samples", "25", "--workers", "2")
    doc = json.loads(out)
    assert code == 0 and doc["pairs"] == 25 and doc["status"] == "PASS"


def test_solve_output_format(capsys, e1_file):
    code, out = run(capsys, "solve", e1_file, "--eps", "1", "--costs", "1,1,1",
                    "--separator", "exact")
    doc = json.loads(out)
    assert code == 0
    assert doc["value"] == "16/15"
    assert doc["separator"] == "exact"
    assert doc["x"] == ["4/15", "2/5", "2/5"]
    assert isinstance(doc["iterations"], int)
    assert all(isinstance(r, list) for r in doc["rows"])


def test_gap_reports_ratio_and_bound(capsys, e1_file):
    code, out = run(capsys, "gap", e1_file, "--eps", "1", "--costs", "1,1,1",
                    "--separator", "exact")
    doc = json.loads(out)
    assert code == 0 and doc["status"] == "PASS"
    assert doc["opt"] == "2" and doc["bound"] == "3"
    assert F(doc["ratio"]) <= 3


def test_factorize_command(capsys, e1_file):
    code, out = run(capsys, "factorize", e1_file, "--eps", "1")
    doc = json.loads(out)
    assert code == 0 and doc["identity"] is True and doc["rows"] == 4


def test_emit_ef_round_trip(capsys, tmp_path, e1_file):
    out_path = tmp_path / "system.json"
    code, out = run(capsys, "emit-ef", e1_file, "--eps", "1", "--rows", ";2",
                    "--out", str(out_path))
    doc = json.loads(out)
    assert code == 0 and doc["rows"] == 2
    system = system_from_json(out_path.read_text())
    assert [r.row_set for r in system.rows] == [(), (2,)]


def test_emit_ef_from_solve_trace(capsys, tmp_path, e1_file):
    out_path = tmp_path / "trace.json"
    code, out = run(capsys, "emit-ef", e1_file, "--eps", "1",
                    "--trace-costs", "1,1,1", "--separator", "exact",
                    "--out", str(out_path))
    doc = json.loads(out)
    assert code == 0 and doc["rows"] == 3  # the rows the exact run needed
    system = system_from_json(out_path.read_text())
    assert [r.row_set for r in system.rows] == [(), (2,), (1,)]


def test_circuit_command_with_dot(capsys, tmp_path, e1_file):
    dot_path = tmp_path / "circuit.dot"
    code, out = run(capsys, "circuit", e1_file, "--threshold", "5",
                    "--builder", "dnc", "--dot", str(dot_path))
    doc = json.loads(out)
    assert code == 0
    assert doc["depth"] <= doc["depth_bound"]
    assert dot_path.read_text().startswith("digraph")


def test_fci_verify(capsys, facility_file):
    code, out = run(capsys, "fci-verify", facility_file, "--eps", "1")
    doc = json.loads(out)
    assert code == 0 and doc["status"] == "PASS" and doc["failures"] == 0


def test_report_writes_figures_and_tables(capsys, tmp_path):
    code, out = run(capsys, "report", "--out-dir", str(tmp_path / "rep"),
                    "--seed", "1", "--instances", "4")
    doc = json.loads(out)
    assert code == 0
    for name in doc["figures"] + doc["tables"]:
        assert (tmp_path / "rep" / name).exists()
    assert any(name.endswith(".png") for name in doc["figures"])
    assert any(name.endswith(".csv") for name in doc["tables"])


def test_missing_file_is_usage_error(capsys):
    code, _ = run(capsys, "opt", "/nonexistent.json", "--costs", "1")
    assert code == 2


def test_malformed_instance_is_usage_error(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{broken")
    code, _ = run(capsys, "opt", str(bad), "--costs", "1")
    assert code == 2


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
