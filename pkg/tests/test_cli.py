import json
import os
import subprocess
import sys

import pytest

from fairmatch import cli

from helpers import hub15_json


def run_cli(*argv):
    return cli.main(list(argv))


def run_cli_capture(capsys, *argv):
    status = cli.main(list(argv))
    out = capsys.readouterr().out
    return status, out


def test_ged_hub15_json(capsys, hub15_file):
    status, out = run_cli_capture(capsys, "ged", hub15_file)
    assert status == 0
    payload = json.loads(out)
    assert payload["over"] == ["s6", "s7"]
    assert payload["under"] == ["s1", "s2", "s3", "s4", "s5", "s8"]
    assert payload["perfect"] == sorted(f"s{i}" for i in range(9, 16))
    assert ["s1", "s2", "s3"] in payload["components"]


def test_solve_indivisible_hub15_has_seven_thirds(capsys, hub15_file):
    status, out = run_cli_capture(capsys, "solve", "--model", "indivisible", hub15_file)
    assert status == 0
    payload = json.loads(out)
    assert payload["profile"]["s2"] == "7/3"
    assert payload["profile"]["s4"] == "7/3"
    assert payload["profile"]["s5"] == "7/3"
    assert payload["marginals"]["s2"] == {"2": "2/3", "3": "1/3"}


def test_solve_divisible_triangle_all_ones(capsys, triangle_file):
    status, out = run_cli_capture(capsys, "solve", "--model", "divisible", triangle_file)
    assert status == 0
    payload = json.loads(out)
    assert payload["profile"] == {"a": "1/1", "b": "1/1", "c": "1/1"}
    assert {entry["amount"] for entry in payload["exchange"]} == {"1/2"}


def test_solve_dump_flow(capsys, triangle_file):
    status, out = run_cli_capture(
        capsys, "solve", "--model", "indivisible", "--dump-flow", triangle_file
    )
    assert status == 0
    payload = json.loads(out)
    assert any(arc["from"] == "@source" for arc in payload["flow"])


def test_lottery_triangle_three_thirds(capsys, triangle_file):
    status, out = run_cli_capture(capsys, "lottery", triangle_file)
    assert status == 0
    payload = json.loads(out)
    assert [entry["prob"] for entry in payload["entries"]] == ["1/3", "1/3", "1/3"]
    supports = {
        tuple((m["u"], m["v"]) for m in entry["matching"]) for entry in payload["entries"]
    }
    assert supports == {(("a", "b"),), (("a", "c"),), (("b", "c"),)}


def test_emitted_rationals_are_lowest_terms(capsys, hub15_file):
    status, out = run_cli_capture(capsys, "solve", "--model", "indivisible", hub15_file)
    assert status == 0
    import math
    for text in json.loads(out)["profile"].values():
        p, q = (int(piece) for piece in text.split("/"))
        assert math.gcd(p, q) == 1 and q >= 1


def test_sample_requires_seed(triangle_file):
    assert run_cli("sample", "--samples", "3", triangle_file) == 1


def test_sample_deterministic_for_seed(capsys, triangle_file):
    status, first = run_cli_capture(capsys, "sample", "--samples", "4", "--seed", "9", triangle_file)
    assert status == 0
    status, second = run_cli_capture(capsys, "sample", "--samples", "4", "--seed", "9", triangle_file)
    assert status == 0
    assert first == second
    assert len(json.loads(first)["samples"]) == 4


def test_verify_passes_on_triangle(capsys, triangle_file):
    status, out = run_cli_capture(capsys, "verify", "--oracle", triangle_file)
    assert status == 0
    payload = json.loads(out)
    assert payload["passed"] is True
    names = {check["name"] for check in payload["checks"]}
    assert {"indivisible-efficiency", "method-agreement", "oracle-pareto-equivalence"} <= names
    assert all(check["status"] == "pass" for check in payload["checks"])


def test_verify_reports_failure_with_exit_2(capsys, triangle_file, monkeypatch):
    monkeypatch.setattr(
        cli,
        "_verify_checks",
        lambda inst, oracle: [{"name": "rigged", "status": "fail", "detail": ""}],
    )
    assert run_cli("verify", triangle_file) == 2


def test_verify_oracle_oversize_is_validation_error(capsys, hub15_file):
    assert run_cli("verify", "--oracle", hub15_file) == 1


def test_missing_file_is_validation_error(tmp_path):
    assert run_cli("ged", str(tmp_path / "nope.json")) == 1


def test_malformed_file_is_validation_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{broken")
    assert run_cli("ged", str(bad)) == 1


def test_capacitated_indivisible_is_validation_error(tmp_path):
    capped = tmp_path / "capped.json"
    capped.write_text(
        json.dumps(
            {
                "name": "capped",
                "nodes": [{"id": "a", "peak": 1}, {"id": "b", "peak": 1}],
                "edges": [{"u": "a", "v": "b", "cap": 1}],
            }
        )
    )
    assert run_cli("solve", "--model", "indivisible", str(capped)) == 1
    assert run_cli("solve", "--model", "divisible", str(capped)) == 0


def test_output_flag_writes_file(tmp_path, triangle_file):
    target = tmp_path / "report.json"
    assert run_cli("ged", triangle_file, "--output", str(target)) == 0
    assert json.loads(target.read_text())["under"] == ["a", "b", "c"]


def test_pretty_table(capsys, triangle_file):
    status, out = run_cli_capture(capsys, "solve", "--model", "divisible", "--pretty", triangle_file)
    assert status == 0
    assert "egalitarian profile" in out
    assert "a" in out and "1/1" in out


def test_manipulate_cli(capsys, triangle_file):
    status, out = run_cli_capture(
        capsys, "manipulate", triangle_file, "--coalition", "a", "--report-peak", "a=2"
    )
    assert status == 0
    payload = json.loads(out)
    assert payload["manipulated"] == {"a": "2/1", "b": "1/1", "c": "1/1"}
    assert payload["gains_under_some_single_peaked"]["a"] is True
    assert payload["verdict"] == "unprofitable"


def test_manipulate_hide_edge_cli(capsys, tmp_path):
    from helpers import path_instance

    path = tmp_path / "path7.json"
    path.write_text(json.dumps(path_instance(7).to_json_dict()))
    status, out = run_cli_capture(
        capsys,
        "manipulate", str(path), "--coalition", "s4,s7", "--hide-edge", "s3:s4",
    )
    assert status == 0
    payload = json.loads(out)
    assert payload["deltas"] == {"s4": "0/1", "s7": "1/4"}


def _run_subprocess(args, hashseed):
    env = dict(os.environ, PYTHONHASHSEED=hashseed)
    return subprocess.run(
        [sys.executable, "-m", "fairmatch.cli", *args],
        capture_output=True,
        env=env,
        check=True,
    ).stdout


def test_byte_identical_output_across_hash_seeds(tmp_path):
    instance_path = tmp_path / "hub15.json"
    instance_path.write_text(json.dumps(hub15_json()))
    args = ["lottery", str(instance_path)]
    outputs = {_run_subprocess(args, seed) for seed in ("0", "1", "31337")}
    assert len(outputs) == 1
