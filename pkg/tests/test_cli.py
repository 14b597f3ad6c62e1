"""CLI tests: subcommand wiring, exit codes, JSON payloads."""

import json
import subprocess
import sys

import pytest

import structprop.cli as cli_mod
from structprop.cli import main
from structprop.model import Integrality, LinearRow, MipModel, Variable
from structprop.mps import write_mps
from structprop.records import CardinalityParams, Family, SemanticRecord, records_to_json
from structprop.synth import reverse_sample, write_instance
from structprop.verify import GateResult


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def synth_file(tmp_path, family="channel", seed=2, extra=()):
    code = main(
        ["synth", "--family", family, "--seed", str(seed), "--out", str(tmp_path), "--quiet"]
        + list(extra)
    )
    assert code == 0
    return str(next(tmp_path.glob(f"{family.lower()}*.mps")))


# ---------------------------------------------------------------------------
# detect


def test_synth_then_detect_recovers_family(tmp_path, capsys):
    mps = synth_file(tmp_path)
    capsys.readouterr()
    code, out, _ = run_cli(capsys, "detect", mps, "--quiet")
    assert code == 0
    doc = json.loads(out)
    assert doc["family_counts"] == {"Channel": 1}
    assert len(doc["records"]) == 1


def test_detect_rerun_is_byte_identical(tmp_path, capsys):
    mps = synth_file(tmp_path, "cardinality", 5)
    capsys.readouterr()
    _, first, _ = run_cli(capsys, "detect", mps, "--quiet")
    _, second, _ = run_cli(capsys, "detect", mps, "--quiet")
    assert first == second


def test_detect_records_out_writes_file(tmp_path, capsys):
    mps = synth_file(tmp_path, "stretch", 0)
    out_path = tmp_path / "records.json"
    capsys.readouterr()
    code, out, _ = run_cli(capsys, "detect", mps, "--records-out", str(out_path), "--quiet")
    assert code == 0
    assert out == ""
    doc = json.loads(out_path.read_text())
    assert doc["family_counts"] == {"Stretch": 1}


def test_detect_zero_row_model(tmp_path, capsys):
    model = MipModel((Variable(0, "x", 0.0, 1.0, Integrality.BINARY),), ())
    path = tmp_path / "empty.mps"
    path.write_text(write_mps(model))
    code, out, _ = run_cli(capsys, "detect", str(path), "--quiet")
    assert code == 0
    doc = json.loads(out)
    assert doc["records"] == []
    assert doc["family_counts"] == {}


def test_detect_single_family_filter(tmp_path, capsys):
    mps = synth_file(tmp_path, "cardinality", 0)
    capsys.readouterr()
    code, out, _ = run_cli(capsys, "detect", mps, "--family", "cumulative", "--quiet")
    assert code == 0
    assert json.loads(out)["records"] == []


def test_detect_missing_file_is_domain_failure(capsys):
    code, _, err = run_cli(capsys, "detect", "/no/such/file.mps")
    assert code == 1
    assert "ERROR" in err


# ---------------------------------------------------------------------------
# propagate


def test_propagate_detect_matches_records_file(tmp_path, capsys):
    mps = synth_file(tmp_path, "onehotresource", 0)
    records_path = tmp_path / "records.json"
    run_cli(capsys, "detect", mps, "--records-out", str(records_path), "--quiet")
    code_a, out_a, _ = run_cli(capsys, "propagate", mps, "--detect", "--quiet")
    code_b, out_b, _ = run_cli(
        capsys, "propagate", mps, "--records", str(records_path), "--quiet"
    )
    assert code_a == code_b == 0
    doc_a, doc_b = json.loads(out_a), json.loads(out_b)
    assert doc_a["changes"] == doc_b["changes"]
    assert doc_a["records_applied"] == doc_b["records_applied"] == 1


def test_propagate_cutoff_exits_nonzero(tmp_path, capsys):
    # two of three binaries are pinned to zero, so an exactly-two row is hopeless
    variables = (
        Variable(0, "x0", 0.0, 1.0, Integrality.BINARY),
        Variable(1, "x1", 0.0, 0.0, Integrality.BINARY),
        Variable(2, "x2", 0.0, 0.0, Integrality.BINARY),
    )
    row = LinearRow(0, "pick2", ((0, 1.0), (1, 1.0), (2, 1.0)), 2.0, 2.0)
    model = MipModel(variables, (row,))
    mps_path = tmp_path / "stuck.mps"
    mps_path.write_text(write_mps(model))
    record = SemanticRecord(
        Family.CARDINALITY, (0, 1, 2), CardinalityParams((0, 1, 2), 2.0, 2.0), (0,)
    )
    records_path = tmp_path / "records.json"
    records_path.write_text(json.dumps(records_to_json([record], model)))
    code, out, err = run_cli(
        capsys, "propagate", str(mps_path), "--records", str(records_path)
    )
    assert code == 1
    assert json.loads(out)["outcome"]["cutoff"] is True
    assert "infeasible" in err


def test_propagate_requires_a_record_source(tmp_path):
    mps_path = tmp_path / "x.mps"
    with pytest.raises(SystemExit) as excinfo:
        main(["propagate", str(mps_path)])
    assert excinfo.value.code == 2


# ---------------------------------------------------------------------------
# synth


def test_synth_writes_instance_and_sidecar(tmp_path, capsys):
    code, out, _ = run_cli(
        capsys, "synth", "--family", "nvalue", "--seed", "4", "--out", str(tmp_path), "--quiet"
    )
    assert code == 0
    mps_line, json_line = out.splitlines()
    assert mps_line.endswith("nvalue_4.mps")
    assert json_line.endswith("nvalue_4.json")
    sidecar = json.loads((tmp_path / "nvalue_4.json").read_text())
    assert sidecar["seed"] == 4


def test_synth_json_flag(tmp_path, capsys):
    code, out, _ = run_cli(
        capsys, "synth", "--family", "nvalue", "--out", str(tmp_path), "--json", "--quiet"
    )
    assert code == 0
    doc = json.loads(out)
    assert set(doc) == {"mps", "ground_truth"}


def test_synth_reruns_are_byte_identical(tmp_path, capsys):
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    for out_dir in (a_dir, b_dir):
        run_cli(
            capsys, "synth", "--family", "cumulative", "--seed", "9",
            "--out", str(out_dir), "--quiet",
        )
    assert (a_dir / "cumulative_9.mps").read_bytes() == (b_dir / "cumulative_9.mps").read_bytes()
    assert (a_dir / "cumulative_9.json").read_bytes() == (b_dir / "cumulative_9.json").read_bytes()


def test_synth_obfuscated_output_still_detectable(tmp_path, capsys):
    mps = synth_file(tmp_path, "channel", 1, extra=["--obfuscate", "on"])
    capsys.readouterr()
    code, out, _ = run_cli(capsys, "detect", mps, "--quiet")
    assert code == 0
    assert json.loads(out)["family_counts"].get("Channel") == 1


def test_synth_size_override(tmp_path, capsys):
    synth_file(tmp_path, "cardinality", 0, extra=["--size", "n=7"])
    capsys.readouterr()
    mps = str(tmp_path / "cardinality_0.mps")
    _, out, _ = run_cli(capsys, "detect", mps, "--quiet")
    record = json.loads(out)["records"][0]
    assert len(record["scope"]) == 7


def test_synth_rejects_malformed_size(tmp_path):
    with pytest.raises(SystemExit) as excinfo:
        main(["synth", "--family", "alldifferent", "--size", "n=four", "--out", str(tmp_path)])
    assert excinfo.value.code == 2


def test_seed_env_fallback(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("STRUCTPROP_SEED", "7")
    code, out, _ = run_cli(
        capsys, "synth", "--family", "nvalue", "--out", str(tmp_path), "--quiet"
    )
    assert code == 0
    assert out.splitlines()[0].endswith("nvalue_7.mps")


def test_bad_env_seed_is_usage_error(tmp_path, monkeypatch):
    monkeypatch.setenv("STRUCTPROP_SEED", "lucky")
    with pytest.raises(SystemExit) as excinfo:
        main(["synth", "--family", "nvalue", "--out", str(tmp_path)])
    assert excinfo.value.code == 2


# ---------------------------------------------------------------------------
# verify


def test_verify_single_family_ladder(tmp_path, capsys):
    report_path = tmp_path / "ladder.json"
    code, out, _ = run_cli(
        capsys, "verify", "--family", "cumulative", "--report", str(report_path), "--quiet"
    )
    assert code == 0
    assert out == ""
    doc = json.loads(report_path.read_text())
    ladder = doc["ladders"][0]
    assert ladder["family"] == "Cumulative"
    assert ladder["benchmark_ready"] is True
    assert len(ladder["gates"]) == 6


def test_verify_blocked_family_exits_nonzero(capsys, monkeypatch):
    def stub_ladder(family, suite_seed=0, **kwargs):
        return [GateResult("artifact_completeness", False, "missing: detector", 0.0)]

    monkeypatch.setattr(cli_mod, "run_gate_ladder", stub_ladder)
    code, out, err = run_cli(capsys, "verify", "--family", "stretch", "--quiet")
    assert code == 1
    assert json.loads(out)["ladders"][0]["benchmark_ready"] is False
    assert "not benchmark ready: Stretch" in err


def test_verify_suite_seed_defaults_to_seed(capsys, monkeypatch):
    seen = []

    def spy_ladder(family, suite_seed=0, **kwargs):
        seen.append(suite_seed)
        return [GateResult("artifact_completeness", True, "ok", 0.0)]

    monkeypatch.setattr(cli_mod, "run_gate_ladder", spy_ladder)
    run_cli(capsys, "verify", "--family", "channel", "--seed", "11", "--quiet")
    run_cli(capsys, "verify", "--family", "channel", "--suite-seed", "3", "--quiet")
    assert seen == [11, 3]


# ---------------------------------------------------------------------------
# search


def test_search_reports_optimum(tmp_path, capsys):
    mps = synth_file(tmp_path, "cardinality", 3)
    capsys.readouterr()
    code, out, _ = run_cli(capsys, "search", mps, "--quiet")
    assert code == 0
    doc = json.loads(out)
    assert doc["status"] == "optimal"
    assert isinstance(doc["objective"], float)
    assert len(doc["incumbent"]) == 5
    assert set(doc["incumbent"].values()) <= {0.0, 1.0}


def test_search_propfreq_values_agree(tmp_path, capsys):
    mps = synth_file(tmp_path, "disjpolyhedral", 1)
    capsys.readouterr()
    _, out_root, _ = run_cli(capsys, "search", mps, "--propfreq", "root", "--quiet")
    _, out_all, _ = run_cli(capsys, "search", mps, "--propfreq", "all", "--quiet")
    root, every = json.loads(out_root), json.loads(out_all)
    assert root["status"] == every["status"] == "optimal"
    assert root["objective"] == every["objective"]


def test_search_infeasible_exits_nonzero(tmp_path, capsys):
    instance = reverse_sample(Family.CARDINALITY, seed=0, make_infeasible=True)
    mps_path, _ = write_instance(instance, str(tmp_path), basename="clash")
    code, out, _ = run_cli(capsys, "search", mps_path, "--quiet")
    assert code == 1
    doc = json.loads(out)
    assert doc["status"] == "infeasible"
    assert doc["incumbent"] is None


def test_search_node_limit_stops_early(tmp_path, capsys):
    mps = synth_file(tmp_path, "rosteringwindow", 0)
    capsys.readouterr()
    code, out, _ = run_cli(capsys, "search", mps, "--node-limit", "2", "--quiet")
    doc = json.loads(out)
    assert doc["status"] == "limit"
    assert doc["nodes"] <= 2


# ---------------------------------------------------------------------------
# bench


def test_bench_writes_reports(tmp_path, capsys):
    for family, seed in [("cardinality", 0), ("stretch", 1)]:
        synth_file(tmp_path, family, seed)
    capsys.readouterr()
    code, out, _ = run_cli(capsys, "bench", "--dir", str(tmp_path), "--jobs", "2", "--quiet")
    assert code == 0
    paths = out.splitlines()
    assert len(paths) == 4
    assert (tmp_path / "bench_coverage.csv").exists()
    doc = json.loads((tmp_path / "bench.json").read_text())
    assert set(doc["coverage"]) == {"Cardinality", "Stretch"}


def test_bench_family_filter_and_json_flag(tmp_path, capsys):
    for family in ("cardinality", "stretch"):
        synth_file(tmp_path, family, 0)
    capsys.readouterr()
    code, out, _ = run_cli(
        capsys, "bench", "--dir", str(tmp_path), "--families", "stretch",
        "--json", "--quiet",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["skipped"] == []
    report = json.loads((tmp_path / "bench.json").read_text())
    assert set(report["coverage"]) == {"Stretch"}


def test_bench_missing_dir_is_usage_error(capsys):
    code, _, err = run_cli(capsys, "bench", "--dir", "/no/such/dir", "--quiet")
    assert code == 2
    assert "not a directory" in err


# ---------------------------------------------------------------------------
# surface


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main(["detect", "x.mps", "--frobnicate"])
    assert excinfo.value.code == 2


def test_missing_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main([])
    assert excinfo.value.code == 2


def test_quiet_silences_info(tmp_path, capsys):
    _, _, noisy = run_cli(capsys, "synth", "--family", "nvalue", "--out", str(tmp_path))
    _, _, quiet = run_cli(
        capsys, "synth", "--family", "nvalue", "--out", str(tmp_path), "--quiet"
    )
    assert "INFO" in noisy
    assert "INFO" not in quiet


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "structprop.cli", "--help"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    for name in ("detect", "propagate", "synth", "verify", "search", "bench"):
        assert name in proc.stdout
