import argparse
import json

import pytest

from mpp.cli import main, parse_memory
from mpp.generators import iid_instance
from mpp.io import bundled_instance_path, save_instance

EX1 = str(bundled_instance_path("example1"))


def test_solve_both_models(capsys, tmp_path):
    assert main(["solve", EX1, "--model", "no", "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.startswith("OPT = 1.000000")
    assert main(["solve", EX1, "--model", "full", "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.startswith("OPT = 0.520000")
    saved = json.loads((tmp_path / "full.json").read_text())
    assert saved["value"] == pytest.approx(0.52)
    assert {"mechanism", "invariant_pairs", "posteriors"} <= set(saved)


def test_missing_example_falls_back_to_bundled(capsys, tmp_path):
    assert main(["solve", str(tmp_path / "example1.json")]) == 0
    captured = capsys.readouterr()
    assert "bundled example1" in captured.err
    assert captured.out.startswith("OPT = 1.000000")


def test_malformed_instance_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{\n  \"states\": 2,,\n}")
    assert main(["solve", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["solve", str(tmp_path / "nowhere.json")]) == 2


def test_robust_epsilon_too_large(capsys):
    assert main(["robust", EX1, "--epsilon", "0.5"]) == 5
    out = capsys.readouterr().out
    threshold = float(out.split("admissible threshold:")[1])
    # s_f * w_min * D / (2 (s_f + 2 (1 + tau) sqrt(|states|))) with s_f = sqrt(0.68 * 2), tau = 5
    s_f = (0.68 * 2) ** 0.5
    assert threshold == pytest.approx(s_f / (2 * (s_f + 12 * 2**0.5)), rel=1e-5)


def test_robust_report(capsys):
    assert main(["robust", EX1, "--epsilon", "0.01", "--verify-samples", "500"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["verification"]["analytic_ok"] and report["verification"]["sampled_ok"]
    assert report["certificate"]["payoff"] >= report["certificate"]["payoff_lower_bound"]
    assert report["lag"]["exact"] <= report["lag"]["spectral"]


def test_robust_at_zero_epsilon(capsys):
    assert main(["robust", EX1, "--epsilon", "0", "--verify-samples", "100"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["lag"] is None
    assert report["certificate"]["payoff"] == pytest.approx(1.0)


def test_partial_csv_is_reproducible(capsys, tmp_path):
    args = ["partial", EX1, "--lag", "1", "--memory", "0..1", "--starts", "2", "--seed", "3"]
    assert main(args + ["--out", str(tmp_path)]) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    second = capsys.readouterr().out
    assert first == second
    lines = first.strip().split("\n")
    assert lines[0] == "lag,memory,value,starts,best_start,best_label"
    assert len(lines) == 3
    assert (tmp_path / "partial.csv").read_text() == first
    assert json.loads((tmp_path / "partial-lag1-memory0.json").read_text())["memory"] == 0


def test_partial_rejects_lag_zero(capsys):
    assert main(["partial", EX1, "--lag", "0"]) == 2


def test_cap_exceeded_exit_code(capsys, monkeypatch):
    monkeypatch.setenv("MPP_SLICE_CAP", "2")
    assert main(["partial", EX1, "--lag", "2", "--memory", "1", "--starts", "1"]) == 4


def test_check_equality(capsys, tmp_path):
    assert main(["check-equality", EX1]) == 0
    assert "FAILS" in capsys.readouterr().out
    path = tmp_path / "iid.json"
    save_instance(iid_instance(0), path)
    assert main(["check-equality", str(path), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("holds; OPT(no)=")
    no, full = (float(part.split("=")[1]) for part in out.split(";")[1].split())
    assert no == pytest.approx(full, abs=1e-6)
    assert json.loads((tmp_path / "equality.json").read_text())["holds"] is True


def test_simulate_solved_mechanism(capsys, tmp_path):
    assert main(["solve", EX1, "--model", "full", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    mech = str(tmp_path / "full.json")
    assert main(["simulate", EX1, "--mechanism", mech, "-T", "5000", "--model", "full"]) == 0
    header, row = capsys.readouterr().out.strip().split("\n")
    fields = dict(zip(header.split(","), row.split(",")))
    assert float(fields["obedience_rate"]) == 1.0
    assert float(fields["reward"]) == pytest.approx(0.52, abs=0.05)


def test_simulate_rejects_mismatched_mechanism(capsys, tmp_path):
    path = tmp_path / "iid.json"
    save_instance(iid_instance(0, n_states=3), path)
    assert main(["solve", EX1, "--out", str(tmp_path)]) == 0
    assert main(["simulate", str(path), "--mechanism", str(tmp_path / "no.json"), "-T", "10"]) == 2


def test_parse_memory():
    assert parse_memory("3") == [3]
    assert parse_memory("0..4") == [0, 1, 2, 3, 4]
    for bad in ("x", "2..1", "-1"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_memory(bad)
