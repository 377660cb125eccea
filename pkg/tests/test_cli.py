import json
from pathlib import Path

import pytest

from wshsa.cli import main, sweep_rows
from wshsa.scheme import example1_scheme, export_scheme

ROOT = Path(__file__).resolve().parents[1]
CORPUS = ROOT / "corpus"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


@pytest.mark.parametrize("name,rate", [
    ("example1.json", "4 (exact)"),
    ("example2.json", "5/2 (exact)"),
    ("strong_security.json", "5 (exact)"),
    ("infeasible.json", "infeasible"),
    ("empty.json", "0 (exact)"),
])
def test_rate_command(capsys, name, rate):
    code, rep = run(capsys, "rate", CORPUS / name)
    assert code == 0
    assert rep["optimal_total_key_rate"] == rate


def test_analyze_reports_class(capsys):
    code, rep = run(capsys, "analyze", CORPUS / "example1.json")
    assert code == 0
    assert rep["class"] == "C1Case3"


def test_synthesize_and_verify(capsys, tmp_path):
    out = tmp_path / "scheme.json"
    code, rep = run(capsys, "synthesize", CORPUS / "example2.json", "--verify", "--scheme-out", out)
    assert code == 0 and rep["all_pass"]
    assert rep["achieved_rate"] == "5/2"
    code, rep = run(capsys, "verify", CORPUS / "example2.json", "--scheme", out)
    assert code == 0 and rep["security"]["all_pass"]


def test_verify_imported_reference_scheme(capsys, tmp_path):
    path = tmp_path / "s.json"
    path.write_text(export_scheme(example1_scheme()))
    code, rep = run(capsys, "verify", CORPUS / "example1.json", "--scheme", path,
                    "--oracle-seconds", 3)
    assert code == 0 and rep["all_pass"]
    assert rep["oracle"]["mismatches"] == 0 and rep["oracle"]["checked"] >= 1


def test_simulate_rounds(capsys):
    code, rep = run(capsys, "simulate", CORPUS / "example2.json", "--synthesize",
                    "--seed", 7, "--rounds", 100)
    assert code == 0
    assert rep["simulation"] == {"correct": 100, "rounds": 100, "seed": 7}


def test_audit_command(capsys):
    code, rep = run(capsys, "audit", CORPUS / "example1.json", "--synthesize")
    assert code == 0 and rep["lemma_audit"]["all_pass"]


def test_infeasible_skips_synthesis(capsys):
    code, rep = run(capsys, "synthesize", CORPUS / "infeasible.json")
    assert code == 4
    assert rep["synthesis"]["attempted"] is False


def test_reports_are_deterministic(capsys):
    argv = ("synthesize", CORPUS / "example1.json", "--verify", "--seed", 3)
    assert run(capsys, *argv) == run(capsys, *argv)


def test_sweep_matches_golden(capsys):
    code, rep = run(capsys, "sweep", CORPUS)
    assert code == 0
    assert rep == json.loads((Path(__file__).parent / "data" / "golden_sweep.json").read_text())


def test_oracle_skipped_over_budget(capsys, tmp_path):
    path = tmp_path / "s.json"
    path.write_text(export_scheme(example1_scheme()))
    code, rep = run(capsys, "verify", CORPUS / "example1.json", "--scheme", path, "--budget", 1000)
    assert code == 0 and rep["oracle"]["status"] == "skipped"


def test_budget_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("WSHSA_BUDGET", "1000")
    path = tmp_path / "s.json"
    path.write_text(export_scheme(example1_scheme()))
    code, rep = run(capsys, "verify", CORPUS / "example1.json", "--scheme", path)
    assert rep["oracle"] == {"status": "skipped", "states": 5**10, "budget": 1000}


def test_sweep_empty_directory(tmp_path):
    assert sweep_rows(tmp_path) == []


def test_bad_input_exit_codes(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["rate", str(bad)]) == 3
    assert main(["rate", str(tmp_path / "missing.json")]) == 3
    broken = tmp_path / "scheme.json"
    broken.write_text('{"q": 6, "L": 1, "Lz": 0, "keys": {}}')
    assert main(["verify", str(CORPUS / "example1.json"), "--scheme", str(broken)]) == 6
    with pytest.raises(SystemExit) as exc:
        main(["rate"])
    assert exc.value.code == 2


def test_non_monotone_rejected_without_closure(tmp_path):
    path = tmp_path / "nm.json"
    path.write_text(json.dumps({"clusters": [1, 1], "security_sets": [[[1, 1]]],
                                "collusion_sets": [[]]}))
    assert main(["rate", str(path), "--no-closure"]) == 3
