from __future__ import annotations

import json
import shutil
import subprocess
import sys

import pytest

from hintsynth.cegis import RefactorResult, compare
from hintsynth.cli import main
from hintsynth.config import RunConfig
from hintsynth.harness import MISSED, SOUND, classify, emit_report, run_corpus, table_rows
from hintsynth.neural import write_stub_file

from conftest import CORPUS

GOOD = ("```\nCalendar c = Calendar.getInstance();\nc.setTime(date);\n"
        "int hour = c.get(Calendar.HOUR_OF_DAY);\n```")


@pytest.fixture
def small_corpus(tmp_path):
    d = tmp_path / "corpus"
    d.mkdir()
    shutil.copy(CORPUS / "running_example.mj", d)
    shutil.copy(CORPUS / "characters.mj", d)
    return d


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


# -- seed-dump ----------------------------------------------------------------------


def test_seed_dump_running_example(capsys):
    code, out, _ = run_cli(capsys, "seed-dump", CORPUS / "running_example.mj", "--task", "getHours")
    assert code == 0
    head = out.split("# Types-library")[0]
    assert head.splitlines() == [
        "# CodeHints-library (4 components)",
        "Constant Calendar.HOUR_OF_DAY -> int [hint]",
        "InstanceMethod Calendar.get(int) -> int [hint]",
        "StaticMethod Calendar.getInstance() -> Calendar",
        "Transformer Calendar.setTime(Date) -> void",
    ]
    assert "Calendar" not in out.split("# Types-library")[1]


def test_seed_dump_is_byte_stable_across_processes():
    argv = [sys.executable, "-m", "hintsynth.cli", "seed-dump", str(CORPUS / "running_example.mj"), "--task", "getHours"]
    a = subprocess.run(argv, capture_output=True, check=True).stdout
    b = subprocess.run(argv, capture_output=True, check=True).stdout
    assert a == b and a.startswith(b"# CodeHints-library")


def test_seed_dump_unknown_task(capsys):
    with pytest.raises(SystemExit, match="no task 'nope'"):
        main(["seed-dump", str(CORPUS / "running_example.mj"), "--task", "nope"])


# -- verify -------------------------------------------------------------------------


@pytest.mark.parametrize("text, code, result", [
    (GOOD, 0, "verified"),
    ("```\nint hour = 3;\n```", 1, "counterexample"),
    ("no code here, sorry", 1, "rejected"),
])
def test_verify_exit_codes(capsys, tmp_path, text, code, result):
    cand = tmp_path / "cand.txt"
    cand.write_text(text)
    got, out, _ = run_cli(capsys, "verify", CORPUS / "running_example.mj", "--task", "getHours",
                          "--candidate", cand, "--max-inputs", 60)
    assert got == code
    assert json.loads(out)["result"] == result


# -- run ----------------------------------------------------------------------------


def test_run_on_empty_directory(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "run", tmp_path, "--no-timings")
    assert code == 0
    assert out.splitlines() == [out.splitlines()[0]]
    assert out.startswith("engine")


def test_run_on_missing_corpus(capsys, tmp_path):
    code, _, err = run_cli(capsys, "run", tmp_path / "absent")
    assert code == 2 and "does not exist" in err


def test_bad_config_is_reported(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("nonsense = 1\n")
    code, _, err = run_cli(capsys, "run", tmp_path, "--config", cfg)
    assert code == 2 and "unknown key" in err


def test_run_reports_are_byte_identical(capsys, small_corpus, tmp_path):
    outs = []
    for name in ("r1", "r2"):
        code, table, _ = run_cli(capsys, "run", small_corpus, "--no-timings", "--max-inputs", 50,
                                 "--workers", 1, "--report-dir", tmp_path / name)
        assert code == 0
        outs.append((tmp_path / name / "results.jsonl").read_bytes())
        assert (tmp_path / name / "report.txt").read_text() == table
    assert outs[0] == outs[1]
    records = [json.loads(ln) for ln in outs[0].decode().splitlines()]
    assert len(records) == 3  # getHours, isSpace, isJavaLetter
    for r in records:
        assert r["schema"] == 1 and r["wall_ms"] is None
        assert {"task", "engine", "outcome", "iterations", "counterexamples", "library"} <= set(r)
        if r["outcome"] == "Unsound":
            assert "witness" in r


def test_broken_file_is_skipped_not_fatal(capsys, small_corpus):
    (small_corpus / "broken.mj").write_text("class { oops")
    code, out, err = run_cli(capsys, "run", small_corpus, "--no-timings", "--max-inputs", 30, "--workers", 1)
    assert code == 0
    assert "skipped broken.mj" in err
    assert "symbolic      hints" in out


def test_parallel_and_serial_runs_agree(small_corpus):
    cfg = RunConfig(corpus=str(small_corpus), timings=False)
    cfg.budget = cfg.budget.__class__(max_inputs_per_verify=40)
    serial = emit_report(run_corpus(RunConfig(**{**cfg.__dict__, "workers": 1})), timings=False)[1]
    parallel = emit_report(run_corpus(RunConfig(**{**cfg.__dict__, "workers": 2})), timings=False)[1]
    assert serial == parallel


# -- harness --------------------------------------------------------------------------


def test_two_engines_add_best_virtual_rows(tmp_path):
    d = tmp_path / "one"
    d.mkdir()
    shutil.copy(CORPUS / "running_example.mj", d)
    stub = tmp_path / "stub.txt"
    write_stub_file(stub, [GOOD])
    cfg = RunConfig(corpus=str(d), engines=("symbolic", "neural"), workers=1)
    cfg.provider.stub_file = str(stub)
    cfg.budget = cfg.budget.__class__(max_inputs_per_verify=40)
    results = run_corpus(cfg)
    assert [(r.task, r.engine) for r in results] == [("getHours", "symbolic"), ("getHours", "neural")]
    rows = table_rows(results)
    assert [(r["engine"], r["partition"]) for r in rows] == [
        ("symbolic", "hints"), ("symbolic", "no-hints"), ("neural", "hints"), ("neural", "no-hints"),
        ("best-virtual", "hints"), ("best-virtual", "no-hints")]
    for r in rows:
        assert r["sound"] + r["missed"] + r["unsound"] == r["tasks"]
    assert all(r.outcome == SOUND for r in results)
    assert rows[4]["sound"] == 1 and rows[4]["tasks"] == 1


def test_stub_exhaustion_across_tasks_is_missed(tmp_path, small_corpus):
    stub = tmp_path / "stub.txt"
    write_stub_file(stub, ["no idea"])
    cfg = RunConfig(corpus=str(small_corpus), engines=("neural",), workers=1)
    cfg.provider.stub_file = str(stub)
    results = run_corpus(cfg)
    assert len(results) == 3 and {r.outcome for r in results} == {MISSED}
    first = results[0].trace
    assert "ParseRejection" in json.dumps(first)


def test_classify_failure_is_missed(running_task):
    res = RefactorResult(running_task.id, False, None, None)
    assert classify(running_task, res, 100) == (MISSED, None)


def test_zero_results_table_is_header_only():
    table, records = emit_report([], timings=True)
    assert len(table.splitlines()) == 1 and records == ""


def test_domain_beyond_bound_is_sampled_with_caveat(flag_task):
    from hintsynth.harness import oracle
    from hintsynth.neural import parse_candidate

    cand = parse_candidate("boolean raised = Flag.probe(x);", flag_task)
    ov = oracle(flag_task, cand, 2000)
    # the single witness is out of reach of 2000 samples from 2^20 points (with this seed)
    assert ov.outcome == SOUND and not ov.exhaustive and ov.points == 2000
    assert "sampled oracle" in ov.caveat and "exceeds bound" in ov.caveat


def test_exhaustive_witness_replays(corpus_tasks):
    from hintsynth.harness import oracle
    from hintsynth.neural import parse_candidate

    t = corpus_tasks["preferredSize"]
    cand = parse_candidate("Dimension dim = container.getMinimumSize();", t)
    ov = oracle(t, cand, 1 << 20)
    # the first domain point (w = h = 0) happens to agree
    assert ov.outcome == "Unsound" and ov.exhaustive and ov.points == 2
    assert not compare(t, cand, ov.witness).equal
