"""End-to-end acceptance checks; each prints one PASS/FAIL line."""

from __future__ import annotations

import random
import socket
import time

import httpx
import pytest

from hintsynth.cegis import Budget, RefactorConfig, compare, refactor, verify, Verified
from hintsynth.cli import main
from hintsynth.config import RunConfig
from hintsynth.equivalence import Condition, EqualsPolicy, deep_equals, equivalent, policy_for
from hintsynth.harness import MISSED, SOUND, UNSOUND, classify, oracle, run_corpus
from hintsynth.library import seed_types_library
from hintsynth.neural import NeuralProvider, ProviderConfig, example_pair, write_stub_file
from hintsynth.runtime import execute
from hintsynth.runtime.fuzz import Fuzzer
from hintsynth.runtime.values import input_key

from conftest import CORPUS
from heaps import mutate, oracle_equal, random_heap
from minitasks import mini_tasks

GOOD = ("```\nCalendar c = Calendar.getInstance();\nc.setTime(date);\n"
        "int hour = c.get(Calendar.HOUR_OF_DAY);\n```")


@pytest.fixture
def report(capsys):
    def emit(ac: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n{ac} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return emit


def _verdict(tp, a, b, inputs):
    s = tp.snippets
    live = list(s[a].snippet.live_out)
    return equivalent(execute(s[a], inputs, tp), execute(s[b], inputs, tp), live, live, policy_for(tp), program=tp)


def test_ac1_equivalence_fixtures(eq_program, report):
    t0 = time.monotonic()
    fz = Fuzzer(eq_program)
    rng = random.Random("ac1")
    p1p2 = sum(not _verdict(eq_program, "p1", "p2", fz.inputs(["Date"], rng)).equal for _ in range(10_000))
    p3p4 = {_verdict(eq_program, "p3", "p4", []).violated_condition for _ in range(20)}
    live_hit = None
    for n in range(1, 501):
        i = fz.inputs(["int"] * 3, rng)
        v = _verdict(eq_program, "date1", "date2", i)
        if i[0] < 0 and v.violated_condition is Condition.LIVE_VARS:
            live_hit = (n, i)
            break
    d23 = sum(not _verdict(eq_program, "date2", "date3", fz.inputs(["int"] * 3, rng)).equal for _ in range(2000))
    secs = time.monotonic() - t0
    ok = p1p2 == 0 and p3p4 == {Condition.ALIASING} and live_hit is not None and d23 == 0 and secs < 10
    report("AC1", ok, f"P1/P2 failures {p1p2}/10000, P3/P4 {sorted(c.name for c in p3p4)}, "
                      f"date1/date2 LiveVars at input {live_hit}, date2/date3 failures {d23}, {secs:.1f}s")


RUNNING_DUMP = [
    "# CodeHints-library (4 components)",
    "Constant Calendar.HOUR_OF_DAY -> int [hint]",
    "InstanceMethod Calendar.get(int) -> int [hint]",
    "StaticMethod Calendar.getInstance() -> Calendar",
    "Transformer Calendar.setTime(Date) -> void",
]


def test_ac2_seeding_exactness(capsys, running_task, report):
    outs = []
    for _ in range(2):
        main(["seed-dump", str(CORPUS / "running_example.mj"), "--task", "getHours"])
        outs.append(capsys.readouterr().out)
    code_part, types_part = outs[0].split("# Types-library", 1)
    types_lib, _ = seed_types_library(running_task, running_task.program)
    ok = (code_part.splitlines() == RUNNING_DUMP and "Locale" not in code_part and "TimeZone" not in code_part
          and not any("Calendar" in c.dump_line() for c in types_lib) and "Calendar" not in types_part
          and outs[0] == outs[1])
    report("AC2", ok, f"CodeHints {len(code_part.splitlines()) - 1} components, Types-library "
                      f"{len(types_lib)} components without Calendar, byte-stable={outs[0] == outs[1]}")


def test_ac3_running_example_end_to_end(running_task, report):
    t0 = time.monotonic()
    res = refactor(running_task)
    outcome, ov = classify(running_task, res, 10**6)
    secs = time.monotonic() - t0
    ok = res.verified and outcome == SOUND and ov.exhaustive and ov.points <= 10**6 and secs < 120
    report("AC3", ok, f"{outcome} via {'exhaustive' if ov and ov.exhaustive else 'sampled'} oracle over "
                      f"{ov.points if ov else 0} points in {secs:.1f}s")


def test_ac4_hint_gap(report):
    t0 = time.monotonic()
    hinted = run_corpus(RunConfig(corpus=str(CORPUS)))
    stripped = run_corpus(RunConfig(corpus=str(CORPUS), strip_hints=True))
    secs = time.monotonic() - t0

    def rate(rs):
        h = [r for r in rs if r.hinted]
        return sum(r.outcome == SOUND for r in h) / len(h), len(h)

    (a, n), (b, _) = rate(hinted), rate(stripped)
    ok = len(hinted) == 20 and n >= 14 and a >= 0.8 and b < a and secs < 900
    report("AC4", ok, f"hinted tasks {n}: sound {a:.1%} with hints vs {b:.1%} stripped, {secs:.0f}s")


AC5_BUDGET = Budget(max_inputs_per_verify=25, synth_time=5, verify_time=5, max_candidates=500,
                    max_steps=3, max_iterations=4)


def test_ac5_cegis_properties(report):
    tasks = mini_tasks(2024, 1000)
    cfg = RefactorConfig(AC5_BUDGET)
    first = [refactor(t, cfg) for t in tasks]
    second = [refactor(t, cfg) for t in tasks]
    recheck_fail = dup = 0
    verified = 0
    for t, r in zip(tasks, first):
        keys = [tuple(input_key(v) for v in cx.inputs) for cx in r.counterexamples]
        dup += len(keys) != len(set(keys))
        if r.verified:
            verified += 1
            recheck_fail += not all(compare(t, r.candidate, cx.inputs).equal for cx in r.counterexamples)
    diverged = sum(a.trace() != b.trace() for a, b in zip(first, second))
    with_cx = sum(bool(r.counterexamples) for r in first)
    ok = len(tasks) == 1000 and recheck_fail == 0 and dup == 0 and diverged == 0
    report("AC5", ok, f"{len(tasks)} tasks, {verified} verified, {with_cx} with counterexamples; "
                      f"re-check failures {recheck_fail}, duplicate counterexamples {dup}, diverged traces {diverged}")


def test_ac6_oracle_beats_fuzzer(flag_task, report):
    cand_text = "boolean raised = Flag.probe(x);"
    from hintsynth.neural import parse_candidate

    cand = parse_candidate(cand_text, flag_task)
    fuzz = verify(flag_task, cand, Budget(), rng=random.Random(0))
    ov = oracle(flag_task, cand, 1 << 20)
    ok = isinstance(fuzz, Verified) and fuzz.inputs_checked == 500 and ov.outcome == UNSOUND \
        and ov.exhaustive and ov.witness == (777777,)
    report("AC6", ok, f"fuzzer {type(fuzz).__name__} after {getattr(fuzz, 'inputs_checked', 0)} inputs; "
                      f"exhaustive oracle {ov.outcome} with witness {ov.witness}")


def test_ac7_neural_round_trip(tmp_path, monkeypatch, running_task, report):
    def no_network(*args, **kwargs):
        raise AssertionError("network access attempted")

    monkeypatch.setattr(httpx.HTTPTransport, "handle_request", no_network)
    monkeypatch.setattr(socket.socket, "connect", no_network)

    def run(responses):
        stub = tmp_path / f"stub{len(responses)}.txt"
        write_stub_file(stub, responses)
        prov = NeuralProvider(ProviderConfig(mode="stub", stub_file=str(stub)))
        res = refactor(running_task, RefactorConfig(Budget(), provider=prov))
        return res, classify(running_task, res, 10**6)[0], prov

    _, good_outcome, _ = run([GOOD])
    prose, prose_outcome, _ = run(["I would use the Calendar class here."])
    rejected = any("ParseRejection" in str(x) for r in prose.iterations for x in r.rejections)
    fb, fb_outcome, prov = run(["```\nint hour = 7;\n```", GOOD])
    lines = [ln for cx in fb.counterexamples[:1] for part in example_pair(running_task, cx) for ln in part]
    fed_back = len(prov.prompts) >= 2 and bool(lines) and all(ln in prov.prompts[1] for ln in lines)
    ok = good_outcome == SOUND and prose_outcome == MISSED and rejected and fed_back and fb_outcome == SOUND
    report("AC7", ok, f"correct stub {good_outcome}, prose stub {prose_outcome} (ParseRejection={rejected}), "
                      f"counterexample fed back={fed_back}")


def test_ac8_deep_equals_properties(report):
    refl = sym = mism = acyclic = 0
    for seed in range(10_000):
        rng = random.Random(f"ac8/{seed}")
        ac = seed % 2 == 0
        objs = random_heap(rng, ac)
        other = mutate(rng, objs) if rng.random() < 0.5 else random_heap(rng, ac)
        a, b = rng.choice(objs), rng.choice(other)
        got = deep_equals(a, b, None, None, EqualsPolicy())
        refl += not deep_equals(a, a, None, None, EqualsPolicy())
        sym += got != deep_equals(b, a, None, None, EqualsPolicy())
        if ac:
            acyclic += 1
            mism += got != oracle_equal(a, b)
    ok = refl == sym == mism == 0
    report("AC8", ok, f"10000 heaps: reflexivity failures {refl}, symmetry failures {sym}, "
                      f"oracle mismatches {mism}/{acyclic} acyclic")
