from __future__ import annotations

import json
import random
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import httpx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hintsynth.cegis import Budget, Counterexample, RefactorConfig, compare, refactor
from hintsynth.equivalence import EquivalenceVerdict
from hintsynth.neural import (
    STUB_DELIMITER,
    TOKEN_ENV,
    AuthMissing,
    Client,
    NeuralProvider,
    ParseRejection,
    ProviderConfig,
    ProviderUnavailable,
    build_prompt,
    extract_code,
    parse_candidate,
    prompt_context,
    read_stub_file,
    render_state,
    write_stub_file,
)
from hintsynth.lang.tasks import deprecated_tasks
from hintsynth.runtime import Obj, load_program
from hintsynth.runtime.fuzz import Fuzzer

GOOD = ("```java\nCalendar c = Calendar.getInstance();\nc.setTime(date);\n"
        "int hour = c.get(Calendar.HOUR_OF_DAY);\n```")


def stub_cfg(tmp_path, responses):
    path = tmp_path / "stub.txt"
    write_stub_file(path, responses)
    return ProviderConfig(mode="stub", stub_file=str(path))


def fake_cex(task, seed=0):
    inputs = Fuzzer(task.program).inputs([p.type for p in task.inputs], random.Random(seed))
    return Counterexample(inputs, EquivalenceVerdict(False))


# -- prompt -----------------------------------------------------------------------


def test_prompt_sections_in_order(running_task):
    p = build_prompt(running_task)
    heads = [ln for ln in p.splitlines() if ln.startswith("## ")]
    assert heads == ["## Context", "## Task", "## Constraints"]
    assert "`getHours` of class `Date`" in p
    assert "int hour = date.getHours();" in p
    assert p.count("@deprecated") == 1
    assert "Calendar.get(Calendar.HOUR_OF_DAY)" in p


def test_examples_section_only_with_counterexamples(running_task):
    assert "## Examples" not in build_prompt(running_task)
    p = build_prompt(running_task, [fake_cex(running_task)])
    assert "## Examples" in p and "Example 1" in p
    assert p.index("## Constraints") < p.index("## Examples")


def test_stripped_task_prompt_drops_code_spans(running_task):
    p = build_prompt(running_task.stripped())
    assert "{@code" not in p
    assert "HOUR_OF_DAY" not in p.split("## Task")[0]


def test_missing_doc_renders_none():
    tp = load_program("class Old { @Deprecated public static int f(int x) { return x; } }\n"
                      "snippet s(int a) live(a, b) { int b = Old.f(a); }")
    (task,) = deprecated_tasks(tp)
    assert prompt_context(task).javadoc_comment is None
    assert "```\n(none)\n```" in build_prompt(task)


def test_render_state_elides_ids_and_cycles():
    a = Obj(1, "Node", {"v": 1})
    a.fields["next"] = a
    b = Obj(9, "Node", {"v": 1})
    b.fields["next"] = b
    assert render_state(a) == render_state(b) == "Node{next=Node{...}, v=1}"


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_prompt_is_deterministic(running_task, seed):
    cx = fake_cex(running_task, seed)
    assert build_prompt(running_task, [cx]) == build_prompt(running_task, [cx])


# -- stub transport -----------------------------------------------------------------


def test_stub_file_round_trip(tmp_path):
    recs = ["first\nline", "```\ncode\n```", ""]
    path = tmp_path / "s.txt"
    write_stub_file(path, recs)
    assert read_stub_file(path) == recs
    assert path.read_text().count(STUB_DELIMITER + "\n") == 3


def test_stub_responses_in_order_then_exhausted(tmp_path):
    client = Client(stub_cfg(tmp_path, ["a", "b"]))
    assert [client.complete("x"), client.complete("y")] == ["a", "b"]
    with pytest.raises(ProviderUnavailable):
        client.complete("z")


def test_stub_without_file_is_unavailable():
    with pytest.raises(ProviderUnavailable):
        Client(ProviderConfig(mode="stub")).complete("x")


# -- live transport -----------------------------------------------------------------


def _refuse(request):
    raise AssertionError("no request may be sent")


def test_auth_missing_before_any_network(monkeypatch):
    monkeypatch.delenv(TOKEN_ENV, raising=False)
    client = Client(ProviderConfig(mode="live"), transport=httpx.MockTransport(_refuse))
    with pytest.raises(AuthMissing):
        client.complete("x")


def _ok(text):
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": text}}]})


def test_payload_schema(monkeypatch):
    monkeypatch.setenv(TOKEN_ENV, "t0ken")
    seen = []

    def handler(request):
        seen.append(request)
        return _ok("done")

    cfg = ProviderConfig(mode="live", model="m1", temperature=0.0)
    assert Client(cfg, transport=httpx.MockTransport(handler)).complete("PROMPT") == "done"
    (req,) = seen
    assert req.headers["authorization"] == "Bearer t0ken"
    body = json.loads(req.content)
    assert sorted(body) == ["messages", "model", "temperature"]
    assert body["model"] == "m1" and body["temperature"] == 0.0
    assert [m["role"] for m in body["messages"]] == ["system", "user"]
    assert body["messages"][1]["content"] == "PROMPT"


@pytest.mark.parametrize("status", [500, 503, 429])
def test_transient_errors_are_retried(monkeypatch, status):
    monkeypatch.setenv(TOKEN_ENV, "t")
    codes = iter([status, status, 200])
    sleeps = []

    def handler(request):
        code = next(codes)
        return _ok("third") if code == 200 else httpx.Response(code)

    client = Client(ProviderConfig(mode="live"), transport=httpx.MockTransport(handler), sleep=sleeps.append)
    assert client.complete("x") == "third"
    assert sleeps == [0.5, 1.0]


def test_retries_exhausted(monkeypatch):
    monkeypatch.setenv(TOKEN_ENV, "t")
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(502)

    client = Client(ProviderConfig(mode="live"), transport=httpx.MockTransport(handler), sleep=lambda s: None)
    with pytest.raises(ProviderUnavailable, match="502"):
        client.complete("x")
    assert len(calls) == 3


def test_client_errors_are_not_retried(monkeypatch):
    monkeypatch.setenv(TOKEN_ENV, "t")
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(400)

    with pytest.raises(ProviderUnavailable):
        Client(ProviderConfig(mode="live"), transport=httpx.MockTransport(handler), sleep=lambda s: None).complete("x")
    assert len(calls) == 1


def test_malformed_body_is_unavailable(monkeypatch):
    monkeypatch.setenv(TOKEN_ENV, "t")
    client = Client(ProviderConfig(mode="live"), transport=httpx.MockTransport(lambda r: httpx.Response(200, json={})))
    with pytest.raises(ProviderUnavailable, match="malformed"):
        client.complete("x")


class _Handler(BaseHTTPRequestHandler):
    def do_POST(self):  # noqa: N802
        n = int(self.headers["Content-Length"])
        body = json.loads(self.rfile.read(n))
        reply = json.dumps({"choices": [{"message": {"content": "echo:" + body["model"]}}]}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(reply)))
        self.end_headers()
        self.wfile.write(reply)

    def log_message(self, *args):
        pass


def test_loopback_server(monkeypatch):
    monkeypatch.setenv(TOKEN_ENV, "t")
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        url = f"http://127.0.0.1:{server.server_port}/v1/chat/completions"
        cfg = ProviderConfig(mode="live", endpoint=url, model="local", timeout=5)
        assert Client(cfg).complete("hello") == "echo:local"
    finally:
        server.shutdown()
        server.server_close()


# -- parsing ------------------------------------------------------------------------


def test_parse_good_candidate(running_task):
    c = parse_candidate(GOOD, running_task)
    assert c.source == "Neural" and len(c) == 3
    assert c.steps[0] == "Calendar c = Calendar.getInstance();"


def test_prose_is_rejected(running_task):
    out = parse_candidate("Sure! You should use a Calendar for this.", running_task)
    assert isinstance(out, ParseRejection) and out.reason.startswith("parse error")


def test_undeclared_class_is_a_type_error(running_task):
    out = parse_candidate("```\nLocalDateTime t = LocalDateTime.now();\nint hour = t.getHour();\n```", running_task)
    assert isinstance(out, ParseRejection) and out.reason.startswith("type error")


def test_deprecated_call_is_rejected(running_task):
    out = parse_candidate("```\nint hour = date.getHours();\n```", running_task)
    assert isinstance(out, ParseRejection) and "still calls" in out.reason


def test_first_of_several_fences_is_used():
    code, n = extract_code("```\nint a = 1;\n```\ntext\n```java\nint b = 2;\n```")
    assert code == "int a = 1;\n" and n == 2
    assert extract_code("   ") == (None, 0)


def test_multiple_fences_are_noted(tmp_path, running_task):
    prov = NeuralProvider(stub_cfg(tmp_path, [GOOD + "\n```\nint x = 1;\n```"]))
    first = next(prov.candidates(running_task, None, [], random.Random(0)))
    assert first.source == "Neural"
    assert prov.notes == ["2 fenced blocks; only the first was used"]


# -- end to end -----------------------------------------------------------------------


def test_stub_round_trip_verifies(tmp_path, running_task):
    res = refactor(running_task, RefactorConfig(Budget(), provider=NeuralProvider(stub_cfg(tmp_path, [GOOD]))))
    assert res.verified and res.candidate.source == "Neural"
    assert res.iterations[-1].inputs_checked == 500


def test_counterexample_feedback_reaches_second_prompt(tmp_path, running_task):
    wrong = "```\nint hour = 0;\n```"
    prov = NeuralProvider(stub_cfg(tmp_path, [wrong, GOOD]))
    res = refactor(running_task, RefactorConfig(Budget(), provider=prov))
    assert res.verified
    assert [r.outcome for r in res.iterations] == ["counterexample", "verified"]
    assert "## Examples" not in prov.prompts[0] and "## Examples" in prov.prompts[1]
    assert not compare(running_task, parse_candidate(wrong, running_task), res.counterexamples[0].inputs).equal


def test_exhausted_stub_is_a_miss_not_a_crash(tmp_path, running_task):
    res = refactor(running_task, RefactorConfig(Budget(), provider=NeuralProvider(stub_cfg(tmp_path, []))))
    assert not res.verified
    assert res.iterations[-1].outcome == "synthesis_failure"
    assert "provider" in res.iterations[-1].detail


def test_ignored_blocks_are_recorded_in_trace(tmp_path, running_task):
    prov = NeuralProvider(stub_cfg(tmp_path, [GOOD + "\nor\n```\nint hour = 1;\n```"]))
    res = refactor(running_task, RefactorConfig(Budget(), provider=prov))
    assert res.verified
    assert res.trace()[0]["notes"] == ["2 fenced blocks; only the first was used"]
