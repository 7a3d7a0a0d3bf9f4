"""LLM-backed candidate provider.

The prompt carries the deprecated method, its doc comment and the snippet
to rewrite; after the first round it also lists the input/output examples
gathered from counterexamples. Responses come either from an HTTP
chat-completion endpoint or from a canned stub file.
"""

from __future__ import annotations

import logging
import os
import re
import time
from dataclasses import dataclass, replace

import httpx

from .cegis import Candidate, Counterexample, ProviderError, typed_candidate
from .lang.lexer import MjSyntaxError
from .lang.printer import method_str, statements_str
from .lang.syntax import Snippet
from .lang.tasks import RefactoringTask, deprecated_call
from .lang.typecheck import MjTypeError
from .runtime.interp import execute
from .runtime.values import Obj, value_str

log = logging.getLogger(__name__)

TOKEN_ENV = "HINTSYNTH_PROVIDER_TOKEN"
STUB_DELIMITER = "%%END%%"
_CODE_SPAN = re.compile(r"\{@code\s?((?:[^{}]|\{[^{}]*\})*)\}")


class ProviderUnavailable(ProviderError):
    pass


class AuthMissing(ProviderError):
    pass


@dataclass(frozen=True)
class ParseRejection:
    reason: str
    text: str = ""

    def __str__(self) -> str:
        return f"ParseRejection: {self.reason}"


# -- prompt -----------------------------------------------------------------------

CONSTRAINTS = (
    "Keep the input variables ({inputs}) under the same names.\n"
    "After your code runs, the variables {outputs} must hold the results.\n"
    "Use straight-line statements only: no if, while, return or throw.\n"
    "Write the code in the same language as the snippet, no imports.\n"
    "The call to {method} must not appear in your answer, and do not paste "
    "the body of {method} in its place."
)


def render_state(value, seen: set | None = None) -> str:
    """Deterministic text for a runtime value; object ids are left out."""
    if not isinstance(value, Obj):
        return value_str(value)
    seen = set() if seen is None else seen
    if value.id in seen:
        return f"{value.cls}{{...}}"
    seen = seen | {value.id}
    inner = ", ".join(f"{k}={render_state(value.fields[k], seen)}" for k in sorted(value.fields))
    return f"{value.cls}{{{inner}}}"


@dataclass(frozen=True)
class PromptContext:
    method_name: str
    class_name: str
    method_definition: str
    javadoc_comment: str | None
    code_snippet: str
    formatting_constraints: str
    examples: tuple = ()  # ((input lines), (output lines))


def example_pair(task: RefactoringTask, cex: Counterexample) -> tuple:
    names = task.snippet.input_names
    pre = Snippet(f"{task.id}$inputs", task.inputs, names, ())
    before = execute(pre, cex.inputs, task.program)
    after = execute(task.typed, cex.inputs, task.program)
    ins = tuple(f"{n} = {render_state(before.env.get(n))}" for n in sorted(names))
    if after.thrown:
        outs = (f"throws {after.thrown}",)
    else:
        outs = tuple(f"{n} = {render_state(after.env.get(n))}" for n in sorted(task.live_out))
    return ins, outs


def _visible_doc(task: RefactoringTask) -> str | None:
    if task.doc is None:
        return None
    raw = task.doc.raw
    if not task.has_hints:
        raw = _CODE_SPAN.sub("", raw)  # hints stripped: drop the code spans too
    lines = raw.splitlines()
    return "\n".join(lines[:1] + [" " + ln.lstrip() for ln in lines[1:]])


def prompt_context(task: RefactoringTask, counterexamples=()) -> PromptContext:
    m = task.method
    decl = method_str(replace(m, doc=None)).strip()  # the comment gets its own section
    constraints = CONSTRAINTS.format(
        inputs=", ".join(task.snippet.input_names) or "none",
        outputs=", ".join(task.live_out) or "(none)",
        method=f"{task.owner}.{m.name}",
    )
    examples = tuple(example_pair(task, c) for c in counterexamples)
    return PromptContext(m.name, task.owner, decl, _visible_doc(task),
                         statements_str(task.snippet.statements), constraints, examples)


def build_prompt(task: RefactoringTask, counterexamples=()) -> str:
    ctx = prompt_context(task, counterexamples)
    parts = [
        "## Context",
        f"Method `{ctx.method_name}` of class `{ctx.class_name}` is deprecated. Its declaration:",
        "```",
        ctx.method_definition.rstrip(),
        "```",
        "Its documentation comment:",
        "```",
        (ctx.javadoc_comment or "(none)").rstrip(),
        "```",
        "## Task",
        "Rewrite the following snippet so that it no longer calls the deprecated method "
        "while leaving its observable behaviour unchanged:",
        "```",
        ctx.code_snippet.rstrip(),
        "```",
        "## Constraints",
        ctx.formatting_constraints,
    ]
    if ctx.examples:
        parts.append("## Examples")
        parts.append("Your previous answers disagreed with the snippet on these inputs. "
                     "The rewritten code has to produce the listed outputs:")
        for i, (ins, outs) in enumerate(ctx.examples, 1):
            parts.append(f"Example {i}")
            parts.append("  input:  " + "; ".join(ins))
            parts.append("  output: " + "; ".join(outs))
    parts.append("Answer with a single fenced code block.")
    return "\n".join(parts) + "\n"


# -- transport --------------------------------------------------------------------


@dataclass
class ProviderConfig:
    endpoint: str = "http://127.0.0.1:8080/v1/chat/completions"
    model: str = "default"
    temperature: float = 0.2
    token_env: str = TOKEN_ENV
    mode: str = "stub"  # "live" | "stub"
    stub_file: str | None = None
    timeout: float = 60.0
    retries: int = 3
    backoff: float = 0.5


def read_stub_file(path) -> list[str]:
    """Records are separated by lines holding only the delimiter."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    records: list[str] = []
    cur: list[str] = []
    for line in text.splitlines(keepends=True):
        if line.rstrip("\r\n") == STUB_DELIMITER:
            records.append("".join(cur).rstrip("\r\n"))
            cur = []
        else:
            cur.append(line)
    if "".join(cur).strip():
        records.append("".join(cur).rstrip("\r\n"))
    return records


def write_stub_file(path, responses) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in responses:
            fh.write(r.rstrip("\r\n") + "\n" + STUB_DELIMITER + "\n")


class Client:
    """One provider handle; stub responses are consumed in order."""

    def __init__(self, cfg: ProviderConfig, transport: httpx.BaseTransport | None = None,
                 sleep=time.sleep) -> None:
        self.cfg = cfg
        self.transport = transport
        self.sleep = sleep
        self._stub: list[str] | None = None
        self._cursor = 0

    def payload(self, prompt: str) -> dict:
        return {
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": [
                {"role": "system", "content": "You refactor code that calls deprecated methods."},
                {"role": "user", "content": prompt},
            ],
        }

    def complete(self, prompt: str) -> str:
        if self.cfg.mode == "stub":
            return self._next_stub()
        if self.cfg.mode != "live":
            raise ProviderUnavailable(f"unknown provider mode {self.cfg.mode!r}")
        token = os.environ.get(self.cfg.token_env)
        if not token:
            raise AuthMissing(f"environment variable {self.cfg.token_env} is not set")
        headers = {"Authorization": f"Bearer {token}"}
        last = "no attempt made"
        with httpx.Client(transport=self.transport, timeout=self.cfg.timeout) as http:
            for attempt in range(self.cfg.retries):
                try:
                    r = http.post(self.cfg.endpoint, json=self.payload(prompt), headers=headers)
                except httpx.TransportError as ex:
                    last = f"{type(ex).__name__}: {ex}"
                else:
                    if r.status_code == 200:
                        return _completion_text(r.json())
                    last = f"HTTP {r.status_code}"
                    if r.status_code < 500 and r.status_code != 429:
                        break  # not transient
                if attempt + 1 < self.cfg.retries:
                    self.sleep(self.cfg.backoff * (2 ** attempt))
        raise ProviderUnavailable(last)

    def _next_stub(self) -> str:
        if self._stub is None:
            if not self.cfg.stub_file:
                raise ProviderUnavailable("stub mode without a stub file")
            try:
                self._stub = read_stub_file(self.cfg.stub_file)
            except OSError as ex:
                raise ProviderUnavailable(f"cannot read stub file: {ex}") from ex
        if self._cursor >= len(self._stub):
            raise ProviderUnavailable("stub responses exhausted")
        out = self._stub[self._cursor]
        self._cursor += 1
        return out


def _completion_text(body: dict) -> str:
    try:
        return body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as ex:
        raise ProviderUnavailable(f"malformed completion payload: {ex}") from ex


def request_candidate(cfg: ProviderConfig, prompt: str, client: Client | None = None) -> str:
    return (client or Client(cfg)).complete(prompt)


# -- parsing ----------------------------------------------------------------------

_FENCE = re.compile(r"```[A-Za-z0-9_+-]*[ \t]*\n(.*?)```", re.S)


def extract_code(text: str) -> tuple[str | None, int]:
    """(code, number of fenced blocks); bare text counts as code when it has no fences."""
    blocks = _FENCE.findall(text)
    if blocks:
        return blocks[0], len(blocks)
    stripped = text.strip()
    return (stripped or None), 0


def parse_candidate(text: str, task: RefactoringTask, program=None) -> Candidate | ParseRejection:
    code, nblocks = extract_code(text)
    if code is None:
        return ParseRejection("empty completion", text)
    try:
        ts = typed_candidate(task, code)
    except MjSyntaxError as ex:
        return ParseRejection(f"parse error: {ex}", text)
    except MjTypeError as ex:
        return ParseRejection(f"type error: {ex}", text)
    hit = deprecated_call(task.program, ts)
    if hit is not None and hit[1] is task.method:
        return ParseRejection(f"still calls {task.target_label}", text)
    steps = tuple(statements_str((s,)).strip() for s in ts.snippet.statements)
    body = "\n".join(steps)
    if not steps:
        return ParseRejection("no statements in completion", text)
    return Candidate(body, steps, "Neural", tuple((v, v) for v in task.outputs), ts)


class NeuralProvider:
    source = "Neural"

    def __init__(self, cfg: ProviderConfig, client: Client | None = None) -> None:
        self.cfg = cfg
        self.client = client or Client(cfg)
        self.prompts: list[str] = []
        self.notes: list[str] = []

    def candidates(self, task, library, examples, rng):
        while True:
            prompt = build_prompt(task, list(examples))
            self.prompts.append(prompt)
            text = self.client.complete(prompt)
            _, nblocks = extract_code(text)
            if nblocks > 1:
                self.notes.append(f"{nblocks} fenced blocks; only the first was used")
            yield parse_candidate(text, task)
