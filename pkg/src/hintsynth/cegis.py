"""The counterexample-guided refactoring loop.

Synthesis draws candidate programs from a provider and keeps the first one
that agrees with the original snippet on every collected input.
Verification then fuzzes fresh inputs looking for a disagreement; each
disagreement is fed back as a new example.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, field
from typing import Iterator, Protocol

from .equivalence import EquivalenceVerdict, equivalent, policy_for
from .hints import hints_for_task
from .lang.lexer import MjSyntaxError
from .lang.parser import parse_statements
from .lang.syntax import Snippet, is_primitive
from .lang.tasks import RefactoringTask
from .lang.typecheck import MjTypeError, TypedSnippet
from .library import Component, ComponentLibrary, literal_component, seed_codehints_library, seed_types_library
from .runtime.fuzz import Curation, Fuzzer, Uninstantiable
from .runtime.interp import DEFAULT_FUEL, execute
from .runtime.values import input_key, input_to_json, render_input

log = logging.getLogger(__name__)

POOL_CONSTANTS = {"int": (0, 1, -1), "boolean": (True, False), "String": ("",)}
HINT_WEIGHT = 4


@dataclass(frozen=True)
class Budget:
    max_inputs_per_verify: int = 500
    verify_time: float = 300.0
    synth_time: float = 120.0
    max_candidates: int = 20_000
    rng_seed: int = 0
    max_steps: int = 5
    max_iterations: int = 50
    stall_limit: int = 200
    fuel: int = DEFAULT_FUEL

    def __post_init__(self) -> None:
        for name in ("max_inputs_per_verify", "verify_time", "synth_time", "max_candidates",
                     "max_steps", "max_iterations", "stall_limit", "fuel"):
            if getattr(self, name) <= 0:
                raise ValueError(f"budget {name} must be positive")


# -- candidates -----------------------------------------------------------------


@dataclass(frozen=True)
class Arg:
    kind: str  # "input" | "step" | "const"
    ref: object  # input name, step index, or constant Component

    def render(self, names: dict[int, str]) -> str:
        if self.kind == "input":
            return self.ref
        if self.kind == "step":
            return names[self.ref]
        return self.ref.render()


@dataclass(frozen=True)
class Step:
    component: Component
    args: tuple[Arg, ...]


@dataclass(frozen=True)
class Candidate:
    text: str  # the refactored statements
    steps: tuple[str, ...]
    source: str = "Symbolic"
    outputs: tuple = ()  # (live name, binding text)
    typed: TypedSnippet | None = field(default=None, compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.steps)


class NoTypableProgram(Exception):
    pass


class ProviderError(Exception):
    """Raised by candidate providers that cannot produce any more candidates."""


@dataclass(frozen=True)
class SynthesisFailure:
    candidates_tried: int
    reason: str
    note: str = (
        "budget exhausted: either no program over these components agrees with the examples, "
        "or the random search did not reach it"
    )


@dataclass(frozen=True)
class Counterexample:
    inputs: tuple
    verdict: EquivalenceVerdict
    inputs_checked: int = field(default=0, compare=False)  # including this one

    def to_json(self) -> dict:
        return {"inputs": [input_to_json(v) for v in self.inputs],
                "rendered": [render_input(v) for v in self.inputs],
                "verdict": self.verdict.to_json()}


@dataclass(frozen=True)
class Verified:
    inputs_checked: int
    note: str = "fuzzing-sound only: no disagreement among the drawn inputs"


@dataclass(frozen=True)
class VerifierCrash:
    message: str
    inputs: tuple = ()


def candidate_snippet(task: RefactoringTask, body: str) -> Snippet:
    s = task.snippet
    return Snippet(f"{s.name}$candidate", s.inputs, s.live_out, parse_statements(body))


def typed_candidate(task: RefactoringTask, body: str) -> TypedSnippet:
    """Parse and check a candidate body against the task's interface."""
    snip = candidate_snippet(task, body)
    ts = task.program.check_snippet(snip, strict_inputs=False)
    for v in task.live_out:
        if v not in ts.local_types:
            raise MjTypeError("undefined", f"live variable {v!r} is not defined")
        want = task.typed.local_types[v]
        if not (ts.local_types[v] == want or task.program.assignable(ts.local_types[v], want)):
            raise MjTypeError("type", f"live variable {v!r} has type {ts.local_types[v]}, expected {want}")
    return ts


def _lower(t: str) -> str:
    return t[:1].lower() + t[1:]


def render_plan(task: RefactoringTask, steps: list[Step], outputs: dict[str, Arg]) -> tuple[str, tuple, tuple]:
    """Statements for a woven plan: a step result takes its output's name when it has one."""
    taken = set(task.snippet.input_names) | set(task.live_out)
    names: dict[int, str] = {}
    bound_to: dict[int, str] = {}
    for o in task.outputs:
        a = outputs[o]
        if a.kind == "step" and a.ref not in bound_to:
            bound_to[a.ref] = o
    lines = []
    for i, st in enumerate(steps):
        c = st.component
        expr = c.render([a.render(names) for a in st.args])
        if c.is_void:
            lines.append(f"{expr};")
            continue
        name = bound_to.get(i)
        if name is None:
            base = "v" if is_primitive(c.produces) else _lower(c.produces)
            name, k = base, 1
            while name in taken:
                k += 1
                name = f"{base}{k}"
        taken.add(name)
        names[i] = name
        lines.append(f"{c.produces} {name} = {expr};")
    outs = []
    for o in task.outputs:
        a = outputs[o]
        if a.kind == "step" and names.get(a.ref) == o:
            outs.append((o, o))
            continue
        text = a.render(names)
        lines.append(f"{task.typed.local_types[o]} {o} = {text};")
        outs.append((o, text))
    return "\n".join(lines), tuple(lines), tuple(outs)


class Weaver:
    """Random typed weaving of library components into straight-line plans."""

    def __init__(self, task: RefactoringTask, library: ComponentLibrary) -> None:
        self.task = task
        self.tp = task.program
        self.methods = library.methods
        self.hint_consts = [c for c in library.constants if c.from_hint]
        lib_consts = [c for c in library.constants if not c.from_hint]
        needed = {t for c in self.methods for t in c.param_types if is_primitive(t)}
        needed |= {task.typed.local_types[o] for o in task.outputs if is_primitive(task.typed.local_types[o])}
        have = {(c.produces, repr(c.value)) for c in library.constants}
        pool = list(lib_consts)
        for t in sorted(needed):
            for v in POOL_CONSTANTS.get(t, ()):
                if (t, repr(v)) not in have:
                    pool.append(literal_component(v, t))
        self.pool_consts = pool
        self.inputs = [(p.type, Arg("input", p.name)) for p in task.inputs]

    def _fits(self, src: str, slot: str) -> bool:
        return src == slot or self.tp.assignable(src, slot)

    def _options(self, slot: str, scope: list, consts: list, receiver: bool):
        opts = [(HINT_WEIGHT, a) for t, a in scope if self._fits(t, slot)]
        if not receiver:
            for c in consts:
                if self._fits(c.produces, slot):
                    opts.append((HINT_WEIGHT if c.from_hint else 1, Arg("const", c)))
        return opts

    def consts_for(self, hints_only: bool) -> list:
        return list(self.hint_consts) if hints_only else self.hint_consts + self.pool_consts

    def draw(self, depth: int, rng: random.Random, hints_only: bool = False):
        """One plan of exactly `depth` steps, or None when the draw dead-ends."""
        consts = self.consts_for(hints_only)
        scope = list(self.inputs)
        steps: list[Step] = []
        for i in range(depth):
            applicable = []
            for c in self.methods:
                slots = c.slots
                rec = c.receiver_type is not None
                if all(self._options(s, scope, consts, rec and j == 0) for j, s in enumerate(slots)):
                    applicable.append(c)
            if not applicable:
                if i == 0:
                    raise NoTypableProgram("no component is applicable at the first step")
                return None
            c = applicable[rng.randrange(len(applicable))]
            rec = c.receiver_type is not None
            args = []
            for j, s in enumerate(c.slots):
                opts = self._options(s, scope, consts, rec and j == 0)
                args.append(_weighted(opts, rng))
            steps.append(Step(c, tuple(args)))
            if not c.is_void:
                scope.append((c.produces, Arg("step", i)))
        outputs = {}
        for o in self.task.outputs:
            t = self.task.typed.local_types[o]
            arg = None
            for st_i in range(len(steps) - 1, -1, -1):
                p = steps[st_i].component.produces
                if not steps[st_i].component.is_void and self._fits(p, t):
                    arg = Arg("step", st_i)
                    break
            if arg is None:
                arg = _pick([a for ty, a in self.inputs if self._fits(ty, t)], rng)
            if arg is None:
                arg = _pick([Arg("const", c) for c in consts if self._fits(c.produces, t)], rng)
            if arg is None:
                return None
            outputs[o] = arg
        return steps, outputs

    def well_formed(self, steps: list[Step], outputs: dict[str, Arg]) -> bool:
        """Every input is used and every step contributes to the result."""
        used_inputs = set()
        for st in steps:
            used_inputs |= {a.ref for a in st.args if a.kind == "input"}
        for o, a in outputs.items():
            if a.kind == "input" and a.ref != o:
                used_inputs.add(a.ref)
        if used_inputs != set(self.task.snippet.input_names):
            return False
        # backward liveness over step results
        needed = {a.ref for a in outputs.values() if a.kind == "step"}
        for i in range(len(steps) - 1, -1, -1):
            st = steps[i]
            c = st.component
            if c.is_void:
                recv = st.args[0] if c.receiver_type is not None else None
                live = recv is not None and (recv.kind == "input" or (recv.kind == "step" and recv.ref in needed))
            else:
                live = i in needed
            if not live:
                return False
            needed |= {a.ref for a in st.args if a.kind == "step"}
        return True


def _weighted(opts, rng: random.Random):
    total = sum(w for w, _ in opts)
    r = rng.randrange(total)
    for w, a in opts:
        if r < w:
            return a
        r -= w
    return opts[-1][1]


def _pick(xs, rng: random.Random):
    if not xs:
        return None
    return xs[rng.randrange(len(xs))]


def draw_symbolic_candidate(task: RefactoringTask, library: ComponentLibrary, rng: random.Random,
                            max_steps: int = 5, depth: int | None = None, hints_only: bool = False,
                            weaver: Weaver | None = None) -> Candidate | None:
    """Draw one candidate; raises NoTypableProgram when nothing can be woven."""
    w = weaver or Weaver(task, library)
    d = depth if depth is not None else rng.randint(1, max_steps)
    plan = w.draw(d, rng, hints_only)
    if plan is None:
        return None
    steps, outputs = plan
    try:
        body, lines, outs = render_plan(task, steps, outputs)
    except KeyError:
        return None
    return Candidate(body, lines, "Symbolic", outs)


class SymbolicProvider:
    """Iterative deepening over step counts, hint constants before pool constants."""

    source = "Symbolic"

    def __init__(self, budget: Budget) -> None:
        self.budget = budget

    def candidates(self, task, library, examples, rng) -> Iterator:
        w = Weaver(task, library)
        b = self.budget
        modes = [True, False] if w.hint_consts else [False]
        seen: set[str] = set()
        typable = False
        for d in range(0, b.max_steps + 1):
            for hints_only in modes:
                stale = 0
                while stale < b.stall_limit:
                    try:
                        plan = w.draw(d, rng, hints_only)
                    except NoTypableProgram:
                        break
                    yield None  # one draw consumed
                    if plan is None or not w.well_formed(*plan):
                        stale += 1
                        continue
                    body, lines, outs = render_plan(task, *plan)
                    if body in seen:
                        stale += 1
                        continue
                    seen.add(body)
                    stale = 0
                    typable = True
                    yield Candidate(body, lines, "Symbolic", outs)
                if d == 0:
                    break  # constants mode does not change zero-step plans much
        if not typable:
            raise NoTypableProgram("no well-formed program over this library")


class CandidateProvider(Protocol):
    source: str

    def candidates(self, task, library, examples, rng) -> Iterator: ...


# -- synthesis and verification ---------------------------------------------------


def run_both(task: RefactoringTask, cand: Candidate, inputs, fuel: int = DEFAULT_FUEL):
    tp = task.program
    o1 = execute(task.typed, inputs, tp, fuel)
    o2 = execute(cand.typed, inputs, tp, fuel)
    return o1, o2


def compare(task: RefactoringTask, cand: Candidate, inputs, fuel: int = DEFAULT_FUEL) -> EquivalenceVerdict:
    o1, o2 = run_both(task, cand, inputs, fuel)
    live = list(task.live_out)
    return equivalent(o1, o2, live, live, policy_for(task.program), program=task.program)


def ensure_typed(task: RefactoringTask, cand: Candidate) -> Candidate:
    if cand.typed is not None:
        return cand
    ts = typed_candidate(task, cand.text)
    return Candidate(cand.text, cand.steps, cand.source, cand.outputs, ts)


@dataclass
class SynthStats:
    draws: int = 0
    candidates: int = 0
    rejections: list = field(default_factory=list)


def synthesize(task: RefactoringTask, library: ComponentLibrary, examples, budget: Budget,
               provider: CandidateProvider | None = None, rng: random.Random | None = None,
               tried: set | None = None, stats: SynthStats | None = None):
    """First candidate agreeing with P1 on every example, or a SynthesisFailure."""
    provider = provider or SymbolicProvider(budget)
    rng = rng or random.Random(budget.rng_seed)
    tried = set() if tried is None else tried
    stats = stats or SynthStats()
    deadline = time.monotonic() + budget.synth_time
    inputs_list = [e.inputs if isinstance(e, Counterexample) else tuple(e) for e in examples]
    draws0 = stats.draws
    try:
        for item in provider.candidates(task, library, examples, rng):
            # symbolic draws arrive as None markers; other providers count every item
            counted = item is None or provider.source != "Symbolic"
            if counted:
                stats.draws += 1
            if item is not None and not isinstance(item, Candidate):
                stats.rejections.append(item)
            if not isinstance(item, Candidate):
                if stats.draws - draws0 >= budget.max_candidates:
                    return SynthesisFailure(stats.draws - draws0, "max_candidates reached")
                if time.monotonic() > deadline:
                    return SynthesisFailure(stats.draws - draws0, "synthesis time budget exhausted")
                continue
            if item.text in tried:
                continue
            tried.add(item.text)
            try:
                cand = ensure_typed(task, item)
            except (MjTypeError, MjSyntaxError) as ex:
                log.debug("candidate rejected by the checker: %s", ex)
                continue
            stats.candidates += 1
            if all(compare(task, cand, i, budget.fuel).equal for i in inputs_list):
                return cand
            if counted and stats.draws - draws0 >= budget.max_candidates:
                return SynthesisFailure(stats.draws - draws0, "max_candidates reached")
            if time.monotonic() > deadline:
                return SynthesisFailure(stats.draws - draws0, "synthesis time budget exhausted")
    except NoTypableProgram as ex:
        return SynthesisFailure(stats.draws - draws0, f"no typable program: {ex}")
    except ProviderError as ex:
        return SynthesisFailure(stats.draws - draws0, f"provider: {ex}")
    return SynthesisFailure(stats.draws - draws0, "candidate space exhausted")


def verify(task: RefactoringTask, candidate: Candidate, budget: Budget, rng: random.Random | None = None,
           curation: Curation | None = None, fuzzer: Fuzzer | None = None):
    """Fuzz inputs until one separates P1 from the candidate."""
    rng = rng or random.Random(budget.rng_seed)
    fz = fuzzer or Fuzzer(task.program, curation)
    cand = ensure_typed(task, candidate)
    types = [p.type for p in task.inputs]
    deadline = time.monotonic() + budget.verify_time
    seen: set = set()
    checked = 0
    dup_streak = 0
    while checked < budget.max_inputs_per_verify and dup_streak < 50:
        try:
            inputs = fz.inputs(types, rng)
        except Uninstantiable as ex:
            return VerifierCrash(f"input generation failed: {ex}")
        key = tuple(input_key(v) for v in inputs)
        if key in seen:
            dup_streak += 1
            continue
        dup_streak = 0
        seen.add(key)
        checked += 1
        try:
            v = compare(task, cand, inputs, budget.fuel)
        except (MjTypeError, MjSyntaxError, RuntimeError, ValueError, KeyError, TypeError) as ex:
            return VerifierCrash(f"{type(ex).__name__}: {ex}", inputs)
        if not v.equal:
            return Counterexample(inputs, v, checked)
        if time.monotonic() > deadline:
            break
    return Verified(checked)


# -- the loop ---------------------------------------------------------------------


@dataclass
class IterationRecord:
    iteration: int
    library: str
    outcome: str  # verified | counterexample | synthesis_failure | verifier_crash
    candidate: str | None = None
    draws: int = 0
    counterexample: dict | None = None
    inputs_checked: int = 0
    detail: str = ""
    rejections: list = field(default_factory=list)
    notes: list = field(default_factory=list)  # provider remarks, e.g. ignored extra code blocks

    def to_json(self) -> dict:
        d = {"iteration": self.iteration, "library": self.library, "outcome": self.outcome,
             "candidate": self.candidate, "draws": self.draws, "inputs_checked": self.inputs_checked}
        if self.counterexample is not None:
            d["counterexample"] = self.counterexample
        if self.detail:
            d["detail"] = self.detail
        if self.rejections:
            d["rejections"] = list(self.rejections)
        if self.notes:
            d["notes"] = list(self.notes)
        return d


@dataclass
class RefactorResult:
    task_id: str
    verified: bool
    candidate: Candidate | None
    library_origin: str | None
    iterations: list[IterationRecord] = field(default_factory=list)
    counterexamples: list[Counterexample] = field(default_factory=list)
    libraries: dict = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)
    synth_seconds: float = 0.0
    verify_seconds: float = 0.0

    def trace(self) -> list[dict]:
        return [r.to_json() for r in self.iterations]


@dataclass
class RefactorConfig:
    budget: Budget = field(default_factory=Budget)
    curation: Curation | None = None
    provider: object = None  # None selects the symbolic engine


def task_rng(seed: int, task_id: str, purpose: str) -> random.Random:
    return random.Random(f"{seed}/{task_id}/{purpose}")


def refactor(task: RefactoringTask, config: RefactorConfig | None = None) -> RefactorResult:
    cfg = config or RefactorConfig()
    b = cfg.budget
    provider = cfg.provider or SymbolicProvider(b)
    neural = getattr(provider, "source", "Symbolic") != "Symbolic"
    res = RefactorResult(task.id, False, None, None)

    def codehints():
        hdiag: list[str] = []
        hints = hints_for_task(task, hdiag)
        res.diagnostics.extend(hdiag)
        return seed_codehints_library(task, hints, task.program)[0]

    def types():
        return seed_types_library(task, task.program)[0]

    # the Types-library is only seeded if the CodeHints attempt fails to synthesize
    libs = [codehints] if task.has_hints else []
    if not (neural and libs):
        libs.append(types)
    srng = task_rng(b.rng_seed, task.id, "synth")
    vrng = task_rng(b.rng_seed, task.id, "verify")
    fuzzer = Fuzzer(task.program, cfg.curation)
    tried: set[str] = set()
    examples: list[Counterexample] = []
    n = 0
    for make in libs:
        lib = make()
        res.libraries[str(lib.origin)] = lib.dump()
        res.diagnostics.extend(f"{lib.origin}: {d}" for d in lib.diagnostics)
        origin = str(lib.origin)
        for _ in range(b.max_iterations):
            n += 1
            stats = SynthStats()
            notes = getattr(provider, "notes", None)
            seen_notes = len(notes) if notes is not None else 0
            t0 = time.monotonic()
            got = synthesize(task, lib, examples, b, provider, srng, tried, stats)
            res.synth_seconds += time.monotonic() - t0
            rej = [str(r) for r in stats.rejections]
            new_notes = list(notes[seen_notes:]) if notes is not None else []
            if isinstance(got, SynthesisFailure):
                res.iterations.append(IterationRecord(n, origin, "synthesis_failure", None, got.candidates_tried,
                                                      detail=got.reason, rejections=rej, notes=new_notes))
                break
            t0 = time.monotonic()
            out = verify(task, got, b, vrng, fuzzer=fuzzer)
            res.verify_seconds += time.monotonic() - t0
            if isinstance(out, Verified):
                res.iterations.append(IterationRecord(n, origin, "verified", got.text, stats.draws,
                                                      inputs_checked=out.inputs_checked, rejections=rej,
                                                      notes=new_notes))
                res.verified = True
                res.candidate = got
                res.library_origin = origin
                res.counterexamples = examples
                return res
            if isinstance(out, VerifierCrash):
                res.iterations.append(IterationRecord(n, origin, "verifier_crash", got.text, stats.draws,
                                                      detail=out.message, rejections=rej, notes=new_notes))
                res.library_origin = origin
                res.counterexamples = examples
                return res
            examples.append(out)
            res.iterations.append(IterationRecord(n, origin, "counterexample", got.text, stats.draws,
                                                  out.to_json(), out.inputs_checked,
                                                  rejections=rej, notes=new_notes))
        else:
            res.library_origin = origin
            res.counterexamples = examples
            res.diagnostics.append(f"iteration cap {b.max_iterations} reached")
            return res
        res.library_origin = origin
    res.counterexamples = examples
    return res
