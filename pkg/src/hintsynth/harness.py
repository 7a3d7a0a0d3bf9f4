"""Corpus runs: refactor every task, check results with an oracle, report.

The oracle is independent of the verifier. It enumerates the per-task
input domain written next to each snippet (`domain y in 0..200, ...`) when
that domain is small enough, and samples it with a separate seed otherwise.
"""

from __future__ import annotations

import itertools
import json
import logging
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .cegis import Candidate, RefactorConfig, RefactorResult, compare, ensure_typed, refactor
from .config import RunConfig
from .equivalence import EquivalenceVerdict
from .lang.printer import expr_str
from .lang.syntax import DomainRange, DomainSet, DomainVia
from .lang.tasks import RefactoringTask, deprecated_tasks
from .runtime import load_program
from .runtime.fuzz import Fuzzer, slotify
from .runtime.values import Build, input_to_json, render_input

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SOUND, MISSED, UNSOUND = "Sound", "Missed", "Unsound"
MARKS = {SOUND: "✓", MISSED: "✗", UNSOUND: "⚡"}


# -- oracle -----------------------------------------------------------------------


class DomainError(ValueError):
    pass


@dataclass
class DomainPlan:
    variables: list[tuple[str, list]]  # enumerable domain variables, in order
    builders: list[tuple]  # per input: ("var", name) | ("build", label, type, names) | ("free", type)

    @property
    def size(self) -> int:
        n = 1
        for _, vals in self.variables:
            n *= len(vals)
        return n

    @property
    def closed(self) -> bool:
        return all(b[0] != "free" for b in self.builders)

    def inputs(self, assign: dict, free: list) -> tuple:
        out = []
        it = iter(free)
        for b in self.builders:
            if b[0] == "var":
                out.append(assign[b[1]])
            elif b[0] == "build":
                out.append(Build(b[1], b[2], tuple(assign[n] for n in b[3])))
            else:
                out.append(next(it))
        return tuple(out)


def domain_plan(task: RefactoringTask) -> DomainPlan:
    variables: list[tuple[str, list]] = []
    var_types: dict[str, str] = {}
    vias: dict[str, DomainVia] = {}
    for d in task.snippet.domain:
        if isinstance(d, DomainRange):
            variables.append((d.name, list(range(d.lo, d.hi + 1))))
            var_types[d.name] = "int"
        elif isinstance(d, DomainSet):
            variables.append((d.name, [lit.value for lit in d.values]))
            var_types[d.name] = d.values[0].kind
        elif isinstance(d, DomainVia):
            vias[d.name] = d
    builders = []
    for p in task.inputs:
        if p.name in vias:
            slots: list[str] = []
            names: list[str] = []
            e = slotify(vias[p.name].expr, slots, var_types, names)
            builders.append(("build", expr_str(e), p.type, tuple(names)))
        elif p.name in var_types:
            builders.append(("var", p.name))
        else:
            builders.append(("free", p.type))
    return DomainPlan(variables, builders)


@dataclass(frozen=True)
class OracleVerdict:
    outcome: str  # Sound | Unsound
    exhaustive: bool
    points: int
    witness: tuple | None = None
    verdict: EquivalenceVerdict | None = None
    caveat: str = ""

    def to_json(self) -> dict:
        d = {"outcome": self.outcome, "exhaustive": self.exhaustive, "points": self.points}
        if self.witness is not None:
            d["witness"] = [input_to_json(v) for v in self.witness]
            d["witness_rendered"] = [render_input(v) for v in self.witness]
            d["verdict"] = self.verdict.to_json()
        if self.caveat:
            d["caveat"] = self.caveat
        return d


def oracle(task: RefactoringTask, candidate: Candidate, bound: int, seed: int = 0,
           curation=None, fuel: int | None = None) -> OracleVerdict:
    cand = ensure_typed(task, candidate)
    plan = domain_plan(task)
    kw = {} if fuel is None else {"fuel": fuel}
    exhaustive = plan.closed and plan.size <= bound
    if exhaustive:
        names = [n for n, _ in plan.variables]
        points = itertools.product(*[vals for _, vals in plan.variables])
        count = 0
        for combo in points:
            inputs = plan.inputs(dict(zip(names, combo)), [])
            count += 1
            v = compare(task, cand, inputs, **kw)
            if not v.equal:
                return _unsound(task, cand, inputs, v, True, count, kw)
        return OracleVerdict(SOUND, True, count)
    rng = random.Random(f"oracle/{seed}/{task.id}")
    fz = Fuzzer(task.program, curation)
    free_types = [b[1] for b in plan.builders if b[0] == "free"]
    for count in range(1, bound + 1):
        assign = {n: vals[rng.randrange(len(vals))] for n, vals in plan.variables}
        inputs = plan.inputs(assign, list(fz.inputs(free_types, rng)))
        v = compare(task, cand, inputs, **kw)
        if not v.equal:
            return _unsound(task, cand, inputs, v, False, count, kw)
    why = "domain not annotated for every input" if not plan.closed else f"domain size {plan.size} exceeds bound"
    return OracleVerdict(SOUND, False, bound, caveat=f"sampled oracle ({why}); a rare witness may be missed")


def _unsound(task, cand, inputs, v, exhaustive, count, kw) -> OracleVerdict:
    again = compare(task, cand, inputs, **kw)  # a witness must replay
    if again.equal:
        raise AssertionError(f"oracle witness for {task.id} did not replay")
    return OracleVerdict(UNSOUND, exhaustive, count, inputs, v)


def classify(task: RefactoringTask, result: RefactorResult, bound: int, seed: int = 0, curation=None):
    """(outcome, oracle verdict or None)."""
    if not result.verified or result.candidate is None:
        return MISSED, None
    ov = oracle(task, result.candidate, bound, seed, curation)
    return ov.outcome, ov


# -- corpus runs ------------------------------------------------------------------


@dataclass
class TaskResult:
    task: str
    file: str
    engine: str
    outcome: str
    hinted: bool  # the task carries hints in the corpus
    hints_used: bool
    candidate: str | None
    trace: list
    counterexamples: int
    wall_ms: int
    library: str | None
    oracle: dict | None = None
    hint_diagnostics: list = field(default_factory=list)
    repetition: int = 0

    @property
    def witness(self):
        if self.oracle and "witness" in self.oracle:
            return self.oracle["witness_rendered"]
        return None

    def to_record(self, timings: bool = True) -> dict:
        d = {
            "schema": SCHEMA_VERSION,
            "task": self.task,
            "file": self.file,
            "engine": self.engine,
            "outcome": self.outcome,
            "hinted": self.hinted,
            "hints_used": self.hints_used,
            "library": self.library,
            "candidate": self.candidate,
            "iterations": len(self.trace),
            "counterexamples": self.counterexamples,
            "wall_ms": self.wall_ms if timings else None,
            "hint_diagnostics": self.hint_diagnostics,
            "oracle": self.oracle,
            "trace": self.trace,
        }
        if self.repetition:
            d["repetition"] = self.repetition
        if self.witness is not None:
            d["witness"] = self.witness
        return d


@dataclass(frozen=True)
class FileError:
    file: str
    message: str


def corpus_files(corpus) -> list[Path]:
    p = Path(corpus)
    if p.is_file():
        return [p]
    return sorted(p.glob("*.mj"))


def load_tasks(path: Path):
    tp = load_program(path.read_text(encoding="utf-8"))
    return deprecated_tasks(tp)


def make_provider(engine: str, cfg: RunConfig, client=None):
    if engine == "symbolic":
        return None
    from .neural import NeuralProvider

    return NeuralProvider(cfg.provider, client)


def run_task(task: RefactoringTask, engine: str, cfg: RunConfig, file: str = "", provider=None,
             repetition: int = 0) -> TaskResult:
    hinted = task.has_hints
    t = task.stripped() if cfg.strip_hints else task
    budget = cfg.effective_budget()
    if repetition:
        budget = replace(budget, rng_seed=budget.rng_seed + repetition)
    rc = RefactorConfig(budget, cfg.curation, provider)
    t0 = time.monotonic()
    res = refactor(t, rc)
    outcome, ov = classify(t, res, cfg.oracle_bound, budget.rng_seed, cfg.curation)
    wall = int((time.monotonic() - t0) * 1000)
    return TaskResult(
        task=task.id, file=file, engine=engine, outcome=outcome, hinted=hinted, hints_used=t.has_hints,
        candidate=res.candidate.text if res.candidate else None, trace=res.trace(),
        counterexamples=len(res.counterexamples), wall_ms=wall, library=res.library_origin,
        oracle=ov.to_json() if ov else None, hint_diagnostics=list(res.diagnostics), repetition=repetition,
    )


def _run_file(path: str, cfg: RunConfig, engines) -> tuple[list, list]:
    try:
        tasks = load_tasks(Path(path))
    except Exception as ex:  # parse and type errors only skip this file
        return [], [FileError(Path(path).name, f"{type(ex).__name__}: {ex}")]
    out = []
    for task in tasks:
        for engine in engines:
            for rep in range(cfg.repetitions):
                out.append(run_task(task, engine, cfg, Path(path).name, make_provider(engine, cfg), rep))
    return out, []


def run_corpus(cfg: RunConfig, errors: list | None = None, client=None) -> list[TaskResult]:
    files = corpus_files(cfg.corpus)
    errs: list[FileError] = []
    symbolic = [e for e in cfg.engines if e == "symbolic"]
    neural = [e for e in cfg.engines if e != "symbolic"]
    by_file: dict[str, list] = {str(f): [] for f in files}
    workers = min(cfg.effective_workers(), max(1, len(files)))
    if symbolic:
        if workers > 1 and len(files) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futs = {str(f): pool.submit(_run_file, str(f), cfg, symbolic) for f in files}
                for f, fut in futs.items():
                    rs, es = fut.result()
                    by_file[f].extend(rs)
                    errs.extend(es)
        else:
            for f in files:
                rs, es = _run_file(str(f), cfg, symbolic)
                by_file[str(f)].extend(rs)
                errs.extend(es)
    if neural:
        from .neural import Client, NeuralProvider

        shared = client or Client(cfg.provider)
        for f in files:
            try:
                tasks = load_tasks(f)
            except Exception as ex:
                if not symbolic:
                    errs.append(FileError(f.name, f"{type(ex).__name__}: {ex}"))
                continue
            for task in tasks:
                for rep in range(cfg.repetitions):
                    prov = NeuralProvider(cfg.provider, shared)
                    by_file[str(f)].append(run_task(task, "neural", cfg, f.name, prov, rep))
    order = {e: i for i, e in enumerate(cfg.engines)}
    results = []
    for f in files:
        rs = by_file[str(f)]
        task_order: dict[str, int] = {}
        for r in rs:
            task_order.setdefault(r.task, len(task_order))
        results.extend(sorted(rs, key=lambda r: (task_order[r.task], order.get(r.engine, 9), r.repetition)))
    if errors is not None:
        errors.extend(errs)
    for e in errs:
        log.warning("skipped %s: %s", e.file, e.message)
    return results


# -- reports ----------------------------------------------------------------------


def _fmt_count(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:.1f}"


def table_rows(results: list[TaskResult]) -> list[dict]:
    engines = []
    for r in results:
        if r.engine not in engines:
            engines.append(r.engine)
    rows = []
    for e in engines:
        for part, flag in (("hints", True), ("no-hints", False)):
            rs = [r for r in results if r.engine == e and r.hinted == flag]
            reps = max(1, len({r.repetition for r in rs}))
            rows.append(_row(e, part, rs, reps))
    if len(engines) > 1:
        for part, flag in (("hints", True), ("no-hints", False)):
            best = []
            by_task: dict[tuple, list] = {}
            for r in results:
                if r.hinted == flag:
                    by_task.setdefault((r.file, r.task), []).append(r)
            for rs in by_task.values():
                outs = {r.outcome for r in rs}
                pick = SOUND if SOUND in outs else (UNSOUND if UNSOUND in outs else MISSED)
                wall = min(r.wall_ms for r in rs if r.outcome == pick)
                best.append(TaskResult(rs[0].task, rs[0].file, "best", pick, flag, flag, None, [], 0, wall, None))
            rows.append(_row("best-virtual", part, best, 1))
    return rows


def _row(engine: str, part: str, rs: list[TaskResult], reps: int) -> dict:
    n = len(rs) / reps
    ok = sum(r.outcome == SOUND for r in rs) / reps
    miss = sum(r.outcome == MISSED for r in rs) / reps
    bad = sum(r.outcome == UNSOUND for r in rs) / reps
    mean = (sum(r.wall_ms for r in rs) / len(rs) / 1000.0) if rs else 0.0
    return {"engine": engine, "partition": part, "tasks": n, "sound": ok, "missed": miss, "unsound": bad,
            "percent": (100.0 * ok / n) if n else 0.0, "mean_s": mean}


def render_table(results: list[TaskResult], timings: bool = True, strip_hints: bool = False) -> str:
    head = f"{'engine':<14}{'partition':<11}{'tasks':>6}{MARKS[SOUND]:>5}{MARKS[MISSED]:>5}{MARKS[UNSOUND]:>5}{'%':>8}"
    if timings:
        head += f"{'runtime':>10}"
    lines = [head]
    if strip_hints:
        lines.insert(0, "(hints stripped before synthesis)")
    for row in table_rows(results):
        line = (f"{row['engine']:<14}{row['partition']:<11}{_fmt_count(row['tasks']):>6}"
                f"{_fmt_count(row['sound']):>5}{_fmt_count(row['missed']):>5}{_fmt_count(row['unsound']):>5}"
                f"{row['percent']:>7.1f}%")
        if timings:
            line += f"{row['mean_s']:>9.2f}s"
        lines.append(line)
    return "\n".join(lines) + "\n"


def emit_report(results: list[TaskResult], report_dir=None, timings: bool = True,
                strip_hints: bool = False) -> tuple[str, str]:
    """Text table and JSONL records; written to report_dir when given."""
    table = render_table(results, timings, strip_hints)
    records = "".join(json.dumps(r.to_record(timings), sort_keys=True) + "\n" for r in results)
    if report_dir is not None:
        d = Path(report_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / "report.txt").write_text(table, encoding="utf-8")
        (d / "results.jsonl").write_text(records, encoding="utf-8")
    return table, records
