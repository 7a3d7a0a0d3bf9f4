"""Command line entry point: `hintsynth run | seed-dump | verify`."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .cegis import Counterexample, Verified, verify
from .config import ConfigError, RunConfig, engines_from, load_config
from .harness import emit_report, load_tasks, run_corpus
from .hints import hints_for_task
from .library import seed_codehints_library, seed_types_library
from .neural import ParseRejection, parse_candidate


def _find_task(path: str, task_id: str):
    tasks = load_tasks(Path(path))
    for t in tasks:
        if t.id == task_id:
            return t
    known = ", ".join(t.id for t in tasks) or "none"
    raise SystemExit(f"error: no task {task_id!r} in {path} (tasks: {known})")


def cmd_run(args) -> int:
    cfg = load_config(args.config) if args.config else RunConfig()
    cfg.corpus = args.corpus
    if args.engine:
        cfg.engines = engines_from(args.engine)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.strip_hints:
        cfg.strip_hints = True
    if args.report_dir:
        cfg.report_dir = args.report_dir
    if args.workers is not None:
        cfg.workers = args.workers
    if args.no_timings:
        cfg.timings = False
    b = {}
    if args.max_inputs is not None:
        b["max_inputs_per_verify"] = args.max_inputs
    if args.verify_timeout is not None:
        b["verify_time"] = args.verify_timeout
    if args.synth_timeout is not None:
        b["synth_time"] = args.synth_timeout
    if b:
        cfg.budget = replace(cfg.budget, **b)
    if not Path(cfg.corpus).exists():
        print(f"error: corpus {cfg.corpus} does not exist", file=sys.stderr)
        return 2
    errors: list = []
    results = run_corpus(cfg, errors)
    table, _ = emit_report(results, cfg.report_dir, cfg.timings, cfg.strip_hints)
    sys.stdout.write(table)
    for e in errors:
        print(f"skipped {e.file}: {e.message}", file=sys.stderr)
    return 0


def cmd_seed_dump(args) -> int:
    task = _find_task(args.file, args.task)
    if args.strip_hints:
        task = task.stripped()
    out = []
    if task.has_hints:
        diags: list = []
        hints = hints_for_task(task, diags)
        lib, _ = seed_codehints_library(task, hints, task.program)
        out.append(lib.dump())
        out.extend(f"# hint diagnostic: {d}\n" for d in diags)
    lib, _ = seed_types_library(task, task.program)
    out.append(lib.dump())
    sys.stdout.write("".join(out))
    return 0


def cmd_verify(args) -> int:
    cfg = load_config(args.config) if args.config else RunConfig()
    task = _find_task(args.file, args.task)
    text = Path(args.candidate).read_text(encoding="utf-8")
    cand = parse_candidate(text, task)
    if isinstance(cand, ParseRejection):
        print(json.dumps({"result": "rejected", "reason": cand.reason}))
        return 1
    b = cfg.effective_budget()
    if args.seed is not None:
        b = replace(b, rng_seed=args.seed)
    if args.max_inputs is not None:
        b = replace(b, max_inputs_per_verify=args.max_inputs)
    out = verify(task, cand, b, curation=cfg.curation)
    if isinstance(out, Verified):
        print(json.dumps({"result": "verified", "inputs_checked": out.inputs_checked, "note": out.note}))
        return 0
    if isinstance(out, Counterexample):
        print(json.dumps({"result": "counterexample", **out.to_json()}, sort_keys=True))
        return 1
    print(json.dumps({"result": "crash", "message": out.message}))
    return 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hintsynth", description="Synthesize replacements for deprecated calls.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="refactor every task of a corpus and report")
    r.add_argument("corpus")
    r.add_argument("--engine", choices=["symbolic", "neural", "both"])
    r.add_argument("--seed", type=int)
    r.add_argument("--strip-hints", action="store_true")
    r.add_argument("--config")
    r.add_argument("--report-dir")
    r.add_argument("--max-inputs", type=int)
    r.add_argument("--verify-timeout", type=float)
    r.add_argument("--synth-timeout", type=float)
    r.add_argument("--workers", type=int)
    r.add_argument("--no-timings", action="store_true", help="omit wall times for byte-stable reports")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("seed-dump", help="print the component libraries of one task")
    s.add_argument("file")
    s.add_argument("--task", required=True)
    s.add_argument("--strip-hints", action="store_true")
    s.set_defaults(func=cmd_seed_dump)

    v = sub.add_parser("verify", help="fuzz-verify a candidate for one task")
    v.add_argument("file")
    v.add_argument("--task", required=True)
    v.add_argument("--candidate", required=True)
    v.add_argument("--config")
    v.add_argument("--seed", type=int)
    v.add_argument("--max-inputs", type=int)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as ex:
        print(f"error: {ex}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
