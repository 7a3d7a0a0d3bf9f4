from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hintsynth.runtime import Build, Obj, Stub, ensure_class_loaded, execute, load_program
from hintsynth.runtime.fuzz import (
    INT_POOL,
    Curation,
    CurationError,
    Fuzzer,
    Uninstantiable,
    default_curation,
    instantiate_for_type,
)
from hintsynth.runtime.values import FUEL

from conftest import CORPUS

INT_MIN, INT_MAX = -(2**63), 2**63 - 1


def run(src: str, name: str, inputs=(), fuel=None):
    tp = load_program(src)
    kw = {} if fuel is None else {"fuel": fuel}
    return execute(tp.snippets[name], list(inputs), tp, **kw), tp


def test_running_example_at_ten(running_task):
    date = Build("new Date($0, $1, $2, $3, $4, $5)", "Date", (120, 3, 4, 10, 0, 0))
    o = execute(running_task.typed, [date], running_task.program)
    assert o.env["hour"] == 10
    assert o.thrown is None
    assert o.touched_classes == {"Date"}


def test_empty_snippet():
    o, _ = run("snippet e() live() { }", "e")
    assert o.env == {} and o.thrown is None and o.touched_classes == frozenset()


def test_alias_partitions_of_p3_p4(eq_program):
    s = eq_program.snippets
    o3 = execute(s["p3"], [], eq_program)
    o4 = execute(s["p4"], [], eq_program)
    part = lambda o: {frozenset(c) for c in o.alias_partition if c & {"dim1", "dim2"}}
    assert part(o3) == {frozenset({"dim1"}), frozenset({"dim2"})}
    assert part(o4) == {frozenset({"dim1", "dim2"})}


def test_arithmetic_wraps_at_64_bits():
    o, _ = run("snippet w(int a) live(a, b) { int b = a + 1; }", "w", [INT_MAX])
    assert o.env["b"] == INT_MIN


def test_division_by_zero_is_a_thrown_descriptor():
    o, _ = run("snippet d(int a) live(a, b) { int b = 7 / a; }", "d", [0])
    assert o.thrown == "ArithmeticException"
    assert o.env["a"] == 0 and "b" not in o.env


def test_null_dereference():
    o, _ = run("snippet n() live(h) { Date d = null; int h = d.getHours(); }", "n")
    assert o.thrown == "NullPointerException"
    assert o.env["d"] is None


def test_fuel_exhaustion():
    src = '''
class Spin { public static int go(int n) { while (true) { n = n + 1; } return n; } }
snippet s(int n) live(n, m) { int m = Spin.go(n); }
'''
    o, _ = run(src, "s", [0], fuel=500)
    assert o.thrown == FUEL


def test_static_state_resets_between_executions():
    src = "snippet s() live(a) { int a = Serials.next(); }"
    tp = load_program(src)
    first = [execute(tp.snippets["s"], [], tp).env["a"] for _ in range(3)]
    assert len(set(first)) == 1


def test_symbolic_ids_follow_allocation_order():
    o, _ = run("snippet s() live(a, b, c) { Point a = new Point(1, 2); Point b = new Point(3, 4); Point c = a; }", "s")
    assert [o.env[n].id for n in "abc"] == [1, 2, 1]
    assert sorted(o.heap) == list(range(1, len(o.heap) + 1))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_execution_is_deterministic(seed, running_task):
    fz = Fuzzer(running_task.program)
    inputs = fz.inputs(["Date"], random.Random(seed))
    a = execute(running_task.typed, inputs, running_task.program)
    b = execute(running_task.typed, inputs, running_task.program)
    assert a.env["hour"] == b.env["hour"]
    assert a.env["date"].id == b.env["date"].id
    assert a.touched_classes == b.touched_classes and a.thrown == b.thrown


def _reachable_refs(o):
    out = set()
    stack = list(o.env.values()) + list(o.static_state.values())
    while stack:
        v = stack.pop()
        if isinstance(v, Obj) and v.id not in out:
            out.add(v.id)
            stack.extend(v.fields.values())
    return out


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_heaps_have_no_dangling_refs_and_aliasing_matches_ids(seed, eq_program):
    rng = random.Random(seed)
    name = rng.choice(["p1", "p2", "date1", "date2", "date3", "p3", "p4"])
    ts = eq_program.snippets[name]
    inputs = Fuzzer(eq_program).inputs([p.type for p in ts.snippet.inputs], rng)
    o = execute(ts, inputs, eq_program)
    assert _reachable_refs(o) <= set(o.heap)
    names = o.observed_names()
    for x in names:
        for y in names:
            vx, vy = o.lookup(x), o.lookup(y)
            same = any(x in c and y in c for c in o.alias_partition)
            by_id = isinstance(vx, Obj) and isinstance(vy, Obj) and vx.id == vy.id
            assert same == (x == y or by_id)


def test_isolation_between_interleaved_executions(eq_program):
    s = eq_program.snippets
    a1 = execute(s["p3"], [], eq_program)
    execute(s["p2"], [Build("new Date($0)", "Date", (5,))], eq_program)
    a2 = execute(s["p3"], [], eq_program)
    assert [a1.env[n].id for n in ("container", "dim1", "dim2")] == \
        [a2.env[n].id for n in ("container", "dim1", "dim2")]
    assert a1.static_state == a2.static_state


# -- instantiation -------------------------------------------------------------


def test_calendar_uses_curated_factory(stdlib):
    v = instantiate_for_type("Calendar", random.Random(0), stdlib)
    assert isinstance(v, Build) and v.label == "Calendar.getInstance()"


def test_int_values_come_from_pool_or_full_range(stdlib):
    rng = random.Random(1)
    vals = [instantiate_for_type("int", rng, stdlib) for _ in range(400)]
    assert all(INT_MIN <= v <= INT_MAX for v in vals)
    pooled = sum(v in INT_POOL for v in vals)
    assert 140 < pooled < 260  # about half
    assert INT_MIN in vals or INT_MAX in vals
    assert any(v not in INT_POOL for v in vals)


def test_strings_include_harvested_literals(stdlib):
    rng = random.Random(2)
    vals = {instantiate_for_type("String", rng, stdlib) for _ in range(300)}
    assert "UTF-8" in vals and "" in vals


def test_denied_constructor_makes_type_uninstantiable(stdlib):
    with pytest.raises(Uninstantiable):
        instantiate_for_type("IntBuffer", random.Random(0), stdlib)


def test_abstract_class_without_recipe_gets_a_stub():
    tp = load_program("abstract class Shape { public abstract int area(); }\n"
                      "snippet s(Shape x) live(x, a) { int a = x.area(); }")
    v = instantiate_for_type("Shape", random.Random(0), tp)
    assert v == Stub("Shape")
    o = execute(tp.snippets["s"], [v], tp)
    assert o.env["a"] == 0 and o.thrown is None


def test_curation_lines():
    c = Curation()
    c.add_line("instantiate Dimension via new Dimension(int, int)")
    c.add_line("deny Point.Point(int, int)")
    assert c.allow["Dimension"] == ["new Dimension(int, int)"]
    assert c.deny == {"Point.Point(int,int)"}
    with pytest.raises(CurationError):
        c.add_line("instantiate Dimension with nothing")
    merged = default_curation().merged(c)
    assert "Calendar" in merged.allow and "Dimension" in merged.allow


def test_explicit_curation_overrides_default(stdlib):
    c = Curation()
    c.add_line("instantiate Calendar via new GregorianCalendar(2000, 0, 1)")
    v = instantiate_for_type("Calendar", random.Random(0), stdlib, default_curation().merged(c))
    assert v.label.startswith("new GregorianCalendar")


# -- class loading -------------------------------------------------------------


def test_ensure_loaded_adds_calendar_statics(running_task):
    date = Build("new Date($0)", "Date", (0,))
    o = execute(running_task.typed, [date], running_task.program)
    o2 = ensure_class_loaded(o, "Calendar", running_task.program)
    assert o2.touched_classes == {"Date", "Calendar"}
    assert ("Calendar", "HOUR_OF_DAY") in o2.static_state
    assert ensure_class_loaded(o2, "Calendar", running_task.program) is o2


def test_ensure_loaded_keeps_thrown():
    o, tp = run("snippet d(int a) live(a) { int b = 1 / a; }", "d", [0])
    o2 = ensure_class_loaded(o, "Calendar", tp)
    assert o2.thrown == "ArithmeticException"
    assert o2.env == o.env
    assert {k for k in o2.static_state if k[0] == "Calendar"}


def test_corpus_domain_builders_execute(corpus_tasks):
    from hintsynth.harness import domain_plan

    for t in corpus_tasks.values():
        plan = domain_plan(t)
        if not plan.closed:
            continue
        assign = {n: vals[0] for n, vals in plan.variables}
        o = execute(t.typed, plan.inputs(assign, []), t.program)
        assert o.thrown is None, t.id
    assert CORPUS.exists()
