from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hintsynth.lang import (
    DuplicateDeclaration,
    MjSyntaxError,
    MjTypeError,
    deprecated_tasks,
    parse_program,
    program_str,
    typecheck,
)
from hintsynth.lang.parser import parse_statements
from hintsynth.lang.printer import statements_str
from hintsynth.runtime import load_program, stdlib_program

from conftest import CORPUS, FIXTURES
from minitasks import mini_source

DATE_SRC = '''
class Date {
    int hour;
    /**
     * Returns the hour.
     * @deprecated As of version 1.1,
     * replaced by {@code Calendar.get(Calendar.HOUR_OF_DAY)}.
     */
    @Deprecated
    public int getHours() { return hour; }
}
'''


def test_doc_with_code_span_is_attached_to_method():
    p = parse_program(DATE_SRC)
    (m,) = p.classes[0].methods
    assert m.name == "getHours" and m.deprecated
    assert m.doc.code_hint_blocks == ("Calendar.get(Calendar.HOUR_OF_DAY)",)
    assert m.doc.raw in DATE_SRC


def test_empty_source():
    p = parse_program("")
    assert p.classes == () and p.snippets == ()


def test_duplicate_class_rejected():
    with pytest.raises(DuplicateDeclaration):
        parse_program("class A { }\nclass A { }")


def test_duplicate_method_signature_rejected():
    with pytest.raises(DuplicateDeclaration):
        parse_program("class A { public int f(int x) { return x; } public int f(int y) { return y; } }")


def test_syntax_error_carries_position():
    with pytest.raises(MjSyntaxError) as ei:
        parse_program("class A {\n  int x = ;\n}")
    assert ei.value.line == 2 and ei.value.col > 0


def test_code_hint_blocks_byte_match_source():
    text = (FIXTURES.parent / "runtime" / "stdlib.mj").read_text()
    seen = 0
    for c in stdlib_program().classes:
        for m in c.methods + c.constructors:
            if m.doc is not None:
                assert m.doc.raw in text
                for block in m.doc.code_hint_blocks:
                    assert "{@code " + block + "}" in m.doc.raw or "{@code" + block + "}" in m.doc.raw
                    seen += 1
    assert seen >= 14


def test_protected_constructor_not_callable_from_snippet():
    with pytest.raises(MjTypeError) as ei:
        load_program("snippet s() live(c) { Calendar c = new Calendar(); }")
    assert ei.value.kind in ("visibility", "abstract")


def test_well_typed_snippet_records_local_types(stdlib):
    tp = load_program("snippet s(Date date) live(date, hour) { int hour = date.getHours(); }")
    assert tp.snippets["s"].local_types["hour"] == "int"


def test_string_into_int_is_a_mismatch():
    with pytest.raises(MjTypeError) as ei:
        load_program('snippet s() live(x) { int x = "no"; }')
    assert ei.value.kind == "mismatch"


def test_unknown_identifier():
    with pytest.raises(MjTypeError) as ei:
        load_program("snippet s() live(x) { int x = y; }")
    assert ei.value.kind == "unknown"


def test_snippets_must_be_straight_line():
    with pytest.raises((MjSyntaxError, MjTypeError)):
        load_program("snippet s(int a) live(a) { if (a > 0) { a = 1; } }")


def test_running_example_yields_one_task():
    tasks = deprecated_tasks(load_program((CORPUS / "running_example.mj").read_text()))
    assert [t.target_label for t in tasks] == ["Date.getHours()"]


def test_no_deprecation_no_tasks():
    assert deprecated_tasks(load_program("snippet s(Date d) live(d, t) { int t = d.getTime(); }")) == []


def test_bundled_corpus_counts(corpus_tasks):
    # frozen after authoring the corpus; the direct scan below is the oracle
    assert len(corpus_tasks) == 20
    assert sum(t.has_hints for t in corpus_tasks.values()) == 14
    raw = "".join(f.read_text() for f in sorted(CORPUS.glob("*.mj")))
    assert raw.count("\nsnippet ") + raw.startswith("snippet ") == 20


def test_task_extraction_is_order_stable():
    src = "\n".join((CORPUS / n).read_text() for n in ("dates.mj", "misc.mj"))
    a = [t.id for t in deprecated_tasks(load_program(src))]
    b = [t.id for t in deprecated_tasks(load_program(src))]
    assert a == b == ["getMinutes", "getYear", "getDay", "decode", "nextSerial", "boxInt"]


def test_native_without_hook_is_not_a_task():
    src = '''
class Legacy {
    /** @deprecated use {@code Math.abs(int)} */
    @Deprecated
    public static native int old(int x);
}
snippet s(int x) live(x, y) { int y = Legacy.old(x); }
'''
    tp = load_program(src)
    assert deprecated_tasks(tp) == []


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.mj")) + sorted(FIXTURES.glob("*.mj")),
                         ids=lambda p: p.name)
def test_round_trip_of_bundled_files(path):
    p = parse_program(path.read_text())
    assert parse_program(program_str(p)) == p


def test_round_trip_of_stdlib():
    p = stdlib_program()
    again = parse_program(program_str(p), library=True)
    assert again == p


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32))
def test_round_trip_of_generated_snippets(seed):
    src = mini_source(random.Random(seed), 4)
    p = parse_program(src)
    assert parse_program(program_str(p)) == p
    typecheck(stdlib_program().merged(p))


@settings(max_examples=100, deadline=None)
@given(st.integers(-(2**63), 2**63 - 1), st.integers(-(2**63), 2**63 - 1))
def test_arithmetic_statements_round_trip(a, b):
    stmts = parse_statements(f"int x = {a} - ({b} * 3);\nx = x / 2;")
    assert parse_statements(statements_str(stmts)) == stmts
