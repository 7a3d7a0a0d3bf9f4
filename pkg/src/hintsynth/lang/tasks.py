"""Extraction of refactoring tasks: snippets that call a deprecated method."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .syntax import Call, DeprecationDoc, MethodDecl, New, Param, Snippet
from .typecheck import TypedProgram, TypedSnippet, calls_in


@dataclass(frozen=True)
class RefactoringTask:
    id: str
    snippet: Snippet  # this is P1
    typed: TypedSnippet
    owner: str  # class declaring the deprecated method
    method: MethodDecl
    doc: DeprecationDoc | None
    program: TypedProgram
    hints: tuple[str, ...] = ()  # raw {@code} spans, empty when stripped

    @property
    def inputs(self) -> tuple[Param, ...]:
        return self.snippet.inputs

    @property
    def live_out(self) -> tuple[str, ...]:
        return self.snippet.live_out

    @property
    def has_hints(self) -> bool:
        return bool(self.hints)

    @property
    def outputs(self) -> tuple[str, ...]:
        """Live variables defined by the snippet rather than passed in."""
        names = set(self.snippet.input_names)
        return tuple(v for v in self.live_out if v not in names)

    @property
    def target_label(self) -> str:
        m = self.method
        return f"{self.owner}.{m.name}({', '.join(m.param_types)})"

    def stripped(self) -> RefactoringTask:
        return replace(self, hints=())


def deprecated_call(tp: TypedProgram, ts: TypedSnippet):
    """(owner, decl) of the first deprecated method or constructor the snippet calls."""
    for node in calls_in(ts.snippet.statements):
        inf = ts.info.get(id(node))
        if inf is None:
            continue
        if isinstance(node, New):
            _, owner, decl = inf
            if decl is None:
                continue
        elif isinstance(node, Call):
            _, owner, decl = inf
        else:
            continue
        if decl.deprecated:
            return owner, decl
    return None


def deprecated_tasks(tp: TypedProgram, natives: dict | None = None) -> list[RefactoringTask]:
    from ..runtime.natives import DEFAULT_NATIVES

    hooks = DEFAULT_NATIVES if natives is None else natives
    out = []
    for s in tp.program.snippets:
        ts = tp.snippets[s.name]
        hit = deprecated_call(tp, ts)
        if hit is None:
            continue
        owner, decl = hit
        if decl.is_native and f"{owner}.{decl.name}/{len(decl.params)}" not in hooks:
            continue
        doc = decl.doc
        hints = doc.code_hint_blocks if doc is not None else ()
        out.append(RefactoringTask(s.name, s, ts, owner, decl, doc, tp, tuple(hints)))
    return out
