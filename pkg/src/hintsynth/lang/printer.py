"""Pretty-printer producing parseable `.mj` source."""

from __future__ import annotations

from .syntax import (
    Assign,
    Binary,
    Call,
    Cast,
    ClassDecl,
    DomainRange,
    DomainSet,
    DomainVia,
    ExprStmt,
    FieldAccess,
    FieldDecl,
    If,
    InstanceOf,
    Literal,
    LocalDecl,
    MethodDecl,
    Name,
    New,
    Placeholder,
    Program,
    Return,
    Snippet,
    SuperCall,
    This,
    Throw,
    Unary,
    While,
)

_PREC = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4,
         "+": 5, "-": 5, "*": 6, "/": 6, "%": 6}


def _quote(s: str) -> str:
    out = ['"']
    for ch in s:
        out.append({"\n": "\\n", "\t": "\\t", "\r": "\\r", '"': '\\"', "\\": "\\\\", "\0": "\\0"}.get(ch, ch))
    out.append('"')
    return "".join(out)


def expr_str(e, prec: int = 0) -> str:
    if isinstance(e, Literal):
        if e.kind == "String":
            return _quote(e.value)
        if e.kind == "boolean":
            return "true" if e.value else "false"
        if e.kind == "null":
            return "null"
        s = str(e.value)
        return f"({s})" if e.value < 0 and prec >= 7 else s
    if isinstance(e, Name):
        return e.ident
    if isinstance(e, This):
        return "this"
    if isinstance(e, Placeholder):
        return e.type
    if isinstance(e, FieldAccess):
        return f"{expr_str(e.target, 8)}.{e.name}"
    if isinstance(e, Call):
        args = ", ".join(expr_str(a) for a in e.args)
        if e.target is None:
            return f"{e.name}({args})"
        return f"{expr_str(e.target, 8)}.{e.name}({args})"
    if isinstance(e, New):
        s = f"new {e.cls}({', '.join(expr_str(a) for a in e.args)})"
        return f"({s})" if prec >= 8 else s
    if isinstance(e, Binary):
        p = _PREC[e.op]
        s = f"{expr_str(e.left, p)} {e.op} {expr_str(e.right, p + 1)}"
        return f"({s})" if p < prec else s
    if isinstance(e, InstanceOf):
        s = f"{expr_str(e.operand, 5)} instanceof {e.type}"
        return f"({s})" if 4 < prec else s
    if isinstance(e, Unary):
        s = f"{e.op}{expr_str(e.operand, 7)}"
        return f"({s})" if prec >= 7 else s
    if isinstance(e, Cast):
        s = f"({e.type}) {expr_str(e.operand, 7)}"
        return f"({s})" if prec >= 7 else s
    raise TypeError(f"not an expression: {e!r}")


def stmt_lines(s, indent: str) -> list[str]:
    if isinstance(s, LocalDecl):
        fin = "final " if s.final else ""
        return [f"{indent}{fin}{s.type} {s.name} = {expr_str(s.init)};"]
    if isinstance(s, Assign):
        return [f"{indent}{expr_str(s.target)} = {expr_str(s.value)};"]
    if isinstance(s, ExprStmt):
        return [f"{indent}{expr_str(s.expr)};"]
    if isinstance(s, Return):
        return [f"{indent}return;" if s.value is None else f"{indent}return {expr_str(s.value)};"]
    if isinstance(s, Throw):
        return [f"{indent}throw {expr_str(s.value)};"]
    if isinstance(s, SuperCall):
        return [f"{indent}super({', '.join(expr_str(a) for a in s.args)});"]
    if isinstance(s, If):
        lines = [f"{indent}if ({expr_str(s.cond)}) {{"]
        lines += block_lines(s.then, indent + "    ")
        if s.orelse:
            lines.append(f"{indent}}} else {{")
            lines += block_lines(s.orelse, indent + "    ")
        lines.append(f"{indent}}}")
        return lines
    if isinstance(s, While):
        lines = [f"{indent}while ({expr_str(s.cond)}) {{"]
        lines += block_lines(s.body, indent + "    ")
        lines.append(f"{indent}}}")
        return lines
    raise TypeError(f"not a statement: {s!r}")


def block_lines(stmts, indent: str) -> list[str]:
    out: list[str] = []
    for s in stmts:
        out += stmt_lines(s, indent)
    return out


def statements_str(stmts, indent: str = "") -> str:
    return "\n".join(block_lines(stmts, indent))


def _doc_lines(doc_raw: str) -> list[str]:
    return doc_raw.splitlines() or [doc_raw]


def method_str(m: MethodDecl, indent: str = "") -> str:
    return "\n".join(_method_lines(m, indent))


def _method_lines(m: MethodDecl, indent: str) -> list[str]:
    lines: list[str] = []
    if m.doc is not None:
        lines += [indent + ln if i == 0 else ln for i, ln in enumerate(_doc_lines(m.doc.raw))]
    mods = []
    if m.annotated:
        mods.append("@Deprecated")
    if m.visibility == "protected":
        mods.append("protected")
    else:
        mods.append("public")
    if m.is_static:
        mods.append("static")
    if m.is_abstract:
        mods.append("abstract")
    if m.is_native:
        mods.append("native")
    params = ", ".join(f"{p.type} {p.name}" for p in m.params)
    head = f"{indent}{' '.join(mods)} "
    head += f"{m.name}({params})" if m.is_ctor else f"{m.ret} {m.name}({params})"
    if m.body is None:
        lines.append(head + ";")
        return lines
    lines.append(head + " {")
    lines += block_lines(m.body, indent + "    ")
    lines.append(indent + "}")
    return lines


def _field_line(f: FieldDecl, indent: str) -> str:
    mods = ["protected" if f.visibility == "protected" else "public"]
    if f.is_static:
        mods.append("static")
    if f.is_final:
        mods.append("final")
    init = f" = {expr_str(f.init)}" if f.init is not None else ""
    return f"{indent}{' '.join(mods)} {f.type} {f.name}{init};"


def class_str(c: ClassDecl) -> str:
    head = "abstract class" if c.is_abstract else "class"
    head += f" {c.name}"
    if c.superclass:
        head += f" extends {c.superclass}"
    if c.interfaces:
        head += f" implements {', '.join(c.interfaces)}"
    lines = [head + " {"]
    for f in c.fields:
        lines.append(_field_line(f, "    "))
    for m in c.constructors + c.methods:
        lines += _method_lines(m, "    ")
    lines.append("}")
    return "\n".join(lines)


def _domain_str(d) -> str:
    if isinstance(d, DomainRange):
        return f"{d.name} in {d.lo}..{d.hi}"
    if isinstance(d, DomainSet):
        return f"{d.name} in {{{', '.join(expr_str(v) for v in d.values)}}}"
    if isinstance(d, DomainVia):
        return f"{d.name} = {expr_str(d.expr)}"
    raise TypeError(d)


def snippet_str(s: Snippet, header: bool = True) -> str:
    if not header:
        return statements_str(s.statements)
    params = ", ".join(f"{p.type} {p.name}" for p in s.inputs)
    head = f"snippet {s.name}({params}) live({', '.join(s.live_out)})"
    if s.domain:
        head += "\n    domain " + ", ".join(_domain_str(d) for d in s.domain)
    lines = [head + " {"]
    lines += block_lines(s.statements, "    ")
    lines.append("}")
    return "\n".join(lines)


def program_str(p: Program) -> str:
    parts = [class_str(c) for c in p.classes] + [snippet_str(s) for s in p.snippets]
    return "\n\n".join(parts) + ("\n" if parts else "")
