"""Recursive-descent parser for `.mj` sources (grammar in docs/grammar.md)."""

from __future__ import annotations

import re

from .lexer import MjSyntaxError, Token, tokenize
from .syntax import (
    Assign,
    Binary,
    Call,
    Cast,
    ClassDecl,
    DeprecationDoc,
    DomainRange,
    DomainSet,
    DomainVia,
    Expr,
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
    Param,
    Placeholder,
    Program,
    Return,
    Snippet,
    Stmt,
    SuperCall,
    This,
    Throw,
    Unary,
    While,
)

INT_MIN = -(1 << 63)
INT_MAX = (1 << 63) - 1

_MODIFIERS = ("public", "protected", "static", "abstract", "native", "final")
_TYPE_KEYWORDS = ("int", "boolean", "void")

_BINARY_LEVELS = (
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
)

_BLOCK_TAG = re.compile(r"^\s*(?:/\*\*)?\s*\*?\s*@(\w+)", re.MULTILINE)


class DuplicateDeclaration(MjSyntaxError):
    pass


def extract_code_spans(text: str) -> list[tuple[int, int]]:
    """(start, end) offsets of the bodies of `{@code ...}` tags, braces balanced."""
    spans = []
    i = 0
    while True:
        k = text.find("{@code", i)
        if k < 0:
            return spans
        j = k + len("{@code")
        if j < len(text) and text[j] in " \t\r\n":
            j += 1
        depth = 1
        p = j
        while p < len(text) and depth:
            if text[p] == "{":
                depth += 1
            elif text[p] == "}":
                depth -= 1
            p += 1
        if depth:
            return spans
        spans.append((j, p - 1))
        i = p


def deprecated_section(raw: str) -> tuple[int, int] | None:
    """Offsets of the @deprecated block tag's text inside a doc comment."""
    start = None
    for m in _BLOCK_TAG.finditer(raw):
        if start is None:
            if m.group(1) == "deprecated":
                start = m.end()
        else:
            return (start, m.start())
    if start is None:
        return None
    end = raw.rfind("*/")
    return (start, end if end >= start else len(raw))


def _clean_doc_text(text: str) -> str:
    lines = []
    for ln in text.splitlines():
        ln = ln.strip()
        if ln.startswith("*"):
            ln = ln[1:].strip()
        if ln:
            lines.append(ln)
    return " ".join(lines)


def make_doc(raw: str) -> DeprecationDoc | None:
    sec = deprecated_section(raw)
    if sec is None:
        return None
    s, e = sec
    section = raw[s:e]
    blocks = tuple(section[a:b] for a, b in extract_code_spans(section))
    return DeprecationDoc(raw=raw, prose=_clean_doc_text(section), code_hint_blocks=blocks)


class Parser:
    def __init__(self, source: str, lenient: bool = False) -> None:
        raw_tokens = tokenize(source)
        self.tokens: list[Token] = []
        self.doc_before: dict[int, Token] = {}
        pending = None
        for t in raw_tokens:
            if t.kind == "doc":
                pending = t
                continue
            if pending is not None:
                self.doc_before[len(self.tokens)] = pending
                pending = None
            self.tokens.append(t)
        self.pos = 0
        self.lenient = lenient

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k) if k else self.tok
        return t.kind in ("kw", "punct") and t.text == text

    def error(self, message: str, tok: Token | None = None) -> MjSyntaxError:
        t = tok or self.tok
        return MjSyntaxError(message, t.line, t.col)

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def ident(self) -> str:
        if self.tok.kind != "ident":
            raise self.error(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        return self.advance().text

    def type_name(self) -> str:
        t = self.tok
        if t.kind == "ident" or (t.kind == "kw" and t.text in _TYPE_KEYWORDS):
            self.advance()
            return t.text
        raise self.error(f"expected type, found {t.text or 'end of input'!r}")

    def at_type(self, k: int = 0) -> bool:
        t = self.peek(k) if k else self.tok
        return t.kind == "ident" or (t.kind == "kw" and t.text in ("int", "boolean"))

    # -- top level -----------------------------------------------------------

    def parse_program(self, library: bool = False) -> Program:
        classes: list[ClassDecl] = []
        snippets: list[Snippet] = []
        seen_classes: set[str] = set()
        seen_snippets: set[str] = set()
        while self.tok.kind != "eof":
            if self.at("snippet"):
                t = self.tok
                s = self.parse_snippet()
                if s.name in seen_snippets:
                    raise DuplicateDeclaration(f"duplicate snippet {s.name}", t.line, t.col)
                seen_snippets.add(s.name)
                snippets.append(s)
            else:
                t = self.tok
                c = self.parse_class(library)
                if c.name in seen_classes:
                    raise DuplicateDeclaration(f"duplicate class {c.name}", t.line, t.col)
                seen_classes.add(c.name)
                classes.append(c)
        return Program(tuple(classes), tuple(snippets))

    def _modifiers(self) -> tuple[set[str], bool]:
        mods: set[str] = set()
        annotated = False
        while True:
            if self.at("@"):
                self.advance()
                name = self.ident()
                if name != "Deprecated":
                    raise self.error(f"unknown annotation @{name}")
                annotated = True
                continue
            if self.tok.kind == "kw" and self.tok.text in _MODIFIERS:
                mods.add(self.advance().text)
                continue
            return mods, annotated

    def parse_class(self, library: bool) -> ClassDecl:
        start = self.tok
        mods, _ = self._modifiers()
        if not self.at("class"):
            raise self.error(f"expected class or snippet declaration, found {self.tok.text!r}")
        self.advance()
        name = self.ident()
        superclass = None
        interfaces: list[str] = []
        if self.accept("extends"):
            superclass = self.ident()
        if self.accept("implements"):
            interfaces.append(self.ident())
            while self.accept(","):
                interfaces.append(self.ident())
        self.expect("{")
        fields: list[FieldDecl] = []
        ctors: list[MethodDecl] = []
        methods: list[MethodDecl] = []
        seen: set[tuple] = set()
        while not self.at("}"):
            member_tok = self.tok
            member = self.parse_member(name)
            if isinstance(member, FieldDecl):
                key = ("field", member.name)
                fields.append(member)
            elif member.is_ctor:
                key = ("ctor", member.param_types)
                ctors.append(member)
            else:
                key = ("method", member.signature)
                methods.append(member)
            if key in seen:
                raise DuplicateDeclaration(
                    f"duplicate member {key[1]!r} in class {name}", member_tok.line, member_tok.col
                )
            seen.add(key)
        self.expect("}")
        return ClassDecl(
            name=name,
            is_abstract="abstract" in mods,
            superclass=superclass,
            interfaces=tuple(interfaces),
            fields=tuple(fields),
            constructors=tuple(ctors),
            methods=tuple(methods),
            library=library,
            line=start.line,
        )

    def parse_member(self, class_name: str) -> FieldDecl | MethodDecl:
        first_index = self.pos
        start = self.tok
        mods, annotated = self._modifiers()
        doc_tok = self.doc_before.get(first_index)
        doc = make_doc(doc_tok.text) if doc_tok is not None else None
        visibility = "protected" if "protected" in mods else "public"
        # constructor: ClassName '('
        if self.tok.kind == "ident" and self.tok.text == class_name and self.at("(", 1):
            self.advance()
            params = self.params()
            body = self.block()
            return MethodDecl(
                name=class_name, params=params, ret=None, body=body, visibility=visibility,
                is_ctor=True, deprecated=annotated or doc is not None, annotated=annotated,
                doc=doc, line=start.line,
            )
        tname = self.type_name()
        name = self.ident()
        if self.at("("):
            params = self.params()
            abstract = "abstract" in mods
            native = "native" in mods
            if abstract or native:
                self.expect(";")
                body = None
            else:
                body = self.block()
            return MethodDecl(
                name=name, params=params, ret=tname, body=body, visibility=visibility,
                is_static="static" in mods, is_abstract=abstract, is_native=native,
                deprecated=annotated or doc is not None, annotated=annotated, doc=doc,
                line=start.line,
            )
        if tname == "void":
            raise self.error("field cannot have type void", start)
        init = None
        if self.accept("="):
            init = self.expr()
        self.expect(";")
        return FieldDecl(
            name=name, type=tname, is_static="static" in mods, init=init,
            visibility=visibility, is_final="final" in mods, line=start.line,
        )

    def params(self) -> tuple[Param, ...]:
        self.expect("(")
        out: list[Param] = []
        if not self.at(")"):
            while True:
                t = self.type_name()
                out.append(Param(t, self.ident()))
                if not self.accept(","):
                    break
        self.expect(")")
        names = [p.name for p in out]
        if len(set(names)) != len(names):
            raise self.error("duplicate parameter name")
        return tuple(out)

    def parse_snippet(self) -> Snippet:
        start = self.expect("snippet")
        name = self.ident()
        params = self.params()
        self.expect("live")
        self.expect("(")
        live: list[str] = []
        if not self.at(")"):
            live.append(self.ident())
            while self.accept(","):
                live.append(self.ident())
        self.expect(")")
        domain = []
        while self.accept("domain"):
            domain.append(self.domain_clause())
            while self.accept(","):
                domain.append(self.domain_clause())
        body = self.block()
        return Snippet(name, params, tuple(live), body, tuple(domain), line=start.line)

    def _signed_int(self) -> int:
        neg = self.accept("-")
        if self.tok.kind != "int":
            raise self.error("expected integer")
        v = int(self.advance().text)
        return -v if neg else v

    def domain_clause(self):
        name = self.ident()
        if self.accept("="):
            return DomainVia(name, self.expr())
        self.expect("in")
        if self.accept("{"):
            values = [self.literal_value()]
            while self.accept(","):
                values.append(self.literal_value())
            self.expect("}")
            return DomainSet(name, tuple(values))
        lo = self._signed_int()
        self.expect("..")
        hi = self._signed_int()
        if hi < lo:
            raise self.error("empty domain range")
        return DomainRange(name, lo, hi)

    def literal_value(self) -> Literal:
        e = self.unary()
        if isinstance(e, Literal):
            return e
        raise self.error("expected literal in domain set")

    # -- statements ----------------------------------------------------------

    def block(self) -> tuple[Stmt, ...]:
        self.expect("{")
        out = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unterminated block")
            out.append(self.stmt())
        self.expect("}")
        return tuple(out)

    def stmt(self) -> Stmt:
        t = self.tok
        if self.at("if"):
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.block_or_stmt()
            orelse: tuple[Stmt, ...] = ()
            if self.accept("else"):
                orelse = self.block_or_stmt()
            return If(cond, then, orelse, line=t.line)
        if self.at("while"):
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return While(cond, self.block_or_stmt(), line=t.line)
        if self.at("return"):
            self.advance()
            value = None if self.at(";") else self.expr()
            self.expect(";")
            return Return(value, line=t.line)
        if self.at("throw"):
            self.advance()
            value = self.expr()
            self.expect(";")
            return Throw(value, line=t.line)
        if self.at("super") and self.at("(", 1):
            self.advance()
            args = self.args()
            self.expect(";")
            return SuperCall(args, line=t.line)
        final = self.accept("final")
        if self.at_type() and self.peek().kind == "ident":
            tname = self.type_name()
            name = self.ident()
            self.expect("=")
            init = self.expr()
            self.expect(";")
            return LocalDecl(tname, name, init, final, line=t.line)
        if final:
            raise self.error("expected local declaration after 'final'")
        e = self.expr()
        if self.accept("="):
            if not isinstance(e, (Name, FieldAccess)):
                raise self.error("invalid assignment target", t)
            value = self.expr()
            self.expect(";")
            return Assign(e, value, line=t.line)
        self.expect(";")
        return ExprStmt(e, line=t.line)

    def block_or_stmt(self) -> tuple[Stmt, ...]:
        if self.at("{"):
            return self.block()
        return (self.stmt(),)

    # -- expressions ---------------------------------------------------------

    def expr(self) -> Expr:
        return self.binary(0)

    def binary(self, level: int) -> Expr:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        left = self.binary(level + 1)
        ops = _BINARY_LEVELS[level]
        while self.tok.kind == "punct" and self.tok.text in ops:
            t = self.advance()
            right = self.binary(level + 1)
            left = Binary(t.text, left, right, line=t.line)
        if level == 3 and self.at("instanceof"):
            t = self.advance()
            left = InstanceOf(left, self.type_name(), line=t.line)
        return left

    def unary(self) -> Expr:
        t = self.tok
        if self.at("-"):
            self.advance()
            if self.tok.kind == "int":
                v = -int(self.advance().text)
                if v < INT_MIN:
                    raise self.error("integer literal out of range", t)
                return self.postfix(Literal(v, "int", line=t.line))
            return Unary("-", self.unary(), line=t.line)
        if self.at("!"):
            self.advance()
            return Unary("!", self.unary(), line=t.line)
        if self._at_cast():
            self.advance()
            tname = self.type_name()
            self.expect(")")
            return Cast(tname, self.unary(), line=t.line)
        return self.postfix(self.primary())

    def _at_cast(self) -> bool:
        if not self.at("("):
            return False
        t1 = self.peek(1)
        if not self.at(")", 2):
            return False
        if t1.kind == "kw" and t1.text in ("int", "boolean"):
            return True
        if t1.kind != "ident" or not t1.text[:1].isupper():
            return False
        nxt = self.peek(3)
        return nxt.kind in ("ident", "int", "string") or (
            nxt.kind in ("kw", "punct") and nxt.text in ("(", "new", "this", "true", "false", "null")
        )

    def args(self) -> tuple[Expr, ...]:
        self.expect("(")
        out = []
        if not self.at(")"):
            out.append(self.arg())
            while self.accept(","):
                out.append(self.arg())
        self.expect(")")
        return tuple(out)

    def arg(self) -> Expr:
        if self.lenient:
            t = self.tok
            # `int`, `boolean`, or `Type name` standing in for an argument
            if t.kind == "kw" and t.text in ("int", "boolean"):
                self.advance()
                if self.tok.kind == "ident":
                    self.advance()
                return Placeholder(t.text, line=t.line)
            if t.kind == "ident" and self.peek().kind == "ident":
                self.advance()
                self.advance()
                return Placeholder(t.text, line=t.line)
        return self.expr()

    def postfix(self, e: Expr) -> Expr:
        while True:
            if self.at("."):
                self.advance()
                t = self.tok
                name = self.ident()
                if self.at("("):
                    e = Call(e, name, self.args(), line=t.line)
                else:
                    e = FieldAccess(e, name, line=t.line)
                continue
            return e

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            v = int(t.text)
            if v > INT_MAX:
                raise self.error("integer literal out of range", t)
            return Literal(v, "int", line=t.line)
        if t.kind == "string":
            self.advance()
            return Literal(t.text, "String", line=t.line)
        if self.at("true") or self.at("false"):
            self.advance()
            return Literal(t.text == "true", "boolean", line=t.line)
        if self.at("null"):
            self.advance()
            return Literal(None, "null", line=t.line)
        if self.at("this"):
            self.advance()
            return This(line=t.line)
        if self.at("new"):
            self.advance()
            cls = self.ident()
            return New(cls, self.args(), line=t.line)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            self.advance()
            if self.at("("):
                return Call(None, t.text, self.args(), line=t.line)
            return Name(t.text, line=t.line)
        if self.lenient and t.kind == "kw" and t.text in ("int", "boolean"):
            self.advance()
            return Placeholder(t.text, line=t.line)
        raise self.error(f"unexpected token {t.text or 'end of input'!r}")


def parse_program(source: str, library: bool = False) -> Program:
    return Parser(source).parse_program(library=library)


def parse_expression(text: str, lenient: bool = False) -> Expr:
    p = Parser(text, lenient=lenient)
    e = p.expr()
    p.accept(";")
    if p.tok.kind != "eof":
        raise p.error(f"unexpected trailing input {p.tok.text!r}")
    return e


def parse_statements(text: str) -> tuple[Stmt, ...]:
    p = Parser(text)
    out = []
    while p.tok.kind != "eof":
        out.append(p.stmt())
    return tuple(out)
