"""S-expression concrete syntax: parser and canonical printer.

The grammar (EBNF over s-expressions):

    program  := ( "program" letrec* main )
    letrec   := ( "letrec" fundef+ )
    fundef   := ( "fun" attrs? SYM ( SYM+ ) expr )
    attrs    := ( "@" ("tail_mod_cons")* )
    main     := ( "main" expr )
    expr     := SYM | INT | ( "int" INT ) | ( "var" SYM )
              | ( "call" cattrs? SYM expr* )
              | ( "let" SYM expr expr ) | ( "seq" expr expr )
              | ( "constr" SYM expr* )
              | ( "match" expr clause+ )
              | ( "setref" expr expr expr ) | ( "hole" )
              | ( "letrec" fundef+ expr )
              | ( "if" expr expr expr )            ; sugar
              | ( "tuple" expr* )                  ; sugar
    cattrs   := ( "@" ("tailcall")* )
    clause   := ( "case" pat expr )
    pat      := SYM | "_" | INT | ( SYM pat* )

Comments run from ';' to end of line.  `if` desugars to a match on
True/False, `tuple` to a "Tuple" constructor; the printer emits core
forms only, so printing is canonicalizing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ir import (
    TAIL_MOD_CONS,
    TAILCALL,
    Call,
    Constr,
    Expr,
    FunDef,
    Hole,
    Int,
    Let,
    Letrec,
    Match,
    PConstr,
    PInt,
    PVar,
    PWild,
    Pattern,
    Program,
    Seq,
    SetRef,
    Span,
    Var,
)


@dataclass
class ParseError(Exception):
    span: Span
    message: str
    expected: list[str] = field(default_factory=list)

    def __str__(self) -> str:
        exp = f" (expected {', '.join(self.expected)})" if self.expected else ""
        return f"{self.span.line}:{self.span.column}: {self.message}{exp}"


# ---------------------------------------------------------------------------
# Reader: text -> nested atoms/lists with spans
# ---------------------------------------------------------------------------

_DELIMS = "()\"; \t\r\n"


@dataclass
class Atom:
    text: str
    span: Span


@dataclass
class SList:
    items: list
    span: Span


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 0

    def _advance(self, n: int = 1):
        for _ in range(n):
            if self.pos < len(self.text):
                if self.text[self.pos] == "\n":
                    self.line += 1
                    self.col = 0
                else:
                    self.col += 1
                self.pos += 1

    def here(self) -> Span:
        return Span(self.pos, self.pos, self.line, self.col)

    def skip_ws(self):
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c in " \t\r\n":
                self._advance()
            elif c == ";":
                while self.pos < len(self.text) and self.text[self.pos] != "\n":
                    self._advance()
            else:
                return

    def read(self):
        self.skip_ws()
        if self.pos >= len(self.text):
            raise ParseError(self.here(), "unexpected end of input", ["expression"])
        start_pos, start_line, start_col = self.pos, self.line, self.col
        c = self.text[self.pos]
        if c == "(":
            self._advance()
            items = []
            while True:
                self.skip_ws()
                if self.pos >= len(self.text):
                    raise ParseError(self.here(), "unclosed '('", [")"])
                if self.text[self.pos] == ")":
                    self._advance()
                    return SList(items, Span(start_pos, self.pos, start_line, start_col))
                items.append(self.read())
        if c == ")":
            raise ParseError(self.here(), "unexpected ')'", ["expression"])
        while self.pos < len(self.text) and self.text[self.pos] not in _DELIMS:
            self._advance()
        tok = self.text[start_pos:self.pos]
        return Atom(tok, Span(start_pos, self.pos, start_line, start_col))

    def at_eof(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)


def _is_int(tok: str) -> bool:
    body = tok[1:] if tok[:1] == "-" else tok
    return body.isdigit() and body != ""


# ---------------------------------------------------------------------------
# Builder: s-nodes -> IR
# ---------------------------------------------------------------------------


def _err(node, msg, expected=None) -> ParseError:
    return ParseError(node.span, msg, expected or [])


def _head(node: SList) -> str:
    if not node.items or not isinstance(node.items[0], Atom):
        raise _err(node, "expected a keyword form")
    return node.items[0].text


def _attrs(node, allowed: set[str]) -> frozenset[str]:
    if not isinstance(node, SList) or _head(node) != "@":
        raise _err(node, "expected attribute list (@ ...)")
    out = set()
    for a in node.items[1:]:
        if not isinstance(a, Atom) or a.text not in allowed:
            raise _err(a if isinstance(a, (Atom, SList)) else node,
                       f"unknown attribute {getattr(a, 'text', a)!r}",
                       sorted(allowed))
        out.add(a.text)
    return frozenset(out)


def _is_attr_list(node) -> bool:
    return (isinstance(node, SList) and node.items
            and isinstance(node.items[0], Atom) and node.items[0].text == "@")


def build_expr(node) -> Expr:
    if isinstance(node, Atom):
        if _is_int(node.text):
            return Int(int(node.text), span=node.span)
        return Var(node.text, span=node.span)
    assert isinstance(node, SList)
    if not node.items:
        raise _err(node, "empty form")
    head = _head(node)
    rest = node.items[1:]
    sp = node.span

    def need(n, what):
        if len(rest) != n:
            raise _err(node, f"'{head}' takes {n} argument(s)", [what])

    if head == "int":
        need(1, "integer")
        if not isinstance(rest[0], Atom) or not _is_int(rest[0].text):
            raise _err(node, "expected integer literal")
        return Int(int(rest[0].text), span=sp)
    if head == "var":
        need(1, "symbol")
        if not isinstance(rest[0], Atom):
            raise _err(node, "expected symbol")
        return Var(rest[0].text, span=sp)
    if head == "call":
        attrs = frozenset()
        if rest and _is_attr_list(rest[0]):
            attrs = _attrs(rest[0], {TAILCALL})
            rest = rest[1:]
        if not rest or not isinstance(rest[0], Atom):
            raise _err(node, "call needs a callee symbol")
        return Call(rest[0].text, [build_expr(a) for a in rest[1:]], attrs, span=sp)
    if head == "let":
        need(3, "binder, bound, body")
        if not isinstance(rest[0], Atom):
            raise _err(node, "let binder must be a symbol")
        return Let(rest[0].text, build_expr(rest[1]), build_expr(rest[2]), span=sp)
    if head == "seq":
        need(2, "two expressions")
        return Seq(build_expr(rest[0]), build_expr(rest[1]), span=sp)
    if head == "constr":
        if not rest or not isinstance(rest[0], Atom):
            raise _err(node, "constr needs a tag symbol")
        return Constr(rest[0].text, [build_expr(a) for a in rest[1:]], span=sp)
    if head == "match":
        if len(rest) < 2:
            raise _err(node, "match needs a scrutinee and at least one clause")
        scrut = build_expr(rest[0])
        clauses = []
        for c in rest[1:]:
            if not isinstance(c, SList) or _head(c) != "case" or len(c.items) != 3:
                raise _err(c if isinstance(c, (SList, Atom)) else node,
                           "expected (case pat expr)")
            clauses.append((build_pattern(c.items[1]), build_expr(c.items[2])))
        return Match(scrut, clauses, span=sp)
    if head == "setref":
        need(3, "dest, index, value")
        return SetRef(build_expr(rest[0]), build_expr(rest[1]), build_expr(rest[2]),
                      span=sp)
    if head == "hole":
        need(0, "nothing")
        return Hole(span=sp)
    if head == "letrec":
        if len(rest) < 2:
            raise _err(node, "letrec needs at least one fundef and a body")
        return Letrec([build_fundef(f) for f in rest[:-1]], build_expr(rest[-1]),
                      span=sp)
    if head == "if":
        need(3, "condition, then, else")
        return Match(build_expr(rest[0]),
                     [(PConstr("True", []), build_expr(rest[1])),
                      (PConstr("False", []), build_expr(rest[2]))],
                     span=sp)
    if head == "tuple":
        return Constr("Tuple", [build_expr(a) for a in rest], span=sp)
    raise _err(node, f"unknown form '{head}'")


def build_pattern(node) -> Pattern:
    if isinstance(node, Atom):
        if node.text == "_":
            return PWild(span=node.span)
        if _is_int(node.text):
            return PInt(int(node.text), span=node.span)
        if node.text[0].isupper():
            # Bare capitalized symbol: nullary constructor pattern.
            return PConstr(node.text, [], span=node.span)
        return PVar(node.text, span=node.span)
    assert isinstance(node, SList)
    if not node.items or not isinstance(node.items[0], Atom):
        raise _err(node, "constructor pattern needs a tag symbol")
    return PConstr(node.items[0].text,
                   [build_pattern(p) for p in node.items[1:]], span=node.span)


def build_fundef(node) -> FunDef:
    if not isinstance(node, SList) or _head(node) != "fun":
        raise _err(node, "expected (fun ...)")
    rest = node.items[1:]
    attrs = frozenset()
    if rest and _is_attr_list(rest[0]):
        attrs = _attrs(rest[0], {TAIL_MOD_CONS})
        rest = rest[1:]
    if len(rest) != 3 or not isinstance(rest[0], Atom) or not isinstance(rest[1], SList):
        raise _err(node, "expected (fun attrs? name (params) body)")
    params = []
    for p in rest[1].items:
        if not isinstance(p, Atom):
            raise _err(rest[1], "parameters must be symbols")
        params.append(p.text)
    if not params:
        raise _err(rest[1], "function needs at least one parameter")
    return FunDef(rest[0].text, params, build_expr(rest[2]), attrs, span=node.span)


def parse_program(text: str) -> Program:
    """Parse source text into a Program; raises ParseError."""

    r = _Reader(text)
    top = r.read()
    if not r.at_eof():
        extra = r.read()
        raise ParseError(extra.span, "trailing input after program form")
    if not isinstance(top, SList) or _head(top) != "program":
        raise _err(top, "expected (program ...)")
    groups: list[list[FunDef]] = []
    main = None
    for item in top.items[1:]:
        if not isinstance(item, SList):
            raise _err(item, "expected (letrec ...) or (main ...)")
        h = _head(item)
        if h == "letrec":
            if main is not None:
                raise _err(item, "letrec after main")
            if len(item.items) < 2:
                raise _err(item, "letrec needs at least one fundef")
            groups.append([build_fundef(f) for f in item.items[1:]])
        elif h == "main":
            if main is not None:
                raise _err(item, "duplicate main")
            if len(item.items) != 2:
                raise _err(item, "main takes one expression")
            main = build_expr(item.items[1])
        else:
            raise _err(item, f"unknown toplevel form '{h}'")
    if main is None:
        raise ParseError(top.span, "program has no (main ...) form")
    return Program(groups, main)


# ---------------------------------------------------------------------------
# Canonical printer
# ---------------------------------------------------------------------------

_WIDTH = 72


def _pat_str(p: Pattern) -> str:
    if isinstance(p, PVar):
        return p.name
    if isinstance(p, PWild):
        return "_"
    if isinstance(p, PInt):
        return str(p.n)
    assert isinstance(p, PConstr)
    if not p.subpatterns:
        return p.tag
    return "(" + " ".join([p.tag] + [_pat_str(s) for s in p.subpatterns]) + ")"


def _inline(e: Expr) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Int):
        return f"(int {e.n})"
    if isinstance(e, Hole):
        return "(hole)"
    if isinstance(e, Call):
        parts = ["call"]
        if e.attrs:
            parts.append("(@ " + " ".join(sorted(e.attrs)) + ")")
        parts.append(e.callee)
        parts.extend(_inline(a) for a in e.args)
        return "(" + " ".join(parts) + ")"
    if isinstance(e, Let):
        return f"(let {e.binder} {_inline(e.bound)} {_inline(e.body)})"
    if isinstance(e, Seq):
        return f"(seq {_inline(e.first)} {_inline(e.second)})"
    if isinstance(e, Constr):
        return "(" + " ".join(["constr", e.tag] + [_inline(a) for a in e.args]) + ")"
    if isinstance(e, Match):
        cl = " ".join(f"(case {_pat_str(p)} {_inline(b)})" for p, b in e.clauses)
        return f"(match {_inline(e.scrutinee)} {cl})"
    if isinstance(e, SetRef):
        return f"(setref {_inline(e.dest)} {_inline(e.index)} {_inline(e.value)})"
    if isinstance(e, Letrec):
        fs = " ".join(_fundef_inline(f) for f in e.group)
        return f"(letrec {fs} {_inline(e.body)})"
    raise TypeError(f"cannot print {e!r}")


def _fundef_inline(f: FunDef) -> str:
    parts = ["fun"]
    if f.attrs:
        parts.append("(@ " + " ".join(sorted(f.attrs)) + ")")
    parts.append(f.name)
    parts.append("(" + " ".join(f.params) + ")")
    parts.append(_inline(f.body))
    return "(" + " ".join(parts) + ")"


def _fmt(e: Expr, indent: int) -> str:
    line = _inline(e)
    if indent + len(line) <= _WIDTH:
        return line
    pad = " " * (indent + 2)
    if isinstance(e, Let):
        return (f"(let {e.binder} {_fmt(e.bound, indent + 7 + len(e.binder))}\n"
                f"{pad}{_fmt(e.body, indent + 2)})")
    if isinstance(e, Seq):
        return (f"(seq {_fmt(e.first, indent + 5)}\n"
                f"{pad}{_fmt(e.second, indent + 2)})")
    if isinstance(e, Constr):
        args = "\n".join(pad + _fmt(a, indent + 2) for a in e.args)
        return f"(constr {e.tag}\n{args})"
    if isinstance(e, Call):
        head = "(call"
        if e.attrs:
            head += " (@ " + " ".join(sorted(e.attrs)) + ")"
        head += f" {e.callee}"
        args = "\n".join(pad + _fmt(a, indent + 2) for a in e.args)
        return f"{head}\n{args})"
    if isinstance(e, Match):
        cl = "\n".join(pad + _clause_fmt(p, b, indent + 2) for p, b in e.clauses)
        return f"(match {_fmt(e.scrutinee, indent + 7)}\n{cl})"
    if isinstance(e, SetRef):
        return (f"(setref {_fmt(e.dest, indent + 8)} {_inline(e.index)}\n"
                f"{pad}{_fmt(e.value, indent + 2)})")
    if isinstance(e, Letrec):
        fs = "\n".join(pad + _fundef_fmt(f, indent + 2) for f in e.group)
        return f"(letrec\n{fs}\n{pad}{_fmt(e.body, indent + 2)})"
    return line


def _clause_fmt(p: Pattern, b: Expr, indent: int) -> str:
    line = f"(case {_pat_str(p)} {_inline(b)})"
    if indent + len(line) <= _WIDTH:
        return line
    pad = " " * (indent + 2)
    return f"(case {_pat_str(p)}\n{pad}{_fmt(b, indent + 2)})"


def _fundef_fmt(f: FunDef, indent: int) -> str:
    line = _fundef_inline(f)
    if indent + len(line) <= _WIDTH:
        return line
    head = "(fun"
    if f.attrs:
        head += " (@ " + " ".join(sorted(f.attrs)) + ")"
    head += f" {f.name} (" + " ".join(f.params) + ")"
    pad = " " * (indent + 2)
    return f"{head}\n{pad}{_fmt(f.body, indent + 2)})"


def print_program(p: Program) -> str:
    """Canonical layout; parse_program(print_program(p)) == p."""

    lines = ["(program"]
    for group in p.groups:
        body = "\n".join("    " + _fundef_fmt(f, 4) for f in group)
        lines.append(f"  (letrec\n{body})")
    lines.append(f"  (main {_fmt(p.main, 8)}))")
    return "\n".join(lines)
