"""Tree IR for the small first-order language.

Expressions, patterns, function definitions and programs, plus the
decomposition data shared by the analysis and transform passes.
Trees are immutable by convention: passes always rebuild.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

# Attribute names as they appear in source.
TAIL_MOD_CONS = "tail_mod_cons"
TAILCALL = "tailcall"

BUILTINS = ("add", "sub", "leq", "eq", "print", "add1")


@dataclass(frozen=True)
class Span:
    """Byte/line/column range into the source text."""

    byte_start: int
    byte_end: int
    line: int
    column: int


def _span_field():
    return field(default=None, compare=False, repr=False)


class Expr:
    """Base class for expression nodes."""

    span: Optional[Span]


class Pattern:
    """Base class for pattern nodes."""

    span: Optional[Span]


@dataclass
class Var(Expr):
    name: str
    span: Optional[Span] = _span_field()


@dataclass
class Int(Expr):
    n: int
    span: Optional[Span] = _span_field()


@dataclass
class Call(Expr):
    callee: str
    args: list[Expr]
    attrs: frozenset[str] = frozenset()
    span: Optional[Span] = _span_field()


@dataclass
class Let(Expr):
    binder: str
    bound: Expr
    body: Expr
    span: Optional[Span] = _span_field()


@dataclass
class Seq(Expr):
    first: Expr
    second: Expr
    span: Optional[Span] = _span_field()


@dataclass
class Constr(Expr):
    tag: str
    args: list[Expr]
    span: Optional[Span] = _span_field()


@dataclass
class Match(Expr):
    scrutinee: Expr
    clauses: list[tuple[Pattern, Expr]]
    span: Optional[Span] = _span_field()


@dataclass
class SetRef(Expr):
    dest: Expr
    index: Expr
    value: Expr
    span: Optional[Span] = _span_field()


@dataclass
class Hole(Expr):
    span: Optional[Span] = _span_field()


@dataclass
class Letrec(Expr):
    """Local group of mutually recursive functions scoping over `body`.

    Local functions may call functions in scope but may not capture value
    variables of the enclosing function (first-order, call-by-name).
    """

    group: list["FunDef"]
    body: Expr
    span: Optional[Span] = _span_field()


@dataclass
class PVar(Pattern):
    name: str
    span: Optional[Span] = _span_field()


@dataclass
class PWild(Pattern):
    span: Optional[Span] = _span_field()


@dataclass
class PConstr(Pattern):
    tag: str
    subpatterns: list[Pattern]
    span: Optional[Span] = _span_field()


@dataclass
class PInt(Pattern):
    n: int
    span: Optional[Span] = _span_field()


@dataclass
class FunDef:
    name: str
    params: list[str]
    body: Expr
    attrs: frozenset[str] = frozenset()
    span: Optional[Span] = _span_field()


@dataclass
class Program:
    groups: list[list[FunDef]]
    main: Expr


# ---------------------------------------------------------------------------
# Decomposition data.
#
# A decomposition context mirrors the expression tree but has DecompHole
# leaves; the i-th DecompHole (left to right) corresponds to holes[i].
# ---------------------------------------------------------------------------

PLAIN_TAIL = "plain_tail"
STRICT_MOD_CONS = "strict_mod_cons"


@dataclass
class DecompHole(Expr):
    """Context leaf; `index` points into Decomposition.holes."""

    index: int
    span: Optional[Span] = _span_field()


@dataclass
class Decomposition:
    context: Expr
    holes: list[tuple[Expr, str]]  # (expression, PLAIN_TAIL | STRICT_MOD_CONS)
    chosen_constructor_paths: list[tuple]


Path = tuple


def path_str(path: Path) -> str:
    return "/".join(str(p) for p in path) if path else "<root>"


def plug(d: Decomposition) -> Expr:
    """Rebuild the original expression from a decomposition."""

    used = [0]

    def go(e: Expr) -> Expr:
        if isinstance(e, DecompHole):
            if e.index >= len(d.holes):
                raise ValueError("decomposition arity mismatch")
            used[0] += 1
            return d.holes[e.index][0]
        if isinstance(e, Let):
            return Let(e.binder, go(e.bound), go(e.body), span=e.span)
        if isinstance(e, Seq):
            return Seq(go(e.first), go(e.second), span=e.span)
        if isinstance(e, Constr):
            return Constr(e.tag, [go(a) for a in e.args], span=e.span)
        if isinstance(e, Match):
            return Match(go(e.scrutinee), [(p, go(b)) for p, b in e.clauses], span=e.span)
        if isinstance(e, Letrec):
            return Letrec(e.group, go(e.body), span=e.span)
        if isinstance(e, Call):
            return Call(e.callee, [go(a) for a in e.args], e.attrs, span=e.span)
        if isinstance(e, SetRef):
            return SetRef(go(e.dest), go(e.index), go(e.value), span=e.span)
        return e

    out = go(d.context)
    if used[0] != len(d.holes):
        raise ValueError("decomposition arity mismatch")
    return out


# ---------------------------------------------------------------------------
# Well-formedness
# ---------------------------------------------------------------------------


@dataclass
class Diagnostic:
    severity: str  # "Error" | "Warning"
    code: str
    message: str
    span: Optional[Span] = None
    path: Path = ()
    candidate_paths: list = field(default_factory=list)

    def render(self, filename: str = "<input>") -> str:
        if self.span is not None:
            loc = f"{filename}:{self.span.line}:{self.span.column}"
        else:
            loc = f"{filename}:0:0"
        return f"{self.severity.upper()} {self.code} {loc} {self.message}"


def pattern_vars(p: Pattern, acc: Optional[list[str]] = None) -> list[str]:
    if acc is None:
        acc = []
    if isinstance(p, PVar):
        acc.append(p.name)
    elif isinstance(p, PConstr):
        for sp in p.subpatterns:
            pattern_vars(sp, acc)
    return acc


def well_formed(p: Program) -> list[Diagnostic]:
    """Check Program invariants; one diagnostic per violation."""

    diags: list[Diagnostic] = []

    def check_expr(e: Expr, path: Path, scope: set[str], funcs: set[str],
                   hole_ok: bool) -> None:
        if isinstance(e, Hole):
            if not hole_ok:
                diags.append(Diagnostic(
                    "Error", "MisplacedHole",
                    "hole outside constructor-argument position",
                    e.span, path))
            return
        if isinstance(e, Var):
            return
        if isinstance(e, Int):
            return
        if isinstance(e, Call):
            if (e.callee not in funcs and e.callee not in scope
                    and e.callee not in BUILTINS):
                diags.append(Diagnostic(
                    "Error", "UnboundCallee",
                    f"callee '{e.callee}' is not a function, binder or builtin",
                    e.span, path))
            for i, a in enumerate(e.args):
                check_expr(a, path + (f"arg{i}",), scope, funcs, False)
            return
        if isinstance(e, Let):
            check_expr(e.bound, path + ("bound",), scope, funcs, False)
            check_expr(e.body, path + ("body",), scope | {e.binder}, funcs, False)
            return
        if isinstance(e, Seq):
            check_expr(e.first, path + ("first",), scope, funcs, False)
            check_expr(e.second, path + ("second",), scope, funcs, False)
            return
        if isinstance(e, Constr):
            for i, a in enumerate(e.args):
                check_expr(a, path + (f"arg{i}",), scope, funcs, True)
            return
        if isinstance(e, Match):
            if not e.clauses:
                diags.append(Diagnostic(
                    "Error", "EmptyMatch", "match with no clauses", e.span, path))
            check_expr(e.scrutinee, path + ("scrutinee",), scope, funcs, False)
            for j, (pat, body) in enumerate(e.clauses):
                pvars = pattern_vars(pat)
                seen: set[str] = set()
                for v in pvars:
                    if v in seen:
                        diags.append(Diagnostic(
                            "Error", "DuplicatePatternVar",
                            f"'{v}' bound twice in one pattern",
                            pat.span, path + (f"clause{j}",)))
                    seen.add(v)
                check_expr(body, path + (f"clause{j}",), scope | seen, funcs, False)
            return
        if isinstance(e, SetRef):
            if isinstance(e.index, Int) and e.index.n < 1:
                diags.append(Diagnostic(
                    "Error", "InvalidIndex",
                    f"setref index {e.index.n} must be >= 1 (fields are 1-indexed)",
                    e.span, path))
            check_expr(e.dest, path + ("dest",), scope, funcs, False)
            check_expr(e.index, path + ("index",), scope, funcs, False)
            check_expr(e.value, path + ("value",), scope, funcs, False)
            return
        if isinstance(e, Letrec):
            check_group(e.group, path + ("letrec",), scope, funcs)
            inner = funcs | {f.name for f in e.group}
            check_expr(e.body, path + ("letrec_body",), scope, inner, False)
            return
        raise TypeError(f"unknown expression node {e!r}")

    def check_group(group: list[FunDef], path: Path, scope: set[str],
                    funcs: set[str]) -> None:
        names = funcs | {f.name for f in group}
        seen: set[str] = set()
        for f in group:
            if f.name in seen:
                diags.append(Diagnostic(
                    "Error", "DuplicateFunction",
                    f"function '{f.name}' defined twice in one group",
                    f.span, path))
            seen.add(f.name)
            if len(set(f.params)) != len(f.params):
                diags.append(Diagnostic(
                    "Error", "DuplicateParam",
                    f"duplicate parameter in '{f.name}'", f.span, path))
            if not f.params:
                diags.append(Diagnostic(
                    "Error", "NoParams",
                    f"function '{f.name}' has no parameters", f.span, path))
            # Local function bodies do not see enclosing value variables.
            check_expr(f.body, path + (f.name,), set(f.params), names, False)

    top: set[str] = set()
    for gi, group in enumerate(p.groups):
        for f in group:
            if f.name in top:
                diags.append(Diagnostic(
                    "Error", "DuplicateFunction",
                    f"function '{f.name}' defined twice at toplevel",
                    f.span, (f"group{gi}",)))
            top.add(f.name)
    for gi, group in enumerate(p.groups):
        check_group(group, (f"group{gi}",), set(), top)
    check_expr(p.main, ("main",), set(), top, False)
    return diags


def iter_fundefs(p: Program):
    """Yield every function definition, including nested letrec groups."""

    def from_expr(e: Expr):
        if isinstance(e, Letrec):
            for f in e.group:
                yield f
                yield from from_expr(f.body)
            yield from from_expr(e.body)
        elif isinstance(e, Let):
            yield from from_expr(e.bound)
            yield from from_expr(e.body)
        elif isinstance(e, Seq):
            yield from from_expr(e.first)
            yield from from_expr(e.second)
        elif isinstance(e, (Call, Constr)):
            for a in e.args:
                yield from from_expr(a)
        elif isinstance(e, Match):
            yield from from_expr(e.scrutinee)
            for _, b in e.clauses:
                yield from from_expr(b)
        elif isinstance(e, SetRef):
            yield from from_expr(e.dest)
            yield from from_expr(e.index)
            yield from from_expr(e.value)

    for group in p.groups:
        for f in group:
            yield f
            yield from from_expr(f.body)
    yield from from_expr(p.main)


def all_identifiers(e: Union[Expr, Program]) -> set[str]:
    """Every identifier occurring anywhere (used to seed fresh-name pools)."""

    out: set[str] = set()

    def pat(pt: Pattern):
        if isinstance(pt, PVar):
            out.add(pt.name)
        elif isinstance(pt, PConstr):
            out.add(pt.tag)
            for s in pt.subpatterns:
                pat(s)

    def go(x: Expr):
        if isinstance(x, Var):
            out.add(x.name)
        elif isinstance(x, Call):
            out.add(x.callee)
            for a in x.args:
                go(a)
        elif isinstance(x, Let):
            out.add(x.binder)
            go(x.bound)
            go(x.body)
        elif isinstance(x, Seq):
            go(x.first)
            go(x.second)
        elif isinstance(x, Constr):
            out.add(x.tag)
            for a in x.args:
                go(a)
        elif isinstance(x, Match):
            go(x.scrutinee)
            for pt, b in x.clauses:
                pat(pt)
                go(b)
        elif isinstance(x, SetRef):
            go(x.dest)
            go(x.index)
            go(x.value)
        elif isinstance(x, Letrec):
            for f in x.group:
                out.add(f.name)
                out.update(f.params)
                go(f.body)
            go(x.body)

    if isinstance(e, Program):
        for group in e.groups:
            for f in group:
                out.add(f.name)
                out.update(f.params)
                go(f.body)
        go(e.main)
    else:
        go(e)
    return out
