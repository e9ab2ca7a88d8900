"""TMC candidate analysis.

Finds marked functions, resolves which call sites are rewrite-eligible
(minimal scope at toplevel, maximal inside marked functions), and computes
the tail-modulo-cons context decomposition of a body -- or reports the
ambiguity when two constructor arguments compete for the single sub-context.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ir import (
    BUILTINS,
    PLAIN_TAIL,
    STRICT_MOD_CONS,
    TAIL_MOD_CONS,
    TAILCALL,
    Call,
    Constr,
    Decomposition,
    DecompHole,
    Diagnostic,
    Expr,
    FunDef,
    Let,
    Letrec,
    Match,
    Path,
    Program,
    Seq,
    SetRef,
    all_identifiers,
    iter_fundefs,
)


class AnalysisError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        self.diagnostic = diagnostic
        super().__init__(diagnostic.message)


@dataclass
class MarkSet:
    marked: set[str]
    dps_name: dict[str, str]


def collect_marks(p: Program) -> MarkSet:
    """Assign a fresh DPS companion name to every marked function."""

    used = set(all_identifiers(p)) | set(BUILTINS)
    marked: set[str] = set()
    dps_name: dict[str, str] = {}
    for f in iter_fundefs(p):
        if TAIL_MOD_CONS not in f.attrs or f.name in dps_name:
            continue
        marked.add(f.name)
        base = f.name + "_dps"
        cand = base
        k = 2
        while cand in used:
            cand = f"{base}{k}"
            k += 1
        used.add(cand)
        dps_name[f.name] = cand
    return MarkSet(marked, dps_name)


@dataclass
class ScopeEnv:
    """Lexical context of an expression: the chain of enclosing functions.

    groups: set of function names per enclosing letrec group (innermost last).
    any_marked: some enclosing function carries the TMC mark.
    """

    group_names: list[frozenset[str]] = field(default_factory=list)
    any_marked: bool = False

    def enter(self, group: list[FunDef], fn: FunDef) -> "ScopeEnv":
        return ScopeEnv(self.group_names + [frozenset(g.name for g in group)],
                        self.any_marked or TAIL_MOD_CONS in fn.attrs)

    def eligible(self, callee: str) -> bool:
        if self.any_marked:
            return True
        return any(callee in names for names in self.group_names)


@dataclass
class ScopeVerdict:
    """Per call-site eligibility for calls to marked functions."""

    eligible_paths: dict[Path, bool] = field(default_factory=dict)
    warnings: list[Diagnostic] = field(default_factory=list)


def _is_direct_call(e: Expr, marks: MarkSet, env: ScopeEnv,
                    value_scope: set[str]) -> bool:
    """Call to a marked function by its function name (not through a binder)."""

    return (isinstance(e, Call)
            and e.callee in marks.marked
            and e.callee not in value_scope
            and env.eligible(e.callee))


def has_candidate(e: Expr, marks: MarkSet, env: ScopeEnv,
                  value_scope: frozenset[str] = frozenset()) -> bool:
    """True iff some tail-modulo-cons position of `e` holds an eligible
    marked call."""

    if _is_direct_call(e, marks, env, value_scope):
        return True
    if isinstance(e, Let):
        return has_candidate(e.body, marks, env, value_scope | {e.binder})
    if isinstance(e, Seq):
        return has_candidate(e.second, marks, env, value_scope)
    if isinstance(e, Match):
        return any(
            has_candidate(b, marks, env,
                          value_scope | set(_pat_vars(pt)))
            for pt, b in e.clauses)
    if isinstance(e, Constr):
        return any(has_candidate(a, marks, env, value_scope) for a in e.args)
    if isinstance(e, Letrec):
        return has_candidate(e.body, marks, env, value_scope)
    return False


def _pat_vars(pt):
    from .ir import pattern_vars

    return pattern_vars(pt)


def _has_annotated_candidate(e: Expr, marks: MarkSet, env: ScopeEnv,
                             value_scope: frozenset[str]) -> bool:
    if _is_direct_call(e, marks, env, value_scope) and TAILCALL in e.attrs:
        return True
    if isinstance(e, Let):
        return _has_annotated_candidate(e.body, marks, env, value_scope | {e.binder})
    if isinstance(e, Seq):
        return _has_annotated_candidate(e.second, marks, env, value_scope)
    if isinstance(e, Match):
        return any(_has_annotated_candidate(b, marks, env,
                                            value_scope | set(_pat_vars(pt)))
                   for pt, b in e.clauses)
    if isinstance(e, Constr):
        return any(_has_annotated_candidate(a, marks, env, value_scope)
                   for a in e.args)
    if isinstance(e, Letrec):
        return _has_annotated_candidate(e.body, marks, env, value_scope)
    return False


def _candidate_call_paths(e: Expr, marks: MarkSet, env: ScopeEnv,
                          value_scope: frozenset[str], path: Path,
                          out: list[Path]) -> None:
    if _is_direct_call(e, marks, env, value_scope):
        out.append(path)
        return
    if isinstance(e, Let):
        _candidate_call_paths(e.body, marks, env, value_scope | {e.binder},
                              path + ("body",), out)
    elif isinstance(e, Seq):
        _candidate_call_paths(e.second, marks, env, value_scope,
                              path + ("second",), out)
    elif isinstance(e, Match):
        for j, (pt, b) in enumerate(e.clauses):
            _candidate_call_paths(b, marks, env, value_scope | set(_pat_vars(pt)),
                                  path + (f"clause{j}",), out)
    elif isinstance(e, Constr):
        for i, a in enumerate(e.args):
            _candidate_call_paths(a, marks, env, value_scope,
                                  path + (f"arg{i}",), out)
    elif isinstance(e, Letrec):
        _candidate_call_paths(e.body, marks, env, value_scope,
                              path + ("letrec_body",), out)


def decompose_tmc(e: Expr, marks: MarkSet, env: ScopeEnv,
                  value_scope: frozenset[str] = frozenset(),
                  path: Path = ()) -> Decomposition:
    """Compute the TMC context decomposition of `e`.

    Raises AnalysisError(AmbiguousTmc) when two constructor arguments
    contain candidates and annotations do not single one out.
    """

    holes: list[tuple[Expr, str]] = []
    chosen: list[Path] = []

    def hole(expr: Expr, under_constr: bool) -> DecompHole:
        holes.append((expr, STRICT_MOD_CONS if under_constr else PLAIN_TAIL))
        return DecompHole(len(holes) - 1)

    def go(x: Expr, scope: frozenset[str], p: Path, under: bool) -> Expr:
        if not has_candidate(x, marks, env, scope):
            return hole(x, under)
        if _is_direct_call(x, marks, env, scope):
            return hole(x, under)
        if isinstance(x, Let):
            return Let(x.binder, x.bound,
                       go(x.body, scope | {x.binder}, p + ("body",), under),
                       span=x.span)
        if isinstance(x, Seq):
            return Seq(x.first, go(x.second, scope, p + ("second",), under),
                       span=x.span)
        if isinstance(x, Match):
            clauses = []
            for j, (pt, b) in enumerate(x.clauses):
                clauses.append((pt, go(b, scope | set(_pat_vars(pt)),
                                       p + (f"clause{j}",), under)))
            return Match(x.scrutinee, clauses, span=x.span)
        if isinstance(x, Letrec):
            return Letrec(x.group, go(x.body, scope, p + ("letrec_body",), under),
                          span=x.span)
        if isinstance(x, Constr):
            cands = [i for i, a in enumerate(x.args)
                     if has_candidate(a, marks, env, scope)]
            if len(cands) > 1:
                annotated = [i for i in cands
                             if _has_annotated_candidate(x.args[i], marks, env, scope)]
                if len(annotated) == 1:
                    j = annotated[0]
                else:
                    cpaths: list[Path] = []
                    for i in cands:
                        _candidate_call_paths(x.args[i], marks, env, scope,
                                              p + (f"arg{i}",), cpaths)
                    raise AnalysisError(Diagnostic(
                        "Error", "AmbiguousTmc",
                        f"{len(cands)} constructor arguments contain TMC "
                        "candidates; add a (@ tailcall) annotation to pick one",
                        x.span, p, candidate_paths=cpaths))
            else:
                j = cands[0]
            chosen.append(p + (f"arg{j}",))
            args = list(x.args)
            args[j] = go(x.args[j], scope, p + (f"arg{j}",), True)
            return Constr(x.tag, args, span=x.span)
        # has_candidate returned True for a node with no tail sub-positions
        raise AssertionError(f"unreachable decomposition case: {x!r}")

    ctx = go(e, value_scope, path, False)
    return Decomposition(ctx, holes, chosen)


def resolve_scope(p: Program, marks: MarkSet) -> ScopeVerdict:
    """Record eligibility of every call site that targets a marked function."""

    verdict = ScopeVerdict()

    def walk_expr(e: Expr, env: ScopeEnv, scope: set[str], path: Path):
        if isinstance(e, Call):
            if e.callee in marks.marked and e.callee not in scope:
                verdict.eligible_paths[path] = env.eligible(e.callee)
            for i, a in enumerate(e.args):
                walk_expr(a, env, scope, path + (f"arg{i}",))
        elif isinstance(e, Let):
            walk_expr(e.bound, env, scope, path + ("bound",))
            walk_expr(e.body, env, scope | {e.binder}, path + ("body",))
        elif isinstance(e, Seq):
            walk_expr(e.first, env, scope, path + ("first",))
            walk_expr(e.second, env, scope, path + ("second",))
        elif isinstance(e, Constr):
            for i, a in enumerate(e.args):
                walk_expr(a, env, scope, path + (f"arg{i}",))
        elif isinstance(e, Match):
            walk_expr(e.scrutinee, env, scope, path + ("scrutinee",))
            for j, (pt, b) in enumerate(e.clauses):
                walk_expr(b, env, scope | set(_pat_vars(pt)),
                          path + (f"clause{j}",))
        elif isinstance(e, SetRef):
            walk_expr(e.dest, env, scope, path + ("dest",))
            walk_expr(e.index, env, scope, path + ("index",))
            walk_expr(e.value, env, scope, path + ("value",))
        elif isinstance(e, Letrec):
            for f in e.group:
                walk_expr(f.body, env.enter(e.group, f), set(f.params),
                          path + (f.name,))
            walk_expr(e.body, env, scope, path + ("letrec_body",))

    root = ScopeEnv()
    for gi, group in enumerate(p.groups):
        for f in group:
            fenv = root.enter(group, f)
            walk_expr(f.body, fenv, set(f.params), (f"group{gi}", f.name))
            if TAIL_MOD_CONS in f.attrs:
                d_env = fenv
                body_has_strict = _has_strict_candidate(f.body, marks, d_env)
                if not body_has_strict:
                    verdict.warnings.append(Diagnostic(
                        "Warning", "UselessMark",
                        f"'{f.name}' has no strictly-modulo-cons candidate; "
                        "its DPS version is trivial",
                        f.span, (f"group{gi}", f.name)))
    walk_expr(p.main, root, set(), ("main",))
    return verdict


def _has_strict_candidate(e: Expr, marks: MarkSet, env: ScopeEnv,
                          scope: frozenset[str] = frozenset(),
                          under: bool = False) -> bool:
    if under and _is_direct_call(e, marks, env, scope):
        return True
    if isinstance(e, Let):
        return _has_strict_candidate(e.body, marks, env, scope | {e.binder}, under)
    if isinstance(e, Seq):
        return _has_strict_candidate(e.second, marks, env, scope, under)
    if isinstance(e, Match):
        return any(_has_strict_candidate(b, marks, env,
                                         scope | set(_pat_vars(pt)), under)
                   for pt, b in e.clauses)
    if isinstance(e, Constr):
        return any(_has_strict_candidate(a, marks, env, scope, True)
                   for a in e.args)
    if isinstance(e, Letrec):
        return _has_strict_candidate(e.body, marks, env, scope, under)
    return False


def check_tailcall_annotations(p: Program, marks: MarkSet) -> list[Diagnostic]:
    """Flag (@ tailcall) annotations that cannot land in a rewritten position.

    Silent when the annotated call already sits in a plain tail position;
    Error when the call is in an eligible region but not rewritable;
    Warning in not-eligible regions.
    """

    diags: list[Diagnostic] = []

    def walk(e: Expr, env: ScopeEnv, scope: set[str], tail: bool,
             under_constr: bool, path: Path):
        if isinstance(e, Call):
            for i, a in enumerate(e.args):
                walk(a, env, scope, False, False, path + (f"arg{i}",))
            if TAILCALL in e.attrs:
                if tail and not under_constr:
                    return  # already a plain tail call: the annotation holds
                ok = (tail and _is_direct_call(e, marks, env, scope))
                if not ok:
                    eligible_region = (e.callee in marks.marked
                                       and e.callee not in scope
                                       and env.eligible(e.callee))
                    sev = "Error" if eligible_region or env.any_marked else "Warning"
                    diags.append(Diagnostic(
                        sev, "TailcallNotSatisfiable",
                        f"(@ tailcall) on call to '{e.callee}' cannot become "
                        "a tail call here",
                        e.span, path))
        elif isinstance(e, Let):
            walk(e.bound, env, scope, False, False, path + ("bound",))
            walk(e.body, env, scope | {e.binder}, tail, under_constr,
                 path + ("body",))
        elif isinstance(e, Seq):
            walk(e.first, env, scope, False, False, path + ("first",))
            walk(e.second, env, scope, tail, under_constr, path + ("second",))
        elif isinstance(e, Constr):
            for i, a in enumerate(e.args):
                walk(a, env, scope, tail, True, path + (f"arg{i}",))
        elif isinstance(e, Match):
            walk(e.scrutinee, env, scope, False, False, path + ("scrutinee",))
            for j, (pt, b) in enumerate(e.clauses):
                walk(b, env, scope | set(_pat_vars(pt)), tail, under_constr,
                     path + (f"clause{j}",))
        elif isinstance(e, SetRef):
            walk(e.dest, env, scope, False, False, path + ("dest",))
            walk(e.index, env, scope, False, False, path + ("index",))
            walk(e.value, env, scope, False, False, path + ("value",))
        elif isinstance(e, Letrec):
            for f in e.group:
                walk(f.body, env.enter(e.group, f), set(f.params), True, False,
                     path + (f.name,))
            walk(e.body, env, scope, tail, under_constr, path + ("letrec_body",))

    root = ScopeEnv()
    for gi, group in enumerate(p.groups):
        for f in group:
            walk(f.body, root.enter(group, f), set(f.params), True, False,
                 (f"group{gi}", f.name))
    walk(p.main, root, set(), False, False, ("main",))
    return diags
