"""Destination-passing-style rewrite of marked functions.

For each marked function f this produces:
  * f_dps -- takes (dst, idx, ...params) and writes its result into the
    destination; every eligible call in a context hole becomes a regular
    tail call to a *_dps companion, every other hole becomes a
    destination write.  Nested constructor applications are compressed:
    constructor layers are delayed in a one-hole constructor context and
    materialized in a single write at reification time.
  * the rewritten direct f -- same interface as before; plain tail
    positions are untouched, and the switch into DPS happens only inside
    a constructor whose chosen argument holds an eligible call.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .analysis import (
    AnalysisError,
    MarkSet,
    ScopeEnv,
    check_tailcall_annotations,
    collect_marks,
    decompose_tmc,
    resolve_scope,
)
from .ir import (
    Call,
    Constr,
    Decomposition,
    DecompHole,
    Diagnostic,
    Expr,
    FunDef,
    Hole,
    Int,
    Let,
    Letrec,
    Match,
    Program,
    Seq,
    SetRef,
    Var,
    all_identifiers,
    well_formed,
)


class TransformError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        msgs = "; ".join(d.message for d in diagnostics)
        super().__init__(msgs)


@dataclass
class FreshNamer:
    used: set[str] = field(default_factory=set)
    counters: dict[str, int] = field(default_factory=dict)

    def reserve(self, names) -> None:
        self.used.update(names)

    def fresh(self, base: str) -> str:
        k = self.counters.get(base, 0)
        while f"{base}{k}" in self.used:
            k += 1
        self.counters[base] = k + 1
        name = f"{base}{k}"
        self.used.add(name)
        return name


@dataclass(frozen=True)
class Dest:
    """Symbolic destination: block variable plus index expression."""

    block: str
    index: Expr

    def setref(self, value: Expr) -> Expr:
        return SetRef(Var(self.block), self.index, value)


@dataclass(frozen=True)
class CLayer:
    tag: str
    left: tuple  # argument expressions left of the hole (atoms after binding)
    right: tuple

    @property
    def hole_index(self) -> int:
        return len(self.left) + 1


class CCtx:
    """Delayed one-hole nest of constructor applications (outermost first)."""

    def __init__(self, layers: tuple = ()):
        self.layers = layers

    def __bool__(self) -> bool:
        return bool(self.layers)

    def extend(self, layer: CLayer) -> "CCtx":
        return CCtx(self.layers + (layer,))

    def plug(self, e: Expr) -> Expr:
        for layer in reversed(self.layers):
            e = Constr(layer.tag, list(layer.left) + [e] + list(layer.right))
        return e


def _is_atomic(e: Expr) -> bool:
    return isinstance(e, (Var, Int))


class _Rewriter:
    def __init__(self, marks: MarkSet, compress: bool = True):
        self.marks = marks
        self.compress = compress

    # -- generic cleanup --------------------------------------------------

    def scrub(self, e: Expr, env: ScopeEnv) -> Expr:
        """Strip consumed attributes and expand nested letrec groups."""

        if isinstance(e, Call):
            return Call(e.callee, [self.scrub(a, env) for a in e.args],
                        frozenset(), span=e.span)
        if isinstance(e, Let):
            return Let(e.binder, self.scrub(e.bound, env),
                       self.scrub(e.body, env), span=e.span)
        if isinstance(e, Seq):
            return Seq(self.scrub(e.first, env), self.scrub(e.second, env),
                       span=e.span)
        if isinstance(e, Constr):
            return Constr(e.tag, [self.scrub(a, env) for a in e.args],
                          span=e.span)
        if isinstance(e, Match):
            return Match(self.scrub(e.scrutinee, env),
                         [(p, self.scrub(b, env)) for p, b in e.clauses],
                         span=e.span)
        if isinstance(e, SetRef):
            return SetRef(self.scrub(e.dest, env), self.scrub(e.index, env),
                          self.scrub(e.value, env), span=e.span)
        if isinstance(e, Letrec):
            return Letrec(self.rewrite_group(e.group, env),
                          self.scrub(e.body, env), span=e.span)
        return e

    # -- function-level transforms ----------------------------------------

    def rewrite_group(self, group: list[FunDef], outer: ScopeEnv) -> list[FunDef]:
        out: list[FunDef] = []
        for f in group:
            env = outer.enter(group, f)
            out.append(self.transform_direct(f, env))
            if f.name in self.marks.marked:
                out.append(self.transform_dps(f, env))
        return out

    def _decompose_body(self, f: FunDef, env: ScopeEnv) -> Decomposition:
        return decompose_tmc(f.body, self.marks, env,
                             frozenset(f.params))

    def transform_dps(self, f: FunDef, env: ScopeEnv) -> FunDef:
        d = self._decompose_body(f, env)
        namer = FreshNamer()
        namer.reserve(all_identifiers(f.body))
        namer.reserve(f.params)
        namer.reserve(self.marks.dps_name.values())
        dst = "dst" if "dst" not in namer.used else namer.fresh("dst")
        namer.used.add(dst)
        idx = "idx" if "idx" not in namer.used else namer.fresh("idx")
        namer.used.add(idx)
        body = self._dps_ctx(d.context, d, Dest(dst, Var(idx)), CCtx(), env,
                             namer, frozenset(f.params))
        check_single_completion(body, self.marks)
        return FunDef(self.marks.dps_name[f.name], [dst, idx] + list(f.params),
                      body, frozenset(), span=f.span)

    def transform_direct(self, f: FunDef, env: ScopeEnv) -> FunDef:
        d = self._decompose_body(f, env)
        namer = FreshNamer()
        namer.reserve(all_identifiers(f.body))
        namer.reserve(f.params)
        namer.reserve(self.marks.dps_name.values())
        body = self._direct_ctx(d.context, d, env, namer, frozenset(f.params))
        return FunDef(f.name, list(f.params), body, frozenset(), span=f.span)

    # -- DPS context rewrite ----------------------------------------------

    def _rewritable_call(self, e: Expr, env: ScopeEnv, scope: frozenset):
        if (isinstance(e, Call) and e.callee in self.marks.marked
                and e.callee not in scope and env.eligible(e.callee)):
            return e
        return None

    def _reify(self, dest: Dest, cctx: CCtx, namer: FreshNamer, env: ScopeEnv,
               build_rest) -> Expr:
        """Materialize the delayed context: allocate the innermost layer
        with a Hole, write the whole nest into `dest`, continue with the
        new hole as destination."""

        inner = cctx.layers[-1]
        outer = CCtx(cctx.layers[:-1])
        d2 = namer.fresh("dst")
        alloc = Constr(inner.tag,
                       list(inner.left) + [Hole()] + list(inner.right))
        write = dest.setref(outer.plug(Var(d2)))
        rest = build_rest(Dest(d2, Int(inner.hole_index)))
        return Let(d2, alloc, Seq(write, rest))

    def _dps_ctx(self, node: Expr, d: Decomposition, dest: Dest, cctx: CCtx,
                 env: ScopeEnv, namer: FreshNamer, scope: frozenset) -> Expr:
        if isinstance(node, DecompHole):
            expr, _kind = d.holes[node.index]
            call = self._rewritable_call(expr, env, scope)
            if call is not None:
                if cctx:
                    return self._reify(
                        dest, cctx, namer, env,
                        lambda dst2: self._dps_call(call, dst2, env))
                return self._dps_call(call, dest, env)
            return dest.setref(cctx.plug(self.scrub(expr, env)))
        if isinstance(node, Let):
            return Let(node.binder, self.scrub(node.bound, env),
                       self._dps_ctx(node.body, d, dest, cctx, env, namer,
                                     scope | {node.binder}),
                       span=node.span)
        if isinstance(node, Seq):
            return Seq(self.scrub(node.first, env),
                       self._dps_ctx(node.second, d, dest, cctx, env, namer,
                                     scope),
                       span=node.span)
        if isinstance(node, Letrec):
            return Letrec(self.rewrite_group(node.group, env),
                          self._dps_ctx(node.body, d, dest, cctx, env, namer,
                                        scope),
                          span=node.span)
        if isinstance(node, Match):
            if cctx and len(node.clauses) >= 2:
                # A multi-branch match would duplicate the delayed context.
                return self._reify(
                    dest, cctx, namer, env,
                    lambda dst2: self._dps_match(node, d, dst2, CCtx(), env,
                                                 namer, scope))
            return self._dps_match(node, d, dest, cctx, env, namer, scope)
        if isinstance(node, Constr):
            return self._dps_constr(node, d, dest, cctx, env, namer, scope)
        raise AssertionError(f"unexpected context node {node!r}")

    def _dps_match(self, node: Match, d: Decomposition, dest: Dest, cctx: CCtx,
                   env: ScopeEnv, namer: FreshNamer, scope: frozenset) -> Expr:
        from .ir import pattern_vars

        return Match(self.scrub(node.scrutinee, env),
                     [(p, self._dps_ctx(b, d, dest, cctx, env, namer,
                                        scope | set(pattern_vars(p))))
                      for p, b in node.clauses],
                     span=node.span)

    def _dps_constr(self, node: Constr, d: Decomposition, dest: Dest,
                    cctx: CCtx, env: ScopeEnv, namer: FreshNamer,
                    scope: frozenset) -> Expr:
        j = next(i for i, a in enumerate(node.args) if _contains_hole(a))
        left_exprs = [self.scrub(a, env) for a in node.args[:j]]
        right_exprs = [self.scrub(a, env) for a in node.args[j + 1:]]
        if not self.compress:
            # Naive constructor rule: allocate and write immediately.
            d2 = namer.fresh("dst")
            alloc = Constr(node.tag, left_exprs + [Hole()] + right_exprs)
            inner = self._dps_ctx(node.args[j], d, Dest(d2, Int(j + 1)),
                                  CCtx(), env, namer, scope)
            return Let(d2, alloc, Seq(dest.setref(Var(d2)), inner))
        binds: list[tuple[str, Expr]] = []

        def atom(e: Expr) -> Expr:
            if _is_atomic(e):
                return e
            v = namer.fresh("y")
            binds.append((v, e))
            return Var(v)

        left_atoms = tuple(atom(e) for e in left_exprs)
        right_atoms = tuple(atom(e) for e in right_exprs)
        layer = CLayer(node.tag, left_atoms, right_atoms)
        out = self._dps_ctx(node.args[j], d, dest, cctx.extend(layer), env,
                            namer, scope)
        for v, e in reversed(binds):
            out = Let(v, e, out)
        return out

    def _dps_call(self, call: Call, dest: Dest, env: ScopeEnv) -> Expr:
        return Call(self.marks.dps_name[call.callee],
                    [Var(dest.block), dest.index]
                    + [self.scrub(a, env) for a in call.args],
                    frozenset(), span=call.span)

    # -- direct context rewrite (the constructor rule switches to DPS) ----

    def _direct_ctx(self, node: Expr, d: Decomposition, env: ScopeEnv,
                    namer: FreshNamer, scope: frozenset) -> Expr:
        from .ir import pattern_vars

        if isinstance(node, DecompHole):
            expr, _kind = d.holes[node.index]
            return self.scrub(expr, env)
        if isinstance(node, Let):
            return Let(node.binder, self.scrub(node.bound, env),
                       self._direct_ctx(node.body, d, env, namer,
                                        scope | {node.binder}), span=node.span)
        if isinstance(node, Seq):
            return Seq(self.scrub(node.first, env),
                       self._direct_ctx(node.second, d, env, namer, scope),
                       span=node.span)
        if isinstance(node, Letrec):
            return Letrec(self.rewrite_group(node.group, env),
                          self._direct_ctx(node.body, d, env, namer, scope),
                          span=node.span)
        if isinstance(node, Match):
            return Match(self.scrub(node.scrutinee, env),
                         [(p, self._direct_ctx(b, d, env, namer,
                                               scope | set(pattern_vars(p))))
                          for p, b in node.clauses],
                         span=node.span)
        if isinstance(node, Constr):
            j = next(i for i, a in enumerate(node.args) if _contains_hole(a))
            left = [self.scrub(a, env) for a in node.args[:j]]
            right = [self.scrub(a, env) for a in node.args[j + 1:]]
            dvar = namer.fresh("dst")
            alloc = Constr(node.tag, left + [Hole()] + right, span=node.span)
            inner = self._dps_ctx(node.args[j], d, Dest(dvar, Int(j + 1)),
                                  CCtx(), env, namer, scope)
            return Let(dvar, alloc, Seq(inner, Var(dvar)))
        raise AssertionError(f"unexpected context node {node!r}")


def _contains_hole(e: Expr) -> bool:
    if isinstance(e, DecompHole):
        return True
    if isinstance(e, Let):
        return _contains_hole(e.body)
    if isinstance(e, Seq):
        return _contains_hole(e.second)
    if isinstance(e, Match):
        return any(_contains_hole(b) for _, b in e.clauses)
    if isinstance(e, Constr):
        return any(_contains_hole(a) for a in e.args)
    if isinstance(e, Letrec):
        return _contains_hole(e.body)
    return False


def check_single_completion(body: Expr, marks: MarkSet) -> None:
    """Every control path of a DPS body must end in exactly one
    destination write or one call to a DPS companion."""

    dps_names = set(marks.dps_name.values())

    def tail_leaf_ok(e: Expr) -> bool:
        if isinstance(e, SetRef):
            return True
        if isinstance(e, Call):
            return e.callee in dps_names
        if isinstance(e, Let):
            return tail_leaf_ok(e.body)
        if isinstance(e, Seq):
            return tail_leaf_ok(e.second)
        if isinstance(e, Match):
            return all(tail_leaf_ok(b) for _, b in e.clauses)
        if isinstance(e, Letrec):
            return tail_leaf_ok(e.body)
        return False

    if not tail_leaf_ok(body):
        raise AssertionError(
            "internal error: a control path of a DPS body does not end in a "
            "destination write or DPS call")


def transform_dps(f: FunDef, marks: MarkSet, env: ScopeEnv,
                  compress: bool = True) -> FunDef:
    return _Rewriter(marks, compress).transform_dps(f, env)


def transform_direct(f: FunDef, marks: MarkSet, env: ScopeEnv,
                     compress: bool = True) -> FunDef:
    return _Rewriter(marks, compress).transform_direct(f, env)


def analyze_program(p: Program) -> tuple[MarkSet, list[Diagnostic]]:
    """Static checks shared by the CLI and transform_program."""

    diags = well_formed(p)
    marks = collect_marks(p)
    verdict = resolve_scope(p, marks)
    diags.extend(verdict.warnings)
    diags.extend(check_tailcall_annotations(p, marks))
    return marks, diags


def transform_program(p: Program, compress: bool = True) -> Program:
    """Whole-program rewrite; raises TransformError on any Error diagnostic."""

    marks, diags = analyze_program(p)
    errors = [d for d in diags if d.severity == "Error"]
    if errors:
        raise TransformError(errors)
    rw = _Rewriter(marks, compress)
    root = ScopeEnv()
    try:
        groups = [rw.rewrite_group(g, root) for g in p.groups]
        main = rw.scrub(p.main, root)
    except AnalysisError as exc:
        raise TransformError([exc.diagnostic]) from exc
    return Program(groups, main)
