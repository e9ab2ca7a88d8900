"""Instrumented tree-walking evaluator.

Call-by-value, left-to-right, with proper tail calls (frame reuse),
a mutable-block store with Hole values and single-write initialization,
and metrics: stack depth, allocations, destination writes, effect trace,
step count.  This is the oracle for every equivalence and stack claim.
"""

from __future__ import annotations

import sys
import threading
from dataclasses import dataclass, field
from typing import Optional, Union

from .ir import (
    BUILTINS,
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
    Var,
)

DEFAULT_MAX_STACK = 1_000_000
DEFAULT_MAX_STEPS = 10**9


class TmcRuntimeError(Exception):
    """Evaluation failure; `code` is a stable machine-readable name."""

    def __init__(self, code: str, message: str = ""):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)


# ---------------------------------------------------------------------------
# Values and store
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VInt:
    n: int


@dataclass(frozen=True)
class VBlock:
    addr: int


@dataclass(frozen=True)
class VFun:
    name: str


class _VHole:
    def __repr__(self):
        return "VHole"


VHOLE = _VHole()

Value = Union[VInt, VBlock, VFun, _VHole]


class Block:
    __slots__ = ("tag", "fields")

    def __init__(self, tag: str, fields: list):
        self.tag = tag
        self.fields = fields  # 0-indexed storage; API is 1-indexed


@dataclass
class Metrics:
    max_stack_depth: int = 0
    allocations: int = 0
    dest_writes: int = 0
    effect_trace: list[str] = field(default_factory=list)
    steps: int = 0

    def render(self) -> str:
        return "\n".join([
            f"max_stack_depth={self.max_stack_depth}",
            f"allocations={self.allocations}",
            f"dest_writes={self.dest_writes}",
            f"effects={len(self.effect_trace)}",
            f"steps={self.steps}",
        ])


class _TailInvoke:
    __slots__ = ("fn", "fenv", "args")

    def __init__(self, fn, fenv, args):
        self.fn = fn
        self.fenv = fenv
        self.args = args


# ---------------------------------------------------------------------------
# Input literals: store-independent value descriptions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LInt:
    n: int


@dataclass(frozen=True)
class LFun:
    name: str


@dataclass(frozen=True)
class LBlock:
    tag: str
    args: tuple

    def __repr__(self):
        if not self.args:
            return self.tag
        return "(" + " ".join([self.tag] + [repr(a) for a in self.args]) + ")"


Lit = Union[LInt, LFun, LBlock]


def list_lit(items) -> LBlock:
    out = LBlock("Nil", ())
    for x in reversed(list(items)):
        head = x if isinstance(x, (LInt, LFun, LBlock)) else LInt(x)
        out = LBlock("Cons", (head, out))
    return out


class Interp:
    """One evaluation owns one store; not shared across runs."""

    def __init__(self, program: Program, max_stack: int = DEFAULT_MAX_STACK,
                 max_steps: int = DEFAULT_MAX_STEPS):
        self.program = program
        self.max_stack = max_stack
        self.max_steps = max_steps
        self.blocks: dict[int, Block] = {}
        self.next_addr = 0
        self.metrics = Metrics()
        self._count_allocs = True
        fenv: dict[str, tuple] = {}
        for group in program.groups:
            for f in group:
                fenv[f.name] = (f, fenv)
        self.fenv = fenv
        # Shared result blocks for setref/leq/eq; only Constr expressions
        # and tuple-returning builtins count as allocations.
        self._count_allocs = False
        self._unit = self.alloc("Tuple", [])
        self._true = self.alloc("True", [])
        self._false = self.alloc("False", [])
        self._count_allocs = True

    # -- store ------------------------------------------------------------

    def alloc(self, tag: str, values: list) -> VBlock:
        addr = self.next_addr
        self.next_addr += 1
        self.blocks[addr] = Block(tag, values)
        if self._count_allocs:
            self.metrics.allocations += 1
        return VBlock(addr)

    def block(self, v: VBlock) -> Block:
        return self.blocks[v.addr]

    def set_field(self, dest: VBlock, index: int, v: Value) -> None:
        blk = self.blocks[dest.addr]
        if index < 1 or index > len(blk.fields):
            raise TmcRuntimeError(
                "IndexOutOfRange",
                f"field {index} of {blk.tag}/{len(blk.fields)}")
        if blk.fields[index - 1] is not VHOLE:
            raise TmcRuntimeError(
                "NonHoleOverwrite",
                f"field {index} of {blk.tag} block already initialized")
        blk.fields[index - 1] = v
        self.metrics.dest_writes += 1

    def instantiate(self, lit: Lit) -> Value:
        """Build an input value without counting its allocations."""

        prev = self._count_allocs
        self._count_allocs = False
        try:
            return self._inst(lit)
        finally:
            self._count_allocs = prev

    def _inst(self, lit: Lit) -> Value:
        if isinstance(lit, LInt):
            return VInt(lit.n)
        if isinstance(lit, LFun):
            return VFun(lit.name)
        # Iterative to handle long lists.
        root: list = [None]
        stack = [(lit, root, 0)]
        while stack:
            node, out, i = stack.pop()
            if isinstance(node, LInt):
                out[i] = VInt(node.n)
            elif isinstance(node, LFun):
                out[i] = VFun(node.name)
            else:
                fields = [None] * len(node.args)
                out[i] = self.alloc(node.tag, fields)
                fields_list = self.blocks[out[i].addr].fields
                for j, a in enumerate(node.args):
                    stack.append((a, fields_list, j))
        return root[0]

    # -- evaluation -------------------------------------------------------

    def call(self, entry: str, args: list, *, check_holes: bool = True) -> Value:
        """Evaluate entry(args); args may be Values or input literals."""

        vals = [a if isinstance(a, (VInt, VBlock, VFun, _VHole))
                else self.instantiate(a) for a in args]
        if entry == "main" and "main" not in self.fenv:
            if vals:
                raise TmcRuntimeError(
                    "ArityMismatch", "main takes 0 arguments, got "
                    f"{len(vals)}")
            result = self._eval(self.program.main, {}, self.fenv, 1, False)
        elif entry in self.fenv:
            fn, fenv = self.fenv[entry]
            if len(fn.params) != len(vals):
                raise TmcRuntimeError(
                    "ArityMismatch",
                    f"{entry} takes {len(fn.params)} arguments, got {len(vals)}")
            result = self._call_function(fn, fenv, vals, 1)
        elif entry in BUILTINS:
            result = self._builtin(entry, vals)
        else:
            raise TmcRuntimeError("UnboundName", f"no function '{entry}'")
        if check_holes:
            self.assert_no_holes(result)
        return result

    def _call_function(self, fn: FunDef, fenv, args: list, depth: int) -> Value:
        while True:
            if depth > self.metrics.max_stack_depth:
                self.metrics.max_stack_depth = depth
            if depth > self.max_stack:
                raise TmcRuntimeError("StackLimit", f"depth {depth}")
            env = dict(zip(fn.params, args))
            r = self._eval(fn.body, env, fenv, depth, True)
            if type(r) is _TailInvoke:
                fn, fenv, args = r.fn, r.fenv, r.args
                continue
            return r

    def _eval(self, e: Expr, env: dict, fenv: dict, depth: int, tail: bool):
        m = self.metrics
        m.steps += 1
        if m.steps > self.max_steps:
            raise TmcRuntimeError("StepLimit", f"{m.steps} steps")
        t = type(e)
        if t is Var:
            try:
                return env[e.name]
            except KeyError:
                pass
            if e.name in fenv or e.name in BUILTINS:
                return VFun(e.name)
            raise TmcRuntimeError("UnboundName", e.name)
        if t is Int:
            return VInt(e.n)
        if t is Call:
            vals = [self._unwrap(self._eval(a, env, fenv, depth, False))
                    for a in e.args]
            name = e.callee
            target = env.get(name)
            if target is not None:
                if not isinstance(target, VFun):
                    raise TmcRuntimeError("NotAFunction", name)
                name = target.name
            ent = fenv.get(name)
            if ent is not None:
                fn, def_fenv = ent
                if len(fn.params) != len(vals):
                    raise TmcRuntimeError(
                        "ArityMismatch",
                        f"{name} takes {len(fn.params)} arguments, got {len(vals)}")
                if tail:
                    return _TailInvoke(fn, def_fenv, vals)
                return self._call_function(fn, def_fenv, vals, depth + 1)
            if name in BUILTINS:
                return self._builtin(name, vals)
            raise TmcRuntimeError("UnboundName", name)
        if t is Let:
            v = self._unwrap(self._eval(e.bound, env, fenv, depth, False))
            env2 = dict(env)
            env2[e.binder] = v
            return self._eval(e.body, env2, fenv, depth, tail)
        if t is Seq:
            self._unwrap(self._eval(e.first, env, fenv, depth, False))
            return self._eval(e.second, env, fenv, depth, tail)
        if t is Constr:
            vals = [self._unwrap(self._eval(a, env, fenv, depth, False))
                    for a in e.args]
            return self.alloc(e.tag, vals)
        if t is Match:
            scrut = self._unwrap(self._eval(e.scrutinee, env, fenv, depth, False))
            for pat, body in e.clauses:
                binds: dict = {}
                if self._match(pat, scrut, binds):
                    if binds:
                        env2 = dict(env)
                        env2.update(binds)
                    else:
                        env2 = env
                    return self._eval(body, env2, fenv, depth, tail)
            raise TmcRuntimeError("MatchFailure", f"no clause matched {self.render(scrut)}")
        if t is SetRef:
            dest = self._unwrap(self._eval(e.dest, env, fenv, depth, False))
            idx = self._unwrap(self._eval(e.index, env, fenv, depth, False))
            val = self._unwrap(self._eval(e.value, env, fenv, depth, False))
            if not isinstance(dest, VBlock):
                raise TmcRuntimeError("TypeError", "setref destination is not a block")
            if not isinstance(idx, VInt):
                raise TmcRuntimeError("TypeError", "setref index is not an integer")
            self.set_field(dest, idx.n, val)
            return self._unit
        if t is Hole:
            return VHOLE
        if t is Letrec:
            fenv2 = dict(fenv)
            for f in e.group:
                fenv2[f.name] = (f, fenv2)
            return self._eval(e.body, env, fenv2, depth, tail)
        raise TypeError(f"cannot evaluate {e!r}")

    def _unwrap(self, r):
        # Tail signals never escape: _eval only produces them with tail=True.
        assert type(r) is not _TailInvoke
        return r

    def _match(self, pat: Pattern, v: Value, binds: dict) -> bool:
        t = type(pat)
        if t is PVar:
            binds[pat.name] = v
            return True
        if t is PWild:
            return True
        if v is VHOLE:
            raise TmcRuntimeError("HoleInspected", "pattern match on a hole")
        if t is PInt:
            return isinstance(v, VInt) and v.n == pat.n
        if t is PConstr:
            if not isinstance(v, VBlock):
                return False
            blk = self.blocks[v.addr]
            if blk.tag != pat.tag or len(blk.fields) != len(pat.subpatterns):
                return False
            for sp, fv in zip(pat.subpatterns, blk.fields):
                if not self._match(sp, fv, binds):
                    return False
            return True
        raise TypeError(f"unknown pattern {pat!r}")

    def _builtin(self, name: str, vals: list) -> Value:
        def ints():
            for v in vals:
                if not isinstance(v, VInt):
                    raise TmcRuntimeError("TypeError",
                                          f"builtin '{name}' expects integers")
            return [v.n for v in vals]

        if name == "add":
            a, b = ints()
            return VInt(a + b)
        if name == "sub":
            a, b = ints()
            return VInt(a - b)
        if name == "add1":
            (a,) = ints()
            return VInt(a + 1)
        if name == "leq":
            a, b = ints()
            return self._true if a <= b else self._false
        if name == "eq":
            a, b = ints()
            return self._true if a == b else self._false
        if name == "print":
            (v,) = vals
            self.metrics.effect_trace.append(self.render(v))
            return self.alloc("Tuple", [])
        raise TmcRuntimeError("UnboundName", name)

    # -- inspection -------------------------------------------------------

    def assert_no_holes(self, v: Value) -> None:
        """Depth-first reachability check; raises HoleEscape with a path."""

        stack = [(v, ())]
        seen: set[int] = set()
        while stack:
            cur, path = stack.pop()
            if cur is VHOLE:
                raise TmcRuntimeError(
                    "HoleEscape",
                    "hole reachable at field path " +
                    (".".join(str(i) for i in path) or "<root>"))
            if isinstance(cur, VBlock):
                if cur.addr in seen:
                    continue
                seen.add(cur.addr)
                blk = self.blocks[cur.addr]
                for i, fv in enumerate(blk.fields):
                    stack.append((fv, path + (i + 1,)))

    def struct_eq(self, v1: Value, v2: Value) -> bool:
        """Structural equality by tag/arity/fields; cycle-safe."""

        stack = [(v1, v2)]
        seen: set[tuple[int, int]] = set()
        while stack:
            a, b = stack.pop()
            if isinstance(a, VInt) or isinstance(b, VInt):
                if not (isinstance(a, VInt) and isinstance(b, VInt) and a.n == b.n):
                    return False
                continue
            if isinstance(a, VFun) or isinstance(b, VFun):
                if not (isinstance(a, VFun) and isinstance(b, VFun)
                        and a.name == b.name):
                    return False
                continue
            if a is VHOLE or b is VHOLE:
                if not (a is VHOLE and b is VHOLE):
                    return False
                continue
            assert isinstance(a, VBlock) and isinstance(b, VBlock)
            key = (a.addr, b.addr)
            if key in seen:
                continue
            seen.add(key)
            ba, bb = self.blocks[a.addr], self.blocks[b.addr]
            if ba.tag != bb.tag or len(ba.fields) != len(bb.fields):
                return False
            stack.extend(zip(ba.fields, bb.fields))
        return True

    def snapshot(self, v: Value):
        """Store-independent copy of a hole-free, acyclic value (Lit tree)."""

        if isinstance(v, VInt):
            return LInt(v.n)
        if isinstance(v, VFun):
            return LFun(v.name)
        if v is VHOLE:
            raise TmcRuntimeError("HoleEscape", "snapshot of a hole")
        blk = self.blocks[v.addr]
        return LBlock(blk.tag, tuple(self.snapshot(f) for f in blk.fields))

    def render(self, v: Value) -> str:
        if isinstance(v, VInt):
            return str(v.n)
        if isinstance(v, VFun):
            return f"<fun {v.name}>"
        if v is VHOLE:
            return "<hole>"
        blk = self.blocks[v.addr]
        if not blk.fields:
            return blk.tag
        return "(" + " ".join([blk.tag] + [self.render(f) for f in blk.fields]) + ")"


# ---------------------------------------------------------------------------
# Convenience entry points (run in a big-stack worker thread: the host
# Python stack must accommodate deep non-tail recursion of evaluated
# programs)
# ---------------------------------------------------------------------------

_THREAD_STACK = 512 * 1024 * 1024


def _in_big_stack_thread(fn):
    result: list = []

    def runner():
        old = sys.getrecursionlimit()
        sys.setrecursionlimit(400_000)
        try:
            result.append(("ok", fn()))
        except BaseException as exc:  # noqa: BLE001 - re-raised in caller
            result.append(("err", exc))
        finally:
            sys.setrecursionlimit(old)

    old_size = threading.stack_size(_THREAD_STACK)
    try:
        t = threading.Thread(target=runner)
        t.start()
        t.join()
    finally:
        threading.stack_size(old_size)
    kind, payload = result[0]
    if kind == "err":
        raise payload
    return payload


def eval_program(program: Program, entry: str, args: list,
                 max_stack: int = DEFAULT_MAX_STACK,
                 max_steps: int = DEFAULT_MAX_STEPS) -> tuple[Value, Metrics, Interp]:
    """Evaluate entry(args) in a fresh store; returns (value, metrics, interp)."""

    interp = Interp(program, max_stack, max_steps)

    def go():
        return interp.call(entry, args)

    value = _in_big_stack_thread(go)
    return value, interp.metrics, interp


def eval_dps(program: Program, dps_entry: str, args: list,
             max_stack: int = DEFAULT_MAX_STACK,
             max_steps: int = DEFAULT_MAX_STEPS) -> tuple[Value, Metrics, Interp]:
    """Call a DPS companion with a fresh 1-slot scratch destination.

    Returns the scratch slot's final value.
    """

    interp = Interp(program, max_stack, max_steps)

    def go():
        prev = interp._count_allocs
        interp._count_allocs = False
        scratch = interp.alloc("Scratch", [VHOLE])
        interp._count_allocs = prev
        interp.call(dps_entry, [scratch, VInt(1)] + list(args), check_holes=False)
        out = interp.block(scratch).fields[0]
        interp.assert_no_holes(out)
        return out

    value = _in_big_stack_thread(go)
    return value, interp.metrics, interp
