"""Deterministic pseudo-random input values.

A fixed 64-bit linear congruential generator (Knuth's MMIX multiplier)
keeps generated inputs byte-stable across platforms and Python versions;
the host `random` module is deliberately not used.
"""

from __future__ import annotations

from .runtime import LBlock, LFun, LInt, Lit, list_lit

_MASK = (1 << 64) - 1
_MUL = 6364136223846793005
_INC = 1442695040888963407


class Lcg:
    def __init__(self, seed: int):
        self.state = (seed ^ 0x9E3779B97F4A7C15) & _MASK
        self.next()

    def next(self) -> int:
        self.state = (self.state * _MUL + _INC) & _MASK
        return self.state

    def below(self, n: int) -> int:
        return (self.next() >> 33) % n


def mix_seed(seed: int, trial: int) -> int:
    return (seed * 1_000_003 + trial) & _MASK


class BadSpec(ValueError):
    pass


def gen_value(spec: str, rng: Lcg) -> Lit:
    """Build an input literal from a generator spec.

    Specs: a bare integer, `int`, `list:<n>`, `sortedlist:<n>`,
    `tree:<depth>`, `cmmlike:<n>`, `fun:<name>`.
    """

    if spec.lstrip("-").isdigit() and spec.lstrip("-"):
        return LInt(int(spec))
    if spec == "int":
        return LInt(rng.below(100))
    name, _, arg = spec.partition(":")
    if name == "fun" and arg:
        return LFun(arg)
    if name in ("list", "sortedlist", "tree", "cmmlike", "listof"):
        inner = None
        if name == "listof" and "x" in arg:
            arg, _, inner_s = arg.partition("x")
            try:
                inner = int(inner_s)
            except ValueError:
                raise BadSpec(f"bad generator spec {spec!r}") from None
        try:
            n = int(arg)
        except ValueError:
            raise BadSpec(f"bad generator spec {spec!r}") from None
        if n < 0 or (inner is not None and inner < 0):
            raise BadSpec(f"bad generator spec {spec!r}")
        if name == "list":
            return list_lit(LInt(rng.below(100)) for _ in range(n))
        if name == "sortedlist":
            vals = sorted(rng.below(100) for _ in range(n))
            return list_lit(LInt(v) for v in vals)
        if name == "listof":
            # list of lists; input shape for flatten.  `listof:NxM` fixes
            # the inner length at M, otherwise it is short and random.
            return list_lit(
                list_lit(LInt(rng.below(100)) for _ in range(
                    inner if inner is not None else rng.below(4)))
                for _ in range(n))
        if name == "tree":
            return _gen_tree(n, rng)
        return gen_cmmlike(n, rng)
    raise BadSpec(f"bad generator spec {spec!r}")


def _gen_tree(depth: int, rng: Lcg) -> Lit:
    if depth <= 0 or rng.below(4) == 0:
        return LBlock("Leaf", (LInt(rng.below(100)),))
    return LBlock("Node", (_gen_tree(depth - 1, rng), _gen_tree(depth - 1, rng)))


def gen_cmmlike(n: int, rng: Lcg) -> Lit:
    """Chain of n Clet/Csequence/Cifthenelse nodes nested in the tail
    (body / second / else) direction, ending in a constant leaf."""

    node: Lit = LBlock("Cconst", (LInt(rng.below(100)),))
    for _ in range(n):
        k = rng.below(3)
        leaf = LBlock("Cconst", (LInt(rng.below(100)),))
        if k == 0:
            node = LBlock("Clet", (LInt(rng.below(100)), leaf, node))
        elif k == 1:
            node = LBlock("Csequence", (leaf, node))
        else:
            node = LBlock("Cifthenelse", (leaf, LBlock("Cconst", (LInt(1),)), node))
    return node


def gen_cmm_then_chain(n: int, rng: Lcg) -> Lit:
    """Cifthenelse nodes nested in the *then* direction; map_tail's stack
    grows linearly on this shape (the non-guarantee case)."""

    node: Lit = LBlock("Cconst", (LInt(rng.below(100)),))
    for _ in range(n):
        node = LBlock("Cifthenelse",
                      (LBlock("Cconst", (LInt(0),)), node,
                       LBlock("Cconst", (LInt(rng.below(100)),))))
    return node
