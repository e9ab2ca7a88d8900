"""Core tree invariants: well-formedness diagnostics and decomposition
plugging."""

import pytest
from hypothesis import given, strategies as st

from tmc_forge.ir import (
    Call,
    Constr,
    Decomposition,
    DecompHole,
    FunDef,
    Hole,
    Int,
    Let,
    Letrec,
    Match,
    PConstr,
    PVar,
    PLAIN_TAIL,
    Program,
    Seq,
    SetRef,
    Var,
    all_identifiers,
    pattern_vars,
    plug,
    well_formed,
)

from conftest import load


def prog(body, params=("x",), name="f"):
    return Program([[FunDef(name, list(params), body)]], Int(0))


def codes(p):
    return sorted(d.code for d in well_formed(p))


class TestWellFormed:
    def test_corpus_is_clean(self):
        for name in ("map.tmc", "merge.tmc", "flatten_nested.tmc",
                     "map_tail.tmc", "umap.tmc"):
            assert well_formed(load(name)) == []

    def test_duplicate_param(self):
        p = Program([[FunDef("f", ["x", "x"], Var("x"))]], Int(0))
        assert codes(p) == ["DuplicateParam"]

    def test_no_params(self):
        p = Program([[FunDef("f", [], Int(1))]], Int(0))
        assert codes(p) == ["NoParams"]

    def test_duplicate_function_in_group(self):
        p = Program([[FunDef("f", ["x"], Var("x")),
                      FunDef("f", ["y"], Var("y"))]], Int(0))
        assert "DuplicateFunction" in codes(p)

    def test_duplicate_function_across_groups(self):
        p = Program([[FunDef("f", ["x"], Var("x"))],
                     [FunDef("f", ["y"], Var("y"))]], Int(0))
        assert "DuplicateFunction" in codes(p)

    def test_duplicate_pattern_var(self):
        body = Match(Var("x"), [(PConstr("Pair", [PVar("a"), PVar("a")]),
                                 Var("a"))])
        assert codes(prog(body)) == ["DuplicatePatternVar"]

    def test_unbound_callee(self):
        assert codes(prog(Call("nope", [Var("x")]))) == ["UnboundCallee"]

    def test_callee_may_be_value_binder(self):
        body = Let("g", Var("x"), Call("g", [Int(1)]))
        assert codes(prog(body)) == []

    def test_empty_match(self):
        assert codes(prog(Match(Var("x"), []))) == ["EmptyMatch"]

    def test_hole_only_under_constructor(self):
        assert codes(prog(Constr("Cons", [Var("x"), Hole()]))) == []
        assert codes(prog(Hole())) == ["MisplacedHole"]
        assert codes(prog(Let("y", Hole(), Var("y")))) == ["MisplacedHole"]
        # A hole one level deeper than a constructor argument is misplaced.
        nested = Constr("Cons", [Var("x"), Let("y", Int(1), Hole())])
        assert codes(prog(nested)) == ["MisplacedHole"]

    def test_setref_index_must_be_positive(self):
        body = SetRef(Var("x"), Int(0), Int(1))
        assert codes(prog(body)) == ["InvalidIndex"]

    def test_local_functions_do_not_capture_value_vars(self):
        # The body of a local function sees only its own params and
        # functions, never the enclosing value environment.
        body = Letrec([FunDef("g", ["y"], Call("add", [Var("y"), Var("x")]))],
                      Call("g", [Int(1)]))
        assert "UnboundCallee" not in codes(prog(body))
        # Var("x") in g's body is unbound but variable use is not
        # diagnosed statically; the runtime rejects it.


class TestPlug:
    def test_plug_rebuilds_expression(self):
        e = Constr("Cons", [Var("y"), Call("map", [Var("f"), Var("rest")])])
        d = Decomposition(
            Constr("Cons", [Var("y"), DecompHole(0)]),
            [(Call("map", [Var("f"), Var("rest")]), PLAIN_TAIL)],
            [(("arg1",))])
        assert plug(d) == e

    def test_plug_checks_arity(self):
        d = Decomposition(DecompHole(0), [], [])
        with pytest.raises(ValueError):
            plug(d)
        d2 = Decomposition(Int(1), [(Int(2), PLAIN_TAIL)], [])
        with pytest.raises(ValueError):
            plug(d2)

    def test_plug_through_every_context_shape(self):
        ctx = Let("a", Int(1),
                  Seq(Int(2),
                      Match(Var("a"), [(PVar("b"), DecompHole(0))])))
        d = Decomposition(ctx, [(Var("b"), PLAIN_TAIL)], [])
        out = plug(d)
        assert isinstance(out, Let)
        assert out.body.second.clauses[0][1] == Var("b")


# A small recursive strategy over hole-free expressions.
_expr = st.deferred(lambda: st.one_of(
    st.integers(-50, 50).map(Int),
    st.sampled_from(["x", "y", "z"]).map(Var),
    st.tuples(_expr, _expr).map(lambda t: Seq(*t)),
    st.tuples(st.sampled_from(["a", "b"]), _expr, _expr)
      .map(lambda t: Let(*t)),
    st.lists(_expr, max_size=3).map(lambda a: Constr("K", a)),
))


class TestIdentifiers:
    @given(_expr)
    def test_all_identifiers_covers_every_var(self, e):
        ids = all_identifiers(e)
        stack = [e]
        while stack:
            n = stack.pop()
            if isinstance(n, Var):
                assert n.name in ids
            for attr in ("first", "second", "bound", "body"):
                if hasattr(n, attr):
                    stack.append(getattr(n, attr))
            if isinstance(n, Constr):
                stack.extend(n.args)

    def test_pattern_vars_in_order(self):
        pat = PConstr("Node", [PVar("l"), PConstr("Leaf", [PVar("v")])])
        assert pattern_vars(pat) == ["l", "v"]
