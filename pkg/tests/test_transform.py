"""Destination-passing rewrite: output shape, write compression,
tail-position discipline, determinism."""

import pytest

from tmc_forge.analysis import collect_marks
from tmc_forge.ir import (
    Call,
    Constr,
    Expr,
    Let,
    Letrec,
    Match,
    Program,
    Seq,
    SetRef,
    iter_fundefs,
)
from tmc_forge.surface import parse_program, print_program
from tmc_forge.transform import (
    FreshNamer,
    TransformError,
    transform_program,
)

from conftest import load


def fundefs(p: Program):
    return {f.name: f for f in iter_fundefs(p)}


def tail_leaves(e: Expr):
    """The expressions in evaluated-last position of a body."""
    if isinstance(e, Let):
        yield from tail_leaves(e.body)
    elif isinstance(e, Seq):
        yield from tail_leaves(e.second)
    elif isinstance(e, Match):
        for _, b in e.clauses:
            yield from tail_leaves(b)
    elif isinstance(e, Letrec):
        yield from tail_leaves(e.body)
    else:
        yield e


class TestMapShape:
    def test_map_dps_structure(self):
        t = transform_program(load("map.tmc"))
        fs = fundefs(t)
        assert set(fs) == {"map", "map_dps"}
        dps = fs["map_dps"]
        assert dps.params == ["dst", "idx", "f", "xs"]
        leaves = list(tail_leaves(dps.body))
        # Nil clause writes; Cons clause tail-calls the companion.
        assert any(isinstance(l, SetRef) for l in leaves)
        assert any(isinstance(l, Call) and l.callee == "map_dps"
                   for l in leaves)

    def test_direct_map_switches_into_dps_under_constructor(self):
        t = transform_program(load("map.tmc"))
        body = fundefs(t)["map"].body
        leaves = list(tail_leaves(body))
        # The rewritten Cons clause evaluates to the freshly allocated
        # block variable, not to a call.
        assert any(not isinstance(l, (Call, SetRef)) for l in leaves)
        text = print_program(t)
        assert "(hole)" in text
        assert "map_dps" in text

    def test_main_call_not_rewritten(self):
        t = transform_program(load("map_toplevel_call.tmc"))
        assert isinstance(t.main, Call)
        assert t.main.callee == "map"


class TestDpsTailDiscipline:
    @pytest.mark.parametrize("name", [
        "map.tmc", "filter.tmc", "merge.tmc", "umap.tmc", "map_tail.tmc",
        "tree_map_annotated.tmc", "flatten_nested.tmc", "flatten_mutual.tmc",
        "map_variants.tmc", "noisy_constr_args.tmc",
    ])
    def test_every_dps_tail_leaf_completes_the_destination(self, name):
        p = load(name)
        marks = collect_marks(p)
        dps_names = set(marks.dps_name.values())
        t = transform_program(p)
        for f in iter_fundefs(t):
            if f.name not in dps_names:
                continue
            for leaf in tail_leaves(f.body):
                ok = (isinstance(leaf, SetRef)
                      or (isinstance(leaf, Call) and leaf.callee in dps_names))
                assert ok, (name, f.name, leaf)

    @pytest.mark.parametrize("name", [
        "map.tmc", "umap.tmc", "merge.tmc", "tree_map_annotated.tmc",
    ])
    def test_attrs_are_consumed(self, name):
        t = transform_program(load(name))
        for f in iter_fundefs(t):
            assert f.attrs == frozenset()
        assert "(@" not in print_program(t)


class TestCompression:
    def count_writes_per_step(self, compress):
        t = transform_program(load("umap.tmc"), compress=compress)
        dps = fundefs(t)[
            collect_marks(load("umap.tmc")).dps_name["umap"]]
        # Number of setref nodes along the two-element clause.
        two_elem = dps.body.clauses[2][1]
        n = [0]

        def walk(e):
            if isinstance(e, SetRef):
                n[0] += 1
            for attr in ("bound", "body", "first", "second", "dest",
                         "index", "value"):
                if hasattr(e, attr):
                    walk(getattr(e, attr))
            if isinstance(e, (Constr, Call)):
                for a in e.args:
                    walk(a)
            if isinstance(e, Match):
                for _, b in e.clauses:
                    walk(b)

        walk(two_elem)
        return n[0]

    def test_compressed_unrolled_step_writes_once(self):
        assert self.count_writes_per_step(compress=True) == 1

    def test_naive_unrolled_step_writes_twice(self):
        assert self.count_writes_per_step(compress=False) == 2

    def test_sibling_arguments_are_let_bound_in_order(self):
        t = transform_program(load("umap.tmc"))
        dps = fundefs(t)["umap_dps"]
        body = dps.body.clauses[2][1]
        # (f x1) and (f x2) are bound before any allocation so the
        # original left-to-right evaluation order survives compression.
        from tmc_forge.ir import Var
        assert isinstance(body, Let)
        assert body.bound == Call("f", [Var("x1")])
        inner = body.body
        assert isinstance(inner, Let)
        assert inner.bound == Call("f", [Var("x2")])


class TestErrorsAndDeterminism:
    def test_ambiguity_is_a_transform_error(self):
        with pytest.raises(TransformError) as ei:
            transform_program(load("tree_map_ambiguous.tmc"))
        codes = [d.code for d in ei.value.diagnostics]
        assert codes == ["AmbiguousTmc"]

    def test_unmarked_program_is_returned_unchanged(self):
        p = parse_program(
            "(program (letrec (fun f (x) (constr Cons x (call f x))))"
            " (main (int 0)))")
        assert transform_program(p) == p

    def test_transform_is_deterministic(self):
        a = print_program(transform_program(load("merge.tmc")))
        b = print_program(transform_program(load("merge.tmc")))
        assert a == b

    def test_transformed_program_is_well_formed(self):
        from tmc_forge.ir import well_formed
        for name in ("map.tmc", "merge.tmc", "umap.tmc", "flatten_nested.tmc",
                     "map_tail.tmc", "map_variants.tmc"):
            assert well_formed(transform_program(load(name))) == [], name

    def test_transform_output_round_trips_through_printer(self):
        t = transform_program(load("flatten_mutual.tmc"))
        assert parse_program(print_program(t)) == t


class TestFreshNamer:
    def test_avoids_reserved(self):
        n = FreshNamer()
        n.reserve({"dst0", "y0"})
        assert n.fresh("dst") == "dst1"
        assert n.fresh("y") == "y1"
        assert n.fresh("y") == "y2"

    def test_sequential(self):
        n = FreshNamer()
        assert [n.fresh("dst") for _ in range(3)] == ["dst0", "dst1", "dst2"]
