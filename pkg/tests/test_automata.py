"""The encoding, the automaton algebra, and the formula compiler."""

from __future__ import annotations

import random

import pytest

from conftest import BW_TEXT
from corpus import all_assignments, random_formula
from treelog.automata import (
    BinaryTree,
    compile_formula,
    complement,
    determinize,
    false_automaton,
    fcns_decode,
    fcns_encode,
    format_automaton,
    annotate,
    intersect,
    is_empty,
    label_atom,
    member_atom,
    minimize,
    project,
    prune,
    run,
    single_tree_automaton,
    singleton_atom,
    true_automaton,
    union,
)
from treelog.errors import (
    AlphabetMismatchError,
    NotASingleTreeError,
    StateBudgetExceededError,
    UnsupportedAtomError,
)
from treelog.mso import evaluate, free_vars, format_formula, parse_formula
from treelog.trees import build_structure, enumerate_trees, ordered_schema, parse_tree

LAB = ("a", "b")
SCHEMA = ordered_schema(LAB)


def trees_upto(n):
    return list(enumerate_trees(LAB, n, ordered=True))


@pytest.fixture(scope="module")
def trees4():
    return trees_upto(4)


@pytest.fixture(scope="module")
def trees3():
    return trees_upto(3)


class TestEncoding:
    def test_bw_encoding_shape(self, bw_ordered):
        b = fcns_encode(bw_ordered)
        assert b.label == "Black" and b.right is None
        assert b.left.label == "Black"             # v1, first child
        assert b.left.right.label == "White"       # v2, its next sibling
        assert b.left.right.left.label == "White"  # v6, v2's first child
        assert b.size() == 9

    def test_round_trip(self, bw_ordered, trees4):
        for t in trees4 + [bw_ordered]:
            assert fcns_decode(fcns_encode(t)) == t

    def test_forest_rejected(self):
        with pytest.raises(NotASingleTreeError):
            fcns_decode(BinaryTree("a", None, BinaryTree("a")))

    def test_annotate_marks_tracks(self):
        t = parse_tree("(a (b) (a))", ordered=True)
        b = annotate(t, ("x", "X"), {"x": "v1", "X": {"v0", "v1"}})
        assert b.label == ("a", (0, 1))
        assert b.left.label == ("b", (1, 1))
        assert b.left.right.label == ("a", (0, 0))


def agreement(f, trees, **compile_kwargs):
    """Compare the compiled automaton with direct evaluation on every
    tree and every assignment of the tracked variables."""
    a = compile_formula(f, LAB, **compile_kwargs)
    for t in trees:
        st = build_structure(t, SCHEMA)
        for asg in all_assignments(t.nodes, a.tracked):
            want = evaluate(f, st, asg)
            got = run(a, annotate(t, a.tracked, asg))
            if want != got:
                return f"{format_formula(f)} on {t.canonical_form()} {asg}: " \
                       f"evaluate={want} automaton={got}"
    return None


class TestCompiler:
    CASES = [
        "Label_a(x)",
        "Fc(x, y)",
        "Ns(x, y)",
        "x = y",
        "X(x)",
        "~Label_a(x)",
        "Label_a(x) & Label_b(y)",
        "Label_a(x) | Fc(x, y)",
        "Label_a(x) -> Label_b(x)",
        "E y. Fc(x, y)",
        "A y. Fc(x, y) -> Label_a(y)",
        "E x. Label_a(x)",
        "A x. Label_a(x)",
        "E2 X. X(x) & ~X(y)",
        "A2 X. X(x) -> X(y)",
        "Fc(x, x)",
        "E x. E y. Ns(x, y) & Label_a(x) & Label_b(y)",
        "E x. E x. Label_a(x)",
        "A2 X. E2 X. X(x)",
    ]

    @pytest.mark.parametrize("text", CASES)
    def test_agreement_with_evaluate(self, text, trees4, trees3):
        f = parse_formula(text)
        trees = trees4 if len(free_vars(f)) <= 1 else trees3
        assert agreement(f, trees) is None

    def test_random_formulas(self, trees3):
        rng = random.Random(21)
        for _ in range(25):
            f = random_formula(rng, LAB, free=("x",), depth=3)
            mismatch = agreement(f, trees3)
            assert mismatch is None, mismatch

    def test_output_is_deterministic_and_minimal(self):
        for text in ("E y. Fc(x, y)", "A2 X. X(x) -> X(y)", "E x. Label_a(x)"):
            a = compile_formula(parse_formula(text), LAB)
            assert a.deterministic
            again = minimize(a)
            assert len(again.states) == len(a.states)

    def test_unsupported_relation(self):
        with pytest.raises(UnsupportedAtomError):
            compile_formula(parse_formula("Child(x, y)"), LAB)

    def test_state_budget(self):
        with pytest.raises(StateBudgetExceededError):
            compile_formula(
                parse_formula("Label_a(x) & Label_b(x)"), LAB, state_budget=1
            )


class TestAlgebra:
    def langs(self, a, trees):
        return frozenset(
            t.canonical_form() for t in trees if run(a, fcns_encode(t))
        )

    def test_true_false(self, trees3):
        assert self.langs(true_automaton(LAB), trees3) == {
            t.canonical_form() for t in trees3
        }
        assert self.langs(false_automaton(LAB), trees3) == frozenset()

    def test_boolean_operations(self, trees3):
        fa = compile_formula(parse_formula("E x. Label_a(x)"), LAB)
        fb = compile_formula(parse_formula("E x. Fc(x, x) | Label_b(x)"), LAB)
        la, lb = self.langs(fa, trees3), self.langs(fb, trees3)
        every = {t.canonical_form() for t in trees3}
        assert self.langs(intersect(fa, fb), trees3) == la & lb
        assert self.langs(union(fa, fb), trees3) == la | lb
        assert self.langs(complement(fa), trees3) == every - la

    def test_operations_preserve_determinism(self):
        fa = compile_formula(parse_formula("E x. Label_a(x)"), LAB)
        fb = compile_formula(parse_formula("A x. Label_b(x)"), LAB)
        for out in (intersect(fa, fb), union(fa, fb), complement(fa)):
            assert out.deterministic

    def test_minimize_is_idempotent(self):
        a = compile_formula(parse_formula("E x. E y. Ns(x, y) & Label_a(y)"), LAB)
        m = minimize(a)
        assert len(minimize(m).states) == len(m.states)

    def test_determinize_preserves_language(self, trees3):
        a = compile_formula(parse_formula("E x. Ns(x, x) | Label_a(x)"), LAB)
        holes = prune(a)
        assert not holes.deterministic
        back = minimize(determinize(holes))
        assert self.langs(back, trees3) == self.langs(a, trees3)

    def test_projection_quantifies_a_track(self, trees3):
        # dropping the x track from Label_a(x) yields "some node is a"
        atom = label_atom(LAB, "a", "x")
        projected = project(intersect(atom, singleton_atom(LAB, "x")), "x")
        direct = compile_formula(parse_formula("E x. Label_a(x)"), LAB)
        assert self.langs(projected, trees3) == self.langs(direct, trees3)
        # projecting an untracked variable is a no-op
        assert project(direct, "x") is direct

    def test_singleton_atom(self):
        a = singleton_atom(LAB, "x")
        t = parse_tree("(a (a))", ordered=True)
        assert run(a, annotate(t, ("x",), {"x": "v1"}))
        bad = BinaryTree(("a", (1,)), BinaryTree(("a", (1,)), None, None), None)
        assert not run(a, bad)
        none = BinaryTree(("a", (0,)), None, None)
        assert not run(a, none)

    def test_member_atom(self):
        a = member_atom(LAB, "x", "X")
        t = parse_tree("(a (b))", ordered=True)
        assert run(a, annotate(t, ("X", "x"), {"x": "v1", "X": {"v1"}}))
        assert not run(a, annotate(t, ("X", "x"), {"x": "v0", "X": {"v1"}}))

    def test_alphabet_mismatch(self):
        a = true_automaton(("a",))
        with pytest.raises(AlphabetMismatchError):
            run(a, fcns_encode(parse_tree("(b)", ordered=True)))
        with pytest.raises(AlphabetMismatchError):
            run(a, BinaryTree(("a", (1,)), None, None))


class TestEmptiness:
    def test_witness_found_and_accepted(self):
        a = compile_formula(parse_formula("E x. Label_a(x)"), ("a",))
        w = is_empty(a)
        assert w is not None and w.size() == 1
        assert run(a, w)

    def test_empty_language(self):
        a = compile_formula(parse_formula("E x. Label_a(x) & Label_b(x)"), LAB)
        assert is_empty(a) is None

    def test_leaf_but_not_root_needs_two_nodes(self):
        f = parse_formula("E x. ~(E y. Fc(x, y)) & (E y. Fc(y, x) | Ns(y, x))")
        a = intersect(compile_formula(f, LAB), single_tree_automaton(LAB))
        w = is_empty(a)
        assert w is not None and w.size() >= 2
        assert fcns_decode(w).children("v0")

    def test_forest_witnesses_need_the_single_tree_filter(self):
        # a next-sibling pair at the top level encodes a two-tree forest
        a = compile_formula(parse_formula("E x. E y. Ns(x, y)"), LAB)
        w = is_empty(a)
        assert w is not None
        with pytest.raises(NotASingleTreeError):
            fcns_decode(w)
        wt = is_empty(intersect(a, single_tree_automaton(LAB)))
        assert fcns_decode(wt).children("v0")

    def test_format_automaton(self):
        d = format_automaton(compile_formula(parse_formula("Label_a(x)"), ("a",)))
        assert "states:" in d and "accepting:" in d
