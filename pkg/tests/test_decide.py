"""Containment, equivalence, and satisfiability decisions with witnesses."""

from __future__ import annotations

import pytest

from conftest import TWO_WHITE_TEXT
from treelog.datalog import evaluate_query, parse_query
from treelog.decide import (
    TreeMode,
    Verdict,
    bounded_counterexample_search,
    containment,
    equivalence,
    ordered_mode,
    satisfiable,
    unordered_mode,
    unsat_query,
)
from treelog.errors import InvalidProgramError, NotUnaryError
from treelog.trees import build_structure, full_ordered_schema, full_unordered_schema

AB_U = unordered_mode(("a", "b"))
AB_O = ordered_mode(("a", "b"))

LEAF_Q = parse_query("P(x) <- Leaf(x).\nquery: P")
ROOT_Q = parse_query("P(x) <- Root(x).\nquery: P")
LAB_A = parse_query("P(x) <- Label_a(x).\nquery: P")
LAB_AB = parse_query("P(x) <- Label_a(x).\nP(x) <- Label_b(x).\nquery: P")


def verified_counterexample(v: Verdict, q1, q2, mode: TreeMode) -> bool:
    a = build_structure(v.tree, mode.schema)
    return v.node in evaluate_query(q1, a) and v.node not in evaluate_query(q2, a)


class TestModes:
    def test_schema_shapes(self):
        assert AB_U.schema == full_unordered_schema(("a", "b"))
        assert AB_O.schema == full_ordered_schema(("a", "b"))
        assert not AB_U.ordered and AB_O.ordered

    def test_alphabet_validation(self):
        with pytest.raises(ValueError):
            unordered_mode(())
        with pytest.raises(ValueError):
            ordered_mode(("a", "a"))

    def test_unsat_query_matches_mode(self):
        qu = unsat_query(AB_U)
        qo = unsat_query(AB_O)
        assert qu.program.edb() == ("Child",)
        assert qo.program.edb() == ("Fc",)


class TestContainment:
    def test_reflexive(self):
        assert containment(LEAF_Q, LEAF_Q, AB_U).answer == "yes"

    def test_leaf_not_contained_in_root(self):
        v = containment(LEAF_Q, ROOT_Q, AB_U)
        assert v.answer == "no"
        # minimal counterexample: a two-node tree, the child is a
        # leaf but not the root
        assert len(v.tree) == 2 and v.node == "v1"
        assert verified_counterexample(v, LEAF_Q, ROOT_Q, AB_U)

    def test_label_union(self):
        assert containment(LAB_A, LAB_AB, AB_U).answer == "yes"
        v = containment(LAB_AB, LAB_A, AB_U)
        assert v.answer == "no"
        assert len(v.tree) == 1 and v.tree.label(v.node) == "b"
        assert verified_counterexample(v, LAB_AB, LAB_A, AB_U)

    def test_recursive_program_reflexive(self):
        heavier = parse_query(
            "P(x) <- Label_a(x), Child(x, y), R(y).\n"
            "R(x) <- Label_b(x).\n"
            "R(x) <- Child(x, y), P(y).\n"
            "query: P"
        )
        assert containment(heavier, heavier, AB_U).answer == "yes"

    def test_budget_overrun_reports_unknown(self):
        v = containment(LAB_AB, LAB_A, AB_U, state_budget=2)
        assert v.answer == "unknown" and v.reason
        # the bounded search still produced (and fixpoint-verified) evidence
        assert v.tree is not None
        assert verified_counterexample(v, LAB_AB, LAB_A, AB_U)
        v2 = containment(LAB_A, LAB_AB, AB_U, state_budget=2)
        assert v2.answer == "unknown" and v2.tree is None

    def test_validation_errors(self):
        with pytest.raises(InvalidProgramError):
            containment(LEAF_Q, parse_query("P(x) <- Is(x, y).\nquery: P"), AB_O)
        with pytest.raises(NotUnaryError):
            containment(
                parse_query("P(x) <- Child(x, y).\nquery: Child"), LEAF_Q, AB_U
            )


class TestEquivalence:
    def test_unsat_variants_coincide_on_ordered_trees(self):
        qu_child = parse_query("P_unsat(x) <- Child(x, x).\nquery: P_unsat")
        qu_fc = parse_query("P_unsat(x) <- Fc(x, x).\nquery: P_unsat")
        assert equivalence(qu_child, qu_fc, AB_O).answer == "yes"

    def test_strict_containment_is_not_equivalence(self):
        v = equivalence(LAB_A, LAB_AB, AB_U)
        assert v.answer == "no"
        assert v.tree is not None and len(v.tree) == 1

    def test_renamed_program_is_equivalent(self):
        other = parse_query("Q(u) <- Leaf(u).\nquery: Q")
        assert equivalence(LEAF_Q, other, AB_U).answer == "yes"


class TestSatisfiable:
    def test_label_query(self):
        v = satisfiable(LAB_A, AB_U)
        assert v.answer == "yes"
        assert len(v.tree) == 1 and v.tree.label(v.node) == "a"

    @pytest.mark.parametrize("mode", [AB_U, AB_O], ids=["unordered", "ordered"])
    def test_unsat_query_is_unsatisfiable(self, mode):
        assert satisfiable(unsat_query(mode), mode).answer == "no"

    def test_two_white_witness(self, two_white):
        mode = ordered_mode(("Black", "White"))
        v = satisfiable(two_white, mode)
        assert v.answer == "yes"
        a = build_structure(v.tree, mode.schema)
        assert v.node in evaluate_query(two_white, a)
        # minimal witness: one root with exactly two White children
        assert len(v.tree) == 3
        kids = v.tree.children(v.tree.root)
        assert [v.tree.label(k) for k in kids] == ["White", "White"]


class TestBoundedSearch:
    def test_sibling_query_counterexample(self):
        q_sib = parse_query("P(x) <- Is(x, y).\nquery: P")
        found = bounded_counterexample_search(q_sib, unsat_query(AB_U), AB_U, 3)
        assert found is not None
        tree, node = found
        assert len(tree) == 3
        a = build_structure(tree, AB_U.schema)
        assert node in evaluate_query(q_sib, a)

    def test_no_counterexample_when_contained(self):
        assert bounded_counterexample_search(LAB_A, LAB_AB, AB_U, 3) is None
