"""Shared fixtures: the running-example tree, its golden relations, and
the sample programs and formulas used across the suite."""

from __future__ import annotations

import itertools

import pytest

from treelog.datalog import Query, parse_query
from treelog.mso import Formula, parse_formula
from treelog.trees import LabeledTree, Structure, parse_tree

BW_TEXT = "(Black (Black) (White (White) (Black)) (Black) (White (Black)) (Black))"

# The example's nine nodes in breadth-first order.
BW_LABELS = {
    "v0": "Black", "v1": "Black", "v2": "White", "v3": "Black",
    "v4": "White", "v5": "Black", "v6": "White", "v7": "Black", "v8": "Black",
}
BW_CHILD = {
    ("v0", "v1"), ("v0", "v2"), ("v0", "v3"), ("v0", "v4"), ("v0", "v5"),
    ("v2", "v6"), ("v2", "v7"), ("v4", "v8"),
}
BW_FC = {("v0", "v1"), ("v2", "v6"), ("v4", "v8")}
BW_NS = {
    ("v1", "v2"), ("v2", "v3"), ("v3", "v4"), ("v4", "v5"), ("v6", "v7"),
}
BW_LS = {"v5", "v7", "v8"}
BW_ROOT = {"v0"}
BW_LEAF = {"v1", "v3", "v5", "v6", "v7", "v8"}
BW_DESC = BW_CHILD | {
    ("v0", "v6"), ("v0", "v7"), ("v0", "v8"), ("v2", "v6"), ("v2", "v7"),
}
BW_IS = {
    (a, b)
    for kids in (("v1", "v2", "v3", "v4", "v5"), ("v6", "v7"))
    for a, b in itertools.permutations(kids, 2)
}

# Accepts a tree iff the root has exactly two White children; the three
# White<k> predicates count White labels in a suffix of a sibling run.
TWO_WHITE_TEXT = """\
Ans(x) <- Root(x), Fc(x, y), White2(y).
White2(x) <- Label_Black(x), Ns(x, y), White2(y).
White2(x) <- Label_White(x), Ns(x, y), White1(y).
White1(x) <- Label_Black(x), Ns(x, y), White1(y).
White1(x) <- Label_White(x), Ns(x, y), White0(y).
White0(x) <- Label_Black(x), Ns(x, y), White0(y).
White1(x) <- Label_White(x), Ls(x).
White0(x) <- Label_Black(x), Ls(x).
query: Ans
"""

# Same query phrased directly over Child: a node with no parent and
# exactly two White children.
MSO_CHILD_TEXT = (
    "~(E u. Child(u, x)) & (E y. E z. y != z & Child(x, y) & Child(x, z)"
    " & Label_White(y) & Label_White(z)"
    " & (A v. Child(x, v) -> v = y | v = z | ~Label_White(v)))"
)


@pytest.fixture(scope="session")
def bw_ordered() -> LabeledTree:
    return parse_tree(BW_TEXT, ordered=True)


@pytest.fixture(scope="session")
def bw_unordered() -> LabeledTree:
    return parse_tree(BW_TEXT, ordered=False)


@pytest.fixture(scope="session")
def two_white() -> Query:
    return parse_query(TWO_WHITE_TEXT)


@pytest.fixture(scope="session")
def mso_child() -> Formula:
    return parse_formula(MSO_CHILD_TEXT)


def rename_structure(a: Structure, mapping: dict[str, str]) -> Structure:
    """The same structure over renamed domain elements."""
    return Structure(
        a.schema,
        [mapping[v] for v in a.domain],
        {
            sym: {tuple(mapping[x] for x in t) for t in tuples}
            for sym, tuples in a.relations.items()
        },
    )
