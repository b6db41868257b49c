"""Decision procedures for unary monadic datalog queries on trees.

Containment, equivalence, and satisfiability are decided by translating
both queries to MSO, eliminating derived axis relations, moving to the
ordered base schema, and testing emptiness of a tree automaton for the
difference sentence.  A bounded enumeration search over small trees acts
as an independent, incomplete refuter; it is also the fallback evidence
when the automata pipeline runs out of its state budget.
"""

from __future__ import annotations

from dataclasses import dataclass

from .automata import (
    DEFAULT_STATE_BUDGET,
    compile,
    fcns_decode,
    intersect,
    is_empty,
    single_tree_automaton,
)
from .datalog import Query, evaluate_query, parse_query, validate
from .errors import (
    InvalidProgramError,
    NotUnaryError,
    StateBudgetExceededError,
    TreelogError,
)
from .mso import And, Exists, Formula, Not
from .translate import (
    QUERY_FREE_VAR,
    axis_elim_ordered,
    axis_elim_unordered,
    datalog_to_mso,
    unordered_to_ordered,
)
from .trees import (
    LabeledTree,
    Structure,
    build_structure,
    enumerate_trees,
    full_ordered_schema,
    full_unordered_schema,
    parse_tree,
)

__all__ = [
    "TreeMode",
    "Verdict",
    "ordered_mode",
    "unordered_mode",
    "unsat_query",
    "containment",
    "equivalence",
    "satisfiable",
    "bounded_counterexample_search",
]


@dataclass(frozen=True)
class TreeMode:
    """Which kind of trees the decision ranges over, and their alphabet."""

    ordered: bool
    alphabet: tuple[str, ...]

    def __post_init__(self):
        if not self.alphabet:
            raise ValueError("the alphabet must not be empty")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("duplicate labels in the alphabet")

    @property
    def schema(self):
        """The full schema variant in force: every derived axis available."""
        if self.ordered:
            return full_ordered_schema(self.alphabet)
        return full_unordered_schema(self.alphabet)


def ordered_mode(alphabet) -> TreeMode:
    return TreeMode(True, tuple(alphabet))


def unordered_mode(alphabet) -> TreeMode:
    return TreeMode(False, tuple(alphabet))


@dataclass(frozen=True)
class Verdict:
    """Outcome of a decision call.

    answer is "yes", "no", or "unknown".  For containment/equivalence a
    "no" carries a counterexample (tree, node) with node answering the
    first query but not the second; for satisfiability a "yes" carries a
    witness.  "unknown" (state budget exhausted) may carry bounded-search
    evidence in the same fields, but never claims a verdict.
    """

    answer: str
    tree: LabeledTree | None = None
    node: str | None = None
    reason: str | None = None


def unsat_query(mode: TreeMode) -> Query:
    """The canonical unsatisfiable query for the mode: no node is its own
    child (first child in the ordered case)."""
    rel = "Fc" if mode.ordered else "Child"
    return parse_query(f"P_unsat(x) <- {rel}(x, x).\nquery: P_unsat")


# --- Shared plumbing ---------------------------------------------------------

def _checked(q: Query, mode: TreeMode) -> None:
    if q.arity() != 1:
        raise NotUnaryError(f"query predicate {q.predicate} is not unary")
    violations = validate(q.program, mode.schema)
    if violations:
        raise InvalidProgramError(violations)


def _query_formula(q: Query, mode: TreeMode) -> Formula:
    """Translate a query to MSO over the ordered base schema (labels, Fc,
    Ns), the language the automata backend speaks."""
    f = datalog_to_mso(q)
    if mode.ordered:
        return axis_elim_ordered(f)
    return unordered_to_ordered(axis_elim_unordered(f))


def _sentence_witness(sentence: Formula, mode: TreeMode,
                      state_budget: int) -> LabeledTree | None:
    """Return some single tree satisfying the sentence, or None."""
    a = compile(sentence, mode.alphabet, state_budget=state_budget)
    a = intersect(a, single_tree_automaton(mode.alphabet), state_budget)
    b = is_empty(a)
    if b is None:
        return None
    t = fcns_decode(b)
    return t if mode.ordered else t.as_unordered()


def _node_key(v: str):
    return (len(v), v)


def _difference(q1: Query, q2: Query, a: Structure) -> list[str]:
    got = evaluate_query(q1, a) - evaluate_query(q2, a)
    return sorted(got, key=_node_key)


def _shrink(tree: LabeledTree, mode: TreeMode, pick) -> tuple[LabeledTree, str]:
    """Greedily delete leaves while `pick` still finds a node, then
    renumber.  Purely cosmetic; the caller re-verifies the result."""
    improved = True
    while improved:
        improved = False
        for v in tree.nodes:
            if v == tree.root or tree.children(v):
                continue
            smaller = tree.without_leaf(v)
            if pick(smaller):
                tree = smaller
                improved = True
                break
    tree = parse_tree(tree.canonical_form(), ordered=mode.ordered)
    found = pick(tree)
    if not found:
        raise TreelogError("internal error: witness lost during shrinking")
    return tree, found[0]


# --- Decisions ---------------------------------------------------------------

def containment(q1: Query, q2: Query, mode: TreeMode, *,
                state_budget: int = DEFAULT_STATE_BUDGET,
                search_nodes: int = 4) -> Verdict:
    """Is [[q1]](S(T)) a subset of [[q2]](S(T)) for every tree T?

    Decided by emptiness of an automaton for "some node answers q1 but
    not q2".  A budget overrun downgrades the answer to unknown, with any
    counterexample the bounded search can still find attached as evidence.
    """
    _checked(q1, mode)
    _checked(q2, mode)
    f1 = _query_formula(q1, mode)
    f2 = _query_formula(q2, mode)
    sentence = Exists(QUERY_FREE_VAR, And(f1, Not(f2)))
    try:
        witness = _sentence_witness(sentence, mode, state_budget)
    except StateBudgetExceededError as e:
        found = bounded_counterexample_search(q1, q2, mode, search_nodes)
        return Verdict(
            "unknown",
            tree=found[0] if found else None,
            node=found[1] if found else None,
            reason=str(e),
        )
    if witness is None:
        return Verdict("yes")

    def pick(t: LabeledTree):
        return _difference(q1, q2, build_structure(t, mode.schema))

    tree, node = _shrink(witness, mode, pick)
    return Verdict("no", tree=tree, node=node)


def equivalence(q1: Query, q2: Query, mode: TreeMode, *,
                state_budget: int = DEFAULT_STATE_BUDGET,
                search_nodes: int = 4) -> Verdict:
    """Do q1 and q2 answer identically on every tree?  Equivalence is
    containment in both directions; a counterexample from either failing
    direction is reported."""
    forward = containment(q1, q2, mode, state_budget=state_budget,
                          search_nodes=search_nodes)
    if forward.answer == "no":
        return forward
    backward = containment(q2, q1, mode, state_budget=state_budget,
                           search_nodes=search_nodes)
    if backward.answer == "no":
        return backward
    if forward.answer == "yes" and backward.answer == "yes":
        return Verdict("yes")
    unknown = forward if forward.answer == "unknown" else backward
    return Verdict("unknown", tree=unknown.tree, node=unknown.node,
                   reason=unknown.reason)


def satisfiable(q: Query, mode: TreeMode, *,
                state_budget: int = DEFAULT_STATE_BUDGET,
                search_nodes: int = 4) -> Verdict:
    """Does some tree give q a nonempty answer?  Decided directly from
    the emptiness of an automaton for "some node answers q"."""
    _checked(q, mode)
    sentence = Exists(QUERY_FREE_VAR, _query_formula(q, mode))

    def pick(t: LabeledTree):
        got = evaluate_query(q, build_structure(t, mode.schema))
        return sorted(got, key=_node_key)

    try:
        witness = _sentence_witness(sentence, mode, state_budget)
    except StateBudgetExceededError as e:
        for t in enumerate_trees(mode.alphabet, search_nodes, ordered=mode.ordered):
            found = pick(t)
            if found:
                return Verdict("unknown", tree=t, node=found[0], reason=str(e))
        return Verdict("unknown", reason=str(e))
    if witness is None:
        return Verdict("no")
    tree, node = _shrink(witness, mode, pick)
    return Verdict("yes", tree=tree, node=node)


def bounded_counterexample_search(
    q1: Query, q2: Query, mode: TreeMode, max_nodes: int,
) -> tuple[LabeledTree, str] | None:
    """Exhaustively refute q1 <= q2 on every tree with at most max_nodes
    nodes, by fixpoint evaluation only.  Sound but incomplete: finding
    nothing proves nothing."""
    _checked(q1, mode)
    _checked(q2, mode)
    for t in enumerate_trees(mode.alphabet, max_nodes, ordered=mode.ordered):
        diff = _difference(q1, q2, build_structure(t, mode.schema))
        if diff:
            return t, diff[0]
    return None
