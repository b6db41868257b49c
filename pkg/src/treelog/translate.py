"""Translations between query formalisms.

Three constructions: monadic datalog queries into universal-prefix MSO
(first in the natural forall(X...) (chi -> X1(x)) shape, then prenexed
into A2 X1..Xm. E z1..zk. matrix), elimination of derived tree axes
(Child, Desc, Root, Leaf, Ls, Is) in favor of the base ordered or
unordered schema, and the Child-to-Fc/Ns transfer that lets the ordered
automata backend decide questions about unordered trees.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .datalog import Atom, Query, Rule
from .errors import InvalidProgramError, NotUnaryError, UnknownSymbolError, WrongShapeError
from .trees import RELATION_ARITIES
from .mso import (
    And,
    Eq,
    Exists,
    Forall,
    ForallSet,
    Formula,
    Implies,
    Member,
    Not,
    Or,
    Rel,
    conj,
    disj,
    is_pi1,
    neq,
    substitute,
)

QUERY_FREE_VAR = "x"


def closure_formula(rho: Formula, u: str, w: str, set_var: str) -> Formula:
    """X is closed under rho-successors: A u. A w. X(u) & rho(u, w) -> X(w)."""
    return Forall(u, Forall(w, Implies(And(Member(u, set_var), rho), Member(w, set_var))))


def _phi_ns_star(x: str, y: str) -> Formula:
    cl = closure_formula(Rel("Ns", ("u", "w")), "u", "w", "X")
    return ForallSet("X", Implies(And(Member(x, "X"), cl), Member(y, "X")))


def _phi_child_ordered(x: str, y: str) -> Formula:
    return Exists("v", And(Rel("Fc", (x, "v")), _phi_ns_star("v", y)))


def _phi_desc_ordered(x: str, y: str) -> Formula:
    cl = closure_formula(_phi_child_ordered("u", "w"), "u", "w", "Y")
    return And(neq(x, y), ForallSet("Y", Implies(And(Member(x, "Y"), cl), Member(y, "Y"))))


def _phi_child_star(x: str, y: str) -> Formula:
    cl = closure_formula(Rel("Child", ("u", "w")), "u", "w", "X")
    return ForallSet("X", Implies(And(Member(x, "X"), cl), Member(y, "X")))


# Axis formulas over the base ordered schema (labels, Fc, Ns), with
# canonical free variables x (and y for the binary ones).
ORDERED_AXIS: Mapping[str, Formula] = {
    "Root": Not(Exists("y0", Or(Rel("Fc", ("y0", "x")), Rel("Ns", ("y0", "x"))))),
    "Leaf": Not(Exists("y0", Rel("Fc", ("x", "y0")))),
    # A bare "no next sibling" test would also hold at the root, which the
    # materialized Ls relation excludes, so the root is ruled out explicitly.
    "Ls": And(
        Not(Exists("y0", Rel("Ns", ("x", "y0")))),
        Exists("y0", Or(Rel("Fc", ("y0", "x")), Rel("Ns", ("y0", "x")))),
    ),
    "Child": _phi_child_ordered("x", "y"),
    "Desc": _phi_desc_ordered("x", "y"),
}

# Axis formulas over the base unordered schema (labels, Child).
UNORDERED_AXIS: Mapping[str, Formula] = {
    "Root": Not(Exists("y0", Rel("Child", ("y0", "x")))),
    "Leaf": Not(Exists("y0", Rel("Child", ("x", "y0")))),
    "Is": And(neq("x", "y"), Exists("u", And(Rel("Child", ("u", "x")), Rel("Child", ("u", "y"))))),
    "Desc": And(neq("x", "y"), _phi_child_star("x", "y")),
}


@dataclass(frozen=True)
class AxisLibrary:
    """The derived-axis formulas and their closure-style helpers."""

    ordered: Mapping[str, Formula]
    unordered: Mapping[str, Formula]
    ns_star: Formula
    child_star: Formula


def axis_library() -> AxisLibrary:
    return AxisLibrary(
        ordered=dict(ORDERED_AXIS),
        unordered=dict(UNORDERED_AXIS),
        ns_star=_phi_ns_star("x", "y"),
        child_star=_phi_child_star("x", "y"),
    )


def _rewrite_atoms(f: Formula, mapping: Mapping[str, Formula]) -> Formula:
    if isinstance(f, Rel):
        target = mapping.get(f.pred)
        if target is None:
            return f
        params = ("x", "y")[: len(f.args)]
        if RELATION_ARITIES.get(f.pred) != len(f.args):
            raise UnknownSymbolError(f"{f.pred} used with arity {len(f.args)}")
        return substitute(target, dict(zip(params, f.args)))
    if isinstance(f, (Eq, Member)):
        return f
    if isinstance(f, Not):
        return Not(_rewrite_atoms(f.sub, mapping))
    if isinstance(f, (And, Or, Implies)):
        return type(f)(_rewrite_atoms(f.left, mapping), _rewrite_atoms(f.right, mapping))
    return type(f)(f.var, _rewrite_atoms(f.body, mapping))


def axis_elim_ordered(f: Formula) -> Formula:
    """Rewrite Child/Desc/Root/Leaf/Ls atoms into Fc/Ns formulas."""
    return _rewrite_atoms(f, ORDERED_AXIS)


def axis_elim_unordered(f: Formula) -> Formula:
    """Rewrite Desc/Is/Root/Leaf atoms into Child formulas."""
    return _rewrite_atoms(f, UNORDERED_AXIS)


def unordered_to_ordered(f: Formula) -> Formula:
    """Interpret a Child-based formula on ordered structures, so the
    ordered automata backend can decide unordered questions.  For every
    ordered tree, the result holds exactly where f holds on the tree's
    unordered reduct."""
    return _rewrite_atoms(f, {"Child": ORDERED_AXIS["Child"]})


def datalog_to_mso(q: Query) -> Formula:
    """Translate a unary monadic datalog query into an MSO formula with
    one free variable x.

    Each intensional predicate becomes a universally quantified set
    variable; each rule becomes the closure condition "whenever the body
    holds, the head node is in the head's set".  A node is an answer
    exactly when it lies in the query set under every rule-closed
    valuation.  If the query predicate is extensional the query denotes
    the relation itself and the atomic formula is returned.
    """
    program = q.program
    idb = program.idb()
    bad = [p for p, ar in program.arities().items() if p in idb and ar != 1]
    if bad:
        raise InvalidProgramError([f"intensional predicate {p} is not unary" for p in bad])
    if q.arity() != 1:
        raise NotUnaryError(f"query predicate {q.predicate} has arity {q.arity()}")
    if q.predicate not in idb:
        return Rel(q.predicate, (QUERY_FREE_VAR,))

    order = [q.predicate] + [p for p in idb if p != q.predicate]
    set_var = {p: f"X{i + 1}" for i, p in enumerate(order)}

    def atom_formula(atom: Atom, renaming: Mapping[str, str]) -> Formula:
        args = tuple(renaming[v] for v in atom.args)
        if atom.pred in set_var:
            return Member(args[0], set_var[atom.pred])
        return Rel(atom.pred, args)

    def rule_formula(rule: Rule) -> Formula:
        renaming = {v: f"z{i}" for i, v in enumerate(rule.variables())}
        body = conj([atom_formula(b, renaming) for b in rule.body])
        out: Formula = Implies(body, atom_formula(rule.head, renaming))
        for v in reversed(rule.variables()):
            out = Forall(renaming[v], out)
        return out

    chi = conj([rule_formula(r) for r in program.rules])
    out: Formula = Implies(chi, Member(QUERY_FREE_VAR, set_var[q.predicate]))
    for p in reversed(order):
        out = ForallSet(set_var[p], out)
    return out


def to_prenex_pi1(f: Formula) -> Formula:
    """Prenex the forall(X...)(chi -> X1(x)) translation shape into
    A2 X1..Xm. E z1..zk. (X1(x) | OR over rules (body & ~head)).

    A formula that is already in the universal-set/existential-node
    prefix class is returned unchanged; any other shape is rejected.
    """
    if is_pi1(f):
        return f
    set_vars: list[str] = []
    g: Formula = f
    while isinstance(g, ForallSet):
        set_vars.append(g.var)
        g = g.body
    if not (isinstance(g, Implies) and isinstance(g.right, Member)
            and g.right.set_var in set_vars):
        raise WrongShapeError(
            "expected the forall-set (chi -> X1(x)) shape produced by datalog_to_mso"
        )
    answer = g.right

    def is_atom(h: Formula) -> bool:
        return isinstance(h, (Rel, Member, Eq))

    fresh = [0]
    disjuncts: list[Formula] = [Member(answer.var, answer.set_var)]
    prefix: list[str] = []
    for psi in _conjuncts(g.left):
        bound: list[str] = []
        while isinstance(psi, Forall):
            bound.append(psi.var)
            psi = psi.body
        if not isinstance(psi, Implies) or not isinstance(psi.right, Member):
            raise WrongShapeError("each conjunct must be a quantified rule implication")
        body = _conjuncts(psi.left)
        if not all(is_atom(b) for b in body) or not is_atom(psi.right):
            raise WrongShapeError("rule bodies must be conjunctions of atoms")
        renaming = {}
        for v in bound:
            renaming[v] = f"z{fresh[0]}"
            fresh[0] += 1
        prefix.extend(renaming[v] for v in bound)

        def rename_atom(h: Formula) -> Formula:
            if isinstance(h, Rel):
                return Rel(h.pred, tuple(renaming.get(v, v) for v in h.args))
            if isinstance(h, Member):
                return Member(renaming.get(h.var, h.var), h.set_var)
            return Eq(renaming.get(h.left, h.left), renaming.get(h.right, h.right))

        disjuncts.append(conj([rename_atom(b) for b in body] + [Not(rename_atom(psi.right))]))

    out: Formula = disj(disjuncts)
    for v in reversed(prefix):
        out = Exists(v, out)
    for v in reversed(set_vars):
        out = ForallSet(v, out)
    return out


def _conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return _conjuncts(f.left) + _conjuncts(f.right)
    return [f]
