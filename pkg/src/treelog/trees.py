"""Unranked labeled trees and their encodings as relational structures.

A tree is a finite rooted tree whose nodes each carry one label from a
finite alphabet.  Trees come in two flavours: ordered (each node's children
form a sequence) and unordered (children form a set).  A schema selects
which relations the corresponding structure exposes; the structure of a
tree interprets those relations over the tree's node set.

Relations and their meaning, for nodes u, v of a tree T:

  Label_a(v)   v carries label a
  Child(u,v)   v is a child of u
  Desc(u,v)    v is a proper descendant of u
  Is(u,v)      u and v are distinct children of a common parent
  Root(v)      v is the root
  Leaf(v)      v has no children
  Fc(u,v)      v is the first child of u          (ordered trees only)
  Ns(u,v)      v is the sibling directly after u  (ordered trees only)
  Ls(v)        v is the last child of its parent  (ordered trees only)
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    NotASubschemaError,
    OrderRequiredError,
    ParseError,
    UnknownLabelError,
)

# Arities of the non-label relation symbols.  Label symbols are unary.
RELATION_ARITIES = {
    "Child": 2,
    "Desc": 2,
    "Is": 2,
    "Fc": 2,
    "Ns": 2,
    "Root": 1,
    "Leaf": 1,
    "Ls": 1,
}

# Relations whose interpretation depends on the child order.
ORDER_RELATIONS = frozenset({"Fc", "Ns", "Ls"})

UNORDERED_EXTRAS = ("Desc", "Is", "Root", "Leaf")
ORDERED_EXTRAS = ("Child", "Desc", "Root", "Leaf", "Ls")

LABEL_PREFIX = "Label_"

_IDENT = re.compile(r"[A-Za-z0-9_]+")


def label_symbol(label: str) -> str:
    return LABEL_PREFIX + label


@dataclass(frozen=True)
class Schema:
    """A finite alphabet plus a set of non-label relation symbols."""

    alphabet: tuple[str, ...]
    relations: frozenset[str]

    def __post_init__(self):
        if not self.alphabet:
            raise ValueError("alphabet must be non-empty")
        object.__setattr__(self, "alphabet", tuple(sorted(set(self.alphabet))))
        object.__setattr__(self, "relations", frozenset(self.relations))
        for label in self.alphabet:
            if not _IDENT.fullmatch(label):
                raise ValueError(f"bad label {label!r}")
        unknown = self.relations - set(RELATION_ARITIES)
        if unknown:
            raise ValueError(f"unknown relation symbols: {sorted(unknown)}")

    @property
    def label_symbols(self) -> tuple[str, ...]:
        return tuple(label_symbol(a) for a in self.alphabet)

    def symbols(self) -> frozenset[str]:
        return frozenset(self.label_symbols) | self.relations

    def arity(self, symbol: str) -> int:
        if symbol.startswith(LABEL_PREFIX) and symbol[len(LABEL_PREFIX):] in self.alphabet:
            return 1
        if symbol in self.relations:
            return RELATION_ARITIES[symbol]
        raise KeyError(symbol)

    @property
    def requires_order(self) -> bool:
        return bool(self.relations & ORDER_RELATIONS)

    def is_subschema_of(self, other: Schema) -> bool:
        return self.symbols() <= other.symbols()


def unordered_schema(alphabet: Iterable[str], extras: Iterable[str] = ()) -> Schema:
    """Labels plus Child, optionally extended with Desc/Is/Root/Leaf."""
    extras = frozenset(extras)
    if not extras <= set(UNORDERED_EXTRAS):
        raise ValueError(f"extras for an unordered schema must be among {UNORDERED_EXTRAS}")
    return Schema(tuple(alphabet), frozenset({"Child"}) | extras)


def full_unordered_schema(alphabet: Iterable[str]) -> Schema:
    return unordered_schema(alphabet, UNORDERED_EXTRAS)


def ordered_schema(alphabet: Iterable[str], extras: Iterable[str] = ()) -> Schema:
    """Labels plus Fc, Ns, optionally extended with Child/Desc/Root/Leaf/Ls."""
    extras = frozenset(extras)
    if not extras <= set(ORDERED_EXTRAS):
        raise ValueError(f"extras for an ordered schema must be among {ORDERED_EXTRAS}")
    return Schema(tuple(alphabet), frozenset({"Fc", "Ns"}) | extras)


def full_ordered_schema(alphabet: Iterable[str]) -> Schema:
    return ordered_schema(alphabet, ORDERED_EXTRAS)


def marked_ordered_schema(alphabet: Iterable[str]) -> Schema:
    """The ordered schema with Root, Leaf and Ls but no Child or Desc."""
    return ordered_schema(alphabet, ("Root", "Leaf", "Ls"))


@dataclass(frozen=True, order=True)
class Fact:
    """A ground atom: a relation symbol applied to domain elements."""

    pred: str
    args: tuple[str, ...]

    def __repr__(self):
        return f"{self.pred}({', '.join(self.args)})"


class LabeledTree:
    """An unranked tree with labeled nodes and optional child order.

    Child sequences are always stored; for unordered trees the stored
    order is just a serialization artifact and carries no meaning.
    """

    __slots__ = ("root", "ordered", "_labels", "_children")

    def __init__(
        self,
        root: str,
        labels: Mapping[str, str],
        children: Mapping[str, Sequence[str]],
        ordered: bool = False,
    ):
        self.root = root
        self.ordered = ordered
        self._labels = dict(labels)
        self._children = {v: tuple(children.get(v, ())) for v in self._labels}
        self._check()

    def _check(self):
        nodes = set(self._labels)
        if self.root not in nodes:
            raise ValueError("root must be a labeled node")
        seen: set[str] = set()
        for v, kids in self._children.items():
            for w in kids:
                if w not in nodes:
                    raise ValueError(f"child {w!r} of {v!r} has no label")
                if w in seen or w == self.root:
                    raise ValueError(f"node {w!r} has two parents or is the root")
                seen.add(w)
        if len(seen) != len(nodes) - 1:
            raise ValueError("tree is not connected")
        # Reachability from the root rules out cycles among the edges.
        stack, reached = [self.root], {self.root}
        while stack:
            for w in self._children[stack.pop()]:
                if w not in reached:
                    reached.add(w)
                    stack.append(w)
        if reached != nodes:
            raise ValueError("tree is not connected")

    @property
    def nodes(self) -> tuple[str, ...]:
        """All nodes in breadth-first order."""
        out = [self.root]
        i = 0
        while i < len(out):
            out.extend(self._children[out[i]])
            i += 1
        return tuple(out)

    def label(self, v: str) -> str:
        return self._labels[v]

    @property
    def labels(self) -> dict[str, str]:
        return dict(self._labels)

    def children(self, v: str) -> tuple[str, ...]:
        return self._children[v]

    def parent(self, v: str) -> str | None:
        for u, kids in self._children.items():
            if v in kids:
                return u
        return None

    def __len__(self):
        return len(self._labels)

    def _key(self):
        return (
            self.root,
            tuple(sorted(self._labels.items())),
            tuple(sorted(self._children.items())),
            self.ordered,
        )

    def __eq__(self, other):
        if not isinstance(other, LabeledTree):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        kind = "ordered" if self.ordered else "unordered"
        return f"<LabeledTree {kind} {serialize_tree(self)}>"

    def canonical_form(self) -> str:
        """A string identifying the tree up to isomorphism.

        Ordered trees keep their child order; unordered trees sort child
        subtrees by their canonical forms.
        """

        def walk(v: str) -> str:
            parts = [walk(w) for w in self._children[v]]
            if not self.ordered:
                parts.sort()
            return "(" + self._labels[v] + "".join(parts) + ")"

        return walk(self.root)

    def as_unordered(self) -> LabeledTree:
        """The same tree with its child order forgotten."""
        return LabeledTree(self.root, self._labels, self._children, ordered=False)

    def without_leaf(self, v: str) -> LabeledTree:
        """A copy with leaf node v removed."""
        if self._children[v]:
            raise ValueError(f"{v!r} is not a leaf")
        if v == self.root:
            raise ValueError("cannot remove the root")
        labels = {u: a for u, a in self._labels.items() if u != v}
        children = {
            u: tuple(w for w in kids if w != v)
            for u, kids in self._children.items()
            if u != v
        }
        return LabeledTree(self.root, labels, children, self.ordered)


def parse_tree(text: str, ordered: bool = False) -> LabeledTree:
    """Parse the parenthesized tree format.

    ``node ::= '(' label { node } ')'`` with labels over [A-Za-z0-9_].
    Nodes are numbered v0, v1, ... in breadth-first order, so the root is
    always v0.  Whitespace separates siblings and may appear freely.
    """
    pos = 0
    line, col = 1, 1

    def advance(n: int):
        nonlocal pos, line, col
        for _ in range(n):
            if pos < len(text) and text[pos] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            pos += 1

    def skip_ws():
        while pos < len(text) and text[pos].isspace():
            advance(1)

    def fail(msg: str):
        raise ParseError(msg, line, col)

    def parse_node():
        skip_ws()
        if pos >= len(text) or text[pos] != "(":
            fail("expected '('")
        advance(1)
        skip_ws()
        m = _IDENT.match(text, pos)
        if not m:
            fail("expected a label")
        label = m.group(0)
        advance(len(label))
        kids = []
        while True:
            skip_ws()
            if pos >= len(text):
                fail("unexpected end of input, expected ')'")
            if text[pos] == ")":
                advance(1)
                return (label, tuple(kids))
            kids.append(parse_node())

    shape = parse_node()
    skip_ws()
    if pos < len(text):
        fail("trailing input after tree")
    return tree_from_shape(shape, ordered)


def tree_from_shape(shape: tuple, ordered: bool = False) -> LabeledTree:
    """Build a tree from nested (label, children) tuples, numbering nodes
    v0, v1, ... breadth-first."""
    labels: dict[str, str] = {}
    children: dict[str, list[str]] = {}
    queue = [("v0", shape)]
    counter = 1
    i = 0
    while i < len(queue):
        name, (label, kids) = queue[i]
        i += 1
        labels[name] = label
        names = []
        for kid in kids:
            kid_name = f"v{counter}"
            counter += 1
            names.append(kid_name)
            queue.append((kid_name, kid))
        children[name] = names
    return LabeledTree("v0", labels, children, ordered)


def serialize_tree(t: LabeledTree) -> str:
    """Serialize to the parenthesized format, keeping stored child order."""

    def walk(v: str) -> str:
        inner = "".join(" " + walk(w) for w in t.children(v))
        return f"({t.label(v)}{inner})"

    return walk(t.root)


class Structure:
    """A finite relational structure: a domain plus named relations."""

    __slots__ = ("schema", "domain", "_relations")

    def __init__(self, schema: Schema, domain: Iterable[str], relations: Mapping[str, Iterable[tuple[str, ...]]]):
        self.schema = schema
        self.domain = frozenset(domain)
        rels = {}
        for sym in schema.symbols():
            rels[sym] = frozenset(tuple(t) for t in relations.get(sym, ()))
        self._relations = rels
        for sym, tuples in self._relations.items():
            arity = schema.arity(sym)
            for t in tuples:
                if len(t) != arity or not set(t) <= self.domain:
                    raise ValueError(f"bad tuple {t} for {sym}")

    def rel(self, symbol: str) -> frozenset[tuple[str, ...]]:
        return self._relations[symbol]

    @property
    def relations(self) -> dict[str, frozenset[tuple[str, ...]]]:
        return dict(self._relations)

    def _key(self):
        return (self.schema, self.domain, tuple(sorted(self._relations.items())))

    def __eq__(self, other):
        if not isinstance(other, Structure):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        n = sum(len(ts) for ts in self._relations.values())
        return f"<Structure |dom|={len(self.domain)} atoms={n}>"


def build_structure(t: LabeledTree, schema: Schema) -> Structure:
    """Interpret the schema's relations over the tree's nodes."""
    if schema.requires_order and not t.ordered:
        raise OrderRequiredError(
            "schema mentions order relations but the tree is unordered"
        )
    bad = set(t.labels.values()) - set(schema.alphabet)
    if bad:
        raise UnknownLabelError(f"labels outside the alphabet: {sorted(bad)}")

    nodes = t.nodes
    relations: dict[str, set[tuple[str, ...]]] = {}
    for a in schema.alphabet:
        relations[label_symbol(a)] = {(v,) for v in nodes if t.label(v) == a}

    child = [(u, v) for u in nodes for v in t.children(u)]
    for sym in schema.relations:
        if sym == "Child":
            relations[sym] = {(u, v) for u, v in child}
        elif sym == "Desc":
            desc = set()
            for u in nodes:
                stack = list(t.children(u))
                while stack:
                    w = stack.pop()
                    desc.add((u, w))
                    stack.extend(t.children(w))
            relations[sym] = desc
        elif sym == "Is":
            sib = set()
            for u in nodes:
                kids = t.children(u)
                sib.update((x, y) for x in kids for y in kids if x != y)
            relations[sym] = sib
        elif sym == "Root":
            relations[sym] = {(t.root,)}
        elif sym == "Leaf":
            relations[sym] = {(v,) for v in nodes if not t.children(v)}
        elif sym == "Fc":
            relations[sym] = {(u, t.children(u)[0]) for u in nodes if t.children(u)}
        elif sym == "Ns":
            ns = set()
            for u in nodes:
                kids = t.children(u)
                ns.update(zip(kids, kids[1:]))
            relations[sym] = ns
        elif sym == "Ls":
            relations[sym] = {(t.children(u)[-1],) for u in nodes if t.children(u)}
    return Structure(schema, nodes, relations)


def atoms(a: Structure) -> frozenset[Fact]:
    """All ground atoms of a structure, as a set of facts."""
    return frozenset(
        Fact(sym, t) for sym, tuples in a.relations.items() for t in tuples
    )


def reduct(a: Structure, schema: Schema) -> Structure:
    """Restrict a structure to a subschema, keeping the domain."""
    if not schema.is_subschema_of(a.schema):
        raise NotASubschemaError(
            f"{sorted(schema.symbols() - a.schema.symbols())} not in the structure's schema"
        )
    return Structure(schema, a.domain, {sym: a.rel(sym) for sym in schema.symbols()})


# --- Exhaustive tree enumeration -------------------------------------------

def enumerate_trees(alphabet: Iterable[str], max_nodes: int, ordered: bool) -> Iterator[LabeledTree]:
    """Yield every tree with at most max_nodes nodes, once per isomorphism
    class, in a deterministic order (by size, then by serialization).

    For ordered trees isomorphism preserves the child order; for unordered
    trees child subtrees may be permuted freely.
    """
    sigma = tuple(sorted(set(alphabet)))
    if not sigma:
        raise ValueError("alphabet must be non-empty")
    if max_nodes < 1:
        return
    cache: dict[int, list[tuple]] = {}
    for n in range(1, max_nodes + 1):
        for shape in _shapes(n, sigma, ordered, cache):
            yield tree_from_shape(shape, ordered)


def _shapes(n: int, sigma: tuple[str, ...], ordered: bool, cache: dict) -> list[tuple]:
    if n in cache:
        return cache[n]
    out = []
    if n == 1:
        out = [(a, ()) for a in sigma]
    else:
        for kids in _child_lists(n - 1, sigma, ordered, cache):
            out.extend((a, kids) for a in sigma)
        out.sort(key=_shape_key)
    cache[n] = out
    return out


def _child_lists(total: int, sigma, ordered: bool, cache) -> list[tuple]:
    """All child-subtree sequences with sizes summing to total.

    Ordered: every sequence.  Unordered: only canonically sorted sequences,
    so each multiset of subtrees appears exactly once.
    """
    lists: list[tuple] = []

    def extend(remaining: int, acc: tuple, floor_key):
        if remaining == 0:
            lists.append(acc)
            return
        for size in range(1, remaining + 1):
            for shape in _shapes(size, sigma, ordered, cache):
                if not ordered and floor_key is not None and _shape_key(shape) < floor_key:
                    continue
                extend(remaining - size, acc + (shape,), None if ordered else _shape_key(shape))

    extend(total, (), None)
    return lists


def _shape_key(shape: tuple) -> tuple:
    label, kids = shape
    return (label, tuple(_shape_key(k) for k in kids))
