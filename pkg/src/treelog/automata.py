"""Bottom-up tree automata over first-child/next-sibling encoded trees.

An ordered unranked tree maps to a binary tree whose left edges are
first-child links and right edges are next-sibling links.  Automata read
symbols (label, bits) where the bit vector marks membership of the node
in each tracked free variable (node variables mark exactly one node, set
variables any subset).  compile() turns an MSO formula over the base
ordered schema into an automaton that, on correctly marked encodings,
accepts exactly the satisfying assignments; boolean structure maps to
product/sum/complement and quantifiers to bit-track projection.

Invariant maintained by every construction: on annotated trees whose
node-variable tracks are genuine singletons, acceptance coincides with
the formula's truth.  On invalidly marked trees the automata may answer
anything; projection of a node variable therefore first intersects with
the singleton-track checker, so invalid markings can never witness an
existential.  Complement is determinize + flip + minimize.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iproduct
from typing import Iterable, Mapping

from .errors import (
    AlphabetMismatchError,
    NotASingleTreeError,
    StateBudgetExceededError,
    UnknownSymbolError,
    UnsupportedAtomError,
)
from .mso import (
    And,
    Eq,
    Exists,
    ExistsSet,
    Forall,
    ForallSet,
    Formula,
    Implies,
    Member,
    Not,
    Or,
    Rel,
    free_vars,
    is_set_var,
)
from .trees import LabeledTree, tree_from_shape

DEFAULT_STATE_BUDGET = 2_000_000

# Placeholder for an absent child position; never a real state.
ABSENT = "#absent#"


@dataclass(frozen=True)
class BinaryTree:
    """First-child/next-sibling encoding; label is either a plain tree
    label or a (label, bits) pair once variable tracks are annotated."""

    label: object
    left: "BinaryTree | None" = None
    right: "BinaryTree | None" = None

    def size(self) -> int:
        n = 1
        if self.left:
            n += self.left.size()
        if self.right:
            n += self.right.size()
        return n


def fcns_encode(t: LabeledTree) -> BinaryTree:
    """Encode an ordered tree; left = first child, right = next sibling."""

    def chain(siblings: tuple[str, ...]) -> BinaryTree | None:
        if not siblings:
            return None
        head = siblings[0]
        return BinaryTree(t.label(head), chain(t.children(head)), chain(siblings[1:]))

    return BinaryTree(t.label(t.root), chain(t.children(t.root)), None)


def annotate(t: LabeledTree, tracked: tuple[str, ...], assignment: Mapping) -> BinaryTree:
    """Encode with per-node track bits taken from the assignment (node
    variables map to a node, set variables to a node iterable)."""
    marks = []
    for var in tracked:
        value = assignment[var]
        marks.append(frozenset(value) if is_set_var(var) else frozenset((value,)))

    def bits(v: str) -> tuple[int, ...]:
        return tuple(1 if v in m else 0 for m in marks)

    def chain(siblings: tuple[str, ...]) -> BinaryTree | None:
        if not siblings:
            return None
        head = siblings[0]
        return BinaryTree(
            (t.label(head), bits(head)), chain(t.children(head)), chain(siblings[1:])
        )

    root = t.root
    return BinaryTree((t.label(root), bits(root)), chain(t.children(root)), None)


def fcns_decode(b: BinaryTree) -> LabeledTree:
    """Invert the encoding.  The root must have no next sibling,
    otherwise the input encodes a forest rather than a single tree."""
    if b.right is not None:
        raise NotASingleTreeError("encoded root has a next sibling (forest input)")

    def plain(label: object) -> str:
        return label[0] if isinstance(label, tuple) else label

    def shape(node: BinaryTree):
        children = []
        child = node.left
        while child is not None:
            children.append(shape(child))
            child = child.right
        return (plain(node.label), children)

    return tree_from_shape(shape(b), ordered=True)


@dataclass(frozen=True)
class TreeAutomaton:
    """Nondeterministic bottom-up automaton; deterministic means every
    (left, right, symbol) key has at most one successor.  Missing keys
    mean no run.  Keys use ABSENT for missing children."""

    labels: tuple[str, ...]
    tracked: tuple[str, ...]
    states: frozenset
    transitions: Mapping[tuple, frozenset]
    accepting: frozenset
    deterministic: bool = False

    def symbols(self):
        for label in self.labels:
            for bits in iproduct((0, 1), repeat=len(self.tracked)):
                yield (label, bits)

    def state_count(self) -> int:
        return len(self.states)


def _freeze(transitions: dict) -> dict:
    return {k: frozenset(v) for k, v in transitions.items()}


def run(a: TreeAutomaton, b: BinaryTree) -> bool:
    """Subset-simulate the automaton on an encoded tree."""

    def norm(label: object) -> tuple[str, tuple[int, ...]]:
        if isinstance(label, tuple):
            name, bits = label
        else:
            name, bits = label, ()
        if name not in a.labels or len(bits) != len(a.tracked):
            raise AlphabetMismatchError(
                f"symbol {label!r} is not in the automaton alphabet "
                f"(labels {a.labels}, {len(a.tracked)} tracks)"
            )
        return name, tuple(bits)

    def go(node: BinaryTree | None) -> frozenset:
        if node is None:
            return frozenset((ABSENT,))
        name, bits = norm(node.label)
        left = go(node.left)
        right = go(node.right)
        out = set()
        for p in left:
            for q in right:
                out |= a.transitions.get((p, q, name, bits), frozenset())
        return frozenset(out)

    return bool(go(b) & a.accepting)


# --- Atom automata ----------------------------------------------------------

def _complete_det(labels, tracked, states, delta, accepting) -> TreeAutomaton:
    """Build a deterministic total automaton from a function
    delta(left, right, label, bits) -> state."""
    table = {}
    domain = list(states) + [ABSENT]
    for p in domain:
        for q in domain:
            for label in labels:
                for bits in iproduct((0, 1), repeat=len(tracked)):
                    table[(p, q, label, bits)] = frozenset((delta(p, q, label, bits),))
    return TreeAutomaton(
        labels=tuple(labels),
        tracked=tuple(tracked),
        states=frozenset(states),
        transitions=table,
        accepting=frozenset(accepting),
        deterministic=True,
    )


def true_automaton(labels, tracked=()) -> TreeAutomaton:
    return _complete_det(labels, tracked, ("t",), lambda p, q, s, b: "t", ("t",))


def false_automaton(labels, tracked=()) -> TreeAutomaton:
    return _complete_det(labels, tracked, ("t",), lambda p, q, s, b: "t", ())


def label_atom(labels, alpha: str, var: str) -> TreeAutomaton:
    """Accepts when the single var-marked node is labeled alpha."""

    def delta(p, q, label, bits):
        if p == "dead" or q == "dead":
            return "dead"
        seen = (p == "ok") + (q == "ok") + bits[0]
        if seen > 1:
            return "dead"
        if seen == 0:
            return "none"
        if bits[0] and label != alpha:
            return "dead"
        return "ok"

    return _complete_det(labels, (var,), ("none", "ok", "dead"), delta, ("ok",))


def edge_atom(labels, first: str, second: str, right_edge: bool) -> TreeAutomaton:
    """Fc(first, second) when right_edge is false (second is the left
    child of first in the encoding), Ns(first, second) otherwise.

    States: none (no marks below), pend (the second-marked node is this
    subtree's root, waiting for its parent), done, dead.
    """
    tracked = tuple(sorted((first, second)))
    fi = tracked.index(first)
    si = tracked.index(second)

    def delta(p, q, label, bits):
        if p == "dead" or q == "dead":
            return "dead"
        bf, bs = bits[fi], bits[si]
        if bf and bs:
            return "dead"  # one node cannot be its own child/sibling
        if bs:
            return "pend" if p in ("none", ABSENT) and q in ("none", ABSENT) else "dead"
        child, other = (q, p) if right_edge else (p, q)
        if bf:
            return "done" if child == "pend" and other in ("none", ABSENT) else "dead"
        if p == "pend" or q == "pend":
            return "dead"  # the pending mark's parent is not first-marked
        dones = (p == "done") + (q == "done")
        if dones > 1:
            return "dead"
        return "done" if dones else "none"

    return _complete_det(labels, tracked, ("none", "pend", "done", "dead"), delta, ("done",))


def eq_atom(labels, x: str, y: str) -> TreeAutomaton:
    if x == y:
        return singleton_atom(labels, x)
    tracked = tuple(sorted((x, y)))

    def delta(p, q, label, bits):
        if p == "dead" or q == "dead":
            return "dead"
        bx, by = bits
        if bx != by:
            return "dead"
        if bx:
            return "done" if p in ("none", ABSENT) and q in ("none", ABSENT) else "dead"
        dones = (p == "done") + (q == "done")
        if dones > 1:
            return "dead"
        return "done" if dones else "none"

    return _complete_det(labels, tracked, ("none", "done", "dead"), delta, ("done",))


def member_atom(labels, var: str, set_var: str) -> TreeAutomaton:
    tracked = tuple(sorted((var, set_var)))
    vi = tracked.index(var)
    si = tracked.index(set_var)

    def delta(p, q, label, bits):
        if p == "dead" or q == "dead":
            return "dead"
        if bits[vi]:
            if p not in ("none", ABSENT) or q not in ("none", ABSENT):
                return "dead"
            return "done" if bits[si] else "dead"
        dones = (p == "done") + (q == "done")
        if dones > 1:
            return "dead"
        return "done" if dones else "none"

    return _complete_det(labels, tracked, ("none", "done", "dead"), delta, ("done",))


def singleton_atom(labels, var: str) -> TreeAutomaton:
    """The validity checker: exactly one var-marked node."""

    def delta(p, q, label, bits):
        if p == "dead" or q == "dead":
            return "dead"
        seen = (p == "one") + (q == "one") + bits[0]
        if seen > 1:
            return "dead"
        return "one" if seen else "none"

    return _complete_det(labels, (var,), ("none", "one", "dead"), delta, ("one",))


def single_tree_automaton(labels, tracked=()) -> TreeAutomaton:
    """Accepts encodings whose root has no next sibling, i.e. encodings
    of a single tree rather than a wider forest."""

    def delta(p, q, label, bits):
        return "single" if q == ABSENT else "wide"

    return _complete_det(labels, tracked, ("single", "wide"), delta, ("single",))


# --- Track alignment and boolean operations ---------------------------------

def align(a: TreeAutomaton, tracked: tuple[str, ...]) -> TreeAutomaton:
    """Cylindrify onto a superset of tracked variables (both sorted)."""
    if tracked == a.tracked:
        return a
    if not set(a.tracked) <= set(tracked):
        raise ValueError(f"cannot align {a.tracked} onto {tracked}")
    positions = [tracked.index(v) for v in a.tracked]
    new_positions = [i for i in range(len(tracked)) if tracked[i] not in a.tracked]
    table: dict = {}
    for (p, q, label, bits), out in a.transitions.items():
        for extra in iproduct((0, 1), repeat=len(new_positions)):
            full = [0] * len(tracked)
            for pos, bit in zip(positions, bits):
                full[pos] = bit
            for pos, bit in zip(new_positions, extra):
                full[pos] = bit
            table[(p, q, label, tuple(full))] = out
    return TreeAutomaton(
        labels=a.labels,
        tracked=tuple(tracked),
        states=a.states,
        transitions=table,
        accepting=a.accepting,
        deterministic=a.deterministic,
    )


def _merge_tracks(a: TreeAutomaton, b: TreeAutomaton) -> tuple[str, ...]:
    if a.labels != b.labels:
        raise AlphabetMismatchError(f"label alphabets differ: {a.labels} vs {b.labels}")
    return tuple(sorted(set(a.tracked) | set(b.tracked)))


def _product(a: TreeAutomaton, b: TreeAutomaton, conjunction: bool,
             state_budget: int = DEFAULT_STATE_BUDGET) -> TreeAutomaton:
    """Reachable product automaton; accepts by AND or OR of the sides.
    The OR flavour is only language-correct when both sides are complete,
    which the deterministic invariant guarantees."""
    tracked = _merge_tracks(a, b)
    a = align(a, tracked)
    b = align(b, tracked)
    symbols = list(a.symbols())
    known: set = set()
    table: dict = {}
    frontier = [ABSENT]
    all_seen = [ABSENT]

    def images(side: TreeAutomaton, p, q, label, bits):
        return side.transitions.get((p, q, label, bits), frozenset())

    while frontier:
        new: list = []
        pairs = [
            (l, r)
            for l in all_seen
            for r in all_seen
            if l in frontier or r in frontier or (l is ABSENT and r is ABSENT and not known)
        ]
        for (l, r) in pairs:
            la, lb = (l, l) if l is ABSENT else l
            ra, rb = (r, r) if r is ABSENT else r
            for label, bits in symbols:
                outs = set()
                for pa in images(a, la, ra, label, bits):
                    for pb in images(b, lb, rb, label, bits):
                        outs.add((pa, pb))
                if not outs:
                    continue
                table[(l, r, label, bits)] = frozenset(outs)
                for s in outs:
                    if s not in known:
                        known.add(s)
                        new.append(s)
                        if len(known) > state_budget:
                            raise StateBudgetExceededError(
                                f"product exceeded {state_budget} states"
                            )
        all_seen.extend(new)
        frontier = new
    if conjunction:
        accepting = frozenset(
            (pa, pb) for (pa, pb) in known if pa in a.accepting and pb in b.accepting
        )
    else:
        accepting = frozenset(
            (pa, pb) for (pa, pb) in known if pa in a.accepting or pb in b.accepting
        )
    return TreeAutomaton(
        labels=a.labels,
        tracked=tracked,
        states=frozenset(known),
        transitions=table,
        accepting=accepting,
        deterministic=a.deterministic and b.deterministic,
    )


def intersect(a: TreeAutomaton, b: TreeAutomaton,
              state_budget: int = DEFAULT_STATE_BUDGET) -> TreeAutomaton:
    """Reachable product automaton, minimized while it is deterministic.
    Keeping every intermediate machine small is what lets the nested
    negations of the datalog translations compile at all."""
    out = _product(a, b, True, state_budget)
    return minimize(out) if out.deterministic else out


def union(a: TreeAutomaton, b: TreeAutomaton,
          state_budget: int = DEFAULT_STATE_BUDGET) -> TreeAutomaton:
    """Union.  Two deterministic (hence complete) automata take the
    or-accepting product; otherwise a disjoint sum, where a run stays
    within one component."""
    if a.deterministic and b.deterministic:
        return minimize(_product(a, b, False, state_budget))
    tracked = _merge_tracks(a, b)
    a = align(a, tracked)
    b = align(b, tracked)
    table: dict = {}

    def add(side: TreeAutomaton, tag: str):
        def wrap(s):
            return s if s is ABSENT else (tag, s)

        for (p, q, label, bits), out in side.transitions.items():
            key = (wrap(p), wrap(q), label, bits)
            table.setdefault(key, set()).update((tag, s) for s in out)

    add(a, "L")
    add(b, "R")
    states = frozenset(("L", s) for s in a.states) | frozenset(("R", s) for s in b.states)
    accepting = frozenset(("L", s) for s in a.accepting) | frozenset(
        ("R", s) for s in b.accepting
    )
    return TreeAutomaton(
        labels=a.labels,
        tracked=tracked,
        states=states,
        transitions=_freeze(table),
        accepting=accepting,
        deterministic=False,
    )


def determinize(a: TreeAutomaton, state_budget: int = DEFAULT_STATE_BUDGET) -> TreeAutomaton:
    """Reachable subset construction; complete over its reachable part
    (the empty subset acts as the reject sink)."""
    if a.deterministic:
        return a
    symbols = list(a.symbols())
    empty: frozenset = frozenset()
    known: dict[frozenset, None] = {}
    table: dict = {}
    frontier: list = [ABSENT]
    all_seen: list = [ABSENT]

    def expand(l, r):
        ls = [ABSENT] if l is ABSENT else list(l)
        rs = [ABSENT] if r is ABSENT else list(r)
        for label, bits in symbols:
            out = set()
            for p in ls:
                for q in rs:
                    out |= a.transitions.get((p, q, label, bits), frozenset())
            subset = frozenset(out)
            table[(l, r, label, bits)] = frozenset((subset,))
            if subset not in known:
                known[subset] = None
                if len(known) > state_budget:
                    raise StateBudgetExceededError(
                        f"determinization exceeded {state_budget} states"
                    )
                new.append(subset)

    new: list = []
    expand(ABSENT, ABSENT)
    frontier = list(new)
    all_seen.extend(new)
    while frontier:
        new = []
        for l in all_seen:
            for r in all_seen:
                if l in frontier or r in frontier:
                    if l is ABSENT and r is ABSENT:
                        continue
                    expand(l, r)
        all_seen.extend(new)
        frontier = new
    if empty not in known:
        known[empty] = None
    accepting = frozenset(s for s in known if s & a.accepting)
    return TreeAutomaton(
        labels=a.labels,
        tracked=a.tracked,
        states=frozenset(known),
        transitions=table,
        accepting=accepting,
        deterministic=True,
    )


def minimize(a: TreeAutomaton) -> TreeAutomaton:
    """Quotient a deterministic automaton by state equivalence (Moore
    refinement: split on acceptance, then on per-context target classes
    until stable).  Requires determinism."""
    if not a.deterministic:
        raise ValueError("minimize requires a deterministic automaton")
    states = sorted(a.states, key=repr)
    contexts = states + [ABSENT]
    cls: dict = {s: int(s in a.accepting) for s in states}
    symbols = list(a.symbols())

    def target(p, q, label, bits):
        out = a.transitions.get((p, q, label, bits))
        if not out:
            return None
        return next(iter(out))

    while True:
        signatures = {}
        for s in states:
            sig = [cls[s]]
            for r in contexts:
                for label, bits in symbols:
                    t1 = target(s, r, label, bits)
                    t2 = target(r, s, label, bits)
                    sig.append((cls.get(t1, -1), cls.get(t2, -1)))
            signatures[s] = tuple(sig)
        groups: dict = {}
        for s in states:
            groups.setdefault(signatures[s], []).append(s)
        new_cls = {}
        for i, key in enumerate(sorted(groups, key=repr)):
            for s in groups[key]:
                new_cls[s] = i
        if len(groups) == len(set(cls.values())):
            break
        cls = new_cls

    reps: dict = {}
    for s in states:
        reps.setdefault(cls[s], s)

    def to_rep(s):
        return s if s is ABSENT else reps[cls[s]]

    table: dict = {}
    for (p, q, label, bits), out in a.transitions.items():
        key = (to_rep(p), to_rep(q), label, bits)
        table[key] = frozenset(to_rep(s) for s in out)
    return TreeAutomaton(
        labels=a.labels,
        tracked=a.tracked,
        states=frozenset(reps.values()),
        transitions=table,
        accepting=frozenset(to_rep(s) for s in a.accepting),
        deterministic=True,
    )


def complement(a: TreeAutomaton, state_budget: int = DEFAULT_STATE_BUDGET) -> TreeAutomaton:
    """Complement; a deterministic (hence complete) input just flips its
    accepting set, which also preserves minimality."""
    already_det = a.deterministic
    d = a if already_det else determinize(a, state_budget)
    flipped = TreeAutomaton(
        labels=d.labels,
        tracked=d.tracked,
        states=d.states,
        transitions=d.transitions,
        accepting=frozenset(d.states - d.accepting),
        deterministic=True,
    )
    return flipped if already_det else minimize(flipped)


def project(a: TreeAutomaton, var: str,
            state_budget: int = DEFAULT_STATE_BUDGET) -> TreeAutomaton:
    """Existentially quantify a tracked variable.  Node variables are
    first intersected with the singleton checker so that only genuine
    single-node markings can witness the existential.  The projected
    machine is re-determinized and minimized right away: projection is
    the one step that introduces nondeterminism, and containing it here
    keeps the downstream complements from exploding."""
    if var not in a.tracked:
        return a
    if not is_set_var(var):
        a = intersect(a, singleton_atom(a.labels, var), state_budget)
    pos = a.tracked.index(var)
    tracked = tuple(v for v in a.tracked if v != var)
    table: dict = {}
    for (p, q, label, bits), out in a.transitions.items():
        key = (p, q, label, bits[:pos] + bits[pos + 1:])
        table.setdefault(key, set()).update(out)
    out = TreeAutomaton(
        labels=a.labels,
        tracked=tracked,
        states=a.states,
        transitions=_freeze(table),
        accepting=a.accepting,
        deterministic=False,
    )
    return minimize(determinize(out, state_budget))


def prune(a: TreeAutomaton) -> TreeAutomaton:
    """Drop states that cannot occur in any accepting run (not reachable
    bottom-up, or never lead to acceptance)."""
    reachable: set = set()
    changed = True
    while changed:
        changed = False
        for (p, q, label, bits), out in a.transitions.items():
            if (p is ABSENT or p in reachable) and (q is ABSENT or q in reachable):
                for s in out:
                    if s not in reachable:
                        reachable.add(s)
                        changed = True
    useful = set(s for s in a.accepting if s in reachable)
    changed = True
    while changed:
        changed = False
        for (p, q, label, bits), out in a.transitions.items():
            if not (out & useful):
                continue
            if (p is ABSENT or p in reachable) and (q is ABSENT or q in reachable):
                for s in (p, q):
                    if s is not ABSENT and s in reachable and s not in useful:
                        useful.add(s)
                        changed = True
    table = {}
    for (p, q, label, bits), out in a.transitions.items():
        if p is not ABSENT and p not in useful:
            continue
        if q is not ABSENT and q not in useful:
            continue
        kept = frozenset(s for s in out if s in useful)
        if kept:
            table[(p, q, label, bits)] = kept
    return TreeAutomaton(
        labels=a.labels,
        tracked=a.tracked,
        states=frozenset(useful),
        transitions=table,
        accepting=frozenset(useful & set(a.accepting)),
        deterministic=False,
    )


def is_empty(a: TreeAutomaton) -> BinaryTree | None:
    """Return None when no tree is accepted, else a minimal-height
    accepted witness built from reachability backpointers."""
    witness: dict = {}
    keys = sorted(a.transitions.keys(), key=repr)

    def wit(s):
        return None if s is ABSENT else witness[s]

    frontier = [ABSENT]
    available = [ABSENT]
    while frontier:
        new = []
        for (p, q, label, bits) in keys:
            if p not in available or q not in available:
                continue
            if p not in frontier and q not in frontier:
                continue
            for s in sorted(a.transitions[(p, q, label, bits)], key=repr):
                if s in witness or s is ABSENT:
                    continue
                witness[s] = BinaryTree((label, bits), wit(p), wit(q))
                new.append(s)
                if s in a.accepting:
                    return witness[s]
        available.extend(new)
        frontier = new
    return None


# --- Compilation ------------------------------------------------------------

_LABEL_PREFIX = "Label_"


def compile(f: Formula, labels: Iterable[str], tracked: tuple[str, ...] | None = None,
            state_budget: int = DEFAULT_STATE_BUDGET) -> TreeAutomaton:
    """Compile a formula over the base ordered schema into an automaton
    whose tracks are sorted(free_vars(f)), then aligned onto `tracked`
    if given (which must be a sorted superset)."""
    labels = tuple(labels)

    def go(g: Formula) -> TreeAutomaton:
        if isinstance(g, Rel):
            if g.pred.startswith(_LABEL_PREFIX):
                alpha = g.pred[len(_LABEL_PREFIX):]
                if alpha not in labels:
                    raise UnknownSymbolError(f"label {alpha} is not in the alphabet")
                if len(g.args) != 1:
                    raise UnsupportedAtomError(f"{g.pred} expects one argument")
                return label_atom(labels, alpha, g.args[0])
            if g.pred in ("Fc", "Ns"):
                if len(g.args) != 2:
                    raise UnsupportedAtomError(f"{g.pred} expects two arguments")
                x, y = g.args
                if x == y:
                    # A node is never its own first child or next sibling.
                    return false_automaton(labels, (x,))
                return edge_atom(labels, x, y, right_edge=g.pred == "Ns")
            raise UnsupportedAtomError(
                f"relation {g.pred} cannot be compiled; eliminate derived axes first"
            )
        if isinstance(g, Eq):
            return eq_atom(labels, g.left, g.right)
        if isinstance(g, Member):
            return member_atom(labels, g.var, g.set_var)
        if isinstance(g, Not):
            return complement(go(g.sub), state_budget)
        if isinstance(g, And):
            return intersect(go(g.left), go(g.right), state_budget)
        if isinstance(g, Or):
            return union(go(g.left), go(g.right), state_budget)
        if isinstance(g, Implies):
            return union(complement(go(g.left), state_budget), go(g.right), state_budget)
        if isinstance(g, (Exists, ExistsSet)):
            return project(go(g.body), g.var, state_budget)
        if isinstance(g, (Forall, ForallSet)):
            inner = complement(go(g.body), state_budget)
            return complement(project(inner, g.var, state_budget), state_budget)
        raise TypeError(f"not a formula: {g!r}")

    out = go(f)
    want = tuple(sorted(free_vars(f)))
    out = align(out, want) if out.tracked != want else out
    if tracked is not None:
        out = align(out, tuple(tracked))
    return out


# Package-level alias; `compile` shadows the builtin within this module only.
compile_formula = compile


def format_automaton(a: TreeAutomaton) -> str:
    """Readable dump: states, transitions, accepting set."""
    names = {s: f"q{i}" for i, s in enumerate(sorted(a.states, key=repr))}
    names[ABSENT] = "-"
    lines = [
        f"labels: {' '.join(a.labels)}",
        f"tracks: {' '.join(a.tracked) if a.tracked else '(none)'}",
        f"states: {len(a.states)}{' deterministic' if a.deterministic else ''}",
    ]
    for (p, q, label, bits), out in sorted(a.transitions.items(), key=repr):
        sym = label if not bits else f"{label}[{''.join(map(str, bits))}]"
        for s in sorted(out, key=repr):
            lines.append(f"  ({names[p]}, {names[q]}, {sym}) -> {names[s]}")
    lines.append("accepting: " + " ".join(sorted(names[s] for s in a.accepting)))
    return "\n".join(lines)
