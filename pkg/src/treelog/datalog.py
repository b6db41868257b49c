"""Monadic datalog: programs, parsing, validation, and fixpoint evaluation.

A rule is ``h <- b1, ..., bn`` where the head and body atoms apply
predicates to variables (no constants).  Safety requires every head
variable to occur in the body, which in particular rules out empty
bodies.  A program is monadic when every intensional predicate (one that
occurs in some head) has arity one; extensional predicates may have any
arity and are interpreted by the ambient structure.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import DomainError, InvalidProgramError, ParseError, SafetyError
from .trees import Fact, Schema, Structure

_VAR = re.compile(r"[a-z][A-Za-z0-9_]*")


@dataclass(frozen=True)
class Atom:
    """A predicate applied to variables."""

    pred: str
    args: tuple[str, ...]

    def __post_init__(self):
        if not self.args:
            raise ValueError("atoms must have at least one argument")

    def __repr__(self):
        return f"{self.pred}({', '.join(self.args)})"


@dataclass(frozen=True)
class Rule:
    """head <- body.  Construction enforces safety."""

    head: Atom
    body: tuple[Atom, ...]

    def __post_init__(self):
        body_vars = {v for atom in self.body for v in atom.args}
        missing = set(self.head.args) - body_vars
        if missing:
            raise SafetyError(
                f"head variables {sorted(missing)} do not occur in the body"
            )

    def variables(self) -> tuple[str, ...]:
        """All variables, head first, in order of first occurrence."""
        seen: dict[str, None] = {}
        for atom in (self.head, *self.body):
            for v in atom.args:
                seen.setdefault(v)
        return tuple(seen)

    def __repr__(self):
        return f"{self.head!r} <- {', '.join(map(repr, self.body))}."


@dataclass(frozen=True)
class Program:
    rules: tuple[Rule, ...]

    def idb(self) -> tuple[str, ...]:
        """Intensional predicates, in order of first occurrence as a head."""
        seen: dict[str, None] = {}
        for r in self.rules:
            seen.setdefault(r.head.pred)
        return tuple(seen)

    def edb(self) -> tuple[str, ...]:
        """Extensional predicates: those that occur only in bodies."""
        idb = set(self.idb())
        seen: dict[str, None] = {}
        for r in self.rules:
            for atom in r.body:
                if atom.pred not in idb:
                    seen.setdefault(atom.pred)
        return tuple(seen)

    def arities(self) -> dict[str, int]:
        """Arity of each predicate, by first occurrence."""
        out: dict[str, int] = {}
        for r in self.rules:
            for atom in (r.head, *r.body):
                out.setdefault(atom.pred, len(atom.args))
        return out


@dataclass(frozen=True)
class Query:
    """A program together with its query predicate.

    The predicate is usually intensional but may be extensional, in which
    case the program's rules are irrelevant to the answer.
    """

    program: Program
    predicate: str

    def __post_init__(self):
        preds = set(self.program.arities())
        if self.predicate not in preds:
            raise ValueError(f"query predicate {self.predicate!r} does not occur in the program")

    def arity(self) -> int:
        return self.program.arities()[self.predicate]


# --- Parsing ----------------------------------------------------------------

class _Tokens:
    """Tokenizer over a whole source text, tracking line and column."""

    SYMBOLS = ("<-", "(", ")", ",", ".", ":")

    def __init__(self, text: str):
        self.items: list[tuple[str, str, int, int]] = []  # kind, value, line, col
        line, col = 1, 1
        i = 0
        while i < len(text):
            c = text[i]
            if c == "\n":
                line += 1
                col = 1
                i += 1
                continue
            if c.isspace():
                col += 1
                i += 1
                continue
            if c == "%":
                while i < len(text) and text[i] != "\n":
                    i += 1
                continue
            m = re.match(r"[A-Za-z_][A-Za-z0-9_]*", text[i:])
            if m:
                self.items.append(("ident", m.group(0), line, col))
                i += len(m.group(0))
                col += len(m.group(0))
                continue
            for sym in self.SYMBOLS:
                if text.startswith(sym, i):
                    self.items.append(("sym", sym, line, col))
                    i += len(sym)
                    col += len(sym)
                    break
            else:
                raise ParseError(f"unexpected character {c!r}", line, col)
        self.items.append(("eof", "", line, col))
        self.pos = 0

    def peek(self):
        return self.items[self.pos]

    def next(self):
        tok = self.items[self.pos]
        if tok[0] != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str, value: str | None = None):
        tok = self.next()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value if value is not None else kind
            raise ParseError(f"expected {want!r}, found {tok[1] or 'end of input'!r}", tok[2], tok[3])
        return tok


def _parse_atom(toks: _Tokens) -> Atom:
    name = toks.expect("ident")
    toks.expect("sym", "(")
    args = []
    while True:
        var = toks.expect("ident")
        if not _VAR.fullmatch(var[1]):
            raise ParseError(f"variables must start lowercase, found {var[1]!r}", var[2], var[3])
        args.append(var[1])
        tok = toks.next()
        if tok[1] == ")":
            break
        if tok[1] != ",":
            raise ParseError(f"expected ',' or ')', found {tok[1]!r}", tok[2], tok[3])
    return Atom(name[1], tuple(args))


def _parse_rules(toks: _Tokens) -> list[Rule]:
    rules = []
    while toks.peek()[0] != "eof":
        if toks.peek()[1] == "query":
            break
        head = _parse_atom(toks)
        toks.expect("sym", "<-")
        body = [_parse_atom(toks)]
        while True:
            tok = toks.next()
            if tok[1] == ".":
                break
            if tok[1] != ",":
                raise ParseError(f"expected ',' or '.', found {tok[1]!r}", tok[2], tok[3])
            body.append(_parse_atom(toks))
        rules.append(Rule(head, tuple(body)))
    return rules


def parse_program(text: str) -> Program:
    """Parse rules; ``%`` starts a comment.  Raises ParseError or, for a
    rule with an unsafe head, SafetyError."""
    toks = _Tokens(text)
    rules = _parse_rules(toks)
    tok = toks.peek()
    if tok[0] != "eof":
        raise ParseError(f"unexpected {tok[1]!r}", tok[2], tok[3])
    return Program(tuple(rules))


def parse_query(text: str) -> Query:
    """Parse a program followed by a final ``query: <predicate>`` line."""
    toks = _Tokens(text)
    rules = _parse_rules(toks)
    tok = toks.next()
    if tok[1] != "query":
        raise ParseError("expected a 'query: <predicate>' line", tok[2], tok[3])
    toks.expect("sym", ":")
    pred = toks.expect("ident")
    tok = toks.peek()
    if tok[0] != "eof":
        raise ParseError(f"unexpected {tok[1]!r} after query line", tok[2], tok[3])
    try:
        return Query(Program(tuple(rules)), pred[1])
    except ValueError as e:
        raise ParseError(str(e), pred[2], pred[3]) from None


# --- Validation -------------------------------------------------------------

def validate(program: Program, schema: Schema) -> list[str]:
    """Check a program against a schema; returns violations, never raises.

    Checks: safety (redundant with Rule construction, kept for direct
    callers), monadic intensional predicates, extensional predicates drawn
    from the schema, and consistent arities.
    """
    violations = []
    idb = set(program.idb())
    seen_arity: dict[str, int] = {}
    for r in program.rules:
        body_vars = {v for atom in r.body for v in atom.args}
        missing = set(r.head.args) - body_vars
        if missing:
            violations.append(f"unsafe rule {r!r}: {sorted(missing)} not in the body")
        for atom in (r.head, *r.body):
            known = seen_arity.setdefault(atom.pred, len(atom.args))
            if known != len(atom.args):
                violations.append(
                    f"predicate {atom.pred} used with arities {known} and {len(atom.args)}"
                )
    for pred in sorted(idb):
        if seen_arity[pred] != 1:
            violations.append(f"intensional predicate {pred} has arity {seen_arity[pred]}, not 1")
    symbols = schema.symbols()
    for pred in program.edb():
        if pred not in symbols:
            violations.append(f"extensional predicate {pred} is not in the schema")
        elif schema.arity(pred) != seen_arity[pred]:
            violations.append(
                f"predicate {pred} has schema arity {schema.arity(pred)}, used with {seen_arity[pred]}"
            )
    return violations


def _validated(program: Program, schema: Schema):
    violations = validate(program, schema)
    if violations:
        raise InvalidProgramError(violations)


# --- Evaluation -------------------------------------------------------------

def _match(body: tuple[Atom, ...], index: Mapping[str, set], binding: dict[str, str], out: list):
    """Extend the binding over body atoms left to right, collecting every
    complete match's binding."""
    if not body:
        out.append(dict(binding))
        return
    atom, rest = body[0], body[1:]
    for args in index.get(atom.pred, ()):
        trail = []
        ok = True
        for var, val in zip(atom.args, args):
            bound = binding.get(var)
            if bound is None:
                binding[var] = val
                trail.append(var)
            elif bound != val:
                ok = False
                break
        if ok:
            _match(rest, index, binding, out)
        for var in trail:
            del binding[var]


def immediate_consequence(program: Program, facts: Iterable[Fact], domain: Iterable[str]) -> set[Fact]:
    """One application of the program's rules: the input facts plus every
    head derivable from them by a single rule instance."""
    domain = set(domain)
    result = set(facts)
    for f in result:
        if not set(f.args) <= domain:
            raise DomainError(f"fact {f!r} mentions elements outside the domain")
    index: dict[str, set] = {}
    for f in result:
        index.setdefault(f.pred, set()).add(f.args)
    for rule in program.rules:
        matches: list[dict[str, str]] = []
        _match(rule.body, index, {}, matches)
        for binding in matches:
            result.add(Fact(rule.head.pred, tuple(binding[v] for v in rule.head.args)))
    return result


def fixpoint(program: Program, a: Structure, naive: bool = False) -> set[Fact]:
    """Least fixpoint of the immediate-consequence operator over the
    structure's atoms.

    The default evaluation is semi-naive: each round only considers rule
    instances that use at least one fact derived in the previous round.
    ``naive=True`` iterates the operator directly instead; both compute
    the same set.
    """
    _validated(program, a.schema)
    base = {Fact(sym, t) for sym, tuples in a.relations.items() for t in tuples}
    if naive:
        current = set(base)
        while True:
            nxt = immediate_consequence(program, current, a.domain)
            if nxt == current:
                return current
            current = nxt

    facts = set(base)
    index: dict[str, set] = {}
    for f in facts:
        index.setdefault(f.pred, set()).add(f.args)
    delta: dict[str, set] = {p: set(ts) for p, ts in index.items()}
    while delta:
        new: dict[str, set] = {}
        for rule in program.rules:
            for i, atom in enumerate(rule.body):
                if atom.pred not in delta:
                    continue
                # Atom i ranges over last round's new facts, the rest over
                # everything seen so far.
                narrowed = dict(index)
                narrowed[atom.pred] = delta[atom.pred]
                reordered = (rule.body[i], *rule.body[:i], *rule.body[i + 1:])
                matches: list[dict[str, str]] = []
                _match(reordered, narrowed, {}, matches)
                for binding in matches:
                    fact = Fact(rule.head.pred, tuple(binding[v] for v in rule.head.args))
                    if fact.args not in index.get(fact.pred, set()):
                        new.setdefault(fact.pred, set()).add(fact.args)
        for pred, tuples in new.items():
            index.setdefault(pred, set()).update(tuples)
        delta = new
    return {Fact(p, t) for p, ts in index.items() for t in ts}


def evaluate_query(q: Query, a: Structure):
    """The query's defined relation on the structure.

    Returns a set of nodes for unary queries and a set of tuples otherwise.
    """
    facts = fixpoint(q.program, a)
    tuples = {f.args for f in facts if f.pred == q.predicate}
    if q.arity() == 1:
        return {t[0] for t in tuples}
    return tuples


# --- Size and homomorphisms -------------------------------------------------

def canonical_query_text(q: Query) -> str:
    """A canonical serialization of the query.

    Variables are renamed x0, x1, ... per rule in order of first
    occurrence (head first), rules are sorted, and the program is wrapped
    as ``(P{rule,rule,...})``.  Alpha-equivalent presentations of the same
    rule set therefore serialize identically.
    """

    def rule_text(r: Rule) -> str:
        names = {v: f"x{i}" for i, v in enumerate(r.variables())}

        def atom_text(atom: Atom) -> str:
            return f"{atom.pred}({','.join(names[v] for v in atom.args)})"

        return f"{atom_text(r.head)}<-{','.join(atom_text(b) for b in r.body)}"

    rules = sorted(rule_text(r) for r in q.program.rules)
    return f"({q.predicate}{{{','.join(rules)}}})"


def query_size(q: Query) -> int:
    """Length of the canonical serialization over the query's alphabet:
    one symbol per predicate, one for the arrow, one per parenthesis,
    brace, comma, 'x', and digit."""

    def atom_size(atom: Atom, names: Mapping[str, str]) -> int:
        # pred + parens + commas + renamed variables
        return 3 + (len(atom.args) - 1) + sum(len(names[v]) for v in atom.args)

    total = 5  # ( P { } )
    total += max(len(q.program.rules) - 1, 0)  # commas between rules
    for r in q.program.rules:
        names = {v: f"x{i}" for i, v in enumerate(r.variables())}
        total += atom_size(r.head, names) + 1  # head plus arrow
        total += sum(atom_size(b, names) for b in r.body)
        total += len(r.body) - 1  # commas between body atoms
    return total


def check_homomorphism(h: Mapping[str, str], a: Structure, b: Structure) -> bool:
    """Is h a homomorphism from a to b?

    Requires equal schemas, h total on a's domain with values in b's
    domain, and every tuple of every relation of a mapped into the same
    relation of b.
    """
    if a.schema.symbols() != b.schema.symbols():
        return False
    if set(h) != set(a.domain) or not set(h.values()) <= set(b.domain):
        return False
    for sym, tuples in a.relations.items():
        target = b.rel(sym)
        for t in tuples:
            if tuple(h[x] for x in t) not in target:
                return False
    return True
