"""Monadic second-order formulas over relational structures.

Atoms are relation atoms R(x, ...), equalities x = y, and set memberships
X(x).  Node variables start with a lowercase letter, set variables with
an uppercase letter.  The connectives are ~, |, &, -> (with & and ->
normalizing into the ~/| core), and the quantifiers E x, A x over nodes
and E2 X, A2 X over node sets.

Evaluation is Tarskian: node quantifiers range over the domain and set
quantifiers over all 2^|domain| subsets, enumerated in a canonical order
(sorted domain, ascending bitmask).  Direct evaluation refuses to start
when 2^(set-quantifier nesting * |domain|) exceeds a budget; such
formulas need the automata backend or a smaller structure.

Internally, truth values are bitmasks over the sorted domain: a formula
with one designated free variable evaluates to the set of nodes that
satisfy it, in a single pass.  Set-quantifier blocks are evaluated by
grounding their body (expanding node quantifiers and fixed atoms) into a
propositional form over set-membership bits, which the subset loop can
test cheaply; when the grounded body is a disjunction of literal
conjunctions the loop is vectorized with numpy.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

try:
    import numpy as _np
except ImportError:  # pragma: no cover
    _np = None

from .errors import (
    BudgetExceededError,
    FreeVariableShapeError,
    ParseError,
    UnboundVariableError,
    UnknownSymbolError,
)
from .trees import Structure

DEFAULT_EVAL_BUDGET = 2 ** 26

# Combo spaces bigger than this stay in pure-Python loops (memory bound).
_NUMPY_MAX = 2 ** 22
_NUMPY_MIN = 64


def is_set_var(name: str) -> bool:
    return name[:1].isupper()


@dataclass(frozen=True)
class Rel:
    """Relation atom: pred applied to node variables."""

    pred: str
    args: tuple[str, ...]

    def __repr__(self):
        return f"{self.pred}({', '.join(self.args)})"


@dataclass(frozen=True)
class Eq:
    left: str
    right: str

    def __repr__(self):
        return f"{self.left} = {self.right}"


@dataclass(frozen=True)
class Member:
    """x in X, written X(x)."""

    var: str
    set_var: str

    def __repr__(self):
        return f"{self.set_var}({self.var})"


@dataclass(frozen=True)
class Not:
    sub: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class ExistsSet:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class ForallSet:
    var: str
    body: "Formula"


Formula = (
    Rel | Eq | Member | Not | Or | And | Implies
    | Exists | Forall | ExistsSet | ForallSet
)

_QUANTIFIERS = (Exists, Forall, ExistsSet, ForallSet)
_BINARY = (Or, And, Implies)


def neq(left: str, right: str) -> Formula:
    return Not(Eq(left, right))


def iff(a: Formula, b: Formula) -> Formula:
    return And(Implies(a, b), Implies(b, a))


def conj(items: Sequence[Formula]) -> Formula:
    """Left-associated conjunction of a non-empty sequence."""
    out = items[0]
    for item in items[1:]:
        out = And(out, item)
    return out


def disj(items: Sequence[Formula]) -> Formula:
    out = items[0]
    for item in items[1:]:
        out = Or(out, item)
    return out


def free_vars(f: Formula) -> frozenset[str]:
    if isinstance(f, Rel):
        return frozenset(f.args)
    if isinstance(f, Eq):
        return frozenset((f.left, f.right))
    if isinstance(f, Member):
        return frozenset((f.var, f.set_var))
    if isinstance(f, Not):
        return free_vars(f.sub)
    if isinstance(f, _BINARY):
        return free_vars(f.left) | free_vars(f.right)
    return free_vars(f.body) - {f.var}


def subformulas(f: Formula):
    yield f
    if isinstance(f, Not):
        yield from subformulas(f.sub)
    elif isinstance(f, _BINARY):
        yield from subformulas(f.left)
        yield from subformulas(f.right)
    elif isinstance(f, _QUANTIFIERS):
        yield from subformulas(f.body)


def set_quantifier_nesting(f: Formula) -> int:
    """Maximum number of set quantifiers on any root-to-leaf path."""
    if isinstance(f, Not):
        return set_quantifier_nesting(f.sub)
    if isinstance(f, _BINARY):
        return max(set_quantifier_nesting(f.left), set_quantifier_nesting(f.right))
    if isinstance(f, (Exists, Forall)):
        return set_quantifier_nesting(f.body)
    if isinstance(f, (ExistsSet, ForallSet)):
        return 1 + set_quantifier_nesting(f.body)
    return 0


def normalize(f: Formula) -> Formula:
    """Rewrite derived connectives into the ~/| core."""
    if isinstance(f, (Rel, Eq, Member)):
        return f
    if isinstance(f, Not):
        return Not(normalize(f.sub))
    if isinstance(f, Or):
        return Or(normalize(f.left), normalize(f.right))
    if isinstance(f, And):
        return Not(Or(Not(normalize(f.left)), Not(normalize(f.right))))
    if isinstance(f, Implies):
        return Or(Not(normalize(f.left)), normalize(f.right))
    return type(f)(f.var, normalize(f.body))


def canonical(f: Formula) -> Formula:
    """Normalized core form with bound variables renamed in traversal
    order; two formulas are equal up to derived connectives and bound
    renaming iff their canonical forms are equal."""
    counter = [0]

    def walk(g: Formula, scope: dict[str, str]) -> Formula:
        if isinstance(g, Rel):
            return Rel(g.pred, tuple(scope.get(v, v) for v in g.args))
        if isinstance(g, Eq):
            return Eq(scope.get(g.left, g.left), scope.get(g.right, g.right))
        if isinstance(g, Member):
            return Member(scope.get(g.var, g.var), scope.get(g.set_var, g.set_var))
        if isinstance(g, Not):
            return Not(walk(g.sub, scope))
        if isinstance(g, Or):
            return Or(walk(g.left, scope), walk(g.right, scope))
        fresh = ("Q" if is_set_var(g.var) else "q") + str(counter[0])
        counter[0] += 1
        inner = dict(scope)
        inner[g.var] = fresh
        return type(g)(fresh, walk(g.body, inner))

    return walk(normalize(f), {})


def formulas_equal(f: Formula, g: Formula) -> bool:
    return canonical(f) == canonical(g)


def is_pi1(f: Formula) -> bool:
    """Is f of the shape A2 X1...Xm. E x1...xk. (quantifier-free)?"""
    while isinstance(f, ForallSet):
        f = f.body
    while isinstance(f, Exists):
        f = f.body
    return not any(isinstance(g, _QUANTIFIERS) for g in subformulas(f))


# --- Parsing ----------------------------------------------------------------

_KEYWORDS = {"E", "A", "E2", "A2"}


class _FTokens:
    SYMBOLS = ("->", "!=", "=", "~", "&", "|", "(", ")", ",", ".")

    def __init__(self, text: str):
        import re

        self.items = []
        line, col = 1, 1
        i = 0
        while i < len(text):
            c = text[i]
            if c == "\n":
                line, col = line + 1, 1
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


def parse_formula(text: str) -> Formula:
    """Parse the surface syntax.

    Precedence, loosest first: ->, |, &, then ~ and quantifiers; a
    quantifier's body extends as far to the right as possible.  An
    applied identifier is a set membership when it looks like a set
    variable (one uppercase letter plus digits) and a relation atom
    otherwise.  E, A, E2, A2 are reserved.
    """
    import re

    toks = _FTokens(text)
    set_var_re = re.compile(r"[A-Z][0-9]*")

    def fail(tok, msg):
        raise ParseError(msg, tok[2], tok[3])

    def parse_implies() -> Formula:
        left = parse_or()
        if toks.peek()[1] == "->":
            toks.next()
            return Implies(left, parse_implies())
        return left

    def parse_or() -> Formula:
        out = parse_and()
        while toks.peek()[1] == "|":
            toks.next()
            out = Or(out, parse_and())
        return out

    def parse_and() -> Formula:
        out = parse_unary()
        while toks.peek()[1] == "&":
            toks.next()
            out = And(out, parse_unary())
        return out

    def parse_unary() -> Formula:
        tok = toks.peek()
        if tok[1] == "~":
            toks.next()
            return Not(parse_unary())
        if tok[0] == "ident" and tok[1] in _KEYWORDS:
            toks.next()
            var = toks.next()
            if var[0] != "ident":
                fail(var, "expected a variable after the quantifier")
            second_order = tok[1] in ("E2", "A2")
            if second_order and not set_var_re.fullmatch(var[1]):
                fail(var, f"set variables look like X or X1, found {var[1]!r}")
            if not second_order and is_set_var(var[1]):
                fail(var, f"node variables start lowercase, found {var[1]!r}")
            dot = toks.next()
            if dot[1] != ".":
                fail(dot, "expected '.' after the quantified variable")
            body = parse_implies()
            kind = {"E": Exists, "A": Forall, "E2": ExistsSet, "A2": ForallSet}[tok[1]]
            return kind(var[1], body)
        return parse_atom()

    def parse_atom() -> Formula:
        tok = toks.next()
        if tok[1] == "(":
            inner = parse_implies()
            close = toks.next()
            if close[1] != ")":
                fail(close, "expected ')'")
            return inner
        if tok[0] != "ident":
            fail(tok, f"unexpected {tok[1] or 'end of input'!r}")
        name = tok[1]
        if name in _KEYWORDS:
            fail(tok, f"{name} is reserved for quantifiers")
        nxt = toks.peek()
        if nxt[1] == "(":
            toks.next()
            args = []
            while True:
                arg = toks.next()
                if arg[0] != "ident" or is_set_var(arg[1]):
                    fail(arg, "expected a node variable")
                args.append(arg[1])
                sep = toks.next()
                if sep[1] == ")":
                    break
                if sep[1] != ",":
                    fail(sep, "expected ',' or ')'")
            if set_var_re.fullmatch(name):
                if len(args) != 1:
                    fail(tok, "set membership takes one argument")
                return Member(args[0], name)
            return Rel(name, tuple(args))
        if nxt[1] in ("=", "!="):
            toks.next()
            rhs = toks.next()
            if rhs[0] != "ident" or is_set_var(rhs[1]):
                fail(rhs, "expected a node variable")
            if is_set_var(name):
                fail(tok, "equality applies to node variables")
            return Eq(name, rhs[1]) if nxt[1] == "=" else Not(Eq(name, rhs[1]))
        fail(tok, f"expected '(' or '=' after {name!r}")

    out = parse_implies()
    tok = toks.peek()
    if tok[0] != "eof":
        fail(tok, f"unexpected {tok[1]!r}")
    return out


def format_formula(f: Formula) -> str:
    """Serialize to the surface syntax; parse_formula round-trips it."""

    def prec(g: Formula) -> int:
        # A quantifier body extends maximally, so a quantifier needs
        # parentheses anywhere an implication would.
        if isinstance(g, (Implies, *_QUANTIFIERS)):
            return 1
        if isinstance(g, Or):
            return 2
        if isinstance(g, And):
            return 3
        if isinstance(g, Not):
            return 4
        return 5

    def walk(g: Formula, min_prec: int) -> str:
        if isinstance(g, Rel):
            out = f"{g.pred}({', '.join(g.args)})"
        elif isinstance(g, Eq):
            out = f"{g.left} = {g.right}"
        elif isinstance(g, Member):
            out = f"{g.set_var}({g.var})"
        elif isinstance(g, Not) and isinstance(g.sub, Eq):
            out = f"{g.sub.left} != {g.sub.right}"
        elif isinstance(g, Not):
            out = "~" + walk(g.sub, 4)
        elif isinstance(g, Implies):
            out = walk(g.left, 2) + " -> " + walk(g.right, 1)
        elif isinstance(g, Or):
            out = walk(g.left, 2) + " | " + walk(g.right, 3)
        elif isinstance(g, And):
            out = walk(g.left, 3) + " & " + walk(g.right, 4)
        else:
            kind = {Exists: "E", Forall: "A", ExistsSet: "E2", ForallSet: "A2"}[type(g)]
            out = f"{kind} {g.var}. " + walk(g.body, 1)
        if prec(g) < min_prec:
            return "(" + out + ")"
        return out

    return walk(f, 1)


def rename_bound_apart(f: Formula, avoid: Iterable[str] = ()) -> Formula:
    """Rename every bound variable to a fresh distinct name."""
    used = set(avoid) | {v for g in subformulas(f) for v in _mentioned(g)}
    counter = [0]

    def fresh(set_kind: bool) -> str:
        while True:
            name = ("B" if set_kind else "b") + str(counter[0])
            counter[0] += 1
            if name not in used:
                used.add(name)
                return name

    def walk(g: Formula, scope: dict[str, str]) -> Formula:
        if isinstance(g, Rel):
            return Rel(g.pred, tuple(scope.get(v, v) for v in g.args))
        if isinstance(g, Eq):
            return Eq(scope.get(g.left, g.left), scope.get(g.right, g.right))
        if isinstance(g, Member):
            return Member(scope.get(g.var, g.var), scope.get(g.set_var, g.set_var))
        if isinstance(g, Not):
            return Not(walk(g.sub, scope))
        if isinstance(g, _BINARY):
            return type(g)(walk(g.left, scope), walk(g.right, scope))
        name = fresh(isinstance(g, (ExistsSet, ForallSet)))
        inner = dict(scope)
        inner[g.var] = name
        return type(g)(name, walk(g.body, inner))

    return walk(f, {})


def _mentioned(g: Formula) -> tuple[str, ...]:
    if isinstance(g, Rel):
        return g.args
    if isinstance(g, Eq):
        return (g.left, g.right)
    if isinstance(g, Member):
        return (g.var, g.set_var)
    if isinstance(g, _QUANTIFIERS):
        return (g.var,)
    return ()


def substitute(f: Formula, mapping: Mapping[str, str]) -> Formula:
    """Rename free variables, renaming bound ones apart when they would
    capture a substituted name."""
    targets = set(mapping.values())

    def walk(g: Formula, scope: dict[str, str]) -> Formula:
        def look(v: str) -> str:
            if v in scope:
                return scope[v]
            return mapping.get(v, v)

        if isinstance(g, Rel):
            return Rel(g.pred, tuple(look(v) for v in g.args))
        if isinstance(g, Eq):
            return Eq(look(g.left), look(g.right))
        if isinstance(g, Member):
            return Member(look(g.var), look(g.set_var))
        if isinstance(g, Not):
            return Not(walk(g.sub, scope))
        if isinstance(g, _BINARY):
            return type(g)(walk(g.left, scope), walk(g.right, scope))
        inner = dict(scope)
        if g.var in targets:
            base = g.var
            k = 0
            while True:
                candidate = f"{base}_{k}"
                if candidate not in targets and candidate not in mapping:
                    break
                k += 1
            inner[g.var] = candidate
            return type(g)(candidate, walk(g.body, inner))
        inner[g.var] = g.var
        return type(g)(g.var, walk(g.body, inner))

    return walk(f, {})


# --- Evaluation -------------------------------------------------------------

class _Fallback(Exception):
    """Grounding met a shape it cannot flatten; use the generic loop."""


# Grounded propositional nodes, over block-variable membership bits.
# ("const", mask) ("lit", k, i) ("nlit", k, i) ("slit", k) ("nslit", k)
# ("and", items) ("or", items)

_COST = {"const": 0, "lit": 1, "nlit": 1, "slit": 2, "nslit": 2, "and": 3, "or": 3}


class _Evaluator:
    """Shared state for evaluating one formula on one structure."""

    def __init__(self, a: Structure, budget: int):
        self.structure = a
        self.domain: list[str] = sorted(a.domain)
        self.index = {v: i for i, v in enumerate(self.domain)}
        self.n = len(self.domain)
        self.ones = (1 << self.n) - 1
        self.budget = budget
        self.symbols = a.schema.symbols()
        # Memo tables; formulas are kept referenced so ids stay valid.
        self._free: dict[int, tuple[Formula, frozenset[str]]] = {}
        self._memo: dict[int, tuple[Formula, dict]] = {}
        self.sym: str | None = None
        # Block state during grounding: var name -> position.
        self._block: dict[str, int] = {}

    # -- bookkeeping

    def free(self, f: Formula) -> frozenset[str]:
        got = self._free.get(id(f))
        if got is None:
            fv = free_vars(f)
            self._free[id(f)] = (f, fv)
            return fv
        return got[1]

    def check_budget(self, f: Formula):
        nesting = set_quantifier_nesting(f)
        if nesting and self.n * nesting >= self.budget.bit_length():
            raise BudgetExceededError(
                f"2^({nesting} set quantifiers * {self.n} nodes) exceeds the "
                f"evaluation budget; use the automata backend or a smaller tree"
            )

    # -- atoms

    def atom_mask(self, f: Formula, env: dict) -> int:
        sym = self.sym
        if isinstance(f, Rel):
            if f.pred not in self.symbols:
                raise UnknownSymbolError(f"relation {f.pred} is not in the schema")
            rel = self.structure.rel(f.pred)
            if self.structure.schema.arity(f.pred) != len(f.args):
                raise UnknownSymbolError(f"relation {f.pred} used with arity {len(f.args)}")
            fixed = []
            symbolic = False
            for v in f.args:
                if v == sym:
                    symbolic = True
                    fixed.append(None)
                elif v in env:
                    fixed.append(self.domain[env[v]])
                else:
                    raise UnboundVariableError(f"variable {v} is not bound")
            if not symbolic:
                return self.ones if tuple(fixed) in rel else 0
            mask = 0
            for i, elem in enumerate(self.domain):
                if tuple(elem if x is None else x for x in fixed) in rel:
                    mask |= 1 << i
            return mask
        if isinstance(f, Eq):
            u, w = f.left, f.right
            if u == sym and w == sym:
                return self.ones
            if u == sym or w == sym:
                other = w if u == sym else u
                if other not in env:
                    raise UnboundVariableError(f"variable {other} is not bound")
                return 1 << env[other]
            for v in (u, w):
                if v not in env:
                    raise UnboundVariableError(f"variable {v} is not bound")
            return self.ones if env[u] == env[w] else 0
        # Member with the set variable bound to a subset mask.
        if f.set_var not in env:
            raise UnboundVariableError(f"set variable {f.set_var} is not bound")
        sv = env[f.set_var]
        if f.var == sym:
            return sv
        if f.var not in env:
            raise UnboundVariableError(f"variable {f.var} is not bound")
        return self.ones if (sv >> env[f.var]) & 1 else 0

    # -- generic recursion

    def mask(self, f: Formula, env: dict) -> int:
        if isinstance(f, (Rel, Eq, Member)):
            return self.atom_mask(f, env)
        if isinstance(f, Not):
            return self.ones ^ self.mask(f.sub, env)
        if isinstance(f, And):
            m = self.mask(f.left, env)
            return m & self.mask(f.right, env) if m else 0
        if isinstance(f, Or):
            m = self.mask(f.left, env)
            return m | self.mask(f.right, env) if m != self.ones else self.ones
        if isinstance(f, Implies):
            m = self.mask(f.left, env)
            return self.ones if m == 0 else (self.ones ^ m) | self.mask(f.right, env)
        if isinstance(f, (Exists, Forall)):
            return self.memoized(f, env, self.quantifier_mask)
        return self.memoized(f, env, self.set_block_mask)

    def memoized(self, f: Formula, env: dict, compute) -> int:
        entry = self._memo.get(id(f))
        if entry is None:
            entry = (f, {})
            self._memo[id(f)] = entry
        fv = self.free(f)
        if fv <= env.keys():
            key = tuple(env[v] for v in sorted(fv))
            got = entry[1].get(key)
            if got is None:
                got = compute(f, env)
                entry[1][key] = got
            return got
        return compute(f, env)

    def quantifier_mask(self, f: Exists | Forall, env: dict) -> int:
        exists = isinstance(f, Exists)
        if f.var not in self.free(f.body):
            return self.mask(f.body, env)
        # E x distributes over |, A x over &.
        acc = 0 if exists else self.ones
        for piece in self.flatten(f.body, Or if exists else And):
            m = self.quant_piece(exists, f.var, piece, env)
            acc = acc | m if exists else acc & m
            if (exists and acc == self.ones) or (not exists and acc == 0):
                break
        return acc

    def quant_piece(self, exists: bool, var: str, body: Formula, env: dict) -> int:
        if var not in self.free(body):
            return self.mask(body, env)
        # E x. (p & q) hoists x-independent conjuncts (dually for A).
        parts = self.flatten(body, And if exists else Or)
        dep = [p for p in parts if var in self.free(p)]
        indep = [p for p in parts if var not in self.free(p)]
        outer = self.ones if exists else 0
        for p in indep:
            m = self.mask(p, env)
            outer = outer & m if exists else outer | m
            if (exists and outer == 0) or (not exists and outer == self.ones):
                return outer
        acc = 0 if exists else self.ones
        saved = env.get(var)
        for i in range(self.n):
            env[var] = i
            m = self.mask(dep[0], env)
            for p in dep[1:]:
                if (exists and m == 0) or (not exists and m == self.ones):
                    break
                m = m & self.mask(p, env) if exists else m | self.mask(p, env)
            acc = acc | m if exists else acc & m
            if (exists and acc == self.ones) or (not exists and acc == 0):
                break
        if saved is None:
            env.pop(var, None)
        else:
            env[var] = saved
        return acc & outer if exists else acc | outer

    @staticmethod
    def flatten(f: Formula, op) -> list[Formula]:
        if not isinstance(f, op):
            return [f]
        out = []
        stack = [f]
        while stack:
            g = stack.pop()
            if isinstance(g, op):
                stack.append(g.right)
                stack.append(g.left)
            else:
                out.append(g)
        return out

    # -- set-quantifier blocks

    def set_block_mask(self, f: Formula, env: dict) -> int:
        block: list[tuple[bool, str]] = []  # (is_exists, var)
        body: Formula = f
        while isinstance(body, (ExistsSet, ForallSet)):
            block.append((isinstance(body, ExistsSet), body.var))
            body = body.body
        try:
            gnode = self.ground(body, env, {var: k for k, (_, var) in enumerate(block)})
        except _Fallback:
            return self.generic_block(block, body, env, 0)
        clauses = self.extract_clauses(gnode, len(block))
        total_bits = len(block) * self.n
        if (
            clauses is not None
            and _np is not None
            and _NUMPY_MIN <= (1 << total_bits) <= _NUMPY_MAX
        ):
            return self.numpy_block(block, clauses)
        combo = [0] * len(block)
        if clauses is not None:
            leaf = lambda: self.eval_clauses(clauses, combo)
        else:
            leaf = lambda: self.walk(gnode, combo)
        return self.combo_loop(block, combo, 0, leaf)

    def generic_block(self, block, body, env, k) -> int:
        if k == len(block):
            return self.mask(body, env)
        exists, var = block[k]
        acc = 0 if exists else self.ones
        saved = env.get(var)
        for m in range(1 << self.n):
            env[var] = m
            r = self.generic_block(block, body, env, k + 1)
            acc = acc | r if exists else acc & r
            if (exists and acc == self.ones) or (not exists and acc == 0):
                break
        if saved is None:
            env.pop(var, None)
        else:
            env[var] = saved
        return acc

    def combo_loop(self, block, combo, k, leaf) -> int:
        if k == len(block):
            return leaf()
        exists = block[k][0]
        acc = 0 if exists else self.ones
        for m in range(1 << self.n):
            combo[k] = m
            r = self.combo_loop(block, combo, k + 1, leaf)
            acc = acc | r if exists else acc & r
            if (exists and acc == self.ones) or (not exists and acc == 0):
                break
        return acc

    # -- grounding

    def ground(self, f: Formula, env: dict, block: dict[str, int]):
        if isinstance(f, Member) and f.set_var in block:
            k = block[f.set_var]
            if f.var == self.sym:
                return ("slit", k)
            if f.var in env:
                return ("lit", k, env[f.var])
            raise UnboundVariableError(f"variable {f.var} is not bound")
        if isinstance(f, (Rel, Eq, Member)):
            return ("const", self.atom_mask(f, env))
        if isinstance(f, Not):
            return self.g_not(self.ground(f.sub, env, block))
        if isinstance(f, And):
            return self.g_and([self.ground(p, env, block) for p in self.flatten(f, And)])
        if isinstance(f, Or):
            return self.g_or([self.ground(p, env, block) for p in self.flatten(f, Or)])
        if isinstance(f, Implies):
            return self.g_or(
                [self.g_not(self.ground(f.left, env, block)), self.ground(f.right, env, block)]
            )
        if isinstance(f, (ExistsSet, ForallSet)):
            # A nested block is evaluated eagerly when self-contained.
            if self.free(f) & block.keys():
                raise _Fallback()
            return ("const", self.mask(f, env))
        return self.ground_quant(isinstance(f, Exists), f.var, f.body, env, block)

    def ground_quant(self, exists: bool, var: str, body: Formula, env: dict, block):
        # Same-kind quantifiers commute, so a whole run is pushed inward as
        # one block.
        run = [var]
        kind = Exists if exists else Forall
        while isinstance(body, kind):
            run.append(body.var)
            body = body.body
        return self.ground_block(exists, run, body, env, block)

    def ground_block(self, exists: bool, run: list[str], body: Formula, env, block):
        fvb = self.free(body)
        run = [v for v in run if v in fvb]
        if not run:
            return self.ground(body, env, block)
        # E distributes over |, A over &; each branch keeps only the
        # variables it mentions.
        pieces = self.flatten(body, Or if exists else And)
        if len(pieces) > 1:
            combine = self.g_or if exists else self.g_and
            return combine(
                [self.ground_block(exists, run, p, env, block) for p in pieces]
            )
        return self.ground_parts(exists, run, self.flatten(body, And if exists else Or), env, block)

    def ground_parts(self, exists: bool, run: list[str], parts, env: dict, block):
        """Parts are joined by & under an E block (| under A).  Split them
        into groups connected through quantified variables; independent
        groups expand separately."""
        fv = [self.free(p) for p in parts]
        run = [v for v in run if any(v in s for s in fv)]
        join = self.g_and if exists else self.g_or
        if not run:
            return join([self.ground(p, env, block) for p in parts])
        comp: dict[str, int] = {}
        groups: list[list[int]] = []
        for i, s in enumerate(fv):
            mine = s & set(run)
            if not mine:
                groups.append([i])
                continue
            hit = sorted({comp[v] for v in mine if v in comp})
            if not hit:
                g = len(groups)
                groups.append([i])
            else:
                g = hit[0]
                groups[g].append(i)
                for other in hit[1:]:
                    for v, c in comp.items():
                        if c == other:
                            comp[v] = g
                    groups[g].extend(groups[other])
                    groups[other] = []
            for v in mine:
                comp[v] = g
        groups = [g for g in groups if g]
        if len(groups) > 1:
            out = []
            for g in groups:
                sub = [parts[i] for i in g]
                vs = [v for v in run if any(v in fv[i] for i in g)]
                if len(sub) == 1:
                    out.append(self.ground_block(exists, vs, sub[0], env, block))
                else:
                    out.append(self.ground_parts(exists, vs, sub, env, block))
            return join(out)
        if len(parts) == 1:
            p = parts[0]
            if isinstance(p, (Or if exists else And)):
                return self.ground_block(exists, run, p, env, block)
            kind = Exists if exists else Forall
            if isinstance(p, kind):
                inner = list(run)
                while isinstance(p, kind):
                    inner.append(p.var)
                    p = p.body
                return self.ground_block(exists, inner, p, env, block)
        # One connected group: expand the variable occurring in fewest parts.
        var = min(run, key=lambda v: sum(v in s for s in fv))
        rest = [v for v in run if v != var]
        saved = env.get(var)
        branches = []
        stop = ("const", self.ones if exists else 0)
        for i in range(self.n):
            env[var] = i
            b = self.ground_parts(exists, rest, parts, env, block)
            branches.append(b)
            if b == stop:
                break
        if saved is None:
            env.pop(var, None)
        else:
            env[var] = saved
        return self.g_or(branches) if exists else self.g_and(branches)

    def g_not(self, g):
        kind = g[0]
        if kind == "const":
            return ("const", self.ones ^ g[1])
        if kind == "lit":
            return ("nlit", g[1], g[2])
        if kind == "nlit":
            return ("lit", g[1], g[2])
        if kind == "slit":
            return ("nslit", g[1])
        if kind == "nslit":
            return ("slit", g[1])
        if kind == "and":
            return self.g_or([self.g_not(x) for x in g[1]])
        return self.g_and([self.g_not(x) for x in g[1]])

    def g_and(self, items):
        flat: list = []
        const = self.ones
        for item in items:
            if item[0] == "const":
                const &= item[1]
            elif item[0] == "and":
                flat.extend(item[1])
            else:
                flat.append(item)
        if const == 0:
            return ("const", 0)
        if const != self.ones:
            flat.append(("const", const))
        flat.sort(key=lambda g: _COST[g[0]])
        if not flat:
            return ("const", self.ones)
        if len(flat) == 1:
            return flat[0]
        return ("and", tuple(flat))

    def g_or(self, items):
        flat: list = []
        const = 0
        for item in items:
            if item[0] == "const":
                const |= item[1]
            elif item[0] == "or":
                flat.extend(item[1])
            else:
                flat.append(item)
        if const == self.ones:
            return ("const", self.ones)
        if const:
            flat.append(("const", const))
        flat.sort(key=lambda g: _COST[g[0]])
        if not flat:
            return ("const", 0)
        if len(flat) == 1:
            return flat[0]
        return ("or", tuple(flat))

    def walk(self, g, combo) -> int:
        kind = g[0]
        if kind == "const":
            return g[1]
        if kind == "lit":
            return self.ones if (combo[g[1]] >> g[2]) & 1 else 0
        if kind == "nlit":
            return 0 if (combo[g[1]] >> g[2]) & 1 else self.ones
        if kind == "slit":
            return combo[g[1]]
        if kind == "nslit":
            return combo[g[1]] ^ self.ones
        if kind == "and":
            acc = self.ones
            for item in g[1]:
                acc &= self.walk(item, combo)
                if not acc:
                    return 0
            return acc
        acc = 0
        for item in g[1]:
            acc |= self.walk(item, combo)
            if acc == self.ones:
                return self.ones
        return acc

    # -- clause compilation: OR of ANDs of literals

    def extract_clauses(self, gnode, m):
        """[(pos, neg, sym_and, sym_andnot, base)] with per-variable bit
        requirements, or None when the grounded body is not clausal."""
        disjuncts = list(gnode[1]) if gnode[0] == "or" else [gnode]
        clauses = []
        for d in disjuncts:
            parts = list(d[1]) if d[0] == "and" else [d]
            pos = [0] * m
            neg = [0] * m
            sym_and = []
            sym_andnot = []
            base = self.ones
            for p in parts:
                kind = p[0]
                if kind == "lit":
                    pos[p[1]] |= 1 << p[2]
                elif kind == "nlit":
                    neg[p[1]] |= 1 << p[2]
                elif kind == "slit":
                    sym_and.append(p[1])
                elif kind == "nslit":
                    sym_andnot.append(p[1])
                elif kind == "const":
                    base &= p[1]
                else:
                    return None
            if any(pos[k] & neg[k] for k in range(m)) or base == 0:
                continue  # contradictory clause
            clauses.append((pos, neg, tuple(sym_and), tuple(sym_andnot), base))
        return clauses

    def eval_clauses(self, clauses, combo) -> int:
        acc = 0
        ones = self.ones
        for pos, neg, sym_and, sym_andnot, base in clauses:
            value = base
            for k, c in enumerate(combo):
                p = pos[k]
                if p and (c & p) != p:
                    value = 0
                    break
                q = neg[k]
                if q and (c & q):
                    value = 0
                    break
            if not value:
                continue
            for k in sym_and:
                value &= combo[k]
            for k in sym_andnot:
                value &= combo[k] ^ ones
            acc |= value
            if acc == ones:
                return ones
        return acc

    def numpy_block(self, block, clauses) -> int:
        m = len(block)
        n = self.n
        total = 1 << (m * n)
        c = _np.arange(total, dtype=_np.uint64)
        per_var = [(c >> _np.uint64(k * n)) & _np.uint64(self.ones) for k in range(m)]
        acc = _np.zeros(total, dtype=_np.uint64)
        for pos, neg, sym_and, sym_andnot, base in clauses:
            fire = _np.ones(total, dtype=bool)
            for k in range(m):
                if pos[k]:
                    p = _np.uint64(pos[k])
                    fire &= (per_var[k] & p) == p
                if neg[k]:
                    fire &= (per_var[k] & _np.uint64(neg[k])) == 0
            value = _np.full(total, _np.uint64(base))
            for k in sym_and:
                value &= per_var[k]
            for k in sym_andnot:
                value &= per_var[k] ^ _np.uint64(self.ones)
            acc |= _np.where(fire, value, _np.uint64(0))
        # block[0] occupies the low bits of the combo index, so it varies
        # fastest and lands on the last reshaped axis; the innermost
        # quantifier block[-1] is axis 0.  Reduce innermost first.
        arr = acc.reshape((1 << n,) * m)
        for exists, _ in reversed(block):
            op = _np.bitwise_or if exists else _np.bitwise_and
            arr = op.reduce(arr, axis=0)
        return int(arr)


def _prepare(f: Formula, a: Structure, budget: int) -> tuple[_Evaluator, Formula]:
    ev = _Evaluator(a, budget)
    ev.check_budget(f)
    return ev, rename_bound_apart(f)


def _to_env(ev: _Evaluator, assignment: Mapping) -> dict:
    env: dict = {}
    for var, value in (assignment or {}).items():
        if is_set_var(var):
            mask = 0
            for elem in value:
                if elem not in ev.index:
                    raise UnboundVariableError(f"{elem!r} is not a domain element")
                mask |= 1 << ev.index[elem]
            env[var] = mask
        else:
            if value not in ev.index:
                raise UnboundVariableError(f"{value!r} is not a domain element")
            env[var] = ev.index[value]
    return env


def evaluate(f: Formula, a: Structure, assignment: Mapping | None = None, *,
             budget: int = DEFAULT_EVAL_BUDGET) -> bool:
    """Does the structure satisfy f under the assignment?

    The assignment maps node variables to domain elements and set
    variables to iterables of domain elements; it must cover every free
    variable.
    """
    ev, g = _prepare(f, a, budget)
    env = _to_env(ev, assignment or {})
    missing = free_vars(g) - env.keys()
    if missing:
        raise UnboundVariableError(f"unbound free variables: {sorted(missing)}")
    return ev.mask(g, env) == ev.ones


def evaluate_unary(f: Formula, a: Structure, *, budget: int = DEFAULT_EVAL_BUDGET) -> set[str]:
    """All nodes satisfying a formula with exactly one free node variable."""
    fv = free_vars(f)
    if len(fv) != 1 or is_set_var(next(iter(fv))):
        raise FreeVariableShapeError(
            f"expected exactly one free node variable, found {sorted(fv)}"
        )
    ev, g = _prepare(f, a, budget)
    ev.sym = next(iter(free_vars(g)))
    mask = ev.mask(g, {})
    return {ev.domain[i] for i in range(ev.n) if (mask >> i) & 1}


def evaluate_relation(f: Formula, a: Structure, variables: Sequence[str], *,
                      budget: int = DEFAULT_EVAL_BUDGET) -> set[tuple[str, ...]]:
    """All tuples satisfying a formula whose free variables are the given
    node variables, in the given order."""
    fv = free_vars(f)
    if fv != frozenset(variables) or any(is_set_var(v) for v in variables):
        raise FreeVariableShapeError(
            f"free variables {sorted(fv)} do not match {list(variables)}"
        )
    ev, g = _prepare(f, a, budget)
    order = list(variables)
    ev.sym = order[0] if order else None
    rest = order[1:]
    out: set[tuple[str, ...]] = set()

    def assign(k: int, env: dict):
        if k == len(rest):
            mask = ev.mask(g, dict(env))
            for i in range(ev.n):
                if (mask >> i) & 1:
                    out.add((ev.domain[i], *(ev.domain[env[v]] for v in rest)))
            return
        for i in range(ev.n):
            env[rest[k]] = i
            assign(k + 1, env)

    if not order:
        raise FreeVariableShapeError("expected at least one variable")
    assign(0, {})
    return out
