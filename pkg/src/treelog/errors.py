"""Exception types shared across the package."""
from __future__ import annotations


class TreelogError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(TreelogError):
    """Syntax error in a tree, program, or formula text, with position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class OrderRequiredError(TreelogError):
    """An order-dependent relation was requested for an unordered tree."""


class UnknownLabelError(TreelogError):
    """A tree carries a label outside the schema's alphabet."""


class NotASubschemaError(TreelogError):
    """Reduct target is not a subset of the structure's schema."""


class SafetyError(TreelogError):
    """A rule head uses a variable that does not occur in the body."""


class InvalidProgramError(TreelogError):
    """A program failed validation against the ambient schema."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class NotUnaryError(TreelogError):
    """An operation requires a query predicate of arity one."""


class DomainError(TreelogError):
    """A fact mentions elements outside the intended domain."""


class UnboundVariableError(TreelogError):
    """Formula evaluation hit a free variable missing from the assignment."""


class UnknownSymbolError(TreelogError):
    """A formula atom uses a relation absent from the structure's schema."""


class FreeVariableShapeError(TreelogError):
    """A formula does not have the free-variable shape an operation needs."""


class BudgetExceededError(TreelogError):
    """Direct evaluation would enumerate more subsets than the budget allows."""


class WrongShapeError(TreelogError):
    """A formula does not have the syntactic shape a rewriting expects."""


class UnsupportedAtomError(TreelogError):
    """The automaton compiler met a relation it has no construction for."""


class StateBudgetExceededError(TreelogError):
    """An automaton construction would exceed the state budget."""


class AlphabetMismatchError(TreelogError):
    """An input tree uses symbols outside an automaton's alphabet."""


class NotASingleTreeError(TreelogError):
    """A binary tree does not encode a single unranked tree."""
