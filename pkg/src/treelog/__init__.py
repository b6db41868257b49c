"""Monadic datalog and monadic second-order logic on labeled trees.

The package provides:

- unranked labeled trees, ordered and unordered, with their relational
  structures over a family of schemas (`treelog.trees`);
- monadic datalog programs with fixpoint evaluation (`treelog.datalog`);
- MSO formulas with a direct evaluator (`treelog.mso`);
- the translation from monadic datalog into universal-set-prefix MSO and
  rewritings between tree schemas (`treelog.translate`);
- a tree-automata backend over the first-child/next-sibling encoding
  (`treelog.automata`);
- decision procedures for containment, equivalence, and satisfiability
  of unary queries (`treelog.decide`);
- a command-line surface (`treelog.cli`).
"""

from .errors import (
    AlphabetMismatchError,
    BudgetExceededError,
    DomainError,
    FreeVariableShapeError,
    InvalidProgramError,
    NotASingleTreeError,
    NotASubschemaError,
    NotUnaryError,
    OrderRequiredError,
    ParseError,
    SafetyError,
    StateBudgetExceededError,
    TreelogError,
    UnboundVariableError,
    UnknownLabelError,
    UnknownSymbolError,
    UnsupportedAtomError,
    WrongShapeError,
)
from .trees import (
    Fact,
    LabeledTree,
    Schema,
    Structure,
    atoms,
    build_structure,
    enumerate_trees,
    full_ordered_schema,
    full_unordered_schema,
    marked_ordered_schema,
    ordered_schema,
    parse_tree,
    reduct,
    serialize_tree,
    tree_from_shape,
    unordered_schema,
)
from .datalog import (
    Atom,
    Program,
    Query,
    Rule,
    canonical_query_text,
    check_homomorphism,
    evaluate_query,
    fixpoint,
    immediate_consequence,
    parse_program,
    parse_query,
    query_size,
    validate,
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
    evaluate,
    evaluate_relation,
    evaluate_unary,
    format_formula,
    formulas_equal,
    free_vars,
    is_pi1,
    parse_formula,
)
from .translate import (
    axis_elim_ordered,
    axis_elim_unordered,
    axis_library,
    datalog_to_mso,
    to_prenex_pi1,
    unordered_to_ordered,
)
from .automata import (
    BinaryTree,
    TreeAutomaton,
    compile_formula,
    fcns_decode,
    fcns_encode,
    is_empty,
    run,
)
from .decide import (
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

__version__ = "0.1.0"
