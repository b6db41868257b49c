"""Command-line interface.

Exit codes: 0 = yes/success, 1 = no (counterexample printed when one
exists), 2 = usage or parse error, 3 = undecided within budget.
"""

from __future__ import annotations

import argparse
import sys

from .datalog import evaluate_query, parse_query
from .decide import (
    TreeMode,
    Verdict,
    bounded_counterexample_search,
    containment,
    equivalence,
    satisfiable,
)
from .errors import ParseError, TreelogError
from .mso import (
    DEFAULT_EVAL_BUDGET,
    evaluate,
    evaluate_unary,
    format_formula,
    free_vars,
    is_set_var,
    parse_formula,
)
from .translate import (
    axis_elim_ordered,
    axis_elim_unordered,
    datalog_to_mso,
    to_prenex_pi1,
    unordered_to_ordered,
)
from .trees import (
    LABEL_PREFIX,
    ORDERED_EXTRAS,
    UNORDERED_EXTRAS,
    Schema,
    build_structure,
    enumerate_trees,
    full_ordered_schema,
    full_unordered_schema,
    marked_ordered_schema,
    ordered_schema,
    parse_tree,
    serialize_tree,
    unordered_schema,
)
from .automata import DEFAULT_STATE_BUDGET

_SCHEMAS = ("u", "u-prime", "o", "o-prime", "marked")


def _node_key(v: str):
    return (len(v), v)


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as handle:
        return handle.read()


def _labels_in_text(*texts: str) -> list[str]:
    found = set()
    for text in texts:
        i = 0
        while True:
            i = text.find(LABEL_PREFIX, i)
            if i < 0:
                break
            i += len(LABEL_PREFIX)
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            if j > i:
                found.add(text[i:j])
            i = j
    return sorted(found)


def _sigma(args, *fallback_texts, tree=None) -> tuple[str, ...]:
    """The alphabet: --sigma if given, else labels mentioned in the
    inputs, else {a, b}."""
    if args.sigma:
        return tuple(s for s in args.sigma.split(",") if s)
    labels = set(_labels_in_text(*fallback_texts))
    if tree is not None:
        labels.update(tree.labels.values())
    return tuple(sorted(labels)) if labels else ("a", "b")


def _schema(args, sigma) -> Schema:
    extras = tuple(s.capitalize() for s in args.extras.split(",") if s) if args.extras else ()
    name = args.schema
    if name == "u":
        return unordered_schema(sigma, extras)
    if name == "u-prime":
        return full_unordered_schema(sigma)
    if name == "o":
        return ordered_schema(sigma, extras)
    if name == "o-prime":
        return full_ordered_schema(sigma)
    return marked_ordered_schema(sigma)


def _mode(args, sigma) -> TreeMode:
    return TreeMode(args.mode == "ordered", tuple(sigma))


def _print_verdict(kind: str, v: Verdict) -> int:
    if v.answer == "unknown":
        print(f"unknown: {v.reason}")
        if v.tree is not None:
            print(f"evidence: {serialize_tree(v.tree)}")
            print(f"node: {v.node}")
        return 3
    if kind == "sat":
        if v.answer == "yes":
            print("satisfiable")
            print(f"witness: {serialize_tree(v.tree)}")
            print(f"node: {v.node}")
            return 0
        print("unsatisfiable")
        return 1
    if v.answer == "yes":
        print("yes")
        return 0
    print("no")
    print(f"counterexample: {serialize_tree(v.tree)}")
    print(f"node: {v.node}")
    return 1


# --- Commands ----------------------------------------------------------------

def _cmd_eval(args) -> int:
    tree = parse_tree(_read(args.tree), ordered=args.schema in ("o", "o-prime", "marked"))
    query = parse_query(_read(args.program))
    sigma = _sigma(args, _read(args.program), tree=tree)
    structure = build_structure(tree, _schema(args, sigma))
    answer = evaluate_query(query, structure)
    for node in sorted(answer, key=_node_key):
        print(node)
    return 0


def _cmd_eval_mso(args) -> int:
    tree = parse_tree(_read(args.tree), ordered=args.schema in ("o", "o-prime", "marked"))
    formula = parse_formula(_read(args.formula))
    sigma = _sigma(args, _read(args.formula), tree=tree)
    structure = build_structure(tree, _schema(args, sigma))
    free = free_vars(formula)
    if not free:
        value = evaluate(formula, structure, budget=args.eval_budget)
        print("true" if value else "false")
        return 0
    if len(free) == 1 and not is_set_var(next(iter(free))):
        for node in sorted(evaluate_unary(formula, structure, budget=args.eval_budget),
                           key=_node_key):
            print(node)
        return 0
    print(f"error: formula must be a sentence or unary, free variables are "
          f"{sorted(free)}", file=sys.stderr)
    return 2


def _cmd_translate(args) -> int:
    query = parse_query(_read(args.program))
    formula = datalog_to_mso(query)
    if args.prenex:
        formula = to_prenex_pi1(formula)
    print(format_formula(formula))
    return 0


def _cmd_axis_elim(args) -> int:
    formula = parse_formula(_read(args.formula))
    if args.mode == "ordered":
        formula = axis_elim_ordered(formula)
    else:
        formula = axis_elim_unordered(formula)
        if args.transfer:
            formula = unordered_to_ordered(formula)
    print(format_formula(formula))
    return 0


def _cmd_check_contained(args) -> int:
    q1 = parse_query(_read(args.program1))
    q2 = parse_query(_read(args.program2))
    sigma = _sigma(args, _read(args.program1), _read(args.program2))
    verdict = containment(q1, q2, _mode(args, sigma),
                          state_budget=args.state_budget,
                          search_nodes=args.max_nodes)
    return _print_verdict("contain", verdict)


def _cmd_check_equiv(args) -> int:
    q1 = parse_query(_read(args.program1))
    q2 = parse_query(_read(args.program2))
    sigma = _sigma(args, _read(args.program1), _read(args.program2))
    verdict = equivalence(q1, q2, _mode(args, sigma),
                          state_budget=args.state_budget,
                          search_nodes=args.max_nodes)
    return _print_verdict("equiv", verdict)


def _cmd_check_sat(args) -> int:
    q = parse_query(_read(args.program))
    sigma = _sigma(args, _read(args.program))
    verdict = satisfiable(q, _mode(args, sigma),
                          state_budget=args.state_budget,
                          search_nodes=args.max_nodes)
    return _print_verdict("sat", verdict)


def _cmd_search(args) -> int:
    q1 = parse_query(_read(args.program1))
    q2 = parse_query(_read(args.program2))
    sigma = _sigma(args, _read(args.program1), _read(args.program2))
    found = bounded_counterexample_search(q1, q2, _mode(args, sigma), args.max_nodes)
    if found is None:
        print(f"no counterexample with at most {args.max_nodes} nodes")
        return 0
    tree, node = found
    print("no")
    print(f"counterexample: {serialize_tree(tree)}")
    print(f"node: {node}")
    return 1


def _cmd_enumerate(args) -> int:
    sigma = _sigma(args)
    for tree in enumerate_trees(sigma, args.max_nodes, ordered=args.mode == "ordered"):
        print(serialize_tree(tree))
    return 0


# --- Argument plumbing -------------------------------------------------------

def _add_sigma(p):
    p.add_argument("--sigma", help="comma-separated alphabet; defaults to the "
                   "labels mentioned in the inputs, else a,b")


def _add_mode(p):
    p.add_argument("--mode", choices=("ordered", "unordered"), default="unordered",
                   help="which kind of trees (default unordered)")


def _add_limits(p):
    p.add_argument("--state-budget", type=int, default=DEFAULT_STATE_BUDGET,
                   help="automata state cap before giving up as unknown")
    p.add_argument("--max-nodes", type=int, default=4,
                   help="bounded-search tree size limit")


def _add_schema(p):
    p.add_argument("--schema", choices=_SCHEMAS, default="u-prime",
                   help="structure schema (default u-prime)")
    p.add_argument("--with", dest="extras", default="",
                   help="extra axis relations for the u/o schemas, e.g. "
                   f"--with root,leaf (unordered: {','.join(s.lower() for s in UNORDERED_EXTRAS)}; "
                   f"ordered: {','.join(s.lower() for s in ORDERED_EXTRAS)})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treelog",
        description="Monadic datalog and MSO on labeled trees: evaluation, "
                    "translation, and decision procedures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate a datalog query on a tree")
    p.add_argument("--tree", required=True)
    p.add_argument("--program", required=True)
    _add_schema(p)
    _add_sigma(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("eval-mso", help="evaluate an MSO formula on a tree")
    p.add_argument("--tree", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--eval-budget", type=int, default=DEFAULT_EVAL_BUDGET)
    _add_schema(p)
    _add_sigma(p)
    p.set_defaults(func=_cmd_eval_mso)

    p = sub.add_parser("translate", help="translate a datalog query to MSO")
    p.add_argument("--program", required=True)
    p.add_argument("--prenex", action="store_true",
                   help="also move to the universal-set-prefix form")
    p.set_defaults(func=_cmd_translate)

    p = sub.add_parser("axis-elim", help="rewrite derived axis relations away")
    p.add_argument("--formula", required=True)
    p.add_argument("--transfer", action="store_true",
                   help="after unordered elimination, move to the ordered base schema")
    _add_mode(p)
    p.set_defaults(func=_cmd_axis_elim)

    p = sub.add_parser("check-contained", help="decide query containment")
    p.add_argument("program1")
    p.add_argument("program2")
    _add_mode(p)
    _add_sigma(p)
    _add_limits(p)
    p.set_defaults(func=_cmd_check_contained)

    p = sub.add_parser("check-equiv", help="decide query equivalence")
    p.add_argument("program1")
    p.add_argument("program2")
    _add_mode(p)
    _add_sigma(p)
    _add_limits(p)
    p.set_defaults(func=_cmd_check_equiv)

    p = sub.add_parser("check-sat", help="decide query satisfiability")
    p.add_argument("--program", required=True)
    _add_mode(p)
    _add_sigma(p)
    _add_limits(p)
    p.set_defaults(func=_cmd_check_sat)

    p = sub.add_parser("search-counterexample",
                       help="refute containment by bounded enumeration")
    p.add_argument("program1")
    p.add_argument("program2")
    _add_mode(p)
    _add_sigma(p)
    p.add_argument("--max-nodes", type=int, default=5)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("enumerate", help="list all trees up to a size")
    _add_mode(p)
    _add_sigma(p)
    p.add_argument("--max-nodes", type=int, required=True)
    p.set_defaults(func=_cmd_enumerate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return 2
    except TreelogError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
