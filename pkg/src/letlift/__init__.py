"""letlift: a rewriting + partial-evaluation engine for a simply typed
object language with let binders.

The engine normalizes terms by evaluation, applying a decision-tree
compiled rule matcher at the root of every base-typed residual, while
let bindings are lifted through applications as telescopes so sharing is
preserved.  Rules may carry executable side conditions over constant-only
pattern variables, and an interval analysis inserts clip annotations that
bounds-conditioned rules consume.  A reference interpreter serves as the
semantics oracle, and naive one-rewrite-at-a-time baselines plus a
benchmark harness reproduce the scaling behavior the design targets.
"""

from .core import (
    BOOL,
    INT,
    UNIT,
    Arrow,
    Expr,
    Ident,
    ListT,
    PairT,
    Ty,
    alpha_eq,
    denote,
    term_stats,
    type_check,
)
from .engine import EngineConfig, RewriteStats, rewrite_head, rewrite_top
from .naive import rewrite_exhaustive, rewrite_once, trace_cost
from .bounds import Interval, analyze_and_clip, interval_op
from .rules import RuleSet, load_rules
from .textio import parse_rules_text, parse_term_text, print_term

__all__ = [
    "BOOL",
    "INT",
    "UNIT",
    "Arrow",
    "EngineConfig",
    "Expr",
    "Ident",
    "Interval",
    "ListT",
    "PairT",
    "RewriteStats",
    "RuleSet",
    "Ty",
    "alpha_eq",
    "analyze_and_clip",
    "denote",
    "interval_op",
    "load_rules",
    "parse_rules_text",
    "parse_term_text",
    "print_term",
    "rewrite_exhaustive",
    "rewrite_head",
    "rewrite_once",
    "rewrite_top",
    "term_stats",
    "trace_cost",
    "type_check",
]

__version__ = "0.1.0"
