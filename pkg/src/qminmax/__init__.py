"""MIN-MAX tree evaluation by random-pivot interval search over a comparison oracle."""

from .evaluator import EvalResult, EvaluatorConfig, evaluate
from .oracle import BOTTOM, TOP, OracleHandle, QueryLedger
from .subroutines import BackendConfig, Interval
from .trees import MinMaxTree, TreeShapeSpec, eval_minmax, gen_tree

__all__ = [
    "BOTTOM",
    "TOP",
    "BackendConfig",
    "EvalResult",
    "EvaluatorConfig",
    "Interval",
    "MinMaxTree",
    "OracleHandle",
    "QueryLedger",
    "TreeShapeSpec",
    "eval_minmax",
    "evaluate",
    "gen_tree",
]
