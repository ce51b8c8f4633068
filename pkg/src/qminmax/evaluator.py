"""Random-pivot interval narrowing with a backtracking stack.

Each iteration of the main loop

1. asks the pivot search for a leaf strictly inside the current interval,
2. if one is found, moves the upper end to it when ``value(T) < x_pivot`` and
   the lower end otherwise,
3. checks ``x_lo <= value(T) < x_hi``: on success the interval is pushed,
   on failure the top of the stack is popped into the interval (or the
   interval resets to ``(BOTTOM, TOP)`` when the stack is empty).

After the fixed iteration budget the lower end is returned.  The stack lets
the walk recover from subroutine errors: a wrong refinement is undone by the
next failed range check.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .oracle import BOTTOM, COMPARISON, INPUT_VALUE, TOP, OracleHandle, QueryLedger, index_from_json, index_to_json, is_real
from .subroutines import FULL, BackendConfig, Interval, decide_ge, find_pivot, range_check, range_check_calls
from .trees import eval_minmax

DEFAULT_C_FACTOR = 6.0


@dataclass(frozen=True)
class EvaluatorConfig:
    c_factor: float = DEFAULT_C_FACTOR
    backend: BackendConfig = field(default_factory=BackendConfig)
    early_stop: bool = False
    trace: bool = False
    model: str = COMPARISON

    def __post_init__(self):
        if not self.c_factor > 0:
            raise ConfigurationError("c_factor must be positive")
        if self.model not in (COMPARISON, INPUT_VALUE):
            raise ConfigurationError(f"unknown query model {self.model!r}")
        if self.model == INPUT_VALUE and self.backend.backend == "grover":
            raise ConfigurationError("the grover backend runs in the comparison model only")

    def iterations(self, n):
        return max(1, math.ceil(self.c_factor * math.log2(n + 1)))


@dataclass
class StepRecord:
    iteration: int
    pivot: Optional[int]
    refine: Optional[str]  # "lo", "hi" or None when no pivot was found
    action: str  # "push", "pop" or "reset"
    refined: Interval  # interval after the refinement, before the range check
    interval: Interval  # interval after the iteration
    stack_depth: int
    in_range: Optional[bool] = None
    good: Optional[bool] = None
    refined_in_range: Optional[bool] = None

    @property
    def branch(self):
        return (f"refine-{self.refine}", self.action) if self.refine else (self.action,)

    def to_dict(self):
        return {
            "iteration": self.iteration,
            "pivot": self.pivot,
            "refine": self.refine,
            "action": self.action,
            "refined": self.refined.to_dict(),
            "interval": self.interval.to_dict(),
            "stack_depth": self.stack_depth,
            "in_range": self.in_range,
            "good": self.good,
            "refined_in_range": self.refined_in_range,
        }

    @classmethod
    def from_dict(cls, d):
        def iv(x):
            return Interval(index_from_json(x["lo"]), index_from_json(x["hi"]))

        return cls(
            iteration=d["iteration"],
            pivot=d["pivot"],
            refine=d["refine"],
            action=d["action"],
            refined=iv(d["refined"]),
            interval=iv(d["interval"]),
            stack_depth=d["stack_depth"],
            in_range=d.get("in_range"),
            good=d.get("good"),
            refined_in_range=d.get("refined_in_range"),
        )


@dataclass
class EvalState:
    interval: Interval = FULL
    stack: list = field(default_factory=list)
    iteration: int = 0
    trace: Optional[list] = None
    pivot_calls: int = 0
    pivots_found: int = 0
    decide_calls: int = 0
    pivot_comparisons: int = 0
    converged: bool = False  # last iteration found no pivot and passed the range check


@dataclass
class EvalResult:
    answer: object
    succeeded: bool
    iterations: int
    ledger: QueryLedger
    stack_depth: int
    pivot_calls: int
    decide_calls: int
    pivot_comparisons: int
    converged_after: Optional[int] = None
    trace: Optional[list] = None

    def to_dict(self):
        return {
            "answer": index_to_json(self.answer),
            "succeeded": self.succeeded,
            "iterations": self.iterations,
            "ledger": self.ledger.to_dict(),
            "stack_depth": self.stack_depth,
            "pivot_calls": self.pivot_calls,
            "decide_calls": self.decide_calls,
            "pivot_comparisons": self.pivot_comparisons,
            "converged_after": self.converged_after,
        }


def step(tree, h, state: EvalState, cfg: EvaluatorConfig, rng):
    """Run one main-loop iteration, updating ``state`` in place, and return it."""
    backend = cfg.backend
    lo, hi = state.interval.lo, state.interval.hi

    before = h.ledger.comparison_queries
    pivot = find_pivot(tree, h, state.interval, backend, rng)
    state.pivot_comparisons += h.ledger.comparison_queries - before
    state.pivot_calls += 1

    refine = None
    if pivot is not None:
        state.pivots_found += 1
        state.decide_calls += 1
        if decide_ge(tree, h, pivot, backend, rng):
            lo, refine = pivot, "lo"
        else:
            hi, refine = pivot, "hi"
    refined = Interval(lo, hi)

    state.decide_calls += range_check_calls(refined)
    ok = range_check(tree, h, refined, backend, rng)
    if ok:
        state.stack.append(refined)
        state.interval, action = refined, "push"
    elif state.stack:
        state.interval, action = state.stack.pop(), "pop"
    else:
        state.interval, action = FULL, "reset"

    state.iteration += 1
    state.converged = pivot is None and ok
    if state.trace is not None:
        state.trace.append(
            StepRecord(state.iteration, pivot, refine, action, refined, state.interval, len(state.stack))
        )
    return state


def evaluate(tree, values, cfg: EvaluatorConfig = EvaluatorConfig()):
    """Run the algorithm on ``tree`` with hidden leaf ``values`` and return the final lower end.

    Correctness of the answer is not judged here; that needs the ground
    truth, which the algorithm never sees.
    """
    h = OracleHandle(values, mode=cfg.model)
    if h.n != tree.n:
        raise ContractViolation(f"expected {tree.n} leaf values, got {h.n}")
    rng = np.random.default_rng(cfg.backend.seed)
    state = EvalState(trace=[] if cfg.trace else None)
    budget = cfg.iterations(tree.n)
    converged_after = None
    while state.iteration < budget:
        step(tree, h, state, cfg, rng)
        if state.converged and converged_after is None:
            converged_after = state.iteration - 1
            if cfg.early_stop:
                break
    answer = state.interval.lo
    return EvalResult(
        answer=answer,
        succeeded=is_real(answer),
        iterations=state.iteration,
        ledger=h.ledger_report(),
        stack_depth=len(state.stack),
        pivot_calls=state.pivot_calls,
        decide_calls=state.decide_calls,
        pivot_comparisons=state.pivot_comparisons,
        converged_after=converged_after,
        trace=state.trace,
    )


# -- trace analysis (ground truth required) -----------------------------------


def _bounds(values, iv):
    lo = -math.inf if iv.lo is BOTTOM else math.inf if iv.lo is TOP else values[iv.lo - 1]
    hi = math.inf if iv.hi is TOP else -math.inf if iv.hi is BOTTOM else values[iv.hi - 1]
    return lo, hi


def interval_in_range(values, iv, value):
    lo, hi = _bounds(values, iv)
    return lo <= value < hi


def interval_good(values, iv, value):
    lo, hi = _bounds(values, iv)
    return lo == value < hi


def annotate_trace(trace, tree, values):
    """Fill ``in_range``/``good`` on each record using the classical minimax value."""
    value, _ = eval_minmax(tree, values)
    for rec in trace:
        rec.in_range = interval_in_range(values, rec.interval, value)
        rec.good = interval_good(values, rec.interval, value)
        rec.refined_in_range = interval_in_range(values, rec.refined, value)
    return trace


def classify_steps(trace):
    """Label each step correct (True) or incorrect (False).

    While the state is not good, a step is incorrect exactly when it leaves
    the tree value outside the interval.  From a good state, only a push
    that keeps the state good is correct.
    """
    labels = []
    was_good = False
    for rec in trace:
        if rec.in_range is None or rec.good is None:
            raise ContractViolation("trace lacks ground-truth annotations; call annotate_trace first")
        if was_good:
            labels.append(rec.action == "push" and rec.good)
        else:
            labels.append(rec.in_range)
        was_good = rec.good
    return labels


def drift_statistics(trace):
    """``(correct, incorrect, net)`` step counts of an annotated trace."""
    labels = classify_steps(trace)
    correct = sum(labels)
    incorrect = len(labels) - correct
    return correct, incorrect, correct - incorrect


def trace_to_jsonl(trace):
    return "".join(json.dumps(rec.to_dict(), sort_keys=True) + "\n" for rec in trace)


def trace_from_jsonl(text):
    return [StepRecord.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]
