"""Pivot search, threshold decision and range check, with modeled quantum costs.

Three backends share one interface:

``ideal``
    Exact answers.  Pivot search samples uniformly from the interior set.
``stochastic``
    Like ``ideal`` but every call errs with a configured probability.
``grover``
    Pivot search runs the statevector Grover simulation; threshold decisions
    are exact.

Threshold decisions are always computed by a short-circuit classical
evaluation of the AND-OR tree whose leaf bits come from metered oracle
queries.  That evaluation stands in for a quantum AND-OR algorithm, so each
call is additionally charged ``W(N)`` modeled units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import grover
from .errors import ConfigurationError
from .oracle import BOTTOM, COMPARISON, TOP, index_to_json, is_real
from .trees import eval_andor_lazy

BACKENDS = ("ideal", "stochastic", "grover")


@lru_cache(maxsize=None)
def majority_error(epsilon, reps):
    """Probability that a majority of ``reps`` independent ``epsilon``-coins err."""
    return sum(
        math.comb(reps, i) * epsilon**i * (1 - epsilon) ** (reps - i)
        for i in range(reps // 2 + 1, reps + 1)
    )


@dataclass(frozen=True)
class BackendConfig:
    backend: str = "ideal"
    epsilon: float = 0.0
    andor_cost_exponent: float = 0.5
    andor_polylog_power: int = 0
    amplification_reps: int = 1
    seed: int = 0
    grover_budget_factor: float = grover.DEFAULT_BUDGET_FACTOR

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigurationError(f"unknown backend {self.backend!r}")
        if not 0.0 <= self.epsilon < 0.5:
            raise ConfigurationError("epsilon must lie in [0, 0.5)")
        if self.epsilon and self.backend != "stochastic":
            raise ConfigurationError("epsilon is only meaningful for the stochastic backend")
        if self.amplification_reps < 1 or self.amplification_reps % 2 == 0:
            raise ConfigurationError("amplification_reps must be an odd integer >= 1")
        if self.andor_polylog_power < 0:
            raise ConfigurationError("andor_polylog_power must be >= 0")
        if self.andor_cost_exponent < 0:
            raise ConfigurationError("andor_cost_exponent must be >= 0")
        if self.grover_budget_factor <= 0:
            raise ConfigurationError("grover_budget_factor must be positive")

    @property
    def pivot_error(self):
        return self.epsilon if self.backend == "stochastic" else 0.0

    @property
    def decide_error(self):
        if self.backend != "stochastic":
            return 0.0
        return majority_error(self.epsilon, self.amplification_reps)

    def iteration_error_bound(self):
        """Upper bound on the chance that some call in one main-loop iteration errs.

        An iteration makes at most one pivot search and three threshold
        decisions (one refinement, two for the range check).
        """
        return 1.0 - (1.0 - self.pivot_error) * (1.0 - self.decide_error) ** 3

    def to_dict(self):
        return {
            "backend": self.backend,
            "epsilon": self.epsilon,
            "andor_cost_exponent": self.andor_cost_exponent,
            "andor_polylog_power": self.andor_polylog_power,
            "amplification_reps": self.amplification_reps,
            "seed": self.seed,
            "grover_budget_factor": self.grover_budget_factor,
        }


@dataclass(frozen=True)
class Interval:
    """Search range ``(lo, hi)`` over extended leaf indices."""

    lo: object = BOTTOM
    hi: object = TOP

    def to_dict(self):
        return {"lo": index_to_json(self.lo), "hi": index_to_json(self.hi)}


FULL = Interval(BOTTOM, TOP)


def ceil_sqrt(n):
    return math.isqrt(n - 1) + 1 if n > 0 else 0


def modeled_cost(kind, n, cfg: BackendConfig):
    """Modeled quantum query units for one subroutine call on a size-``n`` tree."""
    if kind == "search":
        return ceil_sqrt(n)
    if kind != "andor":
        raise ConfigurationError(f"unknown cost kind {kind!r}")
    exponent, power = cfg.andor_cost_exponent, cfg.andor_polylog_power
    if exponent == 0.5 and power == 0:
        # exact integer path; float pow can land one ulp above a perfect square
        units = ceil_sqrt(n)
    else:
        base = math.sqrt(n) if exponent == 0.5 else n**exponent
        units = math.ceil(base * math.log2(n + 1) ** power)
    return units * cfg.amplification_reps


def find_pivot(tree, h, iv: Interval, cfg: BackendConfig, rng):
    """Random leaf index strictly inside ``iv`` by value, or ``None``."""
    n = h.n
    mask = h._interior_mask(iv.lo, iv.hi)
    h.charge(search=modeled_cost("search", n, cfg))

    if cfg.backend == "grover":
        size = grover.next_power_of_two(n)
        padded = np.zeros(size, dtype=bool)
        padded[:n] = mask
        outcome = grover.search_marked(padded, rng, cfg.grover_budget_factor)
        per_call = is_real(iv.lo) + is_real(iv.hi)
        h.charge(grover=outcome.oracle_calls, comparisons=per_call * outcome.oracle_calls)
        return None if outcome.found is None else outcome.found + 1

    interior = np.flatnonzero(mask)
    if cfg.backend == "stochastic" and rng.random() < cfg.epsilon:
        return _corrupt_pivot(mask, interior, rng)
    if interior.size == 0:
        return None
    return int(interior[rng.integers(interior.size)]) + 1


def _corrupt_pivot(mask, interior, rng):
    # Applicable corruptions: a wrong index (if any exists) or a false "none" (if M is non-empty).
    outside = np.flatnonzero(~mask)
    options = []
    if outside.size:
        options.append("wrong")
    if interior.size:
        options.append("none")
    choice = options[rng.integers(len(options))]
    if choice == "none":
        return None
    return int(outside[rng.integers(outside.size)]) + 1


def threshold_bit_reader(h, v_index):
    """Leaf-bit reader for the AND-OR tree deciding ``value(T) >= x[v_index]``."""
    if h.mode == COMPARISON:
        compare = h.compare
        return lambda k: not compare(k, v_index)
    v = h.read_value(v_index)
    read = h.read_value
    return lambda k: read(k) >= v


def decide_ge(tree, h, v_index, cfg: BackendConfig, rng):
    """Decide ``value(T) >= x[v_index]`` (possibly wrongly, on the stochastic backend)."""
    answer = eval_andor_lazy(tree, threshold_bit_reader(h, v_index))
    h.charge(andor=modeled_cost("andor", h.n, cfg))
    if cfg.backend == "stochastic" and cfg.epsilon and rng.random() < cfg.decide_error:
        return not answer
    return answer


def range_check(tree, h, iv: Interval, cfg: BackendConfig, rng):
    """Decide ``x[lo] <= value(T) < x[hi]``; each real end costs one independent decision."""
    low_ok = decide_ge(tree, h, iv.lo, cfg, rng) if is_real(iv.lo) else iv.lo is BOTTOM
    high_ok = not decide_ge(tree, h, iv.hi, cfg, rng) if is_real(iv.hi) else iv.hi is TOP
    return low_ok and high_ok


def range_check_calls(iv: Interval):
    """Number of threshold decisions ``range_check`` makes on ``iv``."""
    return int(is_real(iv.lo)) + int(is_real(iv.hi))
