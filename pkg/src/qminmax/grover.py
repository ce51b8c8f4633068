"""Statevector simulation of Grover search with an unknown number of marked items.

The search space is ``{0, ..., n_search - 1}`` with ``n_search`` a power of
two.  The simulator keeps the full real amplitude vector; an oracle call flips
the sign of marked amplitudes and the diffusion step reflects about the mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import CapacityError, ContractViolation

MAX_SEARCH_SIZE = 1 << 20
DEFAULT_BUDGET_FACTOR = 9.0
DEFAULT_GROWTH = 6 / 5


def grover_success_prob(n_search, m, k):
    """Probability of measuring a marked item after ``k`` Grover iterations."""
    if n_search < 1 or m < 0 or k < 0:
        raise ContractViolation("need n_search >= 1, m >= 0, k >= 0")
    if m > n_search:
        raise ContractViolation(f"m={m} exceeds n_search={n_search}")
    if m == 0:
        return 0.0
    theta = math.asin(math.sqrt(m / n_search))
    return math.sin((2 * k + 1) * theta) ** 2


def uniform_state(n_search):
    return np.full(n_search, 1.0 / math.sqrt(n_search))


def grover_iterate(state, signs):
    """One oracle call plus diffusion.  ``signs`` is -1 on marked items, +1 elsewhere."""
    state = state * signs
    return 2.0 * state.mean() - state


def grover_state(mask, k):
    """Statevector after ``k`` iterations starting from the uniform superposition."""
    mask = np.asarray(mask, dtype=bool)
    signs = np.where(mask, -1.0, 1.0)
    state = uniform_state(mask.size)
    for _ in range(k):
        state = grover_iterate(state, signs)
    return state


def marked_mass(state, mask):
    return float(np.sum(state[np.asarray(mask, dtype=bool)] ** 2))


def is_power_of_two(n):
    return n >= 1 and n & (n - 1) == 0


def next_power_of_two(n):
    return 1 << max(0, (int(n) - 1).bit_length())


@dataclass
class SearchInstance:
    n_search: int
    predicate: Callable[[int], bool]
    seed: Optional[int] = None

    def __post_init__(self):
        if not is_power_of_two(self.n_search):
            raise ContractViolation(f"search space size {self.n_search} is not a power of two")
        if self.n_search > MAX_SEARCH_SIZE:
            raise CapacityError(f"search space {self.n_search} exceeds cap {MAX_SEARCH_SIZE}")


@dataclass
class SearchOutcome:
    found: Optional[int]
    oracle_calls: int
    grover_iterations: int


def search_budget(n_search, budget_factor=DEFAULT_BUDGET_FACTOR):
    return math.ceil(budget_factor * math.sqrt(n_search))


def search_marked(mask, rng, budget_factor=DEFAULT_BUDGET_FACTOR, growth=DEFAULT_GROWTH):
    """Run the exponential-schedule search against a precomputed marked ``mask``.

    Each stage draws an iteration count uniformly from ``[0, stage_limit)``,
    runs that many Grover iterations from the uniform state, measures, and
    spends one more oracle call verifying the measured index.  The stage
    limit grows by ``growth`` up to ``sqrt(n)``.  Stops at the first verified
    hit or when the call budget is spent.
    """
    mask = np.asarray(mask, dtype=bool)
    n = mask.size
    if not is_power_of_two(n):
        raise ContractViolation(f"search space size {n} is not a power of two")
    if n > MAX_SEARCH_SIZE:
        raise CapacityError(f"search space {n} exceeds cap {MAX_SEARCH_SIZE}")
    budget = search_budget(n, budget_factor)
    signs = np.where(mask, -1.0, 1.0)
    limit = 1.0
    cap = math.sqrt(n)
    calls = 0
    iterations = 0
    while calls < budget:
        k = int(rng.integers(0, math.ceil(limit)))
        k = min(k, budget - calls - 1)
        state = uniform_state(n)
        for _ in range(k):
            state = grover_iterate(state, signs)
        probs = state * state
        probs /= probs.sum()
        outcome = int(rng.choice(n, p=probs))
        calls += k + 1
        iterations += k
        if mask[outcome]:
            return SearchOutcome(outcome, calls, iterations)
        limit = min(limit * growth, cap)
    return SearchOutcome(None, calls, iterations)


def grover_search(inst: SearchInstance, rng=None, budget_factor=DEFAULT_BUDGET_FACTOR):
    """Search ``inst`` for a marked index; ``found`` is ``None`` if the budget runs out."""
    if rng is None:
        rng = np.random.default_rng(inst.seed)
    mask = np.fromiter((bool(inst.predicate(i)) for i in range(inst.n_search)), dtype=bool, count=inst.n_search)
    return search_marked(mask, rng, budget_factor)
