"""Experiments that check the algorithm's convergence, error tolerance and query cost.

Every experiment derives each trial's seed from the experiment seed and the
trial's coordinates, so reports are reproducible and do not depend on how
trials are scheduled.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
from scipy import optimize, stats

from .evaluator import EvaluatorConfig, evaluate
from .grover import is_power_of_two
from .oracle import QueryLedger
from .subroutines import BackendConfig, ceil_sqrt
from .trees import TreeShapeSpec, eval_minmax, gen_tree

THEOREM_BAR = 2 / 3
LEDGER_FIELDS = tuple(QueryLedger().to_dict())


def trial_seed(seed, *coords):
    """64-bit seed for the trial at ``coords`` of an experiment seeded with ``seed``."""
    ints = [int(seed)] + [int(round(c * 1_000_000)) if isinstance(c, float) else int(c) for c in coords]
    return int(np.random.SeedSequence(ints).generate_state(1, dtype=np.uint64)[0])


def wilson_interval(successes, trials, z=1.959963984540054):
    if trials == 0:
        return (0.0, 1.0)
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return (lo, hi)


def solve_recurrence(m_max, c1=1, exact=False):
    """Table ``C[0..m_max]`` of ``C(m) = (2/m) * sum_{k=floor(m/2)}^{m-1} C(k) + 1``.

    Base cases are ``C(0) = 0`` and ``C(1) = c1``.  Uses doubles with a
    running prefix sum, or :class:`fractions.Fraction` when ``exact``.
    """
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    if exact:
        table = [Fraction(0), Fraction(c1)]
        prefix = [Fraction(0), Fraction(0), Fraction(c1)]  # prefix[i] = sum C[0..i-1]
        for m in range(2, m_max + 1):
            c = Fraction(2, m) * (prefix[m] - prefix[m // 2]) + 1
            table.append(c)
            prefix.append(prefix[-1] + c)
        return table
    table = np.zeros(m_max + 1)
    table[1] = c1
    prefix = np.zeros(m_max + 2)
    prefix[2] = c1
    for m in range(2, m_max + 1):
        table[m] = 2.0 / m * (prefix[m] - prefix[m // 2]) + 1.0
        prefix[m + 1] = prefix[m] + table[m]
    return table


def fit_line(x, y):
    """Least-squares ``y = slope * x + intercept`` with standard errors and residuals."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    res = stats.linregress(x, y)
    resid = y - (res.slope * x + res.intercept)
    return {
        "slope": float(res.slope),
        "intercept": float(res.intercept),
        "slope_stderr": float(res.stderr),
        "intercept_stderr": float(res.intercept_stderr),
        "max_abs_residual": float(np.max(np.abs(resid))),
    }


def fit_loglog(n, y):
    """Power-law exponent of ``y`` against ``n`` (slope of log2 y on log2 n)."""
    out = fit_line(np.log2(n), np.log2(y))
    out["exponent"] = out.pop("slope")
    out["exponent_stderr"] = out.pop("slope_stderr")
    return out


def fit_line_minimax(x, y):
    """Line minimizing the largest absolute residual (Chebyshev fit), solved as an LP."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ones = np.ones_like(x)
    # variables (slope, intercept, t): minimize t subject to |slope*x + intercept - y| <= t
    a_ub = np.vstack([np.column_stack([x, ones, -ones]), np.column_stack([-x, -ones, -ones])])
    b_ub = np.concatenate([y, -y])
    res = optimize.linprog([0, 0, 1], A_ub=a_ub, b_ub=b_ub, bounds=[(None, None)] * 3, method="highs")
    if not res.success:
        raise RuntimeError(f"minimax fit failed: {res.message}")
    slope, intercept, _ = res.x
    resid = y - (slope * x + intercept)
    return {"slope": float(slope), "intercept": float(intercept), "max_abs_residual": float(np.max(np.abs(resid)))}


def recurrence_fit(m_lo=1 << 4, m_hi=1 << 16, c1=1, method="minimax", points="all"):
    """Fit ``C(m) ~ a * log2(m) + b`` over ``m_lo..m_hi``.

    ``method`` is ``"minimax"`` (smallest worst-case residual) or ``"ols"``;
    ``points`` is ``"all"`` integers in the range or ``"pow2"`` only.
    """
    table = solve_recurrence(m_hi, c1=c1)
    if points == "pow2":
        m = 2 ** np.arange(int(math.ceil(math.log2(m_lo))), int(math.log2(m_hi)) + 1)
    else:
        m = np.arange(m_lo, m_hi + 1)
    fitter = fit_line_minimax if method == "minimax" else fit_line
    return fitter(np.log2(m), table[m])


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    records: list
    groups: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    trials: int = 0
    success_rate: float | None = None
    success_interval: tuple | None = None
    mean_iterations: float | None = None
    mean_ledger: dict = field(default_factory=dict)

    def __post_init__(self):
        self.trials = len(self.records)
        self.summarize()

    def summarize(self):
        recs = self.records
        if not recs:
            return
        if "correct" in recs[0]:
            wins = sum(r["correct"] for r in recs)
            self.success_rate = wins / len(recs)
            self.success_interval = wilson_interval(wins, len(recs))
        its = [r["iterations_to_convergence"] for r in recs if r.get("iterations_to_convergence") is not None]
        if its:
            self.mean_iterations = float(np.mean(its))
        if "ledger" in recs[0]:
            self.mean_ledger = {k: float(np.mean([r["ledger"][k] for r in recs])) for k in LEDGER_FIELDS}

    def to_dict(self):
        return {
            "kind": self.kind,
            "config": self.config,
            "trials": self.trials,
            "success_rate": self.success_rate,
            "success_interval": list(self.success_interval) if self.success_interval else None,
            "mean_iterations": self.mean_iterations,
            "mean_ledger": self.mean_ledger,
            "fits": self.fits,
            "groups": self.groups,
            "records": self.records,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_text(self):
        lines = [f"# {self.kind}: {self.trials} trials"]
        if self.success_rate is not None:
            lo, hi = self.success_interval
            lines.append(f"success rate {self.success_rate:.4f}  (95% Wilson {lo:.4f}..{hi:.4f})")
        if self.mean_iterations is not None:
            lines.append(f"mean iterations to convergence {self.mean_iterations:.4f}")
        if self.groups:
            cols = list(self.groups[0])
            cells = [[_fmt(g[c]) for c in cols] for g in self.groups]
            widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
            lines.append("  ".join(c.rjust(w) for c, w in zip(cols, widths)))
            lines.extend("  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells)
        for name, fit in sorted(self.fits.items()):
            body = ", ".join(f"{k}={_fmt(v)}" for k, v in sorted(fit.items()))
            lines.append(f"fit {name}: {body}")
        return "\n".join(lines) + "\n"

    def to_csv(self):
        flat = [_flatten(r) for r in self.records]
        cols = sorted({k for r in flat for k in r})
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        writer.writerows(flat)
        return buf.getvalue()

    def render(self, fmt):
        return {"json": self.to_json, "text": self.to_text, "csv": self.to_csv}[fmt]()


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _flatten(rec, prefix=""):
    out = {}
    for k, v in rec.items():
        if isinstance(v, dict):
            out.update(_flatten(v, f"{prefix}{k}."))
        else:
            out[prefix + k] = v
    return out


def _map(fn, tasks, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return [fn(t) for t in tasks]


def default_shape(n, seed, value_dist="permutation"):
    """Balanced binary tree when ``n`` is a power of two, else a random tree."""
    if is_power_of_two(n):
        return TreeShapeSpec(kind="balanced", arity=2, depth=n.bit_length() - 1, value_dist=value_dist, seed=seed)
    return TreeShapeSpec(kind="random", n=n, value_dist=value_dist, seed=seed)


def run_trial(task):
    """Generate one instance, evaluate it and judge the answer against the minimax value."""
    shape, cfg = task
    tree, values = gen_tree(shape)
    res = evaluate(tree, values, cfg)
    value, _ = eval_minmax(tree, values)
    correct = bool(res.succeeded and values[res.answer - 1] == value)
    rec = res.to_dict()
    rec.update(n=tree.n, seed=shape.seed, correct=correct, iterations_to_convergence=res.converged_after)
    return rec


def run_convergence_experiment(n_list, trials, seed, c_factor=None, workers=1):
    """Iterations until the interior set empties, ideal backend with early stop.

    Each size is compared against the recurrence table: ``mean <= C(N) + 3 SE``.
    """
    c_factor = c_factor or 64.0
    tasks = []
    for n in n_list:
        for i in range(trials):
            s = trial_seed(seed, n, i)
            cfg = EvaluatorConfig(c_factor=c_factor, early_stop=True, backend=BackendConfig("ideal", seed=s))
            tasks.append((default_shape(n, s), cfg))
    records = _map(run_trial, tasks, workers)
    table = solve_recurrence(max(n_list))
    groups = []
    for n in n_list:
        its = np.array([r["iterations_to_convergence"] for r in records if r["n"] == n], dtype=float)
        mean = float(its.mean())
        se = float(its.std(ddof=1) / math.sqrt(its.size)) if its.size > 1 else 0.0
        groups.append(
            {
                "n": n,
                "trials": int(its.size),
                "mean_iterations": mean,
                "stderr": se,
                "recurrence": float(table[n]),
                "within_bound": bool(mean <= table[n] + 3 * se),
            }
        )
    fits = {}
    if len(n_list) >= 2:
        fits["iterations_vs_log2n"] = fit_line(np.log2(n_list), [g["mean_iterations"] for g in groups])
    config = {"n_list": list(n_list), "trials": trials, "seed": seed, "c_factor": c_factor, "backend": "ideal"}
    return ExperimentReport("convergence", config, records, groups, fits)


def run_success_experiment(n, epsilons, c_factors, trials, seed, amplification_reps=1, workers=1):
    """Success rate of the stochastic backend over a grid of error rates and iteration factors."""
    tasks = []
    for eps in epsilons:
        for c in c_factors:
            for i in range(trials):
                s = trial_seed(seed, n, eps, c, i)
                backend = BackendConfig("stochastic", epsilon=eps, amplification_reps=amplification_reps, seed=s)
                tasks.append((default_shape(n, s), EvaluatorConfig(c_factor=c, backend=backend)))
    records = _map(run_trial, tasks, workers)
    for rec, (_, cfg) in zip(records, tasks):
        rec.update(epsilon=cfg.backend.epsilon, c_factor=cfg.c_factor)
    groups = []
    for eps in epsilons:
        for c in c_factors:
            cell = [r for r in records if r["epsilon"] == eps and r["c_factor"] == c]
            wins = sum(r["correct"] for r in cell)
            lo, hi = wilson_interval(wins, len(cell))
            probe = BackendConfig("stochastic", epsilon=eps, amplification_reps=amplification_reps)
            groups.append(
                {
                    "epsilon": eps,
                    "c_factor": c,
                    "trials": len(cell),
                    "successes": wins,
                    "success_rate": wins / len(cell),
                    "wilson_lo": lo,
                    "wilson_hi": hi,
                    "meets_bar": bool(lo >= THEOREM_BAR),
                    "iteration_error_bound": probe.iteration_error_bound(),
                }
            )
    config = {
        "n": n,
        "epsilons": list(epsilons),
        "c_factors": list(c_factors),
        "trials": trials,
        "seed": seed,
        "amplification_reps": amplification_reps,
        "backend": "stochastic",
    }
    return ExperimentReport("success", config, records, groups)


def run_scaling_experiment(n_list, trials, seed, backend=None, c_factor=None, early_stop=False, workers=1):
    """Query costs per run and per subroutine call as the tree grows."""
    backend = backend or BackendConfig()
    c_factor = c_factor or EvaluatorConfig().c_factor
    tasks = []
    for n in n_list:
        for i in range(trials):
            s = trial_seed(seed, n, i)
            cfg = EvaluatorConfig(c_factor=c_factor, early_stop=early_stop, backend=replace(backend, seed=s))
            tasks.append((default_shape(n, s), cfg))
    records = _map(run_trial, tasks, workers)
    groups = []
    for n in n_list:
        cell = [r for r in records if r["n"] == n]
        pivots = sum(r["pivot_calls"] for r in cell)
        decides = sum(r["decide_calls"] for r in cell)
        search_units = sum(r["ledger"]["modeled_search_units"] for r in cell)
        andor_units = sum(r["ledger"]["modeled_andor_units"] for r in cell)
        modeled = [r["ledger"]["modeled_search_units"] + r["ledger"]["modeled_andor_units"] for r in cell]
        mean_total = float(np.mean(modeled))
        groups.append(
            {
                "n": n,
                "trials": len(cell),
                "mean_modeled_total": mean_total,
                "search_units_per_call": search_units / pivots,
                "andor_units_per_call": andor_units / decides if decides else 0.0,
                "total_over_sqrt_n": mean_total / ceil_sqrt(n),
                "mean_pivot_calls": pivots / len(cell),
                "mean_decide_calls": decides / len(cell),
                "pivot_comparisons_per_search": sum(r["pivot_comparisons"] for r in cell) / pivots,
                "grover_calls_per_search": sum(r["ledger"]["grover_oracle_calls"] for r in cell) / pivots,
            }
        )
    fits = {}
    if len(n_list) >= 2:
        ns = [g["n"] for g in groups]
        fits["search_units_per_call"] = fit_loglog(ns, [g["search_units_per_call"] for g in groups])
        if all(g["andor_units_per_call"] > 0 for g in groups):
            fits["andor_units_per_call"] = fit_loglog(ns, [g["andor_units_per_call"] for g in groups])
        fits["modeled_total"] = fit_loglog(ns, [g["mean_modeled_total"] for g in groups])
        fits["total_over_sqrt_n_vs_log2n"] = fit_line(np.log2(ns), [g["total_over_sqrt_n"] for g in groups])
        if backend.backend == "grover":
            fits["pivot_comparisons_per_search"] = fit_loglog(ns, [g["pivot_comparisons_per_search"] for g in groups])
    config = {
        "n_list": list(n_list),
        "trials": trials,
        "seed": seed,
        "c_factor": c_factor,
        "early_stop": early_stop,
        "backend": backend.to_dict(),
    }
    return ExperimentReport("scaling", config, records, groups, fits)
