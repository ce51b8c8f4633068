from fractions import Fraction

import numpy as np
import pytest

from qminmax.harness import (
    ExperimentReport,
    fit_line,
    fit_line_minimax,
    fit_loglog,
    recurrence_fit,
    run_convergence_experiment,
    run_scaling_experiment,
    run_success_experiment,
    solve_recurrence,
    trial_seed,
    wilson_interval,
)
from qminmax.subroutines import BackendConfig


def _unrolled(m_max):
    # direct double sum, no prefix sums
    c = [Fraction(0), Fraction(1)]
    for m in range(2, m_max + 1):
        c.append(Fraction(2, m) * sum(c[m // 2 : m]) + 1)
    return c


def test_recurrence_base_and_small_values():
    table = solve_recurrence(4, exact=True)
    assert table[:5] == [0, 1, 2, 3, Fraction(7, 2)]
    floats = solve_recurrence(4)
    assert list(floats[1:]) == [1.0, 2.0, 3.0, 3.5]


def test_recurrence_matches_unrolled_exact():
    exact = solve_recurrence(200, exact=True)
    assert exact == _unrolled(200)
    floats = solve_recurrence(200)
    assert np.allclose(floats, [float(x) for x in exact], rtol=1e-12)


def test_recurrence_custom_base_case():
    table = solve_recurrence(3, c1=2, exact=True)
    assert table[2] == 3 and table[3] == Fraction(2, 3) * 5 + 1


def test_recurrence_growth():
    table = solve_recurrence(1 << 15)
    m = np.arange(2, (1 << 15) - 1)
    # odd m average one extra term, so C alternates slightly; each parity class is monotone
    assert np.all(table[m + 2] >= table[m])
    assert np.any(table[m + 1] < table[m])
    m = np.arange(2, 1 << 14)
    assert np.all(table[m] <= table[2 * m])
    # doubling adds a bounded amount (tending to about 2.26), i.e. logarithmic growth
    assert np.all(table[2 * m] <= table[m] + 2.5)
    assert abs(table[2 * m[-1]] - table[m[-1]] - 2.26) < 0.01


def test_recurrence_log_fit():
    fit = recurrence_fit()
    assert fit["max_abs_residual"] <= 0.5
    assert 2.2 < fit["slope"] < 2.4
    assert recurrence_fit(method="ols", points="pow2")["max_abs_residual"] <= 0.5


def test_minimax_fit_beats_ols_worst_case():
    x = np.linspace(0, 1, 51)
    y = x**2
    assert fit_line_minimax(x, y)["max_abs_residual"] == pytest.approx(1 / 8, abs=1e-6)
    assert fit_line(x, y)["max_abs_residual"] > 1 / 8


def test_recurrence_rejects_zero():
    with pytest.raises(ValueError):
        solve_recurrence(0)


def test_wilson_interval():
    lo, hi = wilson_interval(80, 100)
    assert lo < 0.8 < hi
    assert wilson_interval(0, 10)[0] == 0.0
    assert wilson_interval(10, 10)[1] == 1.0
    # textbook value for 81/263 at 95%
    lo, hi = wilson_interval(81, 263)
    assert lo == pytest.approx(0.2553, abs=5e-4) and hi == pytest.approx(0.3662, abs=5e-4)


def test_fit_helpers():
    x = np.arange(1, 10)
    fit = fit_line(x, 3 * x + 2)
    assert fit["slope"] == pytest.approx(3) and fit["intercept"] == pytest.approx(2)
    fit = fit_loglog([4, 16, 64, 256], [2, 4, 8, 16])
    assert fit["exponent"] == pytest.approx(0.5)


def test_trial_seeds_distinct_and_stable():
    seeds = {trial_seed(1, n, i) for n in (16, 32) for i in range(100)}
    assert len(seeds) == 200
    assert trial_seed(1, 16, 3) == trial_seed(1, 16, 3)
    assert trial_seed(1, 0.05, 3) != trial_seed(1, 0.1, 3)


def test_convergence_single_leaf():
    rep = run_convergence_experiment([1], 20, seed=0)
    assert rep.groups[0]["mean_iterations"] == 1.0


def test_convergence_two_leaves_within_recurrence():
    rep = run_convergence_experiment([2, 16], 200, seed=1)
    g2 = rep.groups[0]
    assert g2["recurrence"] == 2.0
    assert all(g["within_bound"] for g in rep.groups)


def test_success_zero_error_is_perfect():
    rep = run_success_experiment(32, [0.0], [6, 24], 30, seed=2)
    assert rep.success_rate == 1.0
    assert all(g["success_rate"] == 1.0 for g in rep.groups)


def test_success_heavy_noise_fails_bar():
    rep = run_success_experiment(64, [0.45], [6], 200, seed=3)
    assert rep.groups[0]["success_rate"] < 2 / 3
    assert not rep.groups[0]["meets_bar"]


def test_scaling_small():
    rep = run_scaling_experiment([16, 64, 256], 2, seed=4)
    per_call = [g["search_units_per_call"] for g in rep.groups]
    assert per_call == [4.0, 8.0, 16.0]
    assert rep.fits["search_units_per_call"]["exponent"] == pytest.approx(0.5)


def test_report_reproducible_bytes():
    a = run_success_experiment(16, [0.1], [4], 10, seed=5).to_json()
    b = run_success_experiment(16, [0.1], [4], 10, seed=5).to_json()
    assert a == b
    c = run_scaling_experiment([8, 16], 2, seed=6, backend=BackendConfig("grover")).to_json()
    d = run_scaling_experiment([8, 16], 2, seed=6, backend=BackendConfig("grover")).to_json()
    assert c == d


def test_report_audit_recomputes_aggregates():
    rep = run_success_experiment(32, [0.05, 0.2], [2, 6], 25, seed=7)
    assert rep.trials == len(rep.records) == 100
    again = ExperimentReport(rep.kind, rep.config, rep.records, rep.groups, rep.fits)
    assert again.success_rate == rep.success_rate
    assert again.mean_ledger == rep.mean_ledger
    for g in rep.groups:
        cell = [r for r in rep.records if r["epsilon"] == g["epsilon"] and r["c_factor"] == g["c_factor"]]
        wins = sum(r["correct"] for r in cell)
        assert g["successes"] == wins and g["trials"] == len(cell)
        assert (g["wilson_lo"], g["wilson_hi"]) == wilson_interval(wins, len(cell))


def test_report_renderings():
    rep = run_convergence_experiment([4, 8], 5, seed=8)
    assert rep.to_text().startswith("# convergence: 10 trials")
    csv_text = rep.to_csv()
    assert len(csv_text.strip().splitlines()) == 11
    assert "ledger.comparison_queries" in csv_text.splitlines()[0]
    assert rep.render("json") == rep.to_json()


def test_parallel_workers_match_serial():
    a = run_success_experiment(16, [0.1], [3], 8, seed=9)
    b = run_success_experiment(16, [0.1], [3], 8, seed=9, workers=2)
    assert a.to_json() == b.to_json()
