"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line (printed again in the terminal
summary). The simulation-based criteria share one comparison run of all six
arms over the five default seeds and one exploration-weight sweep.
"""

from __future__ import annotations

import math
import statistics
import time

import numpy as np
import pytest

from mmfl_sim import (DeadlineController, ModelConfig, SimulationConfig,
                      adapted_iterations, compare, optimize_batch_table,
                      relative_progress, run_simulation, solve_brute_force,
                      solve_exact, sweep_alpha)
from mmfl_sim.cli import main as cli_main
from mmfl_sim.selection import SelectionInstance, random_instance

BASELINES = ("random", "round_robin", "greedy")
ALL_ARMS = ("flammable",) + BASELINES + ("no_batch", "no_multi_model")


@pytest.fixture(scope="module")
def comparison():
    start = time.perf_counter()
    cmp = compare(SimulationConfig(), ALL_ARMS)
    return cmp, time.perf_counter() - start


@pytest.fixture(scope="module")
def alpha_sweep():
    return sweep_alpha(SimulationConfig().replace(**{"sweep.alphas": [0.1, 10.0]}))


# -- 1 ----------------------------------------------------------------------

def test_c01_exact_solver_matches_brute_force(acceptance):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(1, 6))
        m = int(rng.integers(1, 4))
        inst = random_instance(rng, n, m)
        mismatches += solve_exact(inst).objective != solve_brute_force(inst).objective
    elapsed = time.perf_counter() - start
    ok = acceptance(1, "exact solver == brute force on 1000 instances, suite < 60 s",
                    mismatches == 0 and elapsed < 60,
                    f"{mismatches} mismatches, {elapsed:.2f} s")
    assert ok


# -- 2 ----------------------------------------------------------------------

def _scale_instance(seed: int) -> SelectionInstance:
    rng = np.random.default_rng(seed)
    n, m = 200, 3
    scores = rng.uniform(0.0, 2.0, (n, m))
    scores[rng.random((n, m)) < 0.1] = math.inf
    times = rng.lognormal(0.0, 0.6, (n, m)) * 10.0
    eligible = rng.random((n, m)) >= 0.1
    deadline = float(np.percentile(times[eligible], 90))
    return SelectionInstance(scores=scores, times=times, eligible=eligible,
                             deadline=deadline, required=60)


def test_c02_solver_scale(acceptance):
    durations = []
    for seed in range(20):
        inst = _scale_instance(seed)
        start = time.perf_counter()
        res = solve_exact(inst)
        durations.append(time.perf_counter() - start)
        assert not res.relaxed and len(res.participants()) == 60
    med = statistics.median(durations)
    ok = acceptance(2, "200 clients x 3 models, S=60 solves < 2 s (median of 20)",
                    med < 2.0, f"median {med * 1000:.1f} ms, max {max(durations) * 1000:.1f} ms")
    assert ok


# -- 3 ----------------------------------------------------------------------

def _progress_draws(n: int = 10_000, seed: int = 0):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        phi = float(rng.uniform(1.0, 1e4))
        m0 = int(rng.integers(10, 101))
        k0 = int(rng.integers(1, 51))
        m = int(rng.integers(10, 101))
        k = adapted_iterations(phi, m0, k0, m)
        yield phi, m0, k0, m, k, relative_progress(phi, m0, k0, m, k)


@pytest.mark.xfail(strict=True, reason=(
    "unattainable as stated: when the unrounded iteration count is below 1/2, "
    "k* is clamped to 1 and progress 1/x exceeds the upper bound 2"))
def test_c03_progress_preservation(acceptance):
    lower = upper = 0
    for phi, m0, k0, m, k, rp in _progress_draws():
        lower += rp < 1 - 1e-12
        upper += rp > 1 + 1 / max(1, k - 1) + 1e-12
    ok = acceptance(3, "progress in [1, 1 + 1/max(1, k*-1)] over 10,000 draws",
                    lower == 0 and upper == 0,
                    f"{lower} below 1, {upper} above the bound (all with k*=1 clamped)")
    assert ok


def test_c03_progress_bound_holds_without_clamp():
    # the attainable part of criterion 3: the lower bound always holds, and
    # the upper bound holds unless the unrounded count is below 1/2 (then k*
    # is clamped to 1 and progress is 1/x > 2)
    violations = 0
    for phi, m0, k0, m, k, rp in _progress_draws():
        assert rp >= 1 - 1e-12
        exact = (m0 / m) * ((phi + m) / (phi + m0)) * k0
        if exact >= 0.5:
            assert rp <= 1 + 1 / max(1, k - 1) + 1e-12
        else:
            assert k == 1
            violations += rp > 2
    assert violations < 100  # about half a percent of the draws


# -- 4 ----------------------------------------------------------------------

def test_c04_batch_optimizer_analytic_cases(acceptance):
    const = optimize_batch_table(10.0, 10, 20, np.full(91, 500.0), 10)
    linear = optimize_batch_table(1e12, 10, 20, 10.0 * np.arange(10, 101, dtype=float), 10)
    ok = acceptance(4, "constant theta -> m*=10; theta=10m, phi=1e12 -> (100, 2)",
                    const.m_star == 10 and (linear.m_star, linear.k_star) == (100, 2),
                    f"constant m*={const.m_star}; linear (m*, k*)=({linear.m_star}, {linear.k_star})")
    assert ok


# -- 5 ----------------------------------------------------------------------

def test_c05_deadline_controller(acceptance):
    ctl = DeadlineController(percentile=100.0, epsilon=5.0, window=2, p_min=10.0)
    first_round_at_min = None
    for r in range(1, 60):
        if ctl.percentile == 10.0 and first_round_at_min is None:
            first_round_at_min = r  # first round that runs at p_min
        ctl.record_signal(1000.0 - r, 1.0)
        ctl.update_percentile(r)

    rng = np.random.default_rng(5)
    ctl2 = DeadlineController(percentile=100.0, epsilon=5.0, window=2, p_min=10.0)
    ps = []
    for r in range(1, 10_001):
        ctl2.record_signal(float(rng.uniform(0, 10)), float(rng.uniform(0.1, 10)))
        ps.append(ctl2.update_percentile(r))
    in_range = min(ps) >= 10.0 and max(ps) <= 100.0
    ok = acceptance(5, "decreasing G (w=2, eps=5) reaches p=10 in 22 rounds; p in [10, 100]",
                    first_round_at_min == 22 and in_range,
                    f"p_min first in effect in round {first_round_at_min}; "
                    f"p range [{min(ps):g}, {max(ps):g}]")
    assert ok


# -- 6 ----------------------------------------------------------------------

def test_c06_speedup_over_baselines(acceptance, comparison):
    cmp, elapsed = comparison
    worst = min(cmp.median_speedup(b, mid) for b in BASELINES for mid in cmp.model_ids)
    detail = "; ".join(
        f"{b}: " + ", ".join(f"{mid}={cmp.median_speedup(b, mid):.2f}x" for mid in cmp.model_ids)
        for b in BASELINES)
    ok = acceptance(6, "median speedup >= 1.2x over every baseline, every model; < 5 min",
                    worst >= 1.2 and elapsed < 300, f"{detail}; all arms {elapsed:.0f} s")
    assert ok


# -- 7 ----------------------------------------------------------------------

def test_c07_idle_reduction(acceptance, comparison):
    cmp, _ = comparison
    on, off = cmp.mean_idle("flammable"), cmp.mean_idle("no_multi_model")
    reduction = (off - on) / off
    ok = acceptance(7, "multi-model engagement cuts mean idle fraction >= 15% (relative)",
                    reduction >= 0.15, f"on {on:.4f}, off {off:.4f}, reduction {reduction:.1%}")
    assert ok


# -- 8 ----------------------------------------------------------------------

def test_c08_ablations(acceptance, comparison):
    cmp, _ = comparison
    ratios = {(arm, mid): cmp.median_time(arm, mid) / cmp.median_time("flammable", mid)
              for arm in ("no_batch", "no_multi_model") for mid in cmp.model_ids}
    detail = ", ".join(f"{arm}/{mid} +{r - 1:.0%}" for (arm, mid), r in ratios.items())
    ok = acceptance(8, "disabling batch adaptation or multi-model raises median TTA >= 10%",
                    min(ratios.values()) >= 1.10, detail)
    assert ok


# -- 9 ----------------------------------------------------------------------

def test_c09_fairness_between_identical_models(acceptance):
    models = [ModelConfig(name, target_accuracy=0.85, a_max=0.9, rate=7e-6, phi0=60.0)
              for name in ("twin_a", "twin_b")]
    worst_gap = worst_abs = worst_tta = 0.0
    for seed in range(5):
        res = run_simulation(SimulationConfig(seed=seed, rounds=100, continue_after_target=True,
                                              models=models))
        a = np.array([r.participants["twin_a"] for r in res.records])
        b = np.array([r.participants["twin_b"] for r in res.records])
        assert len(a) == 100
        worst_gap = max(worst_gap, abs(float((a - b).mean())))
        worst_abs = max(worst_abs, float(np.abs(a - b).mean()))
        ta, tb = res.time_to_accuracy["twin_a"], res.time_to_accuracy["twin_b"]
        assert ta is not None and tb is not None
        worst_tta = max(worst_tta, abs(ta - tb) / min(ta, tb))
    ok = acceptance(9, "identical models: |mean count difference| <= 1, TTA within 10%",
                    worst_gap <= 1.0 and worst_tta < 0.10,
                    f"worst |mean(a-b)| {worst_gap:.2f} (mean |a-b| {worst_abs:.2f}), "
                    f"worst TTA gap {worst_tta:.1%}")
    assert ok


# -- 10 ---------------------------------------------------------------------

def test_c10_alpha_sensitivity(acceptance, alpha_sweep):
    sw = alpha_sweep
    rows = []
    ok = True
    for mid in sw.model_ids:
        t_lo, t_hi = sw.median_time(0.1, mid), sw.median_time(10.0, mid)
        a_lo, a_hi = sw.median_accuracy(0.1, mid), sw.median_accuracy(10.0, mid)
        ok &= t_lo < t_hi and a_lo < a_hi
        rows.append(f"{mid}: TTA {t_lo:.0f}<{t_hi:.0f}, acc {a_lo:.6f}<{a_hi:.6f}")
    ok = acceptance(10, "alpha=0.1 has strictly lower TTA and final accuracy than alpha=10",
                    ok, "; ".join(rows))
    assert ok


# -- 11 ---------------------------------------------------------------------

def test_c11_determinism(acceptance, tmp_path):
    outputs = {}
    commands = {
        "run": ["run", "--seed", "7"],
        "validate-selector": ["validate-selector", "--instances", "50"],
        "gen-profiles": ["gen-profiles"],
        "compare": ["compare", "--arms", "random", "--seed", "3"],
    }
    for rep in ("a", "b"):
        for name, argv in commands.items():
            out = tmp_path / rep / name
            assert cli_main(argv + ["--out", str(out)]) == 0
            outputs[(rep, name)] = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
    same = all(outputs[("a", n)] == outputs[("b", n)] for n in commands)
    files = sum(len(outputs[("a", n)]) for n in commands)
    ok = acceptance(11, "repeated commands produce byte-identical outputs", same,
                    f"{files} files over {len(commands)} commands")
    assert ok
