import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmfl_sim.batch_adapt import (IterationRule, adapted_iterations, optimize_batch,
                                  optimize_batch_table, relative_efficiency,
                                  relative_progress)
from mmfl_sim.domain import ConfigurationError, DeviceKind, DeviceProfile, DomainError

phis = st.floats(1.0, 1e4)
batches = st.integers(10, 100)


@pytest.mark.parametrize("phi, m0, m, expected", [
    (10, 10, 10, 1.0), (10, 10, 30, 0.5)])
def test_relative_efficiency_examples(phi, m0, m, expected):
    assert relative_efficiency(phi, m0, m) == expected


def test_relative_efficiency_large_noise_limit():
    assert relative_efficiency(1e9, 10, 100) == pytest.approx(1.0, abs=1e-7)


def test_relative_efficiency_domain():
    with pytest.raises(DomainError):
        relative_efficiency(0.0, 10, 10)
    with pytest.raises(DomainError):
        relative_efficiency(1.0, 0, 10)


@pytest.mark.parametrize("args, expected", [
    ((10, 10, 20, 10, 20), 1.0),
    ((10, 10, 20, 100, 11), 1.0),
    ((10, 10, 20, 20, 10), 2 / 3)])
def test_relative_progress_examples(args, expected):
    assert relative_progress(*args) == pytest.approx(expected, rel=1e-15)


def test_relative_progress_exact_identity():
    # 1100 * 20 == 200 * 110 exactly, so the single division yields exactly 1.0
    assert relative_progress(10, 10, 20, 100, 11) == 1.0


@pytest.mark.parametrize("phi, m, expected", [
    (10, 10, 20), (10, 100, 11), (1e12, 40, 5), (1e12, 100, 2)])
def test_adapted_iterations_examples(phi, m, expected):
    assert adapted_iterations(phi, 10, 20, m) == expected


def test_efficiency_scaled_rule_loses_progress():
    k = adapted_iterations(10, 10, 20, 100, IterationRule.EFFICIENCY_SCALED)
    assert k == 1  # ceil(0.1 * 20/110 * 20) = ceil(0.3636)
    assert relative_progress(10, 10, 20, 100, k) < 1


@given(phis, batches, st.integers(1, 50), batches)
def test_progress_never_below_baseline(phi, m0, k0, m):
    k = adapted_iterations(phi, m0, k0, m)
    assert k >= 1
    assert relative_progress(phi, m0, k0, m, k) >= 1 - 1e-12


@given(phis, batches, st.integers(1, 50), batches)
def test_ceiling_slack_matches_exact_oracle(phi, m0, k0, m):
    # independent oracle: exact rational ceiling, tolerant of a 1e-9 relative excess
    exact = Fraction(m0, m) * (Fraction(phi) + m) / (Fraction(phi) + m0) * k0
    k = adapted_iterations(phi, m0, k0, m)
    assert k == max(1, math.ceil(exact - exact / 10 ** 9))
    if exact >= 1:
        assert k - 1 < exact * (1 + Fraction(1, 10 ** 8))
        assert relative_progress(phi, m0, k0, m, k) <= 1 + 1 / max(1, k - 1) + 1e-12


@given(phis, batches, st.integers(1, 50), batches, batches)
def test_adapted_iterations_nonincreasing_in_m(phi, m0, k0, a, b):
    lo, hi = sorted((a, b))
    assert adapted_iterations(phi, m0, k0, hi) <= adapted_iterations(phi, m0, k0, lo)


def test_optimizer_constant_throughput():
    plan = optimize_batch_table(10.0, 10, 20, np.full(91, 500.0), 10)
    assert (plan.m_star, plan.k_star) == (10, 20)
    assert plan.predicted_time == pytest.approx(20 * 10 / 500.0)
    assert plan.predicted_progress == 1.0


def test_optimizer_linear_throughput():
    thetas = 10.0 * np.arange(10, 101, dtype=float)
    plan = optimize_batch_table(1e12, 10, 20, thetas, 10)
    assert (plan.m_star, plan.k_star) == (100, 2)
    assert plan.predicted_time == pytest.approx(0.2, rel=1e-12)
    plan = optimize_batch_table(10.0, 10, 20, thetas, 10)
    assert (plan.m_star, plan.k_star) == (100, 11)


def test_optimizer_ties_go_to_smaller_batch():
    # theta(m) proportional to (phi + m): objective constant over the range
    thetas = (10.0 + np.arange(10, 101, dtype=float)) * 3.0
    assert optimize_batch_table(10.0, 10, 20, thetas, 10).m_star == 10


def test_optimize_batch_with_profile_and_errors():
    prof = DeviceProfile(DeviceKind.GPU, {"net": [(10, 100.0), (100, 1000.0)]})
    plan = optimize_batch(1e12, 10, 20, prof, "net")
    assert (plan.m_star, plan.k_star) == (100, 2)
    with pytest.raises(ConfigurationError):
        optimize_batch(10.0, 10, 20, prof, "net", (50, 40))
    with pytest.raises(ConfigurationError):
        optimize_batch_table(10.0, 10, 20, np.array([]), 10)


@given(st.integers(0, 2 ** 32 - 1))
def test_optimizer_equals_enumeration(seed):
    rng = np.random.default_rng(seed)
    phi = float(rng.uniform(1, 1e4))
    thetas = np.cumsum(rng.uniform(-5, 20, 91)) + 200.0
    plan = optimize_batch_table(phi, 10, 20, thetas, 10)
    # oracle: plain Python loop over the range, strict improvement only
    best_m, best_v = None, -math.inf
    for idx, th in enumerate(thetas):
        m = 10 + idx
        v = float(th) * (phi + 10) / (phi + m)
        if v > best_v:
            best_m, best_v = m, v
    assert plan.m_star == best_m


def test_large_noise_with_increasing_throughput_picks_largest_batch():
    thetas = 1.0 + np.arange(10, 101, dtype=float) ** 0.5
    assert optimize_batch_table(1e6 * 100, 10, 20, thetas, 10).m_star == 100
