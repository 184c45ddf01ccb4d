"""Batch-size and iteration co-adaptation driven by the gradient noise scale.

Statistical efficiency of batch size ``m`` relative to the initial batch
``m0`` is ``(phi + m0) / (phi + m)``; progress of ``k`` iterations at batch
``m`` relative to ``(m0, k0)`` is ``(m*k)/(m0*k0)`` times that efficiency.
Progress is measured in relative units with the efficiency at ``m0`` fixed
to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Tuple

import numpy as np

from .domain import ConfigurationError, DeviceProfile, DomainError


class IterationRule(str, Enum):
    # k* = ceil(m0/m * (phi+m)/(phi+m0) * k0): keeps progress >= the (m0, k0) baseline
    PROGRESS_MATCHING = "progress_matching"
    # k* = ceil(m0/m * (phi+m0)/(phi+m) * k0): relative progress drops to the
    # squared efficiency ratio
    EFFICIENCY_SCALED = "efficiency_scaled"


@dataclass(frozen=True)
class BatchPlan:
    m_star: int
    k_star: int
    predicted_time: float
    predicted_progress: float


def _check(phi, *batches):
    if not phi > 0:
        raise DomainError(f"gradient noise scale must be positive, got {phi}")
    for b in batches:
        if not b >= 1:
            raise DomainError(f"batch sizes and iteration counts must be >= 1, got {b}")


def relative_efficiency(phi: float, m0: float, m: float) -> float:
    """Per-sample efficiency at batch ``m`` relative to batch ``m0``."""
    _check(phi, m0, m)
    return (phi + m0) / (phi + m)


def relative_progress(phi: float, m0: float, k0: float, m: float, k: float) -> float:
    """Progress of ``k`` iterations at batch ``m`` relative to ``(m0, k0)``."""
    _check(phi, m0, k0, m, k)
    # one division so that mathematically equal numerator/denominator stay exactly 1
    return (m * k * (phi + m0)) / (m0 * k0 * (phi + m))


# Relative slack of the iteration ceiling. The noise scale is an estimate
# good to a few digits, so an excess below one part in 1e9 over an integer
# (e.g. phi = 1e12 standing in for the large-noise limit) must not cost a
# whole extra iteration.
CEIL_RTOL = Fraction(1, 10 ** 9)


# Relative tolerance under which two batch sizes' objectives are tied.
TIE_RTOL = 1e-12


def adapted_iterations(phi: float, m0: int, k0: int, m: int,
                       rule: IterationRule = IterationRule.PROGRESS_MATCHING) -> int:
    """Iteration count to pair with batch ``m``.

    Evaluated in exact rational arithmetic; the ceiling ignores a relative
    excess of at most ``CEIL_RTOL`` over an integer.
    """
    _check(phi, m0, k0, m)
    phi_q = Fraction(phi)
    if IterationRule(rule) is IterationRule.PROGRESS_MATCHING:
        ratio = (phi_q + m) / (phi_q + m0)
    else:
        ratio = (phi_q + m0) / (phi_q + m)
    exact = Fraction(m0) / Fraction(m) * ratio * k0
    return max(1, math.ceil(exact * (1 - CEIL_RTOL)))


def progress_rate_objective(phi: float, m0: int, thetas: np.ndarray,
                            batches: np.ndarray) -> np.ndarray:
    """Statistical progress per second, up to the constant efficiency at ``m0``."""
    return thetas * ((phi + m0) / (phi + batches))


def optimize_batch_table(phi: float, m0: int, k0: int, thetas: np.ndarray,
                         m_min: int,
                         rule: IterationRule = IterationRule.PROGRESS_MATCHING) -> BatchPlan:
    """Solve the batch-size problem over a precomputed throughput table.

    ``thetas[i]`` is the throughput at batch ``m_min + i``.
    """
    if len(thetas) == 0:
        raise ConfigurationError("empty batch-size range")
    _check(phi, m0, k0, m_min)
    batches = np.arange(m_min, m_min + len(thetas), dtype=float)
    objective = progress_rate_objective(phi, m0, thetas, batches)
    # smallest batch among the maxima; values within TIE_RTOL of the maximum
    # count as ties so that rounding cannot break a mathematical tie
    idx = int(np.argmax(objective >= objective.max() * (1 - TIE_RTOL)))
    m_star = m_min + idx
    k_star = adapted_iterations(phi, m0, k0, m_star, rule)
    return BatchPlan(
        m_star=m_star,
        k_star=k_star,
        predicted_time=k_star * m_star / float(thetas[idx]),
        predicted_progress=relative_progress(phi, m0, k0, m_star, k_star),
    )


def optimize_batch(phi: float, m0: int, k0: int, profile: DeviceProfile, model_id: str,
                   m_range: Tuple[int, int] = (10, 100),
                   rule: IterationRule = IterationRule.PROGRESS_MATCHING) -> BatchPlan:
    """Pick the batch size maximizing progress per second, then match iterations."""
    m_min, m_max = m_range
    if m_min < 1 or m_max < m_min:
        raise ConfigurationError(f"empty batch-size range [{m_min}, {m_max}]")
    thetas = profile.throughput_table(model_id, m_min, m_max)
    return optimize_batch_table(phi, m0, k0, thetas, m_min, rule)
