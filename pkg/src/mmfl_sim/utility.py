"""Client utilities: data quality, system speed, their product and the
staleness bonus used by the selector."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import SENTINEL_NEVER_SELECTED, DomainError


def data_utility(losses: Sequence[float]) -> float:
    """``|B| * sqrt(mean(loss**2))`` over the samples a client trained on."""
    arr = np.asarray(losses, dtype=float)
    if arr.size == 0:
        raise DomainError("data utility needs at least one sample loss")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise DomainError("sample losses must be finite and nonnegative")
    return float(arr.size * math.sqrt(float(np.mean(arr * arr))))


def system_utility(deadline: float, exec_time: float) -> float:
    if not exec_time > 0:
        raise DomainError(f"execution time must be positive, got {exec_time}")
    if not deadline > 0:
        raise DomainError(f"deadline must be positive, got {deadline}")
    return deadline / exec_time


def _max_normalize(v: np.ndarray) -> np.ndarray:
    finite = v[np.isfinite(v)]
    top = finite.max() if finite.size else 0.0
    if top <= 0:
        return np.where(np.isfinite(v), 0.0, v)
    return np.where(np.isfinite(v), v / top, v)


def combined_utilities(u_sys: Sequence[float], u_data: Sequence[float]) -> np.ndarray:
    """Max-normalize each vector across clients and multiply componentwise.

    Sentinel (infinite) entries pass through as the sentinel.
    """
    s = np.asarray(u_sys, dtype=float)
    d = np.asarray(u_data, dtype=float)
    if s.shape != d.shape:
        raise DomainError("utility vectors differ in length")
    sentinel = np.isinf(s) | np.isinf(d)
    out = _max_normalize(s) * _max_normalize(d)
    out[sentinel] = SENTINEL_NEVER_SELECTED
    return out


def boosted_score(utility: float, alpha: float, round_index: int, times_selected: int) -> float:
    """Utility plus the exploration bonus ``alpha * sqrt(R / r)``."""
    if round_index < 1:
        raise DomainError(f"round index must be >= 1, got {round_index}")
    if times_selected == 0:
        return SENTINEL_NEVER_SELECTED
    return utility + alpha * math.sqrt(round_index / times_selected)


def boosted_scores(utility: np.ndarray, alpha: float, round_index: int,
                   times_selected: np.ndarray) -> np.ndarray:
    if round_index < 1:
        raise DomainError(f"round index must be >= 1, got {round_index}")
    r = np.asarray(times_selected)
    with np.errstate(divide="ignore"):
        bonus = alpha * np.sqrt(round_index / np.maximum(r, 1))
    return np.where(r == 0, SENTINEL_NEVER_SELECTED, utility + bonus)


@dataclass
class UtilityTable:
    """Per (client, model) utilities for one round; columns are models.

    Ineligible pairs hold 0 and never enter the normalization.
    """

    u_data: np.ndarray
    u_sys: np.ndarray
    u_combined: np.ndarray
    boosted: np.ndarray
    sys_norm: np.ndarray
    data_norm: np.ndarray


def build_utility_table(u_sys: np.ndarray, u_data: np.ndarray, eligible: np.ndarray,
                        times_selected: np.ndarray, alpha: float,
                        round_index: int) -> UtilityTable:
    n, m = u_sys.shape
    combined = np.zeros((n, m))
    sys_norm = np.zeros(m)
    data_norm = np.zeros(m)
    for j in range(m):
        rows = eligible[:, j]
        if not rows.any():
            continue
        s, d = u_sys[rows, j], u_data[rows, j]
        fs, fd = s[np.isfinite(s)], d[np.isfinite(d)]
        sys_norm[j] = fs.max() if fs.size else 0.0
        data_norm[j] = fd.max() if fd.size else 0.0
        combined[rows, j] = combined_utilities(s, d)
    boosted = boosted_scores(combined, alpha, round_index, times_selected)
    boosted = np.where(eligible, boosted, 0.0)
    return UtilityTable(u_data=u_data, u_sys=u_sys, u_combined=combined,
                        boosted=boosted, sys_norm=sys_norm, data_norm=data_norm)


def synthetic_losses(model_loss: float, heterogeneity: float, n_samples: int,
                     dataset_size: int, rng: np.random.Generator,
                     dispersion: float = 0.2) -> np.ndarray:
    """Per-sample losses standing in for a real training pass.

    Draws ``min(n_samples, dataset_size)`` values from a log-normal whose
    median is ``model_loss * heterogeneity``.
    """
    if dataset_size < 1:
        raise DomainError("synthetic losses need a nonempty local dataset")
    size = int(min(n_samples, dataset_size))
    center = model_loss * heterogeneity
    if center <= 0:
        return np.zeros(size)
    if dispersion <= 0:
        return np.full(size, center)
    return center * rng.lognormal(0.0, dispersion, size)


def reported_data_utility(model_loss: float, heterogeneity: float, n_samples: int,
                          dataset_size: int, rng: np.random.Generator,
                          dispersion: float = 0.2) -> float:
    return data_utility(synthetic_losses(model_loss, heterogeneity, n_samples,
                                         dataset_size, rng, dispersion))
