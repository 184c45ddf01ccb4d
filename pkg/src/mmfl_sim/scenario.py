"""Default device profiles and synthetic client rosters."""

from __future__ import annotations

from typing import Dict, List, Sequence

import numpy as np

from .config import ClientsConfig, ModelConfig
from .domain import (DeviceKind, DeviceProfile, RosterEntry, load_profiles,
                     load_roster)

PROFILE_BATCHES = (10, 20, 40, 60, 80, 100)

# throughput at batch 10 (samples/sec) and the speedup reached at batch 100;
# intermediate points follow a saturating curve between the two
_BASE = {
    DeviceKind.GPU: {"cnn_small": (400.0, 6.0), "resnet18": (100.0, 5.0),
                     "mobilenet_v2": (150.0, 5.5)},
    DeviceKind.CPU: {"cnn_small": (200.0, 3.0), "resnet18": (50.0, 2.5),
                     "mobilenet_v2": (75.0, 2.8)},
    DeviceKind.MOBILE: {"cnn_small": (100.0, 2.0), "resnet18": (25.0, 1.6),
                        "mobilenet_v2": (38.0, 1.8)},
}
_FALLBACK = {DeviceKind.GPU: (150.0, 5.5), DeviceKind.CPU: (75.0, 2.8),
             DeviceKind.MOBILE: (38.0, 1.8)}


def _curve(base: float, gain: float) -> List[tuple]:
    # speedup s(m) = 1 + (gain - 1) * (m - 10) / 90 * (1 + h) / (1 + h * (m - 10) / 90)
    # with mild concavity h; s(10) = 1 and s(100) = gain
    h = 0.5
    pts = []
    for b in PROFILE_BATCHES:
        u = (b - PROFILE_BATCHES[0]) / (PROFILE_BATCHES[-1] - PROFILE_BATCHES[0])
        s = 1.0 + (gain - 1.0) * u * (1.0 + h) / (1.0 + h * u)
        pts.append((b, round(base * s, 3)))
    return pts


def default_profiles(model_ids: Sequence[str] = ("cnn_small", "resnet18", "mobilenet_v2")
                     ) -> Dict[DeviceKind, DeviceProfile]:
    """Three device types with model-specific batch scaling.

    Unknown model ids get a generic mid-weight curve per device type.
    """
    out = {}
    for kind in DeviceKind:
        curves = {mid: _curve(*_BASE[kind].get(mid, _FALLBACK[kind])) for mid in model_ids}
        out[kind] = DeviceProfile(kind, curves)
    return out


def generate_roster(cfg: ClientsConfig, models: Sequence[ModelConfig],
                    rng: np.random.Generator) -> List[RosterEntry]:
    """Random device types and speeds, Dirichlet-partitioned datasets, log-normal heterogeneity."""
    kinds = [DeviceKind(k) for k in ("gpu", "cpu", "mobile")]
    mix = np.array([cfg.device_mix.get(k.value, 0.0) for k in kinds], dtype=float)
    if mix.sum() <= 0:
        raise ValueError("clients.device_mix has no positive weight")
    n = cfg.count
    device = rng.choice(len(kinds), size=n, p=mix / mix.sum())
    speed = rng.lognormal(0.0, cfg.speed_sigma, n)
    sizes = {}
    hetero = {}
    for mc in models:
        share = rng.dirichlet(np.full(n, cfg.dirichlet_alpha))
        sizes[mc.model_id] = np.floor(share * cfg.samples_per_model).astype(int)
        hetero[mc.model_id] = rng.lognormal(0.0, cfg.heterogeneity_sigma, n)
    width = len(str(n - 1))
    return [
        RosterEntry(
            client_id=f"c{i:0{width}d}",
            device_kind=kinds[device[i]],
            datasets={mid: int(sizes[mid][i]) for mid in sizes},
            heterogeneity={mid: float(hetero[mid][i]) for mid in hetero},
            speed_factor=float(speed[i]),
        )
        for i in range(n)
    ]


def resolve_profiles(path, model_ids) -> Dict[DeviceKind, DeviceProfile]:
    return default_profiles(model_ids) if path is None else load_profiles(path)


def resolve_roster(cfg: ClientsConfig, models, rng) -> List[RosterEntry]:
    return generate_roster(cfg, models, rng) if cfg.roster is None else load_roster(cfg.roster)
