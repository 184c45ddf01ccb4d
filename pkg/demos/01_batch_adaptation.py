"""Batch size and iteration co-adaptation, step by step.

A client that can process larger batches faster should use them, but larger
batches make less progress per sample when the gradient noise scale (phi) is
small. The optimizer trades the two off and then picks an iteration count
that keeps the round's statistical progress at least at the (m0, k0) level.
"""

import numpy as np

from mmfl_sim import (DeviceKind, optimize_batch, relative_efficiency,
                      relative_progress)
from mmfl_sim.scenario import default_profiles

m0, k0 = 10, 20

# Per-sample efficiency falls as the batch grows; a noisier gradient
# (larger phi) makes large batches cheaper.
for phi in (10.0, 100.0, 1e4):
    eff = [relative_efficiency(phi, m0, m) for m in (10, 40, 100)]
    print(f"phi={phi:>7g}: efficiency at m=10/40/100 ->", np.round(eff, 3))

# The default GPU profile speeds up about 6x between batch 10 and 100 for
# the small CNN. Early in training phi is small and the optimizer stays
# modest; later phi grows and it moves toward the largest batch.
gpu = default_profiles()[DeviceKind.GPU]
for phi in (20.0, 60.0, 600.0):
    plan = optimize_batch(phi, m0, k0, gpu, "cnn_small")
    print(f"phi={phi:>5g}: m*={plan.m_star:3d} k*={plan.k_star:2d} "
          f"time {plan.predicted_time:6.3f}s (baseline {m0 * k0 / gpu.throughput('cnn_small', m0):.3f}s) "
          f"progress x{plan.predicted_progress:.3f}")

# The iteration count is rounded up, so progress never drops below the
# baseline and overshoots by at most one iteration's worth.
print("progress of (100, 11) vs (10, 20) at phi=10:", relative_progress(10, m0, k0, 100, 11))
