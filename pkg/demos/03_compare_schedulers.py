"""Time to accuracy of the scheduler against the three baselines.

Runs every arm for two seeds on a reduced population (for speed) and
prints the median speedup and idle fractions. The full default setting is
what `mmfl-sim compare` and the acceptance tests use.
"""

from mmfl_sim import SimulationConfig, compare

cfg = SimulationConfig().replace(**{"clients.count": 100, "selection.per_model_clients": 5,
                                    "experiment.seeds": [0, 1]})
cmp = compare(cfg, ["random", "round_robin", "greedy", "no_batch", "no_multi_model"])

print(f"{'arm':>15} " + " ".join(f"{m:>13}" for m in cmp.model_ids) + "   idle")
for arm in cmp.arms:
    cells = " ".join(f"{cmp.median_speedup(arm.name, m):12.2f}x" for m in cmp.model_ids)
    print(f"{arm.name:>15} {cells}   {cmp.mean_idle(arm.name):.3f}")
print("(speedup = arm's time to accuracy / flammable's; idle = mean idle fraction)")
