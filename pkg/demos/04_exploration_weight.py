"""Effect of the exploration weight alpha.

A small alpha lets fast, useful clients be picked again and again: rounds
are short and targets are reached sooner, but fewer distinct clients
contribute, so accuracy after a fixed number of rounds ends slightly lower.
"""

from mmfl_sim import SimulationConfig, sweep_alpha

cfg = SimulationConfig().replace(**{"experiment.seeds": [0, 1], "sweep.rounds": 200})
sweep = sweep_alpha(cfg)
for a in sweep.alphas:
    cells = ", ".join(f"{m}: {sweep.median_time(a, m):7.1f}s / {sweep.median_accuracy(a, m):.4f}"
                      for m in sweep.model_ids)
    print(f"alpha={a:<5g} time to accuracy / accuracy after {cfg.sweep.rounds} rounds -> {cells}")
