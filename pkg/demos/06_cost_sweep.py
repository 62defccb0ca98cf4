#!/usr/bin/env python3
"""Defender utility as a function of the cost of defense.

Scales the three defense cost components (tag, trap, rule selection) by each
factor, learns strategies at that cost level, and simulates the learned pair.
Cheap defense buys near-certain detection; past a break-even point the
defender stops spending and concedes the stage penalties.
"""

from diftgame import experiments, game, generate, learn

graph = generate.gen_graph(n_nodes=10, n_stages=2, n_dest_per_stage=(1, 1),
                           n_entries=1, edge_density=0.15, seed=2026)
params = game.default_params(graph)
config = learn.LearnerConfig(eta=0.01, eps=1e-3, max_iters=3000, seed=0)

sweep = experiments.sweep_cost(graph, params, experiments.DEFAULT_FACTORS,
                               learner_config=config, sim_trials=20_000, sim_seed=1)

print(sweep.csv_header())
for row in sweep.rows:
    print(f"{row.factor},{row.u_d_mean:.2f},{row.u_a_mean:.2f},"
          f"{row.u_d_stderr:.3f},{row.u_a_stderr:.3f}")

print("\ndefender utility by factor:")
lo = min(r.u_d_mean for r in sweep.rows)
hi = max(r.u_d_mean for r in sweep.rows)
for row in sweep.rows:
    width = int(60 * (row.u_d_mean - lo) / (hi - lo + 1e-12))
    print(f"  x{row.factor:<5} {'#' * width} {row.u_d_mean:9.1f}")
