#!/usr/bin/env python3
"""Exact equilibrium of a one-stage attack.

Pipeline: split every node into an in/out pair whose connecting arc carries
the node's tag+trap cost, take the min cut, then solve the matrix game over
the cut nodes: the attacker mixes over disjoint paths (one per cut node) and
the defender's component probabilities come from a log-linear system.
"""

from diftgame import game, ifg, single_stage

# Two parallel routes; the entry and the destination carry heavy traffic, so
# the cheapest separator is one mid-route node per branch.  The stage penalty
# sits strictly between the two cut-node costs, so the attacker genuinely
# mixes over both branches.
graph = ifg.make_graph(
    n=6,
    edges=[(1, 2), (2, 3), (1, 4), (4, 5), (3, 6), (5, 6)],
    stages=[[6]],
    vulnerable=[1],
    traffic=[0.4, 0.1, 0.15, 0.125, 0.15, 0.25],
    rule_relevance=[(1,)] * 6,
)
params = game.GameParams(
    alpha_a=-12.0, beta_a=(6.0,),
    alpha_d=1.0, beta_d=(-2.8,),
    c1=-8.0, c2=-8.0, gamma=(-2.0,) * 6,
)

network = single_stage.build_flow_network(graph, params)
print(f"flow network: {2 * graph.n + 2} vertices, {len(network.arcs)} arcs")

cut = single_stage.min_cut(network)
print(f"min cut: nodes {cut.cut_nodes}, cost {cut.cost:.4f} "
      f"(= max flow {cut.flow_value:.4f})")

eq = single_stage.solve_matrix_game(graph, params, cut)
print(f"\ndiagnostics: {eq.diagnostics}")
print(f"values: U_D = {eq.u_d:.4f}, U_A = {eq.u_a:.4f}")
for node in eq.nodes:
    row = eq.defender.probs[node]
    print(f"  node {node}: pi = {eq.pi[node]:.4f}  "
          f"tag {row[0]:.4f} trap {row[1]:.4f} "
          f"rules {[round(float(row[1 + r]), 4) for r in eq.relevance[node]]}  "
          f"detection product {eq.products[node]:.4f}")
    print(f"    attack path {eq.paths[node]}")
print(f"detection products spread: {eq.product_spread:.2e}")

# sanity: no single-probability deviation helps the defender
base = eq.matrix_defender_payoff(graph, params)
probe = eq.defender.with_entry(eq.nodes[0], 1, 1.0)
print(f"\ndefender payoff {base:.6f}; forcing the tag to 1 at node "
      f"{eq.nodes[0]} gives {eq.matrix_defender_payoff(graph, params, defender=probe):.6f}")
