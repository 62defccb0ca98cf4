"""Exact single-stage equilibrium: node-split flow network, min-cut, matrix game.

For a one-stage attack the defender's equilibrium support is a minimum-cost
node cut between the attack source and the destination set, where a node's
cost is the magnitude of its combined tag+trap cost.  The equilibrium itself
comes from a small matrix game over the cut nodes: the adversary mixes over
disjoint attack paths (one per cut node) so the defender is indifferent
between detecting and not, and the defender's per-component probabilities
solve a log-linear system that equalizes detection products.

Payoff conventions: the matrix game charges a cut node's defense spending on
the attack path through it (weighted by that path's probability); the
``u_d``/``u_a`` fields and all deviation checks use these matrix-game
payoffs.  Strategy-level payoffs for the same strategies can always be
recovered with the evaluators in ``game``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import respond
from .errors import DegenerateEquilibrium, NotSingleStage, ValidationError
from .game import DefenderStrategy, GameParams
from .ifg import SOURCE, InformationFlowGraph, ensure_augmented, entry_reachability

_CAP_TOL = 1e-12


@dataclass(frozen=True)
class FlowNetwork:
    """Node-split network: 2n+2 vertices, split arcs carry the finite capacities.

    Vertex ids: source 0, node i at i, its copy i' at n+i, sink 2n+1.
    """

    n: int
    arcs: tuple[tuple[int, int], ...]
    capacities: tuple[float, ...]
    source: int
    sink: int

    def split_arc(self, node: int) -> int:
        """Index of the (s_i, s'_i) arc for a real node."""
        return self._split_index[node]

    @property
    def _split_index(self) -> dict[int, int]:
        idx = {}
        for k, (u, v) in enumerate(self.arcs):
            if 1 <= u <= self.n and v == u + self.n:
                idx[u] = k
        return idx


def build_flow_network(graph: InformationFlowGraph, params: GameParams) -> FlowNetwork:
    """Entry arcs, split arcs, shifted graph arcs, destination arcs.

    Split arcs get capacity |tag cost + trap cost| of their node (costs are
    negative by convention and flow capacities must not be); everything else
    is unbounded.
    """
    if graph.n_stages != 1:
        raise NotSingleStage(f"flow network needs a single-stage graph, got M={graph.n_stages}")
    graph = ensure_augmented(graph)
    params.check_against(graph)
    n = graph.n
    sink = 2 * n + 1
    arcs: list[tuple[int, int]] = []
    caps: list[float] = []
    for e in graph.vulnerable:  # E_lambda
        arcs.append((SOURCE, e))
        caps.append(math.inf)
    for i in range(1, n + 1):  # split arcs
        arcs.append((i, i + n))
        caps.append(abs(params.tag_cost(graph, i) + params.trap_cost(graph, i)))
    for u, v in graph.edges:  # shifted original arcs
        if u == SOURCE:
            continue
        arcs.append((u + n, v))
        caps.append(math.inf)
    for d in graph.stages[0]:  # destination arcs
        arcs.append((d + n, sink))
        caps.append(math.inf)
    return FlowNetwork(n=n, arcs=tuple(arcs), capacities=tuple(caps), source=SOURCE, sink=sink)


@dataclass(frozen=True)
class MinCutResult:
    cut_arcs: tuple[tuple[int, int], ...]
    cut_nodes: tuple[int, ...]
    cost: float
    flow_value: float


class _Dinic:
    def __init__(self, n_vertices: int, tol: float = _CAP_TOL):
        self.n = n_vertices
        self.tol = tol
        self.head: list[list[int]] = [[] for _ in range(n_vertices)]
        self.to: list[int] = []
        self.cap: list[float] = []

    def add_arc(self, u: int, v: int, cap: float) -> int:
        idx = len(self.to)
        self.head[u].append(idx)
        self.to.append(v)
        self.cap.append(cap)
        self.head[v].append(idx + 1)
        self.to.append(u)
        self.cap.append(0.0)
        return idx

    def _levels(self, s: int, t: int) -> list[int] | None:
        level = [-1] * self.n
        level[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for e in self.head[u]:
                v = self.to[e]
                if self.cap[e] > self.tol and level[v] < 0:
                    level[v] = level[u] + 1
                    queue.append(v)
        return level if level[t] >= 0 else None

    def _blocking(self, u: int, t: int, pushed: float, level, it) -> float:
        if u == t:
            return pushed
        while it[u] < len(self.head[u]):
            e = self.head[u][it[u]]
            v = self.to[e]
            if self.cap[e] > self.tol and level[v] == level[u] + 1:
                got = self._blocking(v, t, min(pushed, self.cap[e]), level, it)
                if got > 0.0:
                    self.cap[e] -= got
                    self.cap[e ^ 1] += got
                    return got
            it[u] += 1
        return 0.0

    def max_flow(self, s: int, t: int) -> float:
        flow = 0.0
        while True:
            level = self._levels(s, t)
            if level is None:
                return flow
            it = [0] * self.n
            while True:
                pushed = self._blocking(s, t, math.inf, level, it)
                if pushed <= 0.0:
                    break
                flow += pushed

    def residual_side(self, s: int) -> set[int]:
        seen = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for e in self.head[u]:
                v = self.to[e]
                if self.cap[e] > self.tol and v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen


def min_cut(network: FlowNetwork) -> MinCutResult:
    """Dinic max-flow, then the source-side residual cut.

    Deterministic given the network's arc order.  When the sink is not
    reachable at all the cut is empty with cost zero.  The saturation
    tolerance scales with the largest finite capacity.
    """
    finite = [c for c in network.capacities if math.isfinite(c)]
    tol = _CAP_TOL * max(1.0, max(finite, default=1.0))
    dinic = _Dinic(2 * network.n + 2, tol=tol)
    arc_ids = [dinic.add_arc(u, v, c) for (u, v), c in zip(network.arcs, network.capacities)]
    flow = dinic.max_flow(network.source, network.sink)
    side = dinic.residual_side(network.source)
    if network.sink in side:  # only possible when no source-sink path existed
        return MinCutResult((), (), 0.0, 0.0)
    cut_arcs = []
    cut_nodes = []
    for (u, v), aid in zip(network.arcs, arc_ids):
        if u in side and v not in side:
            cut_arcs.append((u, v))
            if not (1 <= u <= network.n and v == u + network.n):
                raise ValidationError(f"min cut crossed a non-split arc ({u}, {v})")
            cut_nodes.append(u)
    cost = math.fsum(network.capacities[network.arcs.index(a)] for a in cut_arcs)
    if not math.isclose(cost, flow, rel_tol=1e-9, abs_tol=1e-9):
        raise ValidationError(f"max-flow/min-cut duality violated: flow={flow}, cut={cost}")
    return MinCutResult(tuple(cut_arcs), tuple(sorted(cut_nodes)), cost, flow)


# ---------------------------------------------------------------------------
# matrix game
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SingleStageEquilibrium:
    """Equilibrium of the cut-node matrix game.

    ``pi`` is the adversary's mixture over the per-cut-node attack paths;
    ``defender`` arms exactly the cut nodes with the log-linear closed-form
    probabilities.  ``diagnostics`` is "interior" when a nonnegative mixture
    satisfying the indifference condition exists, else "boundary" (the
    dominant pure row plus the adversary's best response to it, flagged via
    ``infeasible_mixture``).
    """

    cut: MinCutResult
    nodes: tuple[int, ...]
    relevance: dict[int, tuple[int, ...]]
    costs: dict[int, float]
    defender: DefenderStrategy
    pi: dict[int, float]
    paths: dict[int, tuple[int, ...]]
    products: dict[int, float]
    u_d: float
    u_a: float
    diagnostics: str
    infeasible_mixture: bool
    product_spread: float
    notes: tuple[str, ...]

    def matrix_defender_payoff(
        self,
        graph: InformationFlowGraph,
        params: GameParams,
        defender: DefenderStrategy | None = None,
        pi: dict[int, float] | None = None,
    ) -> float:
        """Defender payoff of the matrix game for (possibly deviated) inputs.

        Node spending is charged on the attack path through the node, so each
        cut node's cost terms are weighted by its path probability.
        """
        defender = self.defender if defender is None else defender
        pi = self.pi if pi is None else pi
        beta, alpha = params.beta_d[0], params.alpha_d
        total = 0.0
        for node, weight in pi.items():
            row = defender.probs[node]
            prod = row[0] * row[1] * math.prod(row[1 + r] for r in self.relevance[node])
            spent = (
                row[0] * params.tag_cost(graph, node)
                + row[1] * params.trap_cost(graph, node)
                + math.fsum(row[1 + r] * params.gamma[r - 1] for r in self.relevance[node])
            )
            total += weight * (prod * alpha + (1.0 - prod) * beta + spent)
        return total

    def matrix_adversary_value(
        self, params: GameParams, node: int, defender: DefenderStrategy | None = None
    ) -> float:
        """Adversary payoff of the attack path through ``node``."""
        defender = self.defender if defender is None else defender
        row = defender.probs[node]
        prod = row[0] * row[1] * math.prod(row[1 + r] for r in self.relevance[node])
        return (1.0 - prod) * params.beta_a[0] + prod * params.alpha_a


def _bfs_path(graph: InformationFlowGraph, start: int, goals: set[int], blocked: set[int]):
    """Shortest path start->any goal avoiding ``blocked``; smallest-node tie-break."""
    if start in goals:
        return (start,)
    succ = graph.successors
    parent = {start: None}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for w in succ.get(u, ()):
            if w in blocked or w in parent:
                continue
            parent[w] = u
            if w in goals:
                path = [w]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                return tuple(reversed(path))
            queue.append(w)
    return None


def _representative_paths(graph, nodes) -> dict[int, tuple[int, ...]]:
    """Per cut node, an attack path through it avoiding the other cut nodes.

    Minimality of the cut guarantees existence when split capacities are
    positive.
    """
    dest = set(graph.stages[0])
    paths = {}
    for node in nodes:
        others = set(nodes) - {node}
        prefix = _bfs_path(graph, SOURCE, {node}, others)
        if prefix is None:
            raise ValidationError(
                f"no source path to cut node {node} avoiding the other cut nodes; "
                "is a split capacity zero?"
            )
        suffix = _bfs_path(graph, node, dest, others)
        if suffix is None:
            raise ValidationError(
                f"no destination path from cut node {node} avoiding the other cut nodes"
            )
        paths[node] = prefix + suffix[1:]
    return paths


def solve_matrix_game(
    graph: InformationFlowGraph, params: GameParams, cut: MinCutResult
) -> SingleStageEquilibrium:
    """Solve the cut-node matrix game of the single-stage attack.

    (a) cost per cut node: tag + trap + relevant-rule costs (signed).
    (b) adversary mixture: nonnegative, normalized, making the defender
        indifferent between its two rows; when every indifference coefficient
        has the same strict sign no such mixture exists and the boundary
        outcome is returned instead.
    (c) defender probabilities per cut node from the log-linear system
        log p_k = S - log(ratio_k) with S = sum(log ratio_k) / (K - 1),
        where ratio_k is the component's cost over the detection margin
        (stage penalty minus detection reward).
    (d) detection products are compared across cut nodes (their spread is
        reported; at an exact equilibrium it is zero).
    """
    if graph.n_stages != 1:
        raise NotSingleStage(f"matrix game needs a single-stage graph, got M={graph.n_stages}")
    graph = ensure_augmented(graph)
    params.check_against(graph)
    if not cut.cut_nodes:
        raise ValidationError("cannot solve the matrix game for an empty cut")
    nodes = cut.cut_nodes
    notes: list[str] = []

    reach = entry_reachability(graph)
    relevance = {}
    for node in nodes:
        declared = graph.relevance(node)
        via_dfs = reach[node - 1]
        relevance[node] = declared
        if tuple(declared) != tuple(via_dfs):
            notes.append(
                f"node {node}: declared rule relevance {declared} differs from "
                f"entry reachability {via_dfs}; using the declared set"
            )

    beta, alpha = params.beta_d[0], params.alpha_d
    denom = beta - alpha  # < 0
    costs = {
        node: params.tag_cost(graph, node)
        + params.trap_cost(graph, node)
        + math.fsum(params.gamma[r - 1] for r in relevance[node])
        for node in nodes
    }

    # (b) indifference mixture
    t = {node: beta - alpha - costs[node] for node in nodes}
    scale = max(1.0, abs(denom))
    tol = 1e-9 * scale
    pos = [i for i in nodes if t[i] > tol]
    neg = [i for i in nodes if t[i] < -tol]
    zero = [i for i in nodes if abs(t[i]) <= tol]

    if pos and neg:
        a = math.fsum(t[i] for i in pos)
        b = -math.fsum(t[i] for i in neg)
        weights = {}
        for i in pos:
            weights[i] = b
        for i in neg:
            weights[i] = a
        for i in zero:
            weights[i] = (a + b) / 2.0
        total = math.fsum(weights.values())
        pi = {i: w / total for i, w in weights.items()}
        interior = True
    elif zero:
        pi = {i: (1.0 / len(zero) if i in zero else 0.0) for i in nodes}
        interior = True
    else:
        pi = {}
        interior = False

    if not interior:
        return _boundary_outcome(graph, params, cut, nodes, relevance, costs, t, notes)

    # (c) defender probabilities per cut node: each component's
    # cost-to-margin ratio pins the product of the other components
    probs = np.zeros((graph.n + 1, graph.n + 2))
    products = {}
    for node in nodes:
        components = [1, 2] + [2 + r for r in relevance[node]]
        ratios = []
        for comp in components:
            if comp == 1:
                num = params.tag_cost(graph, node)
            elif comp == 2:
                num = params.trap_cost(graph, node)
            else:
                num = params.gamma[comp - 3]
            ratio = num / denom
            if ratio <= 0.0:
                raise DegenerateEquilibrium(
                    f"cost ratio for component {comp} at node {node} is {ratio!r} <= 0 "
                    "(a zero-cost component cannot be mixed)"
                )
            ratios.append(ratio)
        k = len(ratios)
        log_ratios = [math.log(x) for x in ratios]
        s = math.fsum(log_ratios) / (k - 1)
        for comp, lr in zip(components, log_ratios):
            p = math.exp(s - lr)
            if p > 1.0 + 1e-9:
                raise DegenerateEquilibrium(
                    f"solved probability {p!r} for component {comp} at node {node} "
                    "falls outside (0, 1]"
                )
            probs[node, comp - 1] = min(p, 1.0)
        products[node] = math.exp(s)

    defender = DefenderStrategy(probs)
    spread = max(products.values()) - min(products.values())
    if spread > 1e-9:
        notes.append(
            f"detection products differ across cut nodes by {spread:.3e}; "
            "the adversary side of the equilibrium is only approximate"
        )

    paths = _representative_paths(graph, nodes)
    u_a = math.fsum(
        pi[i] * ((1.0 - products[i]) * params.beta_a[0] + products[i] * params.alpha_a)
        for i in nodes
    )
    spent = {
        node: probs[node, 0] * params.tag_cost(graph, node)
        + probs[node, 1] * params.trap_cost(graph, node)
        + math.fsum(probs[node, 1 + r] * params.gamma[r - 1] for r in relevance[node])
        for node in nodes
    }
    u_d = math.fsum(
        pi[i] * (products[i] * params.alpha_d + (1.0 - products[i]) * beta + spent[i])
        for i in nodes
    )
    return SingleStageEquilibrium(
        cut=cut,
        nodes=nodes,
        relevance=relevance,
        costs=costs,
        defender=defender,
        pi=pi,
        paths=paths,
        products=products,
        u_d=u_d,
        u_a=u_a,
        diagnostics="interior",
        infeasible_mixture=False,
        product_spread=spread,
        notes=tuple(notes),
    )


def _boundary_outcome(graph, params, cut, nodes, relevance, costs, t, notes):
    """Dominant pure defender row plus the adversary's best response to it."""
    all_detect = all(t[i] < 0 for i in nodes)
    probs = np.zeros((graph.n + 1, graph.n + 2))
    if all_detect:
        for node in nodes:
            probs[node, 0] = 1.0
            probs[node, 1] = 1.0
            for r in relevance[node]:
                probs[node, 1 + r] = 1.0
        notes.append("all indifference coefficients negative: defender plays the Detected row")
    else:
        notes.append("all indifference coefficients positive: defender plays the Not-detected row")
    defender = DefenderStrategy(probs)
    br = respond.adversary_best_response(graph, params, defender)
    products = {
        node: float(
            probs[node, 0] * probs[node, 1] * math.prod(probs[node, 1 + r] for r in relevance[node])
        )
        for node in nodes
    }
    if br.dropped:
        pi: dict[int, float] = {}
        paths: dict[int, tuple[int, ...]] = {}
        u_a = 0.0
        u_d = 0.0 if not all_detect else math.fsum(
            params.tag_cost(graph, i) + params.trap_cost(graph, i)
            + math.fsum(params.gamma[r - 1] for r in relevance[i])
            for i in nodes
        )
        notes.append("adversary best response is to drop immediately")
    else:
        cut_hits = [i for i in nodes if i in br.path]
        anchor = cut_hits[0] if cut_hits else None
        pi = {anchor: 1.0} if anchor is not None else {}
        paths = {anchor: br.path} if anchor is not None else {}
        u_a = br.value
        detected = 1.0 - br.survival
        spent = 0.0
        if all_detect:
            spent = math.fsum(
                params.tag_cost(graph, i) + params.trap_cost(graph, i)
                + math.fsum(params.gamma[r - 1] for r in relevance[i])
                for i in nodes if i in br.path
            )
        u_d = detected * params.alpha_d + br.survival * params.beta_d[0] + spent
    spread = (max(products.values()) - min(products.values())) if products else 0.0
    return SingleStageEquilibrium(
        cut=cut,
        nodes=nodes,
        relevance=relevance,
        costs=costs,
        defender=defender,
        pi=pi,
        paths=paths,
        products=products,
        u_d=u_d,
        u_a=u_a,
        diagnostics="boundary",
        infeasible_mixture=True,
        product_spread=spread,
        notes=tuple(notes),
    )


def solve_single_stage(graph: InformationFlowGraph, params: GameParams) -> SingleStageEquilibrium:
    """Build the flow network, take its min cut, and solve the matrix game."""
    network = build_flow_network(graph, params)
    cut = min_cut(network)
    return solve_matrix_game(graph, params, cut)
