"""Multi-stage equilibrium learning via internal-regret minimization.

The two-player game is decomposed into (M+2)N + L + 1 players, where L is
the total number of (node, relevant rule) pairs: one move player per (node,
stage) choosing the next hop or drop, one entry player choosing the attack's
entry point, and one binary player per defender component (tag, trap, each
relevant rule at each node).  All adversary-side players receive the
adversary utility, all defender-side players the defender utility, evaluated
on the pure profile realized each round.

Each round every player samples an action; the cumulative expected utility
of every "replace r by s" transformation of its current mixed strategy is
updated, the transformations are reweighted exponentially, and the player's
next mixture is the stationary distribution of the induced swap chain.  The
run stops when no player's mixture moved more than ``eps`` in sup norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence, ValidationError
from .game import DROP, AdversaryStrategy, DefenderStrategy, GameParams, evaluate_pure_profile
from .ifg import SOURCE, InformationFlowGraph, ensure_augmented

ADVANCE = -2  # placeholder action of forced stage-transition players


@dataclass(frozen=True)
class Player:
    kind: str  # "move" | "entry" | "tag" | "trap" | "rule"
    node: int
    stage: int = 0  # move players only
    rule: int = 0  # rule players only
    actions: tuple[int, ...] = ()

    @property
    def n_actions(self) -> int:
        return len(self.actions)


class PlayerRoster:
    """Player decomposition of a game instance, with index maps.

    Order: move players (node-major, then stage), the entry player, tag
    players 1..n, trap players 1..n, rule players sorted by (node, rule).
    """

    def __init__(self, graph: InformationFlowGraph):
        graph = ensure_augmented(graph)
        self.graph = graph
        succ = graph.successors
        m = graph.n_stages
        players: list[Player] = []
        self.move_index: dict[tuple[int, int], int] = {}
        for node in range(1, graph.n + 1):
            for stage in range(1, m + 1):
                if graph.advance(node, stage) != stage:
                    actions: tuple[int, ...] = (ADVANCE,)  # forced transition
                else:
                    actions = tuple(succ.get(node, ())) + (DROP,)
                self.move_index[(node, stage)] = len(players)
                players.append(Player("move", node, stage=stage, actions=actions))
        self.entry_index = len(players)
        players.append(Player("entry", SOURCE, actions=tuple(graph.vulnerable)))
        self.defender_start = len(players)
        self.tag_index: dict[int, int] = {}
        self.trap_index: dict[int, int] = {}
        self.rule_index: dict[tuple[int, int], int] = {}
        for node in range(1, graph.n + 1):
            self.tag_index[node] = len(players)
            players.append(Player("tag", node, actions=(0, 1)))
        for node in range(1, graph.n + 1):
            self.trap_index[node] = len(players)
            players.append(Player("trap", node, actions=(0, 1)))
        for node in range(1, graph.n + 1):
            for rule in graph.relevance(node):
                self.rule_index[(node, rule)] = len(players)
                players.append(Player("rule", node, rule=rule, actions=(0, 1)))
        self.players = tuple(players)
        self.n_rules_total = len(self.rule_index)

    def __len__(self) -> int:
        return len(self.players)

    @property
    def n_defenders(self) -> int:
        return len(self.players) - self.defender_start

    def defender_players_at(self, node: int) -> list[int]:
        out = [self.tag_index[node], self.trap_index[node]]
        out.extend(self.rule_index[(node, r)] for r in self.graph.relevance(node))
        return out

    def profile_bits(self, actions) -> np.ndarray:
        """Defender 0/1 matrix of a pure profile, shaped (n+1, 2+n)."""
        graph = self.graph
        bits = np.zeros((graph.n + 1, graph.n + 2))
        for node in range(1, graph.n + 1):
            bits[node, 0] = actions[self.tag_index[node]]
            bits[node, 1] = actions[self.trap_index[node]]
            for r in graph.relevance(node):
                bits[node, 1 + r] = actions[self.rule_index[(node, r)]]
        return bits

    def profile_walk(self, actions) -> tuple[int, ...]:
        """The deterministic walk a pure profile plans, detection aside.

        The walk ends at a drop action, at completion of the last stage, or
        at the first revisited (node, stage) decision state (a committed
        cycle never terminates, which is drop-equivalent).
        """
        graph = self.graph
        m = graph.n_stages
        entry = self.players[self.entry_index]
        node = entry.actions[actions[self.entry_index]]
        walk = [SOURCE, node]
        stage = 1
        seen = set()
        while True:
            stage = graph.advance(node, stage)
            if stage > m:
                break
            state = (node, stage)
            if state in seen:
                break
            seen.add(state)
            player = self.players[self.move_index[state]]
            act = player.actions[actions[self.move_index[state]]]
            if act == DROP:
                break
            node = act
            walk.append(node)
        return tuple(walk)

    def defender_strategy(self, distributions) -> DefenderStrategy:
        graph = self.graph
        probs = np.zeros((graph.n + 1, graph.n + 2))
        for node in range(1, graph.n + 1):
            probs[node, 0] = distributions[self.tag_index[node]][1]
            probs[node, 1] = distributions[self.trap_index[node]][1]
            for r in graph.relevance(node):
                probs[node, 1 + r] = distributions[self.rule_index[(node, r)]][1]
        return DefenderStrategy(probs)

    def adversary_strategy(self, distributions) -> AdversaryStrategy:
        graph = self.graph
        moves: dict[tuple[int, int], dict[int, float]] = {}
        entry = self.players[self.entry_index]
        dist = distributions[self.entry_index]
        moves[(SOURCE, 1)] = {a: float(p) for a, p in zip(entry.actions, dist)}
        for (node, stage), idx in self.move_index.items():
            player = self.players[idx]
            if player.actions == (ADVANCE,):
                continue
            moves[(node, stage)] = {
                a: float(p) for a, p in zip(player.actions, distributions[idx])
            }
        return AdversaryStrategy(moves)


def build_roster(graph: InformationFlowGraph) -> PlayerRoster:
    """Roster with (M+2)N + L + 1 players, L = total relevant (node, rule) pairs."""
    return PlayerRoster(graph)


# ---------------------------------------------------------------------------
# swap transformations and their fixed point
# ---------------------------------------------------------------------------


def swap_distribution(p, r: int, s: int) -> np.ndarray:
    """Copy of ``p`` with all mass of action ``r`` moved onto action ``s``."""
    if r == s:
        raise ValidationError("swap needs two distinct actions")
    q = np.array(p, dtype=float)
    q[s] += q[r]
    q[r] = 0.0
    return q


def fixed_point(delta, n_actions: int | None = None, tol: float = 1e-12,
                max_sweeps: int = 100_000) -> np.ndarray:
    """Stationary distribution of the swap chain induced by pair weights.

    ``delta`` is a k x k matrix of weights over ordered action pairs (its
    diagonal is ignored); the chain moves mass from r to s at rate
    delta[r, s].  Power iteration from uniform until the L1 sweep change is
    below ``tol``; raises NonConvergence at the sweep cap.
    """
    delta = np.array(delta, dtype=float)
    if delta.ndim != 2 or delta.shape[0] != delta.shape[1]:
        raise ValidationError(f"delta must be square, got shape {delta.shape}")
    k = delta.shape[0] if n_actions is None else n_actions
    if delta.shape[0] != k:
        raise ValidationError("n_actions disagrees with the delta matrix")
    if np.any(delta < 0):
        raise ValidationError("swap weights must be nonnegative")
    np.fill_diagonal(delta, 0.0)
    if abs(delta.sum() - 1.0) > 1e-6:
        raise ValidationError("swap weights must form a distribution over ordered pairs")
    q = delta.copy()
    np.fill_diagonal(q, 1.0 - delta.sum(axis=1))
    p = np.full(k, 1.0 / k)
    for _ in range(max_sweeps):
        nxt = p @ q
        if np.abs(nxt - p).sum() <= tol:
            p = nxt
            break
        p = nxt
    else:
        raise NonConvergence(f"power iteration did not reach {tol} in {max_sweeps} sweeps")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def _sigmoid(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-min(x, 700.0)))
    e = math.exp(max(x, -700.0))
    return e / (1.0 + e)


def _softmax_pairs(g: np.ndarray, eta: float) -> np.ndarray:
    """Exponential pair weights from cumulative swap utilities (off-diagonal)."""
    k = g.shape[0]
    mask = ~np.eye(k, dtype=bool)
    w = eta * g[mask]
    w -= w.max()
    e = np.exp(w)
    delta = np.zeros_like(g)
    delta[mask] = e / e.sum()
    return delta


# ---------------------------------------------------------------------------
# rollout machinery
# ---------------------------------------------------------------------------


class _WalkInfo:
    __slots__ = (
        "arrivals", "pre_stages", "post_stages",
        "rew_a_before", "rew_d_before", "rew_a_incl", "rew_d_incl",
        "decisions", "decision_keys", "det_idx", "end",
        "u_a", "u_d", "cost",
    )


class _Rollout:
    """Shared pure-profile evaluation with per-player counterfactuals."""

    def __init__(self, roster: PlayerRoster, params: GameParams):
        graph = roster.graph
        params.check_against(graph)
        self.roster = roster
        self.params = params
        self.graph = graph
        m = graph.n_stages
        self.m = m
        self.ba = np.concatenate(([0.0], np.cumsum(params.beta_a)))
        self.bd = np.concatenate(([0.0], np.cumsum(params.beta_d)))
        self.adv = np.zeros((graph.n + 1, m + 1), dtype=np.int64)
        for v in range(graph.n + 1):
            for j in range(1, m + 1):
                self.adv[v, j] = graph.advance(v, j)
        # defender block arrays
        d0 = roster.defender_start
        self.def_slice = slice(d0, len(roster.players))
        cost = []
        for player in roster.players[d0:]:
            if player.kind == "tag":
                cost.append(params.tag_cost(graph, player.node))
            elif player.kind == "trap":
                cost.append(params.trap_cost(graph, player.node))
            else:
                cost.append(params.gamma[player.rule - 1])
        self.def_cost = np.array(cost)
        self.def_node = np.array([p.node for p in roster.players[d0:]])
        self.def_players_at = {
            node: [i - d0 for i in roster.defender_players_at(node)]
            for node in range(1, graph.n + 1)
        }

    def armed_nodes(self, def_bits: np.ndarray) -> np.ndarray:
        armed = np.zeros(self.graph.n + 1, dtype=bool)
        for node in range(1, self.graph.n + 1):
            armed[node] = bool(def_bits[self.def_players_at[node]].all())
        return armed

    def walk_info(self, actions: np.ndarray, armed: np.ndarray, def_bits: np.ndarray) -> _WalkInfo:
        roster = self.roster
        graph = self.graph
        m = self.m
        info = _WalkInfo()
        arrivals: list[int] = []
        pre: list[int] = []
        post: list[int] = []
        rab: list[float] = []
        rdb: list[float] = []
        rai: list[float] = []
        rdi: list[float] = []
        decisions: list[tuple[int, int]] = []  # (player index, arrival position)
        keys: list[tuple[int, int]] = []
        ba, bd, adv = self.ba, self.bd, self.adv
        entry = roster.players[roster.entry_index]
        node = entry.actions[actions[roster.entry_index]]
        stage = 1
        rew_a = rew_d = 0.0
        seen: set[tuple[int, int]] = set()
        end = "drop"
        while True:
            arrivals.append(node)
            pre.append(stage)
            rab.append(rew_a)
            rdb.append(rew_d)
            new_stage = int(adv[node, stage])
            rew_a += ba[new_stage - 1] - ba[stage - 1]
            rew_d += bd[new_stage - 1] - bd[stage - 1]
            rai.append(rew_a)
            rdi.append(rew_d)
            post.append(new_stage)
            if new_stage > m:
                end = "complete"
                break
            state = (node, new_stage)
            if state in seen:
                end = "cycle"
                break
            seen.add(state)
            idx = roster.move_index[state]
            decisions.append((idx, len(arrivals) - 1))
            keys.append(state)
            act = roster.players[idx].actions[actions[idx]]
            if act == DROP:
                end = "drop"
                break
            node = act
            stage = new_stage

        det_idx = None
        for i, v in enumerate(arrivals):
            if armed[v]:
                det_idx = i
                break
        cost = float(def_bits @ self.def_cost)
        if det_idx is None:
            u_a = rai[-1]
            u_d = rdi[-1] + cost
        else:
            u_a = rab[det_idx] + self.params.alpha_a
            u_d = rdb[det_idx] + self.params.alpha_d + cost
        info.arrivals = arrivals
        info.pre_stages = pre
        info.post_stages = post
        info.rew_a_before = rab
        info.rew_d_before = rdb
        info.rew_a_incl = rai
        info.rew_d_incl = rdi
        info.decisions = decisions
        info.decision_keys = keys
        info.det_idx = det_idx
        info.end = end
        info.u_a = u_a
        info.u_d = u_d
        info.cost = cost
        return info

    def _suffix_value(self, actions, armed, node, stage, seen, rew_a) -> float:
        """Adversary continuation value from an arrival, following the profile."""
        roster = self.roster
        ba, adv, m = self.ba, self.adv, self.m
        while True:
            if armed[node]:
                return rew_a + self.params.alpha_a
            new_stage = int(adv[node, stage])
            rew_a += ba[new_stage - 1] - ba[stage - 1]
            if new_stage > m:
                return rew_a
            state = (node, new_stage)
            if state in seen:
                return rew_a
            seen.add(state)
            idx = roster.move_index[state]
            act = roster.players[idx].actions[actions[idx]]
            if act == DROP:
                return rew_a
            node = act
            stage = new_stage

    def entry_utils(self, actions, armed, info: _WalkInfo) -> np.ndarray:
        roster = self.roster
        player = roster.players[roster.entry_index]
        realized = player.actions[actions[roster.entry_index]]
        utils = np.empty(player.n_actions)
        for a_idx, target in enumerate(player.actions):
            if target == realized:
                utils[a_idx] = info.u_a
            else:
                utils[a_idx] = self._suffix_value(actions, armed, target, 1, set(), 0.0)
        return utils

    def move_utils(self, actions, armed, info: _WalkInfo, decision_ordinal: int) -> np.ndarray:
        """Per-action adversary utility for the decision taken at one position."""
        roster = self.roster
        idx, pos = info.decisions[decision_ordinal]
        player = roster.players[idx]
        realized = player.actions[actions[idx]]
        base = info.rew_a_incl[pos]
        stage = info.post_stages[pos]
        prefix_keys = info.decision_keys[: decision_ordinal + 1]
        utils = np.empty(player.n_actions)
        for a_idx, target in enumerate(player.actions):
            if target == realized:
                utils[a_idx] = info.u_a
            elif target == DROP:
                utils[a_idx] = base
            else:
                utils[a_idx] = self._suffix_value(
                    actions, armed, target, stage, set(prefix_keys), base
                )
        return utils

    def defender_utils(self, def_bits, armed, info: _WalkInfo) -> tuple[np.ndarray, np.ndarray]:
        """Defender utility for bit 0 and bit 1, per defender player.

        Flipping a bit shifts the cost term; the path outcome changes only
        when the flip toggles the armed state of a node whose first visit is
        not masked by an earlier detection.
        """
        u0 = info.u_d - def_bits * self.def_cost
        u1 = u0 + self.def_cost
        det = info.det_idx
        first_occ: dict[int, int] = {}
        for i, v in enumerate(info.arrivals):
            if v not in first_occ:
                first_occ[v] = i
        alpha_d = self.params.alpha_d
        for node, i0 in first_occ.items():
            members = self.def_players_at[node]
            bits = def_bits[members]
            n_set = int(bits.sum())
            k = len(members)
            if n_set == k and det == i0:
                # armed and detecting: any member's flip to 0 disarms the node,
                # deferring detection to the next armed node on the walk
                det2 = None
                for i, v in enumerate(info.arrivals):
                    if v != node and armed[v]:
                        det2 = i
                        break
                if det2 is None:
                    out = info.rew_d_incl[-1]
                else:
                    out = info.rew_d_before[det2] + alpha_d
                for local in members:
                    u0[local] = out + info.cost - self.def_cost[local]
            elif n_set == k - 1 and (det is None or i0 < det):
                # one bit short of armed: flipping that bit to 1 arms the node
                # and pulls detection forward to this node's first visit
                out = info.rew_d_before[i0] + alpha_d
                missing = members[int(np.flatnonzero(bits == 0)[0])]
                u1[missing] = out + info.cost + self.def_cost[missing]
        return u0, u1


# ---------------------------------------------------------------------------
# the learner
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LearnerConfig:
    eta: float = 0.1
    eps: float = 1e-3
    max_iters: int = 50_000
    seed: int = 0

    def __post_init__(self):
        if self.eta <= 0:
            raise ValidationError(f"eta must be > 0, got {self.eta}")
        if self.eps <= 0:
            raise ValidationError(f"eps must be > 0, got {self.eps}")
        if self.max_iters < 1:
            raise ValidationError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass
class CorrelatedEquilibriumResult:
    """Learned per-player mixtures, sampled profiles, and the convergence trace.

    ``trace`` has one row per iteration: (iteration, running mean defender
    utility, running mean adversary utility, max per-player sup-norm change).
    The empirical joint distribution is the second half of ``profiles``.
    """

    roster: PlayerRoster
    config: LearnerConfig
    distributions: tuple[np.ndarray, ...]
    profiles: np.ndarray  # (iterations, n_players) action indices
    trace: np.ndarray  # (iterations, 4)
    converged: bool
    iterations: int
    final_gap: float
    notes: tuple[str, ...] = ()

    def joint_profiles(self) -> np.ndarray:
        keep = math.ceil(self.iterations / 2)
        return self.profiles[self.iterations - keep:]

    def defender_strategy(self) -> DefenderStrategy:
        return self.roster.defender_strategy(self.distributions)

    def adversary_strategy(self) -> AdversaryStrategy:
        return self.roster.adversary_strategy(self.distributions)

    def trace_csv(self) -> str:
        lines = ["iteration,U_D_avg,U_A_avg,max_gap"]
        for row in self.trace:
            lines.append(f"{int(row[0])},{float(row[1])!r},{float(row[2])!r},{float(row[3])!r}")
        return "\n".join(lines) + "\n"


def run(
    graph: InformationFlowGraph,
    params: GameParams,
    config: LearnerConfig | None = None,
) -> CorrelatedEquilibriumResult:
    """Iterate the internal-regret dynamics until the mixtures stop moving.

    Per iteration: sample one action per player, fold the realized profile
    into every player's cumulative swap utilities, reweight the swap pairs
    exponentially (rate ``eta``), and move each player to the stationary
    distribution of its swap chain.  Stops when the largest sup-norm change
    of any player's mixture is at most ``eps``, or at ``max_iters`` (flagged
    as not converged).  Deterministic for a fixed config.

    Players whose counterfactual utilities provably match the realized one
    for every action (adversary players off the realized walk) receive a
    constant swap-utility increment, which leaves their pair weights and
    mixture unchanged; the update is skipped outright.
    """
    cfg = config or LearnerConfig()
    roster = build_roster(graph)
    ctx = _Rollout(roster, params)
    rng = np.random.default_rng(cfg.seed)
    n_players = len(roster)
    d0 = roster.defender_start
    n_def = roster.n_defenders
    eta = cfg.eta

    # mutable learner state
    varying = [
        i for i, pl in enumerate(roster.players[:d0]) if pl.n_actions > 1
    ]  # move/entry players with a real choice
    dist: list[np.ndarray] = [
        np.full(pl.n_actions, 1.0 / pl.n_actions) for pl in roster.players[:d0]
    ]
    cums: dict[int, np.ndarray] = {i: np.cumsum(dist[i]) for i in varying}
    big_g: dict[int, np.ndarray] = {
        i: np.zeros((roster.players[i].n_actions,) * 2) for i in varying
    }
    g01 = np.zeros(n_def)
    g10 = np.zeros(n_def)
    p1 = np.full(n_def, 0.5)

    profiles = np.zeros((cfg.max_iters, n_players), dtype=np.int16)
    trace = np.zeros((cfg.max_iters, 4))
    sum_ud = 0.0
    sum_ua = 0.0
    notes: list[str] = []
    converged = False
    gap = math.inf
    t = 0

    actions = np.zeros(n_players, dtype=np.int64)
    while t < cfg.max_iters:
        u = rng.random(n_players)
        for i in varying:
            actions[i] = min(int(np.searchsorted(cums[i], u[i], side="right")), len(cums[i]) - 1)
        def_bits = (u[d0:] < p1).astype(np.float64)
        actions[d0:] = def_bits.astype(np.int64)

        armed = ctx.armed_nodes(def_bits)
        info = ctx.walk_info(actions, armed, def_bits)
        sum_ud += info.u_d
        sum_ua += info.u_a
        gap = 0.0

        # adversary-side updates: entry plus effective walk decisions
        touched: list[tuple[int, np.ndarray]] = []
        entry_player = roster.players[roster.entry_index]
        if entry_player.n_actions > 1:
            touched.append((roster.entry_index, ctx.entry_utils(actions, armed, info)))
        det = info.det_idx
        for ordinal, (idx, pos) in enumerate(info.decisions):
            if det is not None and pos >= det:
                break  # decisions past the detection point never execute
            if roster.players[idx].n_actions > 1:
                touched.append((idx, ctx.move_utils(actions, armed, info, ordinal)))
        for idx, utils in touched:
            p = dist[idx]
            g = big_g[idx]
            base = float(p @ utils)
            g += base + np.outer(p, np.ones_like(p)) * (utils[None, :] - utils[:, None])
            np.fill_diagonal(g, 0.0)
            if len(p) == 2:
                d01 = _sigmoid(eta * (g[0, 1] - g[1, 0]))
                new_p = np.array([1.0 - d01, d01])
            else:
                delta = _softmax_pairs(g, eta)
                try:
                    new_p = fixed_point(delta)
                    q = delta.copy()
                    np.fill_diagonal(q, 1.0 - delta.sum(axis=1))
                    if np.abs(new_p - new_p @ q).sum() > 1e-10:
                        raise NonConvergence("stationarity residual above 1e-10")
                except NonConvergence:
                    new_p = np.full(len(p), 1.0 / len(p))
                    notes.append(f"iteration {t + 1}: fixed point reset for player {idx}")
            gap = max(gap, float(np.abs(new_p - p).max()))
            dist[idx] = new_p
            cums[idx] = np.cumsum(new_p)

        # defender updates: for two actions the pair weights reduce to a
        # logistic in the cumulative utility difference, and the stationary
        # mixture is (delta10, delta01) itself
        u0, u1 = ctx.defender_utils(def_bits, armed, info)
        g01 += u1
        g10 += u0
        new_p1 = 1.0 / (1.0 + np.exp(np.clip(-eta * (g01 - g10), -700.0, 700.0)))
        gap = max(gap, float(np.abs(new_p1 - p1).max()))
        p1 = new_p1

        profiles[t] = actions
        t += 1
        trace[t - 1] = (t, sum_ud / t, sum_ua / t, gap)
        if gap <= cfg.eps:
            converged = True
            break

    distributions = [d.copy() for d in dist]
    for local in range(n_def):
        distributions.append(np.array([1.0 - p1[local], p1[local]]))
    return CorrelatedEquilibriumResult(
        roster=roster,
        config=cfg,
        distributions=tuple(distributions),
        profiles=profiles[:t],
        trace=trace[:t],
        converged=converged,
        iterations=t,
        final_gap=float(gap),
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# verification utilities
# ---------------------------------------------------------------------------


def expected_swap_utility(
    roster: PlayerRoster,
    player: int,
    p_swapped,
    profile,
    graph: InformationFlowGraph,
    params: GameParams,
) -> float:
    """Reference expectation of a player's utility under a swapped mixture.

    Evaluates sum_a p_swapped(a) * U(a, others) with the full pure-profile
    evaluator; the learner's incremental bookkeeping must agree with this.
    """
    graph = ensure_augmented(graph)
    target = roster.players[player]
    p_swapped = np.asarray(p_swapped, dtype=float)
    if len(p_swapped) != target.n_actions:
        raise ValidationError("swapped distribution length differs from the action count")
    total = 0.0
    work = np.array(profile, dtype=np.int64)
    for a_idx, weight in enumerate(p_swapped):
        if weight == 0.0:
            continue
        work[player] = a_idx
        bits = roster.profile_bits(work)
        walk = roster.profile_walk(work)
        u_d, u_a = evaluate_pure_profile(graph, params, bits, walk)
        total += weight * (u_a if target.kind in ("move", "entry") else u_d)
    return total


def _profile_gains(ctx: _Rollout, actions: np.ndarray):
    """Per-player (realized action, alternative, utility gain) triples."""
    roster = ctx.roster
    def_bits = actions[roster.defender_start:].astype(np.float64)
    armed = ctx.armed_nodes(def_bits)
    info = ctx.walk_info(actions, armed, def_bits)
    out: list[tuple[int, int, int, float]] = []
    entry_player = roster.players[roster.entry_index]
    if entry_player.n_actions > 1:
        utils = ctx.entry_utils(actions, armed, info)
        r = int(actions[roster.entry_index])
        for s in range(entry_player.n_actions):
            if s != r:
                out.append((roster.entry_index, r, s, float(utils[s] - utils[r])))
    det = info.det_idx
    for ordinal, (idx, pos) in enumerate(info.decisions):
        if det is not None and pos >= det:
            break
        if roster.players[idx].n_actions > 1:
            utils = ctx.move_utils(actions, armed, info, ordinal)
            r = int(actions[idx])
            for s in range(roster.players[idx].n_actions):
                if s != r:
                    out.append((idx, r, s, float(utils[s] - utils[r])))
    u0, u1 = ctx.defender_utils(def_bits, armed, info)
    diff = u1 - u0
    for local in range(roster.n_defenders):
        idx = roster.defender_start + local
        r = int(actions[idx])
        gain = float(diff[local]) if r == 0 else float(-diff[local])
        out.append((idx, r, 1 - r, gain))
    return out


def swap_regret(
    result: CorrelatedEquilibriumResult,
    graph: InformationFlowGraph,
    params: GameParams,
    n_samples: int | None = None,
    seed: int = 0,
) -> float:
    """Maximum expected gain of any single-player action swap under the joint.

    With ``n_samples=None`` the regret is computed exactly over the stored
    empirical joint distribution; otherwise over ``n_samples`` seeded draws
    from it.  The value is the epsilon for which the joint is an
    eps-correlated equilibrium; it is negative when every swap strictly
    loses.
    """
    gain, _ = swap_regret_report(result, graph, params, n_samples, seed)
    return gain


def swap_regret_report(
    result: CorrelatedEquilibriumResult,
    graph: InformationFlowGraph,
    params: GameParams,
    n_samples: int | None = None,
    seed: int = 0,
) -> tuple[float, float]:
    """(max swap gain, standard error of that gain's estimate)."""
    roster = result.roster
    ctx = _Rollout(roster, params)
    joint = result.joint_profiles()
    if n_samples is None:
        rows = joint
    else:
        rng = np.random.default_rng(seed)
        rows = joint[rng.integers(0, len(joint), size=n_samples)]
    total = len(rows)
    uniq, counts = np.unique(rows, axis=0, return_counts=True)
    sums: dict[tuple[int, int, int], float] = {}
    sqs: dict[tuple[int, int, int], float] = {}
    for profile, count in zip(uniq, counts):
        for idx, r, s, gain in _profile_gains(ctx, profile.astype(np.int64)):
            key = (idx, r, s)
            sums[key] = sums.get(key, 0.0) + count * gain
            sqs[key] = sqs.get(key, 0.0) + count * gain * gain
    if not sums:
        return 0.0, 0.0
    best_key = max(sums, key=lambda k: sums[k])
    best_gain = sums[best_key] / total
    if n_samples is None or total < 2:
        err = 0.0
    else:
        var = max(sqs[best_key] / total - best_gain**2, 0.0)
        err = math.sqrt(var / total)
    return best_gain, err
