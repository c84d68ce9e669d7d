"""Two-level map equation and a greedy Infomap-style search over it.

Flow model: a walker on node ``a`` teleports to a uniformly random node with
probability ``tau`` (always, if ``a`` has no out-links) and otherwise follows
an out-link with probability proportional to its weight. Teleportation steps
are recorded, so a module's exit flow is

    q_m = T_m * (n - n_m) / n + (link flow leaving m)

where ``T_m`` is the teleporting share of the module's visit rate. The
codelength in bits is

    L = plogp(sum q) - 2 sum plogp(q_m) - sum_a plogp(p_a) + sum plogp(q_m + p_m)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from madn.errors import ContractError
from madn.netbuild import DirectedWeightedNetwork
from madn.topology import stationary_flow

DEFAULT_TELEPORT = 0.15
DEFAULT_TRIALS = 10
_EPS = 1e-12


def plogp(x: float) -> float:
    return x * math.log2(x) if x > 0 else 0.0


@dataclass(frozen=True)
class FlowDistribution:
    nodes: tuple[str, ...]
    visit_rate: np.ndarray
    teleport: float

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.nodes, self.visit_rate.tolist()))


@dataclass(frozen=True)
class Partition:
    assignment: dict[str, int]
    codelength: float
    teleport: float = DEFAULT_TELEPORT
    params: dict = field(default_factory=dict)

    @property
    def n_modules(self) -> int:
        return len(set(self.assignment.values()))

    def modules(self) -> list[list[str]]:
        out: dict[int, list[str]] = {}
        for node, m in self.assignment.items():
            out.setdefault(m, []).append(node)
        return [sorted(out[m]) for m in sorted(out)]


def visit_rates(network: DirectedWeightedNetwork, teleport: float = DEFAULT_TELEPORT,
                tolerance: float = 1e-14, max_iter: int = 100_000) -> FlowDistribution:
    """Stationary distribution of the teleporting walk (PageRank with damping ``1 - teleport``)."""
    if not 0.0 <= teleport < 1.0:
        raise ContractError(f"teleport must lie in [0, 1), got {teleport}")
    return FlowDistribution(network.nodes, stationary_flow(network, teleport, tolerance, max_iter), teleport)


def canonical_assignment(nodes, assignment: Mapping[str, int]) -> dict[str, int]:
    """Relabel modules 0, 1, ... in order of first appearance along ``nodes``."""
    relabel: dict[int, int] = {}
    out = {}
    for node in nodes:
        m = assignment[node]
        if m not in relabel:
            relabel[m] = len(relabel)
        out[node] = relabel[m]
    return out


class _FlowGraph:
    """Flow quantities of (possibly aggregated) nodes."""

    def __init__(self, p, tele, size, self_flow, out_adj, in_adj, n_total):
        self.p = p                  # visit rate
        self.tele = tele            # teleporting share of the visit rate
        self.size = size            # number of original nodes inside
        self.self_flow = self_flow  # link flow staying inside the aggregate
        self.out_adj = out_adj      # list of {j: flow}
        self.in_adj = in_adj
        self.n_total = n_total
        self.out_total = [self_flow[i] + sum(out_adj[i].values()) for i in range(len(p))]

    @classmethod
    def from_network(cls, network: DirectedWeightedNetwork, teleport: float) -> "_FlowGraph":
        flow = visit_rates(network, teleport)
        p = flow.visit_rate
        n = len(network)
        src, dst, w = network.edge_arrays()
        strength = np.bincount(src, weights=w, minlength=n)
        tele = [float(p[i]) if strength[i] == 0 else teleport * float(p[i]) for i in range(n)]
        out_adj: list[dict[int, float]] = [dict() for _ in range(n)]
        in_adj: list[dict[int, float]] = [dict() for _ in range(n)]
        for s, t, wt in zip(src.tolist(), dst.tolist(), w.tolist()):
            f = float(p[s]) * (1.0 - teleport) * wt / float(strength[s])
            out_adj[s][t] = f
            in_adj[t][s] = f
        return cls([float(x) for x in p], tele, [1] * n, [0.0] * n, out_adj, in_adj, n)

    def aggregate(self, module: list[int]) -> "_FlowGraph":
        k = max(module) + 1
        p = [0.0] * k
        tele = [0.0] * k
        size = [0] * k
        self_flow = [0.0] * k
        out_adj: list[dict[int, float]] = [dict() for _ in range(k)]
        in_adj: list[dict[int, float]] = [dict() for _ in range(k)]
        for i, m in enumerate(module):
            p[m] += self.p[i]
            tele[m] += self.tele[i]
            size[m] += self.size[i]
            self_flow[m] += self.self_flow[i]
            for j, f in self.out_adj[i].items():
                mj = module[j]
                if mj == m:
                    self_flow[m] += f
                else:
                    out_adj[m][mj] = out_adj[m].get(mj, 0.0) + f
                    in_adj[mj][m] = in_adj[mj].get(m, 0.0) + f
        return _FlowGraph(p, tele, size, self_flow, out_adj, in_adj, self.n_total)


class _Modules:
    """Module aggregates under an assignment of flow-graph nodes, with O(1) codelength deltas."""

    def __init__(self, g: _FlowGraph, module: list[int]):
        self.g = g
        self.module = list(module)
        k = len(g.p) + 1
        self.P = [0.0] * k
        self.T = [0.0] * k
        self.N = [0] * k
        self.OUT = [0.0] * k
        self.INT = [0.0] * k
        self.members = [0] * k
        for i, m in enumerate(self.module):
            self.P[m] += g.p[i]
            self.T[m] += g.tele[i]
            self.N[m] += g.size[i]
            self.OUT[m] += g.out_total[i]
            self.INT[m] += g.self_flow[i]
            self.members[m] += 1
            for j, f in g.out_adj[i].items():
                if self.module[j] == m:
                    self.INT[m] += f
        self.q = [self._exit(m) for m in range(k)]
        self.sum_q = sum(self.q)
        self.sum_plogp_q = sum(plogp(x) for x in self.q)
        self.sum_plogp_qp = sum(plogp(self.q[m] + self.P[m]) for m in range(k))

    def _exit(self, m, P=None, T=None, N=None, OUT=None, INT=None):
        T = self.T[m] if T is None else T
        N = self.N[m] if N is None else N
        OUT = self.OUT[m] if OUT is None else OUT
        INT = self.INT[m] if INT is None else INT
        return max(0.0, T * (1.0 - N / self.g.n_total) + OUT - INT)

    def codelength_part(self) -> float:
        """Codelength without the constant node-entropy term."""
        return plogp(self.sum_q) - 2.0 * self.sum_plogp_q + self.sum_plogp_qp

    def _after(self, i, m, sign, f_out, f_in):
        g = self.g
        P = self.P[m] + sign * g.p[i]
        T = self.T[m] + sign * g.tele[i]
        N = self.N[m] + sign * g.size[i]
        OUT = self.OUT[m] + sign * g.out_total[i]
        INT = self.INT[m] + sign * (f_out + f_in + g.self_flow[i])
        return P, T, N, OUT, INT

    def delta(self, i, new, flows):
        """Codelength change if node ``i`` moves to module ``new``; ``flows[m] = (to m, from m)``."""
        old = self.module[i]
        fo_old, fi_old = flows.get(old, (0.0, 0.0))
        fo_new, fi_new = flows.get(new, (0.0, 0.0))
        Po, To, No, OUTo, INTo = self._after(i, old, -1, fo_old, fi_old)
        Pn, Tn, Nn, OUTn, INTn = self._after(i, new, +1, fo_new, fi_new)
        qo = self._exit(old, Po, To, No, OUTo, INTo) if self.members[old] > 1 else 0.0
        qn = self._exit(new, Pn, Tn, Nn, OUTn, INTn)
        if self.members[old] == 1:
            Po = 0.0
        sum_q = self.sum_q - self.q[old] - self.q[new] + qo + qn
        s1 = self.sum_plogp_q - plogp(self.q[old]) - plogp(self.q[new]) + plogp(qo) + plogp(qn)
        s2 = (self.sum_plogp_qp - plogp(self.q[old] + self.P[old]) - plogp(self.q[new] + self.P[new])
              + plogp(qo + Po) + plogp(qn + Pn))
        return plogp(sum_q) - 2.0 * s1 + s2 - self.codelength_part()

    def move(self, i, new, flows):
        old = self.module[i]
        fo_old, fi_old = flows.get(old, (0.0, 0.0))
        fo_new, fi_new = flows.get(new, (0.0, 0.0))
        for m, sign, fo, fi in ((old, -1, fo_old, fi_old), (new, +1, fo_new, fi_new)):
            P, T, N, OUT, INT = self._after(i, m, sign, fo, fi)
            self.sum_plogp_qp -= plogp(self.q[m] + self.P[m])
            self.sum_plogp_q -= plogp(self.q[m])
            self.sum_q -= self.q[m]
            self.P[m], self.T[m], self.N[m], self.OUT[m], self.INT[m] = P, T, N, OUT, INT
            self.members[m] += sign
            self.q[m] = self._exit(m) if self.members[m] > 0 else 0.0
            if self.members[m] == 0:
                self.P[m] = 0.0
            self.sum_q += self.q[m]
            self.sum_plogp_q += plogp(self.q[m])
            self.sum_plogp_qp += plogp(self.q[m] + self.P[m])
        self.module[i] = new

    def neighbour_flows(self, i) -> dict[int, tuple[float, float]]:
        g = self.g
        flows: dict[int, list[float]] = {}
        for j, f in g.out_adj[i].items():
            flows.setdefault(self.module[j], [0.0, 0.0])[0] += f
        for j, f in g.in_adj[i].items():
            flows.setdefault(self.module[j], [0.0, 0.0])[1] += f
        return {m: (v[0], v[1]) for m, v in flows.items()}


def _move_nodes(g: _FlowGraph, module: list[int], rng: np.random.Generator, max_passes: int = 200) -> tuple[list[int], bool]:
    """Greedy single-node moves until a full pass improves nothing. Returns the assignment and whether it changed."""
    mods = _Modules(g, module)
    n = len(g.p)
    changed = False
    for _ in range(max_passes):
        moved = False
        for i in rng.permutation(n).tolist():
            flows = mods.neighbour_flows(i)
            old = mods.module[i]
            flows.setdefault(old, (0.0, 0.0))
            # teleportation links every node to every module, so all occupied modules are candidates
            candidates = [m for m, k in enumerate(mods.members) if k and m != old]
            if mods.members[old] > 1:
                candidates.append(mods.members.index(0))
            best, best_delta = old, -_EPS
            for m in sorted(candidates):
                d = mods.delta(i, m, flows)
                if d < best_delta:
                    best, best_delta = m, d
            if best != old:
                mods.move(i, best, flows)
                moved = changed = True
        if not moved:
            break
    relabel: dict[int, int] = {}
    return [relabel.setdefault(m, len(relabel)) for m in mods.module], changed


def _optimize(base: _FlowGraph, start: list[int], rng: np.random.Generator) -> list[int]:
    """Node moves then aggregation, repeated to a fixpoint, then re-tuning at the node level."""
    assignment, _ = _move_nodes(base, start, rng)
    best_len = _codelength_of(base, assignment)
    for _ in range(50):
        g = base.aggregate(assignment)
        level_assign = list(range(len(g.p)))
        while True:
            level_assign, changed = _move_nodes(g, level_assign, rng)
            if not changed:
                break
            assignment = [level_assign[assignment[i]] for i in range(len(assignment))]
            g = base.aggregate(assignment)
            level_assign = list(range(len(g.p)))
        tuned, _ = _move_nodes(base, assignment, rng)
        tuned_len = _codelength_of(base, tuned)
        if tuned_len < best_len - _EPS:
            assignment, best_len = tuned, tuned_len
        else:
            best_len = min(best_len, _codelength_of(base, assignment))
            break
    return assignment


def _codelength_of(g: _FlowGraph, module: list[int]) -> float:
    return _Modules(g, module).codelength_part()


def map_equation(network: DirectedWeightedNetwork, partition: Mapping[str, int],
                 teleport: float = DEFAULT_TELEPORT) -> float:
    """Two-level codelength in bits of ``partition`` (node -> module label)."""
    missing = set(network.nodes) - set(partition)
    if missing:
        raise ContractError(f"partition misses nodes {sorted(missing)[:5]}")
    g = _FlowGraph.from_network(network, teleport)
    labels: dict = {}
    module = [labels.setdefault(partition[node], len(labels)) for node in network.nodes]
    node_entropy = -sum(plogp(x) for x in g.p)
    return _codelength_of(g, module) + node_entropy


def detect_communities(network: DirectedWeightedNetwork, teleport: float = DEFAULT_TELEPORT, seed: int = 0,
                       n_trials: int = DEFAULT_TRIALS) -> Partition:
    """Best partition over ``n_trials`` randomized greedy searches.

    Each trial starts from singletons, visits nodes in a random order, and
    alternates node moves with module aggregation. The one-module and
    all-singleton partitions are always candidates, so the result never does
    worse than either. Codelength ties go to the lexicographically smallest
    canonical assignment.
    """
    if n_trials < 1:
        raise ContractError("n_trials must be >= 1")
    nodes = network.nodes
    if not nodes:
        return Partition({}, 0.0, teleport)
    base = _FlowGraph.from_network(network, teleport)
    n = len(nodes)

    candidates = [[0] * n, list(range(n))]
    for trial in range(n_trials):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))
        candidates.append(_optimize(base, list(range(n)), rng))

    best_key, best = None, None
    for module in candidates:
        assign = canonical_assignment(nodes, dict(zip(nodes, module)))
        length = _codelength_of(base, [assign[v] for v in nodes])
        key = (length, tuple(assign[v] for v in nodes))
        if best_key is None or key[0] < best_key[0] - 1e-10 or (abs(key[0] - best_key[0]) <= 1e-10 and key[1] < best_key[1]):
            best_key, best = key, assign
    params = {"teleport": teleport, "seed": seed, "n_trials": n_trials}
    return Partition(best, map_equation(network, best, teleport), teleport, params)
