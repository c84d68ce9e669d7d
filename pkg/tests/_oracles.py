"""Slow, direct re-implementations used as test oracles. None of this imports library internals."""
import math
from collections import deque
from itertools import combinations, permutations

import numpy as np


def _out_sets(network):
    out = {n: set() for n in network.nodes}
    for (s, t), _ in network:
        out[s].add(t)
    return out


def _bfs(out, start, allowed=None):
    dist = {start: 0}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in out[u]:
            if v not in dist and (allowed is None or v in allowed):
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def summary(network) -> dict:
    nodes = list(network.nodes)
    n = len(nodes)
    out = _out_sets(network)
    und = {u: set() for u in nodes}
    for u in nodes:
        for v in out[u]:
            und[u].add(v)
            und[v].add(u)

    local = []
    for u in nodes:
        nb = sorted(und[u])
        d = len(nb)
        if d < 2:
            local.append(0.0)
            continue
        tri = sum(1 for a, b in combinations(nb, 2) if b in und[a])
        local.append(tri / (d * (d - 1) / 2))
    clustering = sum(local) / n

    xs, ys = [], []
    for u in nodes:
        for v in und[u]:
            xs.append(len(und[u]))
            ys.append(len(und[v]))
    if xs:
        mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
        sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
        sxx = sum((x - mx) ** 2 for x in xs)
        syy = sum((y - my) ** 2 for y in ys)
        assort = sxy / math.sqrt(sxx * syy) if sxx > 0 and syy > 0 else math.nan
    else:
        assort = math.nan

    reach = {u: set(_bfs(out, u)) for u in nodes}
    comps = []
    seen = set()
    for u in nodes:
        if u in seen:
            continue
        comp = sorted(v for v in reach[u] if u in reach[v])
        seen.update(comp)
        comps.append(comp)
    scc = min(comps, key=lambda c: (-len(c), c[0]))
    if len(scc) >= 2:
        allowed = set(scc)
        total = sum(sum(_bfs(out, u, allowed).values()) for u in scc)
        mean_d = total / (len(scc) * (len(scc) - 1))
    else:
        mean_d = math.nan

    L = network.n_links
    recip = sum(1 for (s, t), _ in network if s in out[t]) / L if L else math.nan
    return {
        "n_nodes": n, "n_links": L, "mean_degree": L / n, "clustering": clustering, "assortativity": assort,
        "scc_fraction": len(scc) / n, "mean_shortest_path": mean_d, "reciprocity": recip,
    }


def pagerank_dense(network, damping=0.85, iters=100_000, tol=1e-15):
    """Google-matrix power iteration on a dense matrix."""
    n = len(network)
    W = network.adjacency(weighted=True)
    strength = W.sum(axis=1)
    P = np.full((n, n), 1.0 / n)
    rows = strength > 0
    P[rows] = W[rows] / strength[rows, None]
    G = damping * P + (1 - damping) / n
    x = np.full(n, 1.0 / n)
    for _ in range(iters):
        nxt = x @ G
        nxt /= nxt.sum()
        if np.abs(nxt - x).sum() < tol:
            return nxt
        x = nxt
    return x


# -- triads ------------------------------------------------------------------

def triad_key(edges):
    """Canonical form of a 3-node edge set: lexicographically least sorted edge tuple over relabelings."""
    return min(tuple(sorted((p[u], p[v]) for u, v in edges)) for p in permutations(range(3)))


def parse_signature(sig: str):
    return [tuple(int(x) for x in e.split("->")) for e in sig.split()]


def triad_census(network, classes: dict[int, str]) -> dict[int, int]:
    """Count every node triple by matching its induced edge set against the class signature table."""
    by_key = {triad_key(parse_signature(sig)): cid for cid, sig in classes.items()}
    counts = dict.fromkeys(classes, 0)
    nodes = network.nodes
    for trio in combinations(nodes, 3):
        edges = [(i, j) for i in range(3) for j in range(3) if i != j and network.has_link(trio[i], trio[j])]
        if len({frozenset(e) for e in edges}) < 2:
            continue  # not weakly connected
        counts[by_key[triad_key(edges)]] += 1
    return counts


def colored_key(edges):
    return min(tuple(sorted((p[u], p[v], c) for u, v, c in edges)) for p in permutations(range(3)))


def parse_colored(sig: str):
    out = []
    for e in sig.split():
        uv, c = e.split(":")
        u, v = uv.split("->")
        out.append((int(u), int(v), c))
    return out


def colored_census(multiplex, classes: dict[int, str]) -> dict[int, int]:
    by_key = {colored_key(parse_colored(sig)): cid for cid, sig in classes.items()}
    counts = dict.fromkeys(classes, 0)
    for trio in combinations(multiplex.nodes, 3):
        edges = []
        for i in range(3):
            for j in range(3):
                if i == j:
                    continue
                if multiplex.attention.has_link(trio[i], trio[j]):
                    edges.append((i, j, "A"))
                if multiplex.disregard.has_link(trio[i], trio[j]):
                    edges.append((i, j, "D"))
        if len({frozenset(e[:2]) for e in edges}) < 2:
            continue
        counts[by_key[colored_key(edges)]] += 1
    return counts


# -- map equation ----------------------------------------------------------------

def _plogp(x):
    return x * math.log2(x) if x > 0 else 0.0


def flow(network, teleport):
    return pagerank_dense(network, 1.0 - teleport) if teleport > 0 else _stationary_no_teleport(network)


def codelength(network, assignment, teleport, p=None):
    """Two-level map equation with recorded teleportation, written out term by term."""
    nodes = list(network.nodes)
    n = len(nodes)
    p = flow(network, teleport) if p is None else p
    W = network.adjacency(weighted=True)
    strength = W.sum(axis=1)
    modules = sorted(set(assignment[v] for v in nodes))
    exit_flow = {}
    for m in modules:
        inside = [i for i, v in enumerate(nodes) if assignment[v] == m]
        n_in = len(inside)
        q = 0.0
        for i in inside:
            tele_share = 1.0 if strength[i] == 0 else teleport
            q += p[i] * tele_share * (n - n_in) / n
            if strength[i] > 0:
                for j in range(n):
                    if W[i, j] > 0 and assignment[nodes[j]] != m:
                        q += p[i] * (1 - teleport) * W[i, j] / strength[i]
        exit_flow[m] = q
    total_exit = sum(exit_flow.values())
    index = _plogp(total_exit) - sum(_plogp(q) for q in exit_flow.values())
    module_terms = 0.0
    for m in modules:
        pin = [p[i] for i, v in enumerate(nodes) if assignment[v] == m]
        module_terms += _plogp(exit_flow[m] + sum(pin)) - _plogp(exit_flow[m]) - sum(_plogp(x) for x in pin)
    return index + module_terms


def _stationary_no_teleport(network):
    n = len(network)
    W = network.adjacency(weighted=True)
    s = W.sum(axis=1)
    P = np.where(s[:, None] > 0, W / np.where(s[:, None] > 0, s[:, None], 1), 1.0 / n)
    x = np.full(n, 1.0 / n)
    for _ in range(100_000):
        nxt = x @ P
        if np.abs(nxt - x).sum() < 1e-15:
            return nxt
        x = nxt
    return x


def set_partitions(n):
    """All partitions of range(n) as restricted-growth label lists."""
    def rec(i, labels, top):
        if i == n:
            yield list(labels)
            return
        for m in range(top + 2):
            labels.append(m)
            yield from rec(i + 1, labels, max(top, m))
            labels.pop()
    yield from rec(0, [], -1)


def best_partition(network, teleport):
    nodes = network.nodes
    best = None
    p = flow(network, teleport)
    for labels in set_partitions(len(nodes)):
        L = codelength(network, dict(zip(nodes, labels)), teleport, p)
        if best is None or L < best[0] - 1e-10:
            best = (L, labels)
    return best
