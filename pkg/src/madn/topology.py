"""Summary statistics, centralities and degree-distribution fits."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import networkx as nx
import numpy as np

from madn.errors import ContractError, ConvergenceError
from madn.netbuild import DirectedWeightedNetwork

# Variants recorded alongside every summary so alternative definitions can be compared.
SUMMARY_METHODS = {
    "clustering": "mean local clustering coefficient, undirected unweighted projection, zero for degree < 2",
    "assortativity": "Newman degree assortativity (Pearson r over link endpoints), undirected projection",
    "scc": "largest strongly connected component; size ties go to the component with the smallest node code",
    "mean_shortest_path": "mean unweighted directed distance over ordered distinct pairs inside the largest SCC",
    "reciprocity": "fraction of links whose reverse link exists",
}


@dataclass(frozen=True)
class TopologySummary:
    n_nodes: int
    n_links: int
    mean_degree: float
    clustering: float
    assortativity: float
    scc_fraction: float
    mean_shortest_path: float
    reciprocity: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DegreeFit:
    family: str  # "exponential" or "power-law"
    k_min: int
    parameter: float  # rate for exponential, exponent for power-law
    ks_statistic: float
    n_tail: int


def reciprocity(network: DirectedWeightedNetwork) -> float:
    if network.n_links == 0:
        return math.nan
    mutual = sum(1 for (s, t), _ in network if network.has_link(t, s))
    return mutual / network.n_links


def largest_scc(network: DirectedWeightedNetwork) -> list[str]:
    comps = [sorted(c) for c in nx.strongly_connected_components(network.to_networkx())]
    if not comps:
        return []
    return min(comps, key=lambda c: (-len(c), c[0]))


def summary(network: DirectedWeightedNetwork) -> TopologySummary:
    """Node/link counts, mean degree, clustering, assortativity, SCC share, path length, reciprocity.

    Undefined quantities (assortativity with zero degree variance, path length
    of a single-node SCC, reciprocity without links) are NaN.
    """
    n = len(network)
    if n == 0:
        raise ContractError("summary of an empty network")
    g = network.to_networkx()
    und = g.to_undirected(as_view=False)
    clustering = nx.average_clustering(und) if n else math.nan

    if und.number_of_edges() == 0:
        assort = math.nan
    else:
        with warnings.catch_warnings(), np.errstate(all="ignore"):
            warnings.simplefilter("ignore", RuntimeWarning)
            assort = float(nx.degree_assortativity_coefficient(und))

    scc = largest_scc(network)
    if len(scc) >= 2:
        sub = g.subgraph(scc)
        total = sum(sum(d.values()) for _, d in nx.all_pairs_shortest_path_length(sub))
        mean_d = total / (len(scc) * (len(scc) - 1))
    else:
        mean_d = math.nan

    return TopologySummary(
        n_nodes=n,
        n_links=network.n_links,
        mean_degree=network.n_links / n,
        clustering=float(clustering),
        assortativity=assort,
        scc_fraction=len(scc) / n,
        mean_shortest_path=mean_d,
        reciprocity=reciprocity(network),
    )


def degree_centrality(network: DirectedWeightedNetwork) -> dict[str, tuple[int, int]]:
    """Unweighted ``(k_in, k_out)`` per node."""
    k_in = dict.fromkeys(network.nodes, 0)
    k_out = dict.fromkeys(network.nodes, 0)
    for (s, t), _ in network:
        k_out[s] += 1
        k_in[t] += 1
    return {n: (k_in[n], k_out[n]) for n in network.nodes}


def ranked(scores: dict[str, float], top: int | None = None) -> list[tuple[int, str, float]]:
    """``(rank, node, value)`` rows, highest value first, ties by node code."""
    order = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    if top is not None:
        order = order[:top]
    return [(i, node, value) for i, (node, value) in enumerate(order, start=1)]


def pagerank(
    network: DirectedWeightedNetwork,
    damping: float = 0.85,
    tolerance: float = 1e-10,
    max_iter: int = 10_000,
) -> dict[str, float]:
    """Weighted PageRank by power iteration.

    A walker follows an out-link with probability proportional to its weight;
    dangling nodes spread their mass uniformly. Iteration stops once the L1
    change between sweeps drops below ``tolerance``.
    """
    if not 0.0 < damping < 1.0:
        raise ContractError(f"damping must lie in (0, 1), got {damping}")
    x = stationary_flow(network, 1.0 - damping, tolerance, max_iter)
    return dict(zip(network.nodes, x.tolist()))


def stationary_flow(network: DirectedWeightedNetwork, teleport: float, tolerance: float = 1e-14,
                    max_iter: int = 100_000) -> np.ndarray:
    """Stationary visit rates of the weighted walk with uniform teleportation ``teleport``.

    Shared by PageRank (``teleport = 1 - damping``) and the map equation.
    """
    n = len(network)
    if n == 0:
        return np.zeros(0)
    src, dst, w = network.edge_arrays()
    strength = np.bincount(src, weights=w, minlength=n)
    dangling = strength == 0
    step = np.zeros_like(w)
    np.divide(w, strength[src], out=step, where=strength[src] > 0)

    x = np.full(n, 1.0 / n)
    residual = math.inf
    for it in range(1, max_iter + 1):
        moved = np.bincount(dst, weights=x[src] * step, minlength=n)
        new = (1.0 - teleport) * moved + ((1.0 - teleport) * x[dangling].sum() + teleport) / n
        new /= new.sum()
        residual = float(np.abs(new - x).sum())
        x = new
        if residual < tolerance:
            return x
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations (L1 residual {residual:.3e})",
        residual=residual,
        iterations=max_iter,
    )


def _tail(degrees, k_min: int) -> np.ndarray:
    if k_min < 1:
        raise ContractError(f"k_min must be >= 1, got {k_min}")
    tail = np.sort(np.asarray([d for d in degrees if d >= k_min], dtype=np.float64))
    if tail.size < 2:
        raise ContractError(f"need at least 2 degrees >= k_min={k_min}, got {tail.size}")
    return tail


def _ks(sorted_tail: np.ndarray, cdf: np.ndarray) -> float:
    n = sorted_tail.size
    # empirical CDF just after and just before each observation, with repeated values grouped
    upper = np.searchsorted(sorted_tail, sorted_tail, side="right") / n
    lower = np.searchsorted(sorted_tail, sorted_tail, side="left") / n
    return float(max(np.max(np.abs(upper - cdf)), np.max(np.abs(cdf - lower))))


def fit_exponential(degrees, k_min: int) -> DegreeFit:
    """Continuous MLE of ``P(k) ~ exp(-rate * (k - k_min))`` over degrees >= ``k_min``."""
    tail = _tail(degrees, k_min)
    excess = tail.mean() - k_min
    if excess <= 0:
        raise ContractError("all tail degrees equal k_min; exponential rate is unbounded")
    rate = 1.0 / excess
    cdf = 1.0 - np.exp(-rate * (tail - k_min))
    return DegreeFit("exponential", k_min, float(rate), _ks(tail, cdf), int(tail.size))


def fit_powerlaw_tail(degrees, k_min: int) -> DegreeFit:
    """Continuous MLE exponent ``1 + n / sum(ln(k / k_min))`` over degrees >= ``k_min``."""
    tail = _tail(degrees, k_min)
    log_sum = float(np.log(tail / k_min).sum())
    if log_sum <= 0:
        raise ContractError("all tail degrees equal k_min; power-law exponent is undefined")
    alpha = 1.0 + tail.size / log_sum
    cdf = 1.0 - (tail / k_min) ** (1.0 - alpha)
    return DegreeFit("power-law", k_min, float(alpha), _ks(tail, cdf), int(tail.size))
