"""Triad motif censuses and their significance against degree-preserving null models.

Single-layer triads use the 13 weakly connected 3-node directed graphs. Four
classes carry fixed ids (fan-out 1, cascade 2, fan-in 4, feed-forward loop
5); the rest are numbered by canonical code, and every profile ships the full
id -> edge-list table so the numbering is self-describing.

Colored triads put a layer tag on each directed edge; a node pair may hold an
attention and a disregard edge in the same direction.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from madn import _kernels
from madn.errors import ContractError
from madn.netbuild import DirectedWeightedNetwork, MultiplexNetwork

DEFAULT_SAMPLES = 5000
DEFAULT_SWAPS_PER_LINK = 10
MAX_ATTEMPTS_PER_SWAP = 100

# ordered node pairs of a triple, one code slot each
_PAIRS = ((0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1))
_PAIR_SLOT = {p: i for i, p in enumerate(_PAIRS)}


def _encode(edges, bits_per_pair=1) -> int:
    """``edges`` is an iterable of ``(u, v, state)`` with ``state`` a bit mask per pair."""
    code = 0
    for u, v, state in edges:
        code |= state << (bits_per_pair * _PAIR_SLOT[(u, v)])
    return code


def _decode(code: int, bits_per_pair=1):
    mask = (1 << bits_per_pair) - 1
    out = []
    for slot, (u, v) in enumerate(_PAIRS):
        state = (code >> (bits_per_pair * slot)) & mask
        if state:
            out.append((u, v, state))
    return out


def _canonical(code: int, bits_per_pair=1) -> int:
    edges = _decode(code, bits_per_pair)
    return min(_encode(((p[u], p[v], s) for u, v, s in edges), bits_per_pair) for p in permutations(range(3)))


def _connected(code: int, bits_per_pair=1) -> bool:
    pairs = {frozenset((u, v)) for u, v, _ in _decode(code, bits_per_pair)}
    return len(pairs) >= 2


def _build_tables(bits_per_pair: int, anchors: dict[int, int]):
    n_codes = 1 << (6 * bits_per_pair)
    canon = [_canonical(c, bits_per_pair) for c in range(n_codes)]
    classes = sorted({canon[c] for c in range(n_codes) if _connected(c, bits_per_pair)})
    ids: dict[int, int] = {}
    for cid, code in anchors.items():
        ids[_canonical(code, bits_per_pair)] = cid
    free = iter(i for i in range(1, len(classes) + 1) if i not in anchors)
    for code in classes:
        if code not in ids:
            ids[code] = next(free)
    order = sorted(classes, key=lambda c: ids[c])  # position = id - 1
    table = np.full(n_codes, -1, dtype=np.int64)
    for c in range(n_codes):
        if _connected(c, bits_per_pair):
            table[c] = ids[canon[c]] - 1
    return table, order


_ANCHORS = {
    1: _encode([(0, 1, 1), (0, 2, 1)]),             # fan-out
    2: _encode([(0, 1, 1), (1, 2, 1)]),             # cascade
    4: _encode([(1, 0, 1), (2, 0, 1)]),             # fan-in
    5: _encode([(0, 1, 1), (1, 2, 1), (0, 2, 1)]),  # feed-forward loop
}
TRIAD_NAMES = {1: "fan-out", 2: "cascade", 4: "fan-in", 5: "feed-forward loop"}

TRIAD_TABLE, TRIAD_CODES = _build_tables(1, _ANCHORS)
N_TRIAD_CLASSES = len(TRIAD_CODES)
COLORED_TABLE, COLORED_CODES = _build_tables(2, {})
N_COLORED_CLASSES = len(COLORED_CODES)

_LAYER_TAG = {1: "A", 2: "D"}


def triad_signature(class_id: int) -> str:
    """Edge list of a triad class on nodes 0, 1, 2, e.g. ``"0->1 0->2"``."""
    return " ".join(f"{u}->{v}" for u, v, _ in _decode(TRIAD_CODES[class_id - 1]))


def colored_signature(class_id: int) -> str:
    """Edge list with layer tags, e.g. ``"0->1:A 0->2:A 1->2:D"``."""
    parts = []
    for u, v, state in _decode(COLORED_CODES[class_id - 1], 2):
        for bit in (1, 2):
            if state & bit:
                parts.append(f"{u}->{v}:{_LAYER_TAG[bit]}")
    return " ".join(parts)


def triad_classes() -> dict[int, str]:
    return {cid: triad_signature(cid) for cid in range(1, N_TRIAD_CLASSES + 1)}


def colored_classes() -> dict[int, str]:
    return {cid: colored_signature(cid) for cid in range(1, N_COLORED_CLASSES + 1)}


def colored_to_triad(class_id: int) -> int | None:
    """Plain triad class of a colored class whose edges are all attention, else ``None``."""
    edges = _decode(COLORED_CODES[class_id - 1], 2)
    if any(state != 1 for _, _, state in edges):
        return None
    return int(TRIAD_TABLE[_encode(edges)]) + 1


# --------------------------------------------------------------------------
# censuses
# --------------------------------------------------------------------------

def _as_counts(arr, n) -> dict[int, int]:
    return {cid: int(arr[cid - 1]) for cid in range(1, n + 1)}


def triad_census(network: DirectedWeightedNetwork) -> dict[int, int]:
    """Counts of induced weakly connected triads per class id."""
    return _as_counts(_kernels.triad_census_adj(network.adjacency(), TRIAD_TABLE, N_TRIAD_CLASSES), N_TRIAD_CLASSES)


def _colored_adjacency(multiplex: MultiplexNetwork) -> np.ndarray:
    return multiplex.attention.adjacency() + multiplex.disregard.adjacency() * np.uint8(2)


def colored_triad_census(multiplex: MultiplexNetwork) -> dict[int, int]:
    counts = _kernels.colored_census_adj(_colored_adjacency(multiplex), COLORED_TABLE, N_COLORED_CLASSES)
    return _as_counts(counts, N_COLORED_CLASSES)


# --------------------------------------------------------------------------
# null model
# --------------------------------------------------------------------------

def sample_states(seed: int, n_samples: int, start: int = 0) -> np.ndarray:
    """Per-sample RNG states derived from ``(seed, sample index)``; column 0 attention, 1 disregard."""
    return np.array(
        [np.random.SeedSequence(seed, spawn_key=(i,)).generate_state(2, dtype=np.uint64) for i in range(start, start + n_samples)],
        dtype=np.uint64,
    ).reshape(n_samples, 2)


@dataclass(frozen=True)
class RewireResult:
    network: DirectedWeightedNetwork
    swaps_done: int
    swaps_target: int

    @property
    def exhausted(self) -> bool:
        """True when the attempt budget ran out before the target swap count."""
        return self.swaps_done < self.swaps_target


def rewire_null(network: DirectedWeightedNetwork, seed: int, swaps_per_link: int = DEFAULT_SWAPS_PER_LINK,
                sample_index: int = 0) -> RewireResult:
    """Degree-preserving randomization by double-edge swaps.

    Weights travel with the link's source. Sample ``i`` of
    :func:`motif_zscores` with the same seed is exactly
    ``rewire_null(network, seed, swaps_per_link, sample_index=i)``. When the
    attempt budget runs out first, the network as rewired so far comes back
    (the input itself if no swap was legal) with ``exhausted`` set and a
    ``RuntimeWarning``.
    """
    if network.n_links < 2:
        raise ContractError("rewiring needs at least 2 links")
    src, dst, w = network.edge_arrays()
    adj = network.adjacency()
    target = swaps_per_link * network.n_links
    state = sample_states(seed, 1, sample_index)[0, :1].copy()
    done = _kernels.rewire_inplace(src, dst, adj, state, target, target * MAX_ATTEMPTS_PER_SWAP)
    if done < target:
        warnings.warn(f"rewiring stopped after {done} of {target} swaps (attempt budget exhausted)", RuntimeWarning)
    nodes = network.nodes
    links = {(nodes[s], nodes[t]): int(wt) for s, t, wt in zip(src, dst, w)}
    return RewireResult(DirectedWeightedNetwork(nodes, links), int(done), target)


# --------------------------------------------------------------------------
# profiles
# --------------------------------------------------------------------------

@dataclass
class MotifStat:
    class_id: int
    signature: str
    observed: int
    null_mean: float
    null_std: float
    z: float  # NaN when the null spread is zero
    p: float
    significant: bool
    low_count: bool

    def to_dict(self) -> dict:
        return {
            "id": self.class_id,
            "signature": self.signature,
            "observed": self.observed,
            "null_mean": self.null_mean,
            "null_std": self.null_std,
            "z": None if math.isnan(self.z) else self.z,
            "z_defined": not math.isnan(self.z),
            "p": self.p,
            "significant": self.significant,
            "low_count": self.low_count,
        }


@dataclass
class MotifProfile:
    kind: str  # "triad" or "colored"
    stats: list[MotifStat]
    n_samples: int
    swaps_per_link: int
    seed: int
    significance_rule: str
    incomplete_samples: int = 0
    classes: dict[int, str] = field(default_factory=dict)

    def by_id(self) -> dict[int, MotifStat]:
        return {s.class_id: s for s in self.stats}

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_samples": self.n_samples,
            "swaps_per_link": self.swaps_per_link,
            "seed": self.seed,
            "null_model": "degree-preserving double-edge swaps" + (", layers rewired independently" if self.kind == "colored" else ""),
            "p_value": "(1 + #{null count >= observed}) / (1 + n_samples)",
            "significance_rule": self.significance_rule,
            "incomplete_samples": self.incomplete_samples,
            "classes": {str(k): v for k, v in self.classes.items()},
            "motifs": [s.to_dict() for s in self.stats],
        }


LOW_COUNT = 5


def profile_stats(observed: np.ndarray, null: np.ndarray, signatures: dict[int, str], p_cut: float,
                  z_cut: float | None = None) -> list[MotifStat]:
    """Z-scores and add-one empirical p-values from observed counts and a ``(samples, classes)`` null matrix."""
    n_samples = null.shape[0]
    mean = null.mean(axis=0)
    std = null.std(axis=0)
    exceed = (null >= observed[None, :]).sum(axis=0)
    stats = []
    for k in range(observed.size):
        z = (observed[k] - mean[k]) / std[k] if std[k] > 0 else math.nan
        p = (1 + int(exceed[k])) / (1 + n_samples)
        sig = p < p_cut and (z_cut is None or (not math.isnan(z) and abs(z) > z_cut))
        stats.append(MotifStat(k + 1, signatures[k + 1], int(observed[k]), float(mean[k]), float(std[k]),
                               float(z), p, bool(sig), bool(observed[k] < LOW_COUNT)))
    return stats


def null_triad_matrix(network: DirectedWeightedNetwork, n_samples: int, seed: int,
                      swaps_per_link: int = DEFAULT_SWAPS_PER_LINK) -> tuple[np.ndarray, np.ndarray]:
    """``(counts, swaps_done)`` for ``n_samples`` null draws; counts has one column per class."""
    if n_samples < 1:
        raise ContractError("n_samples must be >= 1")
    if network.n_links < 2:
        raise ContractError("rewiring needs at least 2 links")
    src, dst, _ = network.edge_arrays()
    seeds = sample_states(seed, n_samples)[:, 0].copy()
    target = swaps_per_link * network.n_links
    return _kernels.null_triad_counts(src, dst, len(network), seeds, target, target * MAX_ATTEMPTS_PER_SWAP,
                                      TRIAD_TABLE, N_TRIAD_CLASSES)


def motif_zscores(network: DirectedWeightedNetwork, n_samples: int = DEFAULT_SAMPLES, seed: int = 0,
                  swaps_per_link: int = DEFAULT_SWAPS_PER_LINK, p_cut: float = 0.05) -> MotifProfile:
    """Triad profile against ``n_samples`` degree-preserving null draws.

    A class is flagged significant when its add-one empirical p-value (share of
    null draws with at least the observed count) is below ``p_cut``; classes
    seen fewer than 5 times carry a low-count flag.
    """
    observed = _kernels.triad_census_adj(network.adjacency(), TRIAD_TABLE, N_TRIAD_CLASSES)
    null, done = null_triad_matrix(network, n_samples, seed, swaps_per_link)
    classes = triad_classes()
    stats = profile_stats(observed, null, classes, p_cut)
    target = swaps_per_link * network.n_links
    return MotifProfile("triad", stats, n_samples, swaps_per_link, seed, f"p < {p_cut}",
                        int((done < target).sum()), classes)


def null_colored_matrix(multiplex: MultiplexNetwork, n_samples: int, seed: int,
                        swaps_per_link: int = DEFAULT_SWAPS_PER_LINK) -> tuple[np.ndarray, np.ndarray]:
    if n_samples < 1:
        raise ContractError("n_samples must be >= 1")
    a, d = multiplex.attention, multiplex.disregard
    src_a, dst_a, _ = a.edge_arrays()
    src_d, dst_d, _ = d.edge_arrays()
    states = sample_states(seed, n_samples)
    # layers with fewer than 2 links cannot be swapped and stay fixed
    t_a = swaps_per_link * a.n_links if a.n_links >= 2 else 0
    t_d = swaps_per_link * d.n_links if d.n_links >= 2 else 0
    return _kernels.null_colored_counts(
        src_a, dst_a, src_d, dst_d, len(multiplex.nodes),
        states[:, 0].copy(), states[:, 1].copy(),
        t_a, t_d, t_a * MAX_ATTEMPTS_PER_SWAP, t_d * MAX_ATTEMPTS_PER_SWAP,
        COLORED_TABLE, N_COLORED_CLASSES,
    )


def colored_motif_zscores(multiplex: MultiplexNetwork, n_samples: int = DEFAULT_SAMPLES, seed: int = 0,
                          swaps_per_link: int = DEFAULT_SWAPS_PER_LINK, p_cut: float = 0.01,
                          z_cut: float = 1.0) -> MotifProfile:
    """Colored-triad profile; significant when ``p < p_cut`` and ``|Z| > z_cut``. Sorted by ``|Z|``."""
    observed = _kernels.colored_census_adj(_colored_adjacency(multiplex), COLORED_TABLE, N_COLORED_CLASSES)
    null, done = null_colored_matrix(multiplex, n_samples, seed, swaps_per_link)
    classes = colored_classes()
    stats = profile_stats(observed, null, classes, p_cut, z_cut)
    stats.sort(key=lambda s: (math.isnan(s.z), -abs(s.z) if not math.isnan(s.z) else 0.0, s.class_id))
    t_a = swaps_per_link * multiplex.attention.n_links if multiplex.attention.n_links >= 2 else 0
    t_d = swaps_per_link * multiplex.disregard.n_links if multiplex.disregard.n_links >= 2 else 0
    incomplete = int(((done[:, 0] < t_a) | (done[:, 1] < t_d)).sum())
    return MotifProfile("colored", stats, n_samples, swaps_per_link, seed,
                        f"p < {p_cut} and |Z| > {z_cut}", incomplete, classes)
