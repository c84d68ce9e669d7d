"""Node2vec-style embeddings: second-order biased walks plus skip-gram negative sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from madn import _kernels
from madn.errors import ContractError, ConvergenceError, ResolutionError
from madn.netbuild import DirectedWeightedNetwork


@dataclass(frozen=True)
class WalkConfig:
    p: float = 1.0
    q: float = 1.0
    walks_per_node: int = 10
    walk_length: int = 80
    seed: int = 0
    directed: bool = True

    def __post_init__(self):
        if not (self.p > 0 and self.q > 0):
            raise ContractError("p and q must be positive")
        if self.walks_per_node < 1 or self.walk_length < 2:
            raise ContractError("need walks_per_node >= 1 and walk_length >= 2")


@dataclass
class EmbeddingMatrix:
    nodes: tuple[str, ...]
    vectors: np.ndarray  # shape (n_nodes, dim)
    metadata: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __getitem__(self, node: str) -> np.ndarray:
        try:
            return self.vectors[self.nodes.index(node)]
        except ValueError:
            raise ResolutionError(f"no vector for {node!r}") from None

    def to_tsv(self) -> str:
        return "".join(
            node + "\t" + "\t".join(repr(float(x)) for x in row) + "\n" for node, row in zip(self.nodes, self.vectors)
        )

    @classmethod
    def from_tsv(cls, text: str) -> "EmbeddingMatrix":
        nodes, rows = [], []
        for line in text.splitlines():
            if not line.strip():
                continue
            head, *vals = line.split("\t")
            nodes.append(head)
            rows.append([float(v) for v in vals])
        if len({len(r) for r in rows}) > 1:
            raise ContractError("embedding rows have differing dimensions")
        return cls(tuple(nodes), np.asarray(rows, dtype=np.float64))


class _WalkModel:
    """Cached neighbour lists and second-order transition tables."""

    def __init__(self, network: DirectedWeightedNetwork, config: WalkConfig):
        self.config = config
        n = len(network)
        self.nbrs: list[np.ndarray] = [np.empty(0, dtype=np.int64)] * n
        self.wts: list[np.ndarray] = [np.empty(0)] * n
        adj: dict[int, dict[int, float]] = {i: {} for i in range(n)}
        for (s, t), w in network:
            i, j = network.index(s), network.index(t)
            adj[i][j] = adj[i].get(j, 0.0) + w
            if not config.directed:
                adj[j][i] = adj[j].get(i, 0.0) + w
        for i in range(n):
            if adj[i]:
                order = sorted(adj[i])
                self.nbrs[i] = np.array(order, dtype=np.int64)
                self.wts[i] = np.array([adj[i][j] for j in order])
        # "adjacent to t" means linked in either direction
        self.touch = [set(adj[i]) for i in range(n)]
        for i in range(n):
            for j in adj[i]:
                self.touch[j].add(i)
        self._edge_cdf: dict[tuple[int, int], np.ndarray] = {}
        self._node_cdf = [np.cumsum(w) / w.sum() if w.size else w for w in self.wts]

    def bias(self, prev: int, cur: int) -> np.ndarray:
        """Unnormalized step weights from ``cur`` having arrived from ``prev``."""
        c = self.config
        factors = np.array([
            1.0 / c.p if x == prev else 1.0 if x in self.touch[prev] else 1.0 / c.q
            for x in self.nbrs[cur].tolist()
        ])
        return self.wts[cur] * factors

    def edge_cdf(self, prev: int, cur: int) -> np.ndarray:
        key = (prev, cur)
        cdf = self._edge_cdf.get(key)
        if cdf is None:
            b = self.bias(prev, cur)
            cdf = np.cumsum(b) / b.sum()
            self._edge_cdf[key] = cdf
        return cdf

    def walk(self, start: int, rng: np.random.Generator) -> list[int]:
        path = [start]
        while len(path) < self.config.walk_length:
            cur = path[-1]
            nb = self.nbrs[cur]
            if nb.size == 0:
                break
            cdf = self._node_cdf[cur] if len(path) == 1 else self.edge_cdf(path[-2], cur)
            k = int(np.searchsorted(cdf, rng.random(), side="right"))
            path.append(int(nb[min(k, nb.size - 1)]))
        return path


def generate_walks(network: DirectedWeightedNetwork, config: WalkConfig = WalkConfig()) -> list[list[str]]:
    """``walks_per_node`` rounds of one walk from every node, node order shuffled per round.

    A walk stops early at a node with no out-links, so isolated nodes yield
    single-node walks.
    """
    model = _WalkModel(network, config)
    rng = np.random.default_rng(config.seed)
    nodes = network.nodes
    walks = []
    for _ in range(config.walks_per_node):
        for start in rng.permutation(len(nodes)).tolist():
            walks.append([nodes[i] for i in model.walk(start, rng)])
    return walks


def transition_probabilities(network: DirectedWeightedNetwork, config: WalkConfig, prev: str, cur: str) -> dict[str, float]:
    """Exact normalized step distribution out of ``cur`` after arriving from ``prev``."""
    model = _WalkModel(network, config)
    b = model.bias(network.index(prev), network.index(cur))
    return {network.nodes[j]: float(x) for j, x in zip(model.nbrs[network.index(cur)].tolist(), b / b.sum())}


# --------------------------------------------------------------------------
# skip-gram
# --------------------------------------------------------------------------

def pair_loss(v: np.ndarray, u_pos: np.ndarray, u_neg: np.ndarray) -> float:
    """Negative-sampling loss of one (center, context) pair with negatives ``u_neg`` (rows)."""
    return float(-_log_sigmoid(u_pos @ v) - _log_sigmoid(-(u_neg @ v)).sum())


def pair_gradient(v: np.ndarray, u_pos: np.ndarray, u_neg: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradient of :func:`pair_loss` with respect to ``(v, u_pos, u_neg)``."""
    g_pos = _sigmoid(u_pos @ v) - 1.0
    g_neg = _sigmoid(u_neg @ v)
    grad_v = g_pos * u_pos + g_neg @ u_neg
    return grad_v, g_pos * v, np.outer(g_neg, v)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


def _log_sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    return -np.logaddexp(0.0, -x)


def _encode_corpus(corpus: list[list[str]], vocab: tuple[str, ...]) -> tuple[np.ndarray, np.ndarray]:
    index = {v: i for i, v in enumerate(vocab)}
    max_len = max(len(w) for w in corpus)
    walks = np.full((len(corpus), max_len), -1, dtype=np.int64)
    lengths = np.zeros(len(corpus), dtype=np.int64)
    for r, walk in enumerate(corpus):
        lengths[r] = len(walk)
        walks[r, : len(walk)] = [index[v] for v in walk]
    return walks, lengths


def train_skipgram(
    corpus: list[list[str]],
    dim: int = 128,
    window: int = 10,
    negatives: int = 5,
    epochs: int = 5,
    learning_rate: float = 0.025,
    seed: int = 0,
    nodes: tuple[str, ...] | None = None,
) -> EmbeddingMatrix:
    """Sequential SGD on the skip-gram negative-sampling objective.

    Negatives are drawn from corpus unigram frequencies raised to 3/4; the
    learning rate decays linearly to 1e-4 of its start over all epochs. Every
    node in ``nodes`` (default: corpus vocabulary, sorted) gets a vector.

    ``metadata["epoch_loss"]`` holds the mean pair loss over the whole corpus
    evaluated after each epoch with parameters frozen and a fixed negative
    stream; ``online_loss`` is the running mean seen during the updates.
    """
    if not corpus or not any(corpus):
        raise ContractError("empty walk corpus")
    if dim < 1 or epochs < 1 or window < 1 or negatives < 0:
        raise ContractError("need dim, epochs, window >= 1 and negatives >= 0")
    vocab = tuple(sorted({v for w in corpus for v in w} | set(nodes or ())))
    walks, lengths = _encode_corpus([w for w in corpus if w], vocab)

    freq = np.bincount(walks[walks >= 0], minlength=len(vocab)).astype(np.float64) ** 0.75
    neg_cdf = np.cumsum(freq) / freq.sum()

    rng = np.random.default_rng(seed)
    w_in = (rng.random((len(vocab), dim)) - 0.5) / dim
    w_out = np.zeros((len(vocab), dim))
    state = np.array([np.random.SeedSequence(seed).generate_state(1, dtype=np.uint64)[0]], dtype=np.uint64)

    eval_seed = np.random.SeedSequence(seed, spawn_key=(1,)).generate_state(1, dtype=np.uint64)

    def frozen_loss():
        # same negatives every time, so epochs are compared on equal terms
        return _kernels.sgns_loss(walks, lengths, w_in, w_out, neg_cdf, window, negatives, eval_seed.copy())

    total = float(lengths.sum() * epochs)
    step = 0
    losses, online = [], []
    initial = frozen_loss()
    for _ in range(epochs):
        loss_sum, n_pairs, step = _kernels.sgns_epoch(walks, lengths, w_in, w_out, neg_cdf, window, negatives,
                                                      learning_rate, learning_rate * 1e-4, step, total, state)
        loss = frozen_loss()
        if not (math.isfinite(loss) and math.isfinite(loss_sum)) or not np.all(np.isfinite(w_in)):
            raise ConvergenceError(f"non-finite training loss ({loss}); lower the learning rate")
        losses.append(loss)
        online.append(loss_sum / max(n_pairs, 1))

    meta = {
        "dim": dim, "window": window, "negatives": negatives, "epochs": epochs,
        "learning_rate": learning_rate, "seed": seed, "initial_loss": initial,
        "epoch_loss": losses, "online_loss": online, "final_loss": losses[-1],
    }
    return EmbeddingMatrix(vocab, w_in, meta)


def embed_network(network: DirectedWeightedNetwork, walk_config: WalkConfig = WalkConfig(), **train_kwargs) -> EmbeddingMatrix:
    walks = generate_walks(network, walk_config)
    emb = train_skipgram(walks, nodes=network.nodes, **train_kwargs)
    emb.metadata.update({"p": walk_config.p, "q": walk_config.q, "walks_per_node": walk_config.walks_per_node,
                         "walk_length": walk_config.walk_length, "walk_seed": walk_config.seed,
                         "directed_walks": walk_config.directed})
    return emb


def cosine_matrix(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    unit = vectors / np.where(norms > 0, norms, 1.0)
    return unit @ unit.T


def analogy(embedding: EmbeddingMatrix, a: str, b: str, c: str, top: int | None = None) -> list[tuple[str, float]]:
    """Nodes ranked by cosine similarity to ``v(a) - v(b) + v(c)``, excluding a, b and c."""
    query = embedding[a] - embedding[b] + embedding[c]
    qn = np.linalg.norm(query)
    norms = np.linalg.norm(embedding.vectors, axis=1)
    sims = embedding.vectors @ query / np.where(norms * qn > 0, norms * qn, 1.0)
    exclude = {a, b, c}
    ranked = sorted(
        ((node, float(s)) for node, s in zip(embedding.nodes, sims) if node not in exclude),
        key=lambda ns: (-ns[1], ns[0]),
    )
    return ranked[:top] if top is not None else ranked
