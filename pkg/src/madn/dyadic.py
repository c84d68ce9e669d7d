"""Pair-level bias and asymmetry: weight histograms, pair breakdown, disparity backbone, taxonomy."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import product

from madn.errors import ContractError
from madn.netbuild import DirectedWeightedNetwork

PAIR_CATEGORIES = (
    "attention-one-way",
    "disregard-one-way",
    "mutual-attention",
    "mutual-disregard",
    "opposed",
)

DEFAULT_ALPHA = 0.05


def _check_shared(a: DirectedWeightedNetwork, d: DirectedWeightedNetwork) -> None:
    if a.nodes != d.nodes:
        raise ContractError("attention and disregard layers must share one node set")


@dataclass(frozen=True)
class WeightJointHistogram:
    bin_size: int
    cells: dict[tuple[int, int], int]

    @property
    def total(self) -> int:
        return sum(self.cells.values())


def weight_joint_histogram(attention: DirectedWeightedNetwork, disregard: DirectedWeightedNetwork,
                           bin_size: int = 5) -> WeightJointHistogram:
    """Bin every ordered pair linked in either layer by ``(w_A // bin, w_D // bin)``; absent links weigh 0."""
    if bin_size < 1:
        raise ContractError(f"bin_size must be >= 1, got {bin_size}")
    _check_shared(attention, disregard)
    cells: Counter = Counter()
    for pair in set(attention.links) | set(disregard.links):
        cells[(attention.weight(*pair) // bin_size, disregard.weight(*pair) // bin_size)] += 1
    return WeightJointHistogram(bin_size, dict(sorted(cells.items())))


def combine_layers(attention: DirectedWeightedNetwork, disregard: DirectedWeightedNetwork) -> dict[tuple[str, str], str]:
    """Layer kept for each linked ordered pair: the heavier one, attention on ties."""
    _check_shared(attention, disregard)
    out = {}
    for pair in set(attention.links) | set(disregard.links):
        out[pair] = "attention" if attention.weight(*pair) >= disregard.weight(*pair) else "disregard"
    return out


def pair_category(forward: str | None, backward: str | None) -> str:
    if forward is None and backward is None:
        raise ContractError("pair has no link in either direction")
    if forward is None or backward is None:
        return f"{forward or backward}-one-way"
    if forward == backward:
        return f"mutual-{forward}"
    return "opposed"


def pairwise_breakdown(attention: DirectedWeightedNetwork, disregard: DirectedWeightedNetwork) -> dict[str, int]:
    combined = combine_layers(attention, disregard)
    counts = dict.fromkeys(PAIR_CATEGORIES, 0)
    for i, j in {tuple(sorted(p)) for p in combined}:
        counts[pair_category(combined.get((i, j)), combined.get((j, i)))] += 1
    return counts


# --------------------------------------------------------------------------
# disparity filter
# --------------------------------------------------------------------------

def disparity_alpha(p: float, k: int) -> float:
    """Probability under the uniform-split null that one of ``k`` links carries share >= ``p``.

    Single-link endpoints get 1.0: one link says nothing about heterogeneity.
    """
    if not 0.0 <= p <= 1.0:
        raise ContractError(f"normalized weight must lie in [0, 1], got {p}")
    if k < 1:
        raise ContractError(f"degree must be >= 1, got {k}")
    if k == 1:
        return 1.0
    return (1.0 - p) ** (k - 1)


@dataclass(frozen=True)
class LinkSignificance:
    alpha_sender: float
    alpha_receiver: float
    sig_to_sender: bool
    sig_to_receiver: bool


@dataclass(frozen=True)
class Backbone:
    alpha_threshold: float
    flags: dict[tuple[str, str], LinkSignificance]
    kept_links: frozenset

    def network(self, source: DirectedWeightedNetwork) -> DirectedWeightedNetwork:
        """The kept links as a network over ``source``'s node set."""
        return source.subnetwork(sorted(self.kept_links))

    def link_attrs(self) -> dict[tuple[str, str], dict]:
        return {
            link: {
                "alpha_sender": f.alpha_sender,
                "alpha_receiver": f.alpha_receiver,
                "sig_to_sender": f.sig_to_sender,
                "sig_to_receiver": f.sig_to_receiver,
            }
            for link, f in self.flags.items()
            if link in self.kept_links
        }


def extract_backbone(network: DirectedWeightedNetwork, alpha_threshold: float = DEFAULT_ALPHA) -> Backbone:
    """Disparity significance of every link from the sender's and the receiver's side.

    Sender side normalizes by out-strength over out-degree, receiver side by
    in-strength over in-degree. A link is kept when either side finds it
    significant.
    """
    if not 0.0 < alpha_threshold < 1.0:
        raise ContractError(f"alpha threshold must lie in (0, 1), got {alpha_threshold}")
    out_s: Counter = Counter()
    in_s: Counter = Counter()
    out_k: Counter = Counter()
    in_k: Counter = Counter()
    for (s, t), w in network:
        out_s[s] += w
        in_s[t] += w
        out_k[s] += 1
        in_k[t] += 1

    flags = {}
    for (s, t), w in network:
        a_s = disparity_alpha(w / out_s[s], out_k[s])
        a_r = disparity_alpha(w / in_s[t], in_k[t])
        flags[(s, t)] = LinkSignificance(a_s, a_r, a_s < alpha_threshold, a_r < alpha_threshold)
    kept = frozenset(link for link, f in flags.items() if f.sig_to_sender or f.sig_to_receiver)
    return Backbone(alpha_threshold, flags, kept)


# --------------------------------------------------------------------------
# 10-type taxonomy
# --------------------------------------------------------------------------
# A pair signature is (i->j significant to i, i->j significant to j,
# j->i significant to j, j->i significant to i). Swapping the endpoints maps
# (a, b, c, d) to (c, d, a, b); the canonical form is the larger tuple, which
# puts the more significant direction on the left as in the usual notation.

Signature = tuple[bool, bool, bool, bool]


def swap_signature(sig: Signature) -> Signature:
    a, b, c, d = sig
    return (c, d, a, b)


def canonical_signature(sig: Signature) -> Signature:
    sig = tuple(bool(x) for x in sig)
    return max(sig, swap_signature(sig))


def render_label(sig: Signature) -> str:
    a, b, c, d = sig
    sym = lambda flag, mark: mark if flag else "·"  # noqa: E731
    return f"{sym(a, '▷')}→{sym(b, '▷')} {sym(d, '◁')}←{sym(c, '◁')}"


@dataclass(frozen=True, order=True)
class TaxonomyLabel:
    signature: Signature

    def __str__(self):
        return render_label(self.signature)


# ordered as rendered, most significant first
ALL_LABELS = tuple(
    TaxonomyLabel(s)
    for s in sorted(
        {canonical_signature(f) for f in product((False, True), repeat=4)},
        key=lambda s: (s[0], s[1], s[3], s[2]),
        reverse=True,
    )
)


def classify_pair(forward: tuple[bool, bool], backward: tuple[bool, bool]) -> TaxonomyLabel:
    """Label for a pair from ``(sig_to_sender, sig_to_receiver)`` of i->j and of j->i.

    Absent links carry ``(False, False)``.
    """
    return TaxonomyLabel(canonical_signature((forward[0], forward[1], backward[0], backward[1])))


def oriented_pair(i: str, j: str, forward: tuple[bool, bool], backward: tuple[bool, bool]) -> tuple[TaxonomyLabel, str, str]:
    """Label plus the endpoint order matching the canonical orientation."""
    sig = (forward[0], forward[1], backward[0], backward[1])
    if swap_signature(sig) > sig:
        i, j = j, i
    return TaxonomyLabel(canonical_signature(sig)), i, j


@dataclass
class TaxonomyCensus:
    layer: str
    alpha_threshold: float
    counts: dict[TaxonomyLabel, int]
    examples: dict[TaxonomyLabel, list[tuple[str, str]]]
    profiles: dict[str, dict[TaxonomyLabel, int]] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def _flags(backbone: Backbone, link) -> tuple[bool, bool]:
    f = backbone.flags.get(link)
    return (f.sig_to_sender, f.sig_to_receiver) if f else (False, False)


def taxonomy_census(backbone: Backbone, layer: str = "attention") -> TaxonomyCensus:
    """Count every linked unordered pair under its taxonomy label.

    ``backbone.flags`` must cover all links of the layer (as produced by
    :func:`extract_backbone`), not only the kept ones.
    """
    counts = {label: 0 for label in ALL_LABELS}
    examples: dict[TaxonomyLabel, list[tuple[str, str]]] = {label: [] for label in ALL_LABELS}
    profiles: dict[str, dict[TaxonomyLabel, int]] = {}
    for i, j in sorted({tuple(sorted(link)) for link in backbone.flags}):
        label, ci, cj = oriented_pair(i, j, _flags(backbone, (i, j)), _flags(backbone, (j, i)))
        counts[label] += 1
        examples[label].append((ci, cj))
        for c in (i, j):
            prof = profiles.setdefault(c, {lab: 0 for lab in ALL_LABELS})
            prof[label] += 1
    return TaxonomyCensus(layer, backbone.alpha_threshold, counts, examples, dict(sorted(profiles.items())))
