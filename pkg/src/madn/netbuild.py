"""Daily layers, superimposition and the attention/disregard multiplex."""
from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import date
from typing import Iterable, Mapping

import networkx as nx
import numpy as np

from madn.errors import ContractError, ParseError
from madn.ingest import BuildConfig, CountryRegistry, MentionRecord, group_by_day, select_day

FORMATS = ("graphml", "dot", "edge-list")


class DirectedWeightedNetwork:
    """Immutable directed network with positive integer link weights.

    Nodes are kept in sorted order; ``links`` maps ``(source, target)`` to the
    weight. Self-loops and dangling endpoints are rejected.
    """

    __slots__ = ("_nodes", "_links", "_index")

    def __init__(self, nodes: Iterable[str], links: Mapping[tuple[str, str], int] | None = None):
        links = dict(links or {})
        node_set = set(nodes)
        for (s, t), w in links.items():
            if s == t:
                raise ContractError(f"self-loop {s}->{t}")
            if s not in node_set or t not in node_set:
                raise ContractError(f"link {s}->{t} has an endpoint outside the node set")
            if int(w) != w or w < 1:
                raise ContractError(f"link {s}->{t} has weight {w!r}; weights are positive integers")
        self._nodes = tuple(sorted(node_set))
        self._links = {k: int(links[k]) for k in sorted(links)}
        self._index = {n: i for i, n in enumerate(self._nodes)}

    @property
    def nodes(self) -> tuple[str, ...]:
        return self._nodes

    @property
    def links(self) -> Mapping[tuple[str, str], int]:
        return dict(self._links)

    def __len__(self):
        return len(self._nodes)

    @property
    def n_links(self) -> int:
        return len(self._links)

    def index(self, node: str) -> int:
        return self._index[node]

    def weight(self, source: str, target: str) -> int:
        return self._links.get((source, target), 0)

    def has_link(self, source: str, target: str) -> bool:
        return (source, target) in self._links

    def __iter__(self):
        return iter(self._links.items())

    def __eq__(self, other):
        if not isinstance(other, DirectedWeightedNetwork):
            return NotImplemented
        return self._nodes == other._nodes and self._links == other._links

    def __hash__(self):
        return hash((self._nodes, tuple(self._links.items())))

    def __repr__(self):
        return f"DirectedWeightedNetwork(n_nodes={len(self._nodes)}, n_links={len(self._links)})"

    def with_nodes(self, nodes: Iterable[str]) -> "DirectedWeightedNetwork":
        return DirectedWeightedNetwork(set(self._nodes) | set(nodes), self._links)

    def subnetwork(self, links: Iterable[tuple[str, str]]) -> "DirectedWeightedNetwork":
        """Same node set, restricted to ``links``."""
        return DirectedWeightedNetwork(self._nodes, {k: self._links[k] for k in links})

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(src, dst, weight)`` index arrays in sorted link order."""
        m = len(self._links)
        src = np.empty(m, dtype=np.int64)
        dst = np.empty(m, dtype=np.int64)
        w = np.empty(m, dtype=np.float64)
        for e, ((s, t), wt) in enumerate(self._links.items()):
            src[e] = self._index[s]
            dst[e] = self._index[t]
            w[e] = wt
        return src, dst, w

    def adjacency(self, weighted: bool = False) -> np.ndarray:
        n = len(self._nodes)
        a = np.zeros((n, n), dtype=np.float64 if weighted else np.uint8)
        for (s, t), w in self._links.items():
            a[self._index[s], self._index[t]] = w if weighted else 1
        return a

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self._nodes)
        g.add_weighted_edges_from((s, t, w) for (s, t), w in self._links.items())
        return g

    @classmethod
    def from_networkx(cls, g: nx.DiGraph, weight: str = "weight") -> "DirectedWeightedNetwork":
        return cls(g.nodes, {(s, t): d.get(weight, 1) for s, t, d in g.edges(data=True)})


@dataclass(frozen=True)
class DailyLayer:
    """Unweighted directed network of a single day."""

    day: date | None
    nodes: frozenset
    links: frozenset


@dataclass(frozen=True)
class MultiplexNetwork:
    nodes: tuple[str, ...]
    attention: DirectedWeightedNetwork
    disregard: DirectedWeightedNetwork

    def __post_init__(self):
        if not (self.attention.nodes == self.disregard.nodes == self.nodes):
            raise ContractError("multiplex layers must share one node set")


def build_daily_layer(selections: Mapping[str, Iterable[str]], registry: CountryRegistry, day: date | None = None) -> DailyLayer:
    """One day's unweighted layer from per-origin selected entity ids.

    Every origin is a node, every resolved mentioned country is a node, and
    each origin gets a link to each distinct country it mentioned other than
    itself. Non-country entities are skipped.
    """
    nodes = set(selections)
    links = set()
    for origin, entities in selections.items():
        for e in entities:
            target = registry.resolve(e)
            if target is None:
                continue
            nodes.add(target)
            if target != origin:
                links.add((origin, target))
    return DailyLayer(day, frozenset(nodes), frozenset(links))


def superimpose(daily_layers: Iterable[DailyLayer]) -> DirectedWeightedNetwork:
    """Weighted network whose link weights count the daily layers containing each link."""
    daily_layers = list(daily_layers)
    if not daily_layers:
        raise ContractError("cannot superimpose an empty list of daily layers")
    nodes: set[str] = set()
    weights: dict[tuple[str, str], int] = {}
    for layer in daily_layers:
        nodes |= layer.nodes
        for link in layer.links:
            weights[link] = weights.get(link, 0) + 1
    return DirectedWeightedNetwork(nodes, weights)


def daily_layers(records: Iterable[MentionRecord], registry: CountryRegistry, config: BuildConfig) -> list[DailyLayer]:
    return [
        build_daily_layer(select_day(recs, config), registry, day)
        for day, recs in group_by_day(records, config.window).items()
    ]


def build_layer(records: Iterable[MentionRecord], registry: CountryRegistry, config: BuildConfig) -> DirectedWeightedNetwork:
    """Ingest -> select -> daily layers -> superimposed network for ``config.layer``."""
    return superimpose(daily_layers(records, registry, config))


def assemble_multiplex(attention: DirectedWeightedNetwork, disregard: DirectedWeightedNetwork) -> MultiplexNetwork:
    union = set(attention.nodes) | set(disregard.nodes)
    a = attention.with_nodes(union)
    d = disregard.with_nodes(union)
    return MultiplexNetwork(a.nodes, a, d)


def build_multiplex(records, registry, k=10, epsilon=0.1, window=None) -> MultiplexNetwork:
    records = list(records)
    att = build_layer(records, registry, BuildConfig(k=k, epsilon=epsilon, window=window, layer="attention"))
    dis = build_layer(records, registry, BuildConfig(k=k, epsilon=epsilon, window=window, layer="disregard"))
    return assemble_multiplex(att, dis)


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def _to_graphml(network: DirectedWeightedNetwork, graph_attrs: Mapping[str, object] | None = None,
                link_attrs: Mapping[tuple[str, str], Mapping[str, object]] | None = None) -> str:
    g = network.to_networkx()
    g.graph.update(graph_attrs or {})
    for link, attrs in (link_attrs or {}).items():
        g.edges[link].update(attrs)
    return "\n".join(nx.generate_graphml(g)) + "\n"


def _from_graphml(text: str) -> DirectedWeightedNetwork:
    try:
        g = nx.parse_graphml(text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"malformed GraphML: {exc}", line=line, column=col) from None
    except (nx.NetworkXError, KeyError, ValueError) as exc:
        raise ParseError(f"malformed GraphML: {exc}") from None
    if not g.is_directed():
        raise ParseError("GraphML graph is undirected; expected edgedefault='directed'")
    if g.is_multigraph():
        raise ParseError("GraphML graph has parallel links")
    try:
        return DirectedWeightedNetwork.from_networkx(g)
    except ContractError as exc:
        raise ParseError(str(exc)) from None


def _to_edge_list(network: DirectedWeightedNetwork) -> str:
    lines = [f"{s} {t} {w}" for (s, t), w in network]
    linked = {n for link in network.links for n in link}
    lines.extend(n for n in network.nodes if n not in linked)
    return "".join(line + "\n" for line in lines)


def _from_edge_list(text: str) -> DirectedWeightedNetwork:
    nodes: set[str] = set()
    links: dict[tuple[str, str], int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) == 1:
            nodes.add(parts[0])
            continue
        if len(parts) != 3:
            raise ParseError(f"expected 'SRC DST WEIGHT', got {line!r}", line=lineno)
        s, t, w = parts
        try:
            weight = int(w)
        except ValueError:
            raise ParseError(f"bad weight {w!r}", line=lineno) from None
        if (s, t) in links:
            raise ParseError(f"duplicate link {s} {t}", line=lineno)
        if s == t or weight < 1:
            raise ParseError(f"invalid link {line!r}", line=lineno)
        nodes.update((s, t))
        links[(s, t)] = weight
    return DirectedWeightedNetwork(nodes, links)


def _to_dot(network: DirectedWeightedNetwork) -> str:
    out = ["digraph madn {"]
    out.extend(f'  "{n}";' for n in network.nodes)
    out.extend(f'  "{s}" -> "{t}" [weight={w}];' for (s, t), w in network)
    out.append("}")
    return "\n".join(out) + "\n"


_DOT_NODE = re.compile(r'^"([^"]+)";$')
_DOT_LINK = re.compile(r'^"([^"]+)"\s*->\s*"([^"]+)"\s*\[weight=(\d+)\];$')


def _from_dot(text: str) -> DirectedWeightedNetwork:
    lines = text.splitlines()
    body = [(i, ln.strip()) for i, ln in enumerate(lines, start=1) if ln.strip()]
    if not body or not re.match(r"^digraph\b.*\{$", body[0][1]):
        raise ParseError("expected 'digraph ... {' header", line=body[0][0] if body else 1)
    if body[-1][1] != "}":
        raise ParseError("missing closing brace", line=body[-1][0])
    nodes: set[str] = set()
    links: dict[tuple[str, str], int] = {}
    for lineno, ln in body[1:-1]:
        if m := _DOT_LINK.match(ln):
            s, t, w = m.group(1), m.group(2), int(m.group(3))
            if s == t or w < 1 or (s, t) in links:
                raise ParseError(f"invalid link {ln!r}", line=lineno)
            nodes.update((s, t))
            links[(s, t)] = w
        elif m := _DOT_NODE.match(ln):
            nodes.add(m.group(1))
        else:
            raise ParseError(f"unrecognised statement {ln!r}", line=lineno)
    return DirectedWeightedNetwork(nodes, links)


def serialize_network(network: DirectedWeightedNetwork, format: str = "graphml", **graphml_kwargs) -> str:
    if format == "graphml":
        return _to_graphml(network, **graphml_kwargs)
    if format == "edge-list":
        return _to_edge_list(network)
    if format == "dot":
        return _to_dot(network)
    raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")


def deserialize_network(text: str, format: str = "graphml") -> DirectedWeightedNetwork:
    if format == "graphml":
        return _from_graphml(text)
    if format == "edge-list":
        return _from_edge_list(text)
    if format == "dot":
        return _from_dot(text)
    raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")


def format_for_path(path) -> str:
    suffix = str(path).rsplit(".", 1)[-1].lower()
    return {"graphml": "graphml", "dot": "dot", "gv": "dot"}.get(suffix, "edge-list")


def read_network(path, format: str | None = None) -> DirectedWeightedNetwork:
    with open(path, encoding="utf-8") as fh:
        return deserialize_network(fh.read(), format or format_for_path(path))


def write_network(network: DirectedWeightedNetwork, path, format: str | None = None, **graphml_kwargs) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_network(network, format or format_for_path(path), **graphml_kwargs))
