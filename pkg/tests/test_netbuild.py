from datetime import date

import numpy as np
import pytest
from hypothesis import given

from _gen import networks, random_network, random_records, recount_weights
from madn.errors import ContractError, ParseError
from madn.ingest import BuildConfig, CountryRegistry, synth_generate
from madn.netbuild import (
    DailyLayer, DirectedWeightedNetwork, assemble_multiplex, build_daily_layer, build_layer, build_multiplex,
    deserialize_network, read_network, serialize_network, superimpose, write_network,
)

REG = CountryRegistry({"Q142": "FR", "Q183": "DE", "Q30": "US"})


def test_network_rejects_bad_links():
    with pytest.raises(ContractError):
        DirectedWeightedNetwork(["A", "B"], {("A", "A"): 1})
    with pytest.raises(ContractError):
        DirectedWeightedNetwork(["A"], {("A", "B"): 1})
    with pytest.raises(ContractError):
        DirectedWeightedNetwork(["A", "B"], {("A", "B"): 0})
    with pytest.raises(ContractError):
        DirectedWeightedNetwork(["A", "B"], {("A", "B"): 1.5})


def test_daily_layer_rules():
    layer = build_daily_layer({"FR": ["Q183", "Q142", "Q5", "Q183"]}, REG)
    assert layer.links == {("FR", "DE")}  # self-mention and the person Q5 drop out, duplicates collapse
    assert layer.nodes == {"FR", "DE"}
    only_origin = build_daily_layer({"FR": ["Q5"]}, REG)
    assert only_origin.nodes == {"FR"} and not only_origin.links


def test_superimpose_counts_days():
    on = DailyLayer(None, frozenset({"FR", "DE"}), frozenset({("FR", "DE")}))
    off = DailyLayer(None, frozenset({"FR", "DE"}), frozenset())
    assert superimpose([on, off, on, off, on]).weight("FR", "DE") == 3
    assert superimpose([on] * 212).weight("FR", "DE") == 212
    lonely = DailyLayer(None, frozenset({"KR"}), frozenset())
    assert "KR" in superimpose([lonely, on]).nodes
    with pytest.raises(ContractError):
        superimpose([])


def test_assemble_multiplex_union():
    a = DirectedWeightedNetwork(["A", "B"], {("A", "B"): 1})
    d = DirectedWeightedNetwork(["B", "C"], {("C", "B"): 2})
    m = assemble_multiplex(a, d)
    assert m.nodes == ("A", "B", "C")
    assert m.attention.nodes == m.disregard.nodes == m.nodes
    assert m.attention.links == a.links and m.disregard.links == d.links
    empty = assemble_multiplex(a, DirectedWeightedNetwork([]))
    assert empty.disregard.nodes == ("A", "B") and empty.disregard.n_links == 0
    same = assemble_multiplex(a, a)
    assert same.attention == same.disregard


@given(networks(n_max=6), networks(n_max=6))
def test_assemble_is_idempotent_and_commutative(a, d):
    m = assemble_multiplex(a, d)
    assert assemble_multiplex(m.attention, m.disregard) == m
    swapped = assemble_multiplex(d, a)
    assert swapped.nodes == m.nodes and swapped.attention == m.disregard


@pytest.mark.parametrize("layer", ["attention", "disregard"])
def test_build_matches_recount(layer):
    rng = np.random.default_rng(5)
    for _ in range(20):
        recs = random_records(rng, n_countries=int(rng.integers(2, 7)), days=int(rng.integers(1, 6)))
        if not recs:
            continue
        codes = sorted({r.origin for r in recs})
        reg = CountryRegistry({f"E{c}": c for c in codes} | {"EZZ": "ZZ"})
        k = int(rng.integers(1, 5))
        net = build_layer(recs, reg, BuildConfig(k=k, layer=layer))
        assert net.links == recount_weights(recs, reg.entries, k, 0.1, layer)
        assert all(s != t for s, t in net.links)


def test_window_restricts_days():
    corpus = synth_generate([3, 3], 0.9, 0.1, 10, seed=2)
    full = build_multiplex(corpus.records, corpus.registry)
    part = build_multiplex(corpus.records, corpus.registry, window=(date(2016, 3, 7), date(2016, 3, 9)))
    assert max(part.attention.links.values()) <= 3
    assert max(full.attention.links.values()) <= 10
    assert all(part.attention.weight(*l) <= w for l, w in full.attention.links.items())


def test_weights_bounded_by_window():
    corpus = synth_generate([4, 4], 0.9, 0.05, 7, seed=4)
    m = build_multiplex(corpus.records, corpus.registry)
    for layer in (m.attention, m.disregard):
        assert all(1 <= w <= 7 for w in layer.links.values())


# -- serialization ------------------------------------------------------------------

@pytest.mark.parametrize("fmt", ["graphml", "edge-list", "dot"])
@given(net=networks(n_min=0))
def test_round_trip(fmt, net):
    text = serialize_network(net, fmt)
    assert deserialize_network(text, fmt) == net
    assert serialize_network(deserialize_network(text, fmt), fmt) == text


def test_edge_list_single_line():
    net = DirectedWeightedNetwork(["FR", "DE"], {("FR", "DE"): 3})
    assert serialize_network(net, "edge-list") == "FR DE 3\n"


def test_edge_list_sorted_and_isolated_nodes():
    net = DirectedWeightedNetwork(["C", "A", "B", "Z"], {("B", "A"): 1, ("A", "C"): 2, ("A", "B"): 4})
    assert serialize_network(net, "edge-list") == "A B 4\nA C 2\nB A 1\nZ\n"


def test_empty_network_documents():
    empty = DirectedWeightedNetwork([])
    for fmt in ("graphml", "edge-list", "dot"):
        assert deserialize_network(serialize_network(empty, fmt), fmt) == empty
    assert "<graphml" in serialize_network(empty, "graphml")


def test_graphml_carries_weight_and_attrs():
    net = DirectedWeightedNetwork(["FR", "DE"], {("FR", "DE"): 3})
    text = serialize_network(net, "graphml", graph_attrs={"run_id": "abc"}, link_attrs={("FR", "DE"): {"alpha_sender": 0.5}})
    assert 'attr.name="weight"' in text and "abc" in text and "alpha_sender" in text
    assert deserialize_network(text) == net


@pytest.mark.parametrize("fmt,text,line", [
    ("edge-list", "A B 1\nA B C D\n", 2),
    ("edge-list", "A B x\n", 1),
    ("edge-list", "A A 1\n", 1),
    ("edge-list", "A B 1\nA B 2\n", 2),
    ("dot", "digraph g {\n  A -> B;\n}\n", 2),
    ("dot", "graph g {\n}\n", 1),
    ("graphml", "<graphml><graph", 1),
])
def test_malformed_input_has_location(fmt, text, line):
    with pytest.raises(ParseError) as info:
        deserialize_network(text, fmt)
    assert info.value.line == line


def test_undirected_graphml_rejected():
    import networkx as nx
    g = nx.Graph()
    g.add_edge("A", "B", weight=1)
    with pytest.raises(ParseError):
        deserialize_network("\n".join(nx.generate_graphml(g)))


def test_file_helpers_pick_format_by_suffix(tmp_path):
    rng = np.random.default_rng(1)
    net = random_network(rng, 6)
    for name in ("n.graphml", "n.edges", "n.dot"):
        write_network(net, tmp_path / name)
        assert read_network(tmp_path / name) == net
    assert (tmp_path / "n.edges").read_text().count("\n") >= net.n_links
