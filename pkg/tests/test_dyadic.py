from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from _gen import networks, random_multiplex
from madn.dyadic import (
    ALL_LABELS, PAIR_CATEGORIES, TaxonomyLabel, classify_pair, combine_layers, disparity_alpha, extract_backbone,
    pair_category, pairwise_breakdown, swap_signature, taxonomy_census, weight_joint_histogram,
)
from madn.errors import ContractError
from madn.netbuild import DirectedWeightedNetwork

flags = st.tuples(st.booleans(), st.booleans())


def net(links, nodes=None):
    nodes = nodes or sorted({n for l in links for n in l})
    return DirectedWeightedNetwork(nodes, links)


# -- histogram and breakdown ------------------------------------------------------

def test_histogram_binning():
    a = net({("I", "J"): 3})
    d = DirectedWeightedNetwork(a.nodes)
    assert weight_joint_histogram(a, d).cells == {(0, 0): 1}
    a2 = net({("I", "J"): 7})
    d2 = net({("I", "J"): 12})
    assert weight_joint_histogram(a2, d2, 5).cells == {(1, 2): 1}
    with pytest.raises(ContractError):
        weight_joint_histogram(a2, d2, 0)


def test_histogram_total_is_linked_pair_count():
    rng = np.random.default_rng(7)
    for _ in range(50):
        m = random_multiplex(rng)
        pairs = {(s, t) for s in m.nodes for t in m.nodes if m.attention.has_link(s, t) or m.disregard.has_link(s, t)}
        assert weight_joint_histogram(m.attention, m.disregard, int(rng.integers(1, 4))).total == len(pairs)


def test_layers_must_share_nodes():
    with pytest.raises(ContractError):
        weight_joint_histogram(net({("A", "B"): 1}), net({("B", "C"): 1}))


def test_breakdown_examples():
    nodes = ["I", "J"]
    empty = DirectedWeightedNetwork(nodes)
    assert pairwise_breakdown(net({("I", "J"): 1}, nodes), empty)["attention-one-way"] == 1
    # heavier disregard wins the ordered pair
    assert combine_layers(net({("I", "J"): 3}, nodes), net({("I", "J"): 5}, nodes)) == {("I", "J"): "disregard"}
    assert combine_layers(net({("I", "J"): 5}, nodes), net({("I", "J"): 5}, nodes)) == {("I", "J"): "attention"}
    assert pairwise_breakdown(net({("I", "J"): 1}, nodes), net({("J", "I"): 1}, nodes))["opposed"] == 1
    assert pair_category("disregard", "disregard") == "mutual-disregard"
    with pytest.raises(ContractError):
        pair_category(None, None)


def test_breakdown_partitions_linked_pairs():
    rng = np.random.default_rng(8)
    for _ in range(50):
        m = random_multiplex(rng)
        counts = pairwise_breakdown(m.attention, m.disregard)
        assert set(counts) == set(PAIR_CATEGORIES)
        pairs = {frozenset(l) for l in list(m.attention.links) + list(m.disregard.links)}
        assert sum(counts.values()) == len(pairs)


# -- disparity -----------------------------------------------------------------

@pytest.mark.parametrize("p,k,alpha", [(0.5, 2, 0.5), (0.8, 3, 0.04), (0.05, 5, 0.95 ** 4), (0.3, 1, 1.0)])
def test_alpha_closed_form(p, k, alpha):
    assert disparity_alpha(p, k) == pytest.approx(alpha, abs=1e-12)


def test_alpha_bad_args():
    with pytest.raises(ContractError):
        disparity_alpha(1.2, 3)
    with pytest.raises(ContractError):
        disparity_alpha(0.5, 0)


@given(st.floats(0.001, 0.999), st.floats(0.001, 0.999), st.integers(2, 50))
def test_alpha_monotone(p1, p2, k):
    lo, hi = sorted((p1, p2))
    if hi > lo:
        assert disparity_alpha(hi, k) < disparity_alpha(lo, k)
    assert disparity_alpha(p1, k + 1) < disparity_alpha(p1, k)


def test_equal_out_weights_not_significant():
    b = extract_backbone(net({("H", x): 4 for x in "ABCD"}))
    for link in b.flags:
        assert b.flags[link].alpha_sender == pytest.approx(0.75 ** 3)
        assert not b.flags[link].sig_to_sender
    assert not b.kept_links


def test_dominant_link_significant():
    b = extract_backbone(net({("H", "A"): 97, ("H", "B"): 1, ("H", "C"): 1, ("H", "D"): 1}))
    f = b.flags[("H", "A")]
    assert f.alpha_sender == pytest.approx(0.03 ** 3, rel=1e-9) and f.sig_to_sender
    assert ("H", "A") in b.kept_links


def test_uniform_network_has_empty_backbone():
    nodes = [f"N{i}" for i in range(6)]
    full = net({(a, b): 3 for a in nodes for b in nodes if a != b})
    b = extract_backbone(full)
    assert all(f.alpha_sender == pytest.approx(0.8 ** 4) and f.alpha_receiver == pytest.approx(0.8 ** 4) for f in b.flags.values())
    assert not b.kept_links


@given(networks(n_max=8), st.integers(2, 9))
def test_alpha_invariant_to_scaling_out_weights(g, factor):
    if not g.n_links:
        return
    src = g.nodes[0]
    scaled = DirectedWeightedNetwork(g.nodes, {l: w * factor if l[0] == src else w for l, w in g})
    a, b = extract_backbone(g), extract_backbone(scaled)
    for l in g.links:
        if l[0] == src:
            assert a.flags[l].alpha_sender == pytest.approx(b.flags[l].alpha_sender, rel=1e-12, abs=1e-300)


@given(networks(n_max=8), st.floats(0.01, 0.99))
def test_backbone_flags_follow_threshold(g, thr):
    b = extract_backbone(g, thr)
    assert b.kept_links <= set(g.links)
    for f in b.flags.values():
        assert f.sig_to_sender == (f.alpha_sender < thr)
        assert f.sig_to_receiver == (f.alpha_receiver < thr)
    with pytest.raises(ContractError):
        extract_backbone(g, 1.0)


# -- taxonomy ---------------------------------------------------------------------

def test_ten_labels_from_sixteen_patterns():
    labels = {classify_pair(f[:2], f[2:]) for f in product((False, True), repeat=4)}
    assert len(labels) == 10
    assert set(labels) == set(ALL_LABELS)


@given(flags, flags)
def test_classify_is_swap_invariant(fwd, bwd):
    assert classify_pair(fwd, bwd) == classify_pair(bwd, fwd)


def test_swap_is_an_involution():
    for f in product((False, True), repeat=4):
        assert swap_signature(swap_signature(f)) == f


def test_label_rendering():
    assert str(classify_pair((True, True), (True, True))) == "▷→▷ ◁←◁"
    assert str(classify_pair((False, False), (False, False))) == "·→· ·←·"
    assert str(classify_pair((True, False), (False, False))) == "▷→· ·←·"
    assert str(classify_pair((False, False), (True, False))) == "▷→· ·←·"
    assert str(ALL_LABELS[0]) == "▷→▷ ◁←◁" and str(ALL_LABELS[-1]) == "·→· ·←·"
    assert len({str(l) for l in ALL_LABELS}) == 10
    assert isinstance(ALL_LABELS[0], TaxonomyLabel)


def test_single_significant_link_census():
    g = net({("H", "A"): 97, ("H", "B"): 1, ("H", "C"): 1, ("H", "D"): 1})
    census = taxonomy_census(extract_backbone(g))
    label = classify_pair((True, False), (False, False))  # A has one in-link, so receiver side stays at alpha 1
    assert census.counts[label] == 1
    assert census.examples[label] == [("H", "A")]
    assert census.total == 4
    assert census.profiles["H"][label] == 1 and census.profiles["A"][label] == 1


def test_census_total_equals_linked_pairs():
    rng = np.random.default_rng(9)
    for _ in range(100):
        m = random_multiplex(rng)
        for layer in (m.attention, m.disregard):
            pairs = {frozenset(l) for l in layer.links}
            census = taxonomy_census(extract_backbone(layer, float(rng.uniform(0.05, 0.5))))
            assert census.total == len(pairs)
            assert sum(sum(p.values()) for p in census.profiles.values()) == 2 * len(pairs)
