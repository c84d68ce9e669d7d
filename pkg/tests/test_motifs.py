import json
import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings

import _oracles
from _gen import networks, planted_ffl, random_network
from madn.errors import ContractError
from madn.motifs import (
    N_COLORED_CLASSES, N_TRIAD_CLASSES, TRIAD_NAMES, colored_classes, colored_motif_zscores, colored_to_triad,
    colored_triad_census, motif_zscores, null_colored_matrix, null_triad_matrix, profile_stats, rewire_null,
    triad_census, triad_classes,
)
from madn.netbuild import DirectedWeightedNetwork, assemble_multiplex


def net(links, nodes=None):
    nodes = nodes or sorted({n for l in links for n in l})
    return DirectedWeightedNetwork(nodes, dict.fromkeys(links, 1))


def only(census):
    return {k: v for k, v in census.items() if v}


def degrees(g):
    k = {n: [0, 0] for n in g.nodes}
    for (s, t), _ in g:
        k[s][1] += 1
        k[t][0] += 1
    return k


# -- class tables ---------------------------------------------------------------

def test_thirteen_classes_with_anchors():
    classes = triad_classes()
    assert N_TRIAD_CLASSES == 13 == len(classes)
    keys = {_oracles.triad_key(_oracles.parse_signature(s)) for s in classes.values()}
    assert len(keys) == 13
    # every weakly connected 3-node digraph lands in exactly one class
    pairs = [(i, j) for i in range(3) for j in range(3) if i != j]
    seen = set()
    for mask in product((0, 1), repeat=6):
        edges = [p for p, on in zip(pairs, mask) if on]
        if len({frozenset(e) for e in edges}) >= 2:
            seen.add(_oracles.triad_key(edges))
    assert seen == keys
    key = lambda edges: _oracles.triad_key(edges)  # noqa: E731
    assert key(_oracles.parse_signature(classes[1])) == key([(0, 1), (0, 2)])
    assert key(_oracles.parse_signature(classes[2])) == key([(0, 1), (1, 2)])
    assert key(_oracles.parse_signature(classes[4])) == key([(1, 0), (2, 0)])
    assert key(_oracles.parse_signature(classes[5])) == key([(0, 1), (1, 2), (0, 2)])
    assert TRIAD_NAMES[5] == "feed-forward loop"


def test_colored_class_count_matches_enumeration():
    pairs = [(i, j) for i in range(3) for j in range(3) if i != j]
    keys = set()
    for states in product(range(4), repeat=6):
        edges = [(u, v, c) for (u, v), s in zip(pairs, states) for bit, c in ((1, "A"), (2, "D")) if s & bit]
        if len({frozenset(e[:2]) for e in edges}) >= 2:
            keys.add(_oracles.colored_key(edges))
    assert N_COLORED_CLASSES == len(keys) == 710
    assert {_oracles.colored_key(_oracles.parse_colored(s)) for s in colored_classes().values()} == keys


# -- censuses ------------------------------------------------------------------------

def test_single_triad_examples():
    assert only(triad_census(net([("A", "B"), ("B", "C")]))) == {2: 1}
    assert only(triad_census(net([("A", "B"), ("A", "C")]))) == {1: 1}
    assert only(triad_census(net([("A", "B"), ("B", "C"), ("A", "C")]))) == {5: 1}
    assert only(triad_census(net([("B", "A"), ("C", "A")]))) == {4: 1}
    assert only(triad_census(net([("A", "B")], ["A", "B", "C"]))) == {}


@settings(max_examples=100, deadline=None)
@given(networks(n_max=9))
def test_census_matches_triple_enumeration(g):
    assert triad_census(g) == _oracles.triad_census(g, triad_classes())


@given(networks(n_min=3, n_max=8))
def test_census_invariant_under_relabeling(g):
    rename = {n: f"X{len(g.nodes) - i:02d}" for i, n in enumerate(g.nodes)}
    h = DirectedWeightedNetwork(rename.values(), {(rename[s], rename[t]): w for (s, t), w in g})
    assert triad_census(h) == triad_census(g)


def test_colored_examples():
    nodes = ["A", "B", "C"]
    a = net([("A", "B")], nodes)
    assert only(colored_triad_census(assemble_multiplex(a, a))) == {}
    m = assemble_multiplex(net([("A", "B"), ("A", "C")], nodes), net([("B", "C")], nodes))
    counts = only(colored_triad_census(m))
    assert list(counts.values()) == [1]
    (cid,) = counts
    want = _oracles.colored_key([(0, 1, "A"), (0, 2, "A"), (1, 2, "D")])
    assert _oracles.colored_key(_oracles.parse_colored(colored_classes()[cid])) == want


@settings(max_examples=40, deadline=None)
@given(networks(n_min=2, n_max=7), networks(n_min=2, n_max=7))
def test_colored_census_matches_enumeration(a, d):
    m = assemble_multiplex(a, d)
    assert colored_triad_census(m) == _oracles.colored_census(m, colored_classes())


@given(networks(n_max=9))
def test_monochrome_colored_census_reduces(g):
    m = assemble_multiplex(g, DirectedWeightedNetwork([]))
    plain = triad_census(g)
    folded = dict.fromkeys(plain, 0)
    for cid, count in colored_triad_census(m).items():
        if count:
            folded[colored_to_triad(cid)] += count
    assert folded == plain


# -- null model -------------------------------------------------------------------

def test_rewire_preserves_degrees():
    rng = np.random.default_rng(0)
    g = random_network(rng, 15, 0.25)
    base = degrees(g)
    for i in range(100):
        r = rewire_null(g, seed=3, sample_index=i)
        h = r.network
        assert h.n_links == g.n_links and h.nodes == g.nodes
        assert degrees(h) == base
        assert all(s != t for s, t in h.links)
        assert not r.exhausted and r.swaps_done == 10 * g.n_links


def test_rewire_is_deterministic_and_seed_dependent():
    g = random_network(np.random.default_rng(1), 12, 0.3)
    assert rewire_null(g, 5).network == rewire_null(g, 5).network
    assert rewire_null(g, 5).network != rewire_null(g, 6).network


def test_three_cycle_cannot_move():
    g = net([("A", "B"), ("B", "C"), ("C", "A")])
    with pytest.warns(RuntimeWarning):
        r = rewire_null(g, 0)
    assert r.exhausted and r.swaps_done == 0 and r.network == g


def test_rewire_needs_two_links():
    with pytest.raises(ContractError):
        rewire_null(net([("A", "B")]), 0)


def test_rewire_null_equals_profile_sample():
    g = random_network(np.random.default_rng(2), 10, 0.3)
    counts, done = null_triad_matrix(g, 6, seed=9)
    for i in range(6):
        r = rewire_null(g, 9, sample_index=i)
        assert [triad_census(r.network)[c] for c in range(1, 14)] == counts[i].tolist()
        assert done[i] == r.swaps_done


def test_colored_null_preserves_each_layer():
    rng = np.random.default_rng(4)
    m = assemble_multiplex(random_network(rng, 10, 0.3), random_network(rng, 10, 0.2))
    _, done = null_colored_matrix(m, 20, seed=1)
    assert (done[:, 0] == 10 * m.attention.n_links).all() and (done[:, 1] == 10 * m.disregard.n_links).all()
    # each layer uses the same stream as its single-layer null, so degrees follow from the rewire tests
    for i in range(5):
        assert degrees(rewire_null(m.attention, 1, sample_index=i).network) == degrees(m.attention)


# -- profiles -----------------------------------------------------------------------

def test_profile_formulae():
    observed = np.array([3, 1, 0])
    null = np.array([[1, 1, 0], [3, 1, 0], [5, 1, 0], [2, 1, 0]])
    stats = profile_stats(observed, null, {1: "a", 2: "b", 3: "c"}, 0.05)
    assert stats[0].z == pytest.approx((3 - 2.75) / np.std([1, 3, 5, 2]))
    assert stats[0].p == pytest.approx((1 + 2) / 5)
    assert math.isnan(stats[1].z) and stats[1].p == 1.0
    assert stats[0].low_count and stats[2].to_dict()["z"] is None


def test_single_sample_p_values():
    g = random_network(np.random.default_rng(5), 10, 0.3)
    prof = motif_zscores(g, n_samples=1, seed=0)
    assert {s.p for s in prof.stats} <= {0.5, 1.0}


def test_planted_ffl_is_overrepresented():
    prof = motif_zscores(planted_ffl(), n_samples=1000, seed=1)
    ffl = prof.by_id()[5]
    assert ffl.z > 2 and ffl.significant and not ffl.low_count


def test_null_drawn_network_is_unremarkable():
    clean = 0
    for seed in range(10):
        base = random_network(np.random.default_rng(100 + seed), 30, 0.1)
        drawn = rewire_null(base, seed).network
        prof = motif_zscores(drawn, n_samples=500, seed=seed + 50)
        clean += all(s.p >= 0.01 for s in prof.stats)
    assert clean >= 9


def test_profiles_are_reproducible_and_serializable():
    g = random_network(np.random.default_rng(6), 12, 0.3)
    a = motif_zscores(g, 50, seed=4).to_dict()
    assert a == motif_zscores(g, 50, seed=4).to_dict()
    text = json.dumps(a, allow_nan=False)
    assert json.loads(text)["classes"]["5"] == triad_classes()[5]


def test_empty_disregard_layer_reduces_colored_profile():
    g = random_network(np.random.default_rng(7), 12, 0.3)
    m = assemble_multiplex(g, DirectedWeightedNetwork(g.nodes))
    plain = motif_zscores(g, 200, seed=2).by_id()
    colored = colored_motif_zscores(m, 200, seed=2)
    for s in colored.stats:
        base = colored_to_triad(s.class_id)
        if base is None:
            assert s.observed == 0 and s.null_mean == 0
            continue
        p = plain[base]
        assert (s.observed, s.null_mean, s.null_std, s.p) == (p.observed, p.null_mean, p.null_std, p.p)


def test_colored_profile_sorted_and_planted_class_found():
    rng = np.random.default_rng(0)
    nodes = [f"N{i:02d}" for i in range(30)]
    a, d = set(), set()
    for _ in range(10):
        h, b, c = rng.choice(30, 3, replace=False)
        a |= {(nodes[h], nodes[b]), (nodes[h], nodes[c])}
        d.add((nodes[b], nodes[c]))
    for _ in range(25):
        x, y = rng.choice(30, 2, replace=False)
        a.add((nodes[x], nodes[y]))
    for _ in range(15):
        x, y = rng.choice(30, 2, replace=False)
        d.add((nodes[x], nodes[y]))
    m = assemble_multiplex(net(a, nodes), net(d, nodes))
    prof = colored_motif_zscores(m, 1000, seed=3)
    zs = [abs(s.z) for s in prof.stats if not math.isnan(s.z)]
    assert zs == sorted(zs, reverse=True)
    want = _oracles.colored_key([(0, 1, "A"), (0, 2, "A"), (1, 2, "D")])
    (planted,) = [s for s in prof.stats if _oracles.colored_key(_oracles.parse_colored(s.signature)) == want]
    assert planted.significant and planted.z > 2
