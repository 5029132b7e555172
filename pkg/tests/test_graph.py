import xml.etree.ElementTree as ET

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hashsem.corpus import Corpus, InteractionKind, TweetRecord
from hashsem.graph import (
    InteractionSets,
    PruningPolicy,
    SemanticNetwork,
    assign_root,
    build_interactions,
    export_graph,
    project,
    prune,
    tree_parents,
)
from hashsem.text import HashtagIndex
from oracles import brute_audience, brute_pair_weights, component_count, max_spanning_forest_weight


def net_from(n, edges, audience=None, hashtags=None):
    e = sorted(edges.items())
    return SemanticNetwork(
        n=n,
        src=[i for (i, _), _ in e],
        dst=[j for (_, j), _ in e],
        weight=[w for _, w in e],
        audience=audience if audience is not None else [max([w for (i, j), w in e if t in (i, j)] + [1]) for t in range(n)],
        hashtags=hashtags,
    )


# -- interactions -------------------------------------------------------------


def test_bare_word_counts_as_interaction():
    corpus = Corpus((TweetRecord("1", "u", "j'aime la france"),))
    inter = build_interactions(corpus, HashtagIndex(("france",)), {"la"})
    assert inter.sets["u"] == {0}


def test_reply_inherits_referenced_hashtags():
    corpus = Corpus(
        (
            TweetRecord("1", "a", "vive #europe"),
            TweetRecord("2", "b", "je ne sais pas", InteractionKind.REPLY, "1"),
            TweetRecord("3", "c", "rien", InteractionKind.QUOTE, "404"),
        )
    )
    inter = build_interactions(corpus, HashtagIndex(("europe",)))
    assert inter.sets == {"a": {0}, "b": {0}, "c": frozenset()}
    assert "nobody" not in inter.sets
    assert inter.audience.tolist() == [2]


def test_interaction_index_range():
    with pytest.raises(ValueError):
        InteractionSets(("a",), {"u": frozenset({1})})
    with pytest.raises(ValueError):
        build_interactions(Corpus(()), HashtagIndex(()))


def test_interactions_json_roundtrip():
    inter = InteractionSets(("é", "b"), {"z": frozenset({1}), "a": frozenset({0, 1}), "m": frozenset()})
    back = InteractionSets.from_json(inter.to_json())
    assert back.sets == inter.sets and back.hashtags == inter.hashtags
    assert list(back.sets) == ["a", "m", "z"]


# -- projection ---------------------------------------------------------------


def test_projection_example():
    inter = InteractionSets(("a", "b", "c"), {"u1": {0, 1}, "u2": {0, 1, 2}, "u3": {1, 2}})
    net = project(inter)
    assert net.edges() == {(0, 1): 2, (0, 2): 1, (1, 2): 2}
    assert net.audience.tolist() == [2, 3, 2]


def test_projection_single_shared_hashtag():
    inter = InteractionSets(("a", "b"), {"u1": {0}, "u2": {0}, "u3": {1}})
    assert project(inter).num_edges == 0


def test_projection_one_user_complete_graph():
    k = 6
    net = project(InteractionSets(tuple("abcdef"), {"u": set(range(k))}))
    assert net.edges() == {(i, j): 1 for i in range(k) for j in range(i + 1, k)}


sets_strategy = st.integers(1, 10).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.dictionaries(st.text("uvwxyz", min_size=1, max_size=3), st.frozensets(st.integers(0, n - 1)), max_size=20),
    )
)


@settings(max_examples=200, deadline=None)
@given(sets_strategy, st.integers(1, 4))
def test_projection_matches_brute_force(case, workers):
    n, sets = case
    inter = InteractionSets(tuple(f"h{i}" for i in range(n)), sets)
    net = project(inter, workers=workers)
    assert net.edges() == brute_pair_weights(sets)
    assert net.audience.tolist() == brute_audience(sets, n)
    for (i, j), w in net.edges().items():
        assert w <= min(net.audience[i], net.audience[j])


# -- pruning ------------------------------------------------------------------


def test_mst_triangle():
    net = net_from(3, {(0, 1): 2, (1, 2): 2, (0, 2): 1})
    assert prune(net, PruningPolicy("mst")).edges() == {(0, 1): 2, (1, 2): 2}


def test_mst_tie_order():
    net = net_from(3, {(0, 1): 2, (1, 2): 2, (0, 2): 2})
    assert set(prune(net, PruningPolicy("mst")).edges()) == {(0, 1), (0, 2)}


def test_none_and_cutoff():
    edges = {(0, 1): 3, (1, 2): 1, (0, 2): 2}
    net = net_from(3, edges)
    assert prune(net, PruningPolicy("none")).edges() == edges
    assert prune(net, PruningPolicy.parse("cutoff:2")).edges() == {(0, 1): 3, (0, 2): 2}


@pytest.mark.parametrize("text", ["cutoff:0", "cutoff:x", "tree", "cutoff:-1"])
def test_bad_policy(text):
    with pytest.raises(ValueError):
        PruningPolicy.parse(text)


def test_policy_str_roundtrip():
    for text in ("none", "mst", "cutoff:3"):
        assert str(PruningPolicy.parse(text)) == text


graph_strategy = st.integers(1, 12).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.dictionaries(
            st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] < e[1]),
            st.integers(1, 6),
        ),
    )
)


@settings(max_examples=200, deadline=None)
@given(graph_strategy)
def test_mst_forest_properties(case):
    n, edges = case
    net = net_from(n, edges)
    tree = prune(net, PruningPolicy("mst"))
    kept = tree.edges()
    assert set(kept) <= set(edges) and all(edges[e] == w for e, w in kept.items())
    k = component_count(n, edges)
    assert len(kept) == n - k
    assert component_count(n, kept) == k  # spanning per component, hence acyclic
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_weighted_edges_from((i, j, w) for (i, j), w in edges.items())
    ref = nx.maximum_spanning_tree(g)
    assert sum(kept.values()) == sum(d["weight"] for *_, d in ref.edges(data=True))


@settings(max_examples=60, deadline=None)
@given(graph_strategy.filter(lambda c: c[0] <= 7))
def test_mst_weight_exhaustive(case):
    n, edges = case
    tree = prune(net_from(n, edges), PruningPolicy("mst"))
    assert sum(tree.edges().values()) == max(0, max_spanning_forest_weight(n, edges))


# -- rooting ------------------------------------------------------------------


def test_root_most_popular():
    net = net_from(2, {(0, 1): 3}, audience=[9, 4], hashtags=("france", "macron"))
    assert assign_root(net).root == 0
    net = net_from(2, {(0, 1): 3}, audience=[4, 9], hashtags=("macron", "france"))
    assert net.label(assign_root(net).root) == "france"


def test_root_ties_and_single_node():
    assert assign_root(net_from(2, {}, audience=[5, 5])).root == 0
    assert assign_root(net_from(1, {}, audience=[1])).root == 0
    with pytest.raises(ValueError):
        assign_root(net_from(0, {}, audience=[]))


def test_forest_component_roots():
    # components {0,1}, {2,3,4}; 3 is most popular overall
    net = net_from(5, {(0, 1): 1, (2, 3): 2, (3, 4): 1}, audience=[2, 3, 4, 6, 1])
    rooted = assign_root(net)
    assert rooted.root == 3
    assert rooted.component_roots == (1, 3)
    assert tree_parents(rooted).tolist() == [1, -1, 3, -1, 3]


def test_roots_from_interactions():
    inter = InteractionSets(("a", "b"), {"u": {0, 1}, "v": {1}})
    net = project(inter)
    assert assign_root(net, inter).root == 1


# -- validation, serialisation and export ---------------------------------------


def test_network_validation():
    with pytest.raises(ValueError):
        SemanticNetwork(2, [1], [0], [1], [1, 1])
    with pytest.raises(ValueError):
        SemanticNetwork(2, [0], [1], [0], [1, 1])
    with pytest.raises(ValueError):
        SemanticNetwork(2, [0], [1], [1], [1, 1], hashtags=("a",))


def test_network_json_roundtrip():
    net = assign_root(net_from(3, {(1, 2): 4, (0, 1): 2}, audience=[2, 5, 4], hashtags=("a", "b", "ç")))
    back = SemanticNetwork.from_json(net.to_json())
    assert back.to_json() == net.to_json()
    assert back.content_hash() == net.content_hash()


def test_weighted_degree_path():
    net = net_from(3, {(0, 1): 3, (1, 2): 4})
    assert net.weighted_degree().tolist() == [3, 7, 4]


def _graphml_nx(path):
    return nx.read_graphml(path)


def test_graphml_export(tmp_path):
    net = assign_root(net_from(3, {(0, 1): 3, (1, 2): 4}, audience=[3, 5, 4], hashtags=("a", "b", "c")))
    export_graph(net, "graphml", tmp_path / "g.graphml")
    g = _graphml_nx(tmp_path / "g.graphml")
    assert g.number_of_nodes() == 3 and g.number_of_edges() == 2
    assert g.nodes["n1"] == {"label": "b", "audience": 5, "wdegree": 7}
    assert g.edges["n1", "n2"]["weight"] == 4
    assert g.graph["root"] == "n1"


def test_graphml_two_nodes_and_empty(tmp_path):
    export_graph(net_from(2, {(0, 1): 1}), "graphml", tmp_path / "a.graphml")
    g = _graphml_nx(tmp_path / "a.graphml")
    assert (g.number_of_nodes(), g.number_of_edges()) == (2, 1)
    export_graph(net_from(0, {}, audience=[]), "graphml", tmp_path / "e.graphml")
    assert _graphml_nx(tmp_path / "e.graphml").number_of_nodes() == 0
    ET.parse(tmp_path / "e.graphml")


def test_dot_export(tmp_path):
    net = net_from(3, {(0, 1): 3, (1, 2): 4}, audience=[3, 5, 4], hashtags=("a", 'q"x', "c"))
    export_graph(net, "dot", tmp_path / "g.dot")
    text = (tmp_path / "g.dot").read_text()
    assert text.startswith("graph semantic_network {")
    assert '  n1 [label="q\\"x", audience=5, wdegree=7];' in text
    assert "  n1 -- n2 [weight=4];" in text
    export_graph(net_from(0, {}, audience=[]), "dot", tmp_path / "e.dot")
    assert (tmp_path / "e.dot").read_text() == "graph semantic_network {\n}\n"


def test_export_errors(tmp_path):
    net = net_from(1, {}, audience=[1])
    with pytest.raises(ValueError):
        export_graph(net, "gexf", tmp_path / "x")
    with pytest.raises(OSError):
        export_graph(net, "dot", tmp_path / "missing" / "x.dot")


def test_export_deterministic(tmp_path):
    net = net_from(4, {(2, 3): 1, (0, 1): 2, (1, 3): 5})
    export_graph(net, "graphml", tmp_path / "a")
    export_graph(SemanticNetwork.from_json(net.to_json()), "graphml", tmp_path / "b")
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_pipeline_recovers_planted_tree(small_synth, stopwords):
    from hashsem.text import count_hashtags, select_trendy

    corpus, ledger = small_synth
    idx = select_trendy(count_hashtags(corpus, stopwords))
    inter = build_interactions(corpus, idx, stopwords)
    tree = prune(project(inter), PruningPolicy("mst"))
    got = {tuple(sorted((tree.label(i), tree.label(j)))) for i, j in tree.edges()}
    assert len(got & ledger.tree_edges()) >= 0.8 * len(ledger.tree_edges())
    assert np.all(tree.weight >= 1)
