import numpy as np
import pytest

from diergm import (
    AttributeMismatchError,
    AttributeTable,
    DirectedGraph,
    DuplicateEdgeError,
    MalformedRowError,
    NodeRangeError,
    SelfLoopError,
    ei_index,
    load_attributes,
    load_edgelist,
    new_graph,
    write_attributes,
    write_edgelist,
)

from conftest import random_attrs, random_graph


def test_new_graph_empty():
    g = new_graph(3)
    assert g.n == 3
    assert g.edge_count == 0
    assert all(g.in_degree(v) == 0 and g.out_degree(v) == 0 for v in range(3))


def test_single_node_graph_is_legal():
    g = DirectedGraph(1)
    assert g.edge_count == 0
    assert g.density() == 0.0


def test_zero_nodes_rejected():
    with pytest.raises(ValueError):
        DirectedGraph(0)


def test_dyad_count_for_22_nodes():
    assert DirectedGraph(22).n * 21 == 462


def test_toggle_basic():
    g = DirectedGraph(3)
    assert g.toggle_edge(0, 1) == 1
    assert g.edge_count == 1
    assert g.in_degree(1) == 1
    assert g.out_degree(0) == 1
    assert g.has_edge(0, 1)
    assert not g.has_edge(1, 0)


def test_toggle_is_involution():
    g = DirectedGraph(4)
    g.toggle_edge(2, 3)
    before = g.copy()
    g.toggle_edge(0, 1)
    g.toggle_edge(0, 1)
    assert g == before


def test_self_loop_rejected():
    g = DirectedGraph(3)
    with pytest.raises(SelfLoopError):
        g.toggle_edge(2, 2)


def test_out_of_range_rejected():
    g = DirectedGraph(3)
    with pytest.raises(NodeRangeError):
        g.toggle_edge(0, 3)
    with pytest.raises(NodeRangeError):
        g.toggle_edge(-1, 0)


def test_degree_caches_match_recounts_after_random_toggles():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(2, 31))
        g = DirectedGraph(n)
        for _ in range(200):
            i = int(rng.integers(n))
            j = int(rng.integers(n - 1))
            if j >= i:
                j += 1
            g.toggle_edge(i, j)
        edges = set(g.edges())
        assert g.edge_count == len(edges)
        for v in range(n):
            assert g.out_degree(v) == sum(1 for (a, _) in edges if a == v)
            assert g.in_degree(v) == sum(1 for (_, b) in edges if b == v)
        assert len(g._edge_index) == len(edges)
        for pos, e in enumerate(g._edges):
            assert g._edge_index[e] == pos


def test_copy_is_independent():
    g = DirectedGraph(3)
    g.toggle_edge(0, 1)
    h = g.copy()
    h.toggle_edge(1, 2)
    assert g.edge_count == 1
    assert h.edge_count == 2


def test_attribute_table_validation():
    with pytest.raises(ValueError):
        AttributeTable([])
    with pytest.raises(ValueError):
        AttributeTable([0, 2])  # gap in codes
    with pytest.raises(ValueError):
        AttributeTable([0, 1], ["only"])
    t = AttributeTable([0, 1, 0], ["girl", "boy"])
    assert t.n == 3
    assert t.n_groups == 2
    assert t.code_of("boy") == 1
    assert t.label(0) == "girl"


def test_with_group_keeps_universe():
    t = AttributeTable([0, 1], ["a", "b"])
    t2 = t.with_group(1, 0)
    assert t2.groups == (0, 0)
    assert t2.n_groups == 2  # group "b" is now empty but still defined
    assert t.groups == (0, 1)


def test_edgelist_roundtrip_file(tmp_path):
    g = DirectedGraph(3)
    g.toggle_edge(0, 1)
    g.toggle_edge(1, 2)
    path = tmp_path / "edges.csv"
    write_edgelist(g, path)
    assert load_edgelist(path, 3) == g


def test_roundtrip_random_graphs(tmp_path):
    rng = np.random.default_rng(11)
    for k in range(10):
        g = random_graph(rng, 20, density=rng.uniform(0.05, 0.5))
        attrs = random_attrs(rng, 20)
        epath = tmp_path / f"e{k}.csv"
        apath = tmp_path / f"a{k}.csv"
        write_edgelist(g, epath)
        write_attributes(attrs, apath)
        assert load_edgelist(epath, 20) == g
        loaded = load_attributes(apath)
        # codes may be renumbered by sorted labels; group partitions must agree
        assert loaded.n == attrs.n
        for u in range(20):
            for v in range(20):
                same_before = attrs.group(u) == attrs.group(v)
                same_after = loaded.group(u) == loaded.group(v)
                assert same_before == same_after


def test_load_edgelist_errors(tmp_path):
    def write(text):
        p = tmp_path / "bad.csv"
        p.write_text(text)
        return p

    with pytest.raises(MalformedRowError):
        load_edgelist(write("a,b\n0,1\n"), 3)
    with pytest.raises(MalformedRowError):
        load_edgelist(write("from,to\n0\n"), 3)
    with pytest.raises(MalformedRowError):
        load_edgelist(write("from,to\nzero,1\n"), 3)
    with pytest.raises(SelfLoopError):
        load_edgelist(write("from,to\n1,1\n"), 3)
    with pytest.raises(NodeRangeError):
        load_edgelist(write("from,to\n0,3\n"), 3)
    with pytest.raises(DuplicateEdgeError):
        load_edgelist(write("from,to\n0,1\n0,1\n"), 3)


def test_load_attributes_errors(tmp_path):
    def write(text):
        p = tmp_path / "bad.csv"
        p.write_text(text)
        return p

    with pytest.raises(MalformedRowError):
        load_attributes(write("id,colour\n0,x\n"))
    with pytest.raises(MalformedRowError):
        load_attributes(write("id,group\n0,x\n0,y\n"))
    with pytest.raises(NodeRangeError):
        load_attributes(write("id,group\n0,x\n5,y\n"))  # id beyond row count


def test_node_count_mismatch_is_distinct_error():
    g = DirectedGraph(4)
    g.toggle_edge(0, 1)
    attrs = AttributeTable([0, 1, 0])
    with pytest.raises(AttributeMismatchError):
        ei_index(g, attrs)
