import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from obsblock.errors import EmptyKeep, NotACut
from obsblock.generators import random_digraph
from obsblock.netmodel import NetworkGraph, build_matrices, laplacian
from obsblock.topology import (CutPartition, grounded_spectrum_gap,
                               induced_subgraph, min_vertex_cut,
                               partition_blocks, separates)


def _cut_off(graph, removed, sources, sinks):
    G = nx.Graph()
    G.add_nodes_from(range(1, graph.n + 1))
    G.add_edges_from((i, k) for i, k, _ in graph.edges)
    G.remove_nodes_from(removed)
    reach = set()
    for s in sources:
        if s in G:
            reach |= nx.node_connected_component(G, s)
    return not (reach & set(sinks))


def exhaustive_min_cut(graph, sources, sinks, allowed=None):
    pool = range(1, graph.n + 1) if allowed is None else sorted(allowed)
    for size in range(graph.n + 1):
        for removed in itertools.combinations(pool, size):
            if _cut_off(graph, removed, sources, sinks):
                return size
    raise AssertionError("no separating set")


def _random_case(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 10))
    g = NetworkGraph(n, tuple(random_digraph(n, rng, density=0.2)))
    nodes = np.arange(1, n + 1)
    src = tuple(int(v) for v in rng.choice(nodes, int(rng.integers(1, 3)),
                                           replace=False))
    rest = [v for v in nodes if v not in src]
    k = int(rng.integers(1, min(2, len(rest)) + 1))
    snk = tuple(int(v) for v in rng.choice(rest, k, replace=False))
    return g, src, snk


@given(st.integers(0, 2**31 - 1))
def test_min_cut_matches_exhaustive(seed):
    g, src, snk = _random_case(seed)
    cut = min_vertex_cut(g, src, snk)
    assert len(cut.vcut) == exhaustive_min_cut(g, src, snk)
    assert _cut_off(g, cut.vcut, src, snk)
    assert separates(g, cut.vcut, src, snk)
    cut.check(g, src, snk)


@given(st.integers(0, 2**31 - 1))
def test_separates_agrees_with_networkx(seed):
    g, src, snk = _random_case(seed)
    rng = np.random.default_rng(seed + 1)
    removed = [int(v) for v in range(1, g.n + 1) if rng.random() < 0.3]
    assert separates(g, removed, src, snk) == _cut_off(g, removed, src, snk)


def test_cut_prefers_largest_source_side():
    # path 1-2-3 fanning out to sinks 4 and 5: both {2} and {3} are
    # minimum cuts; {3} leaves v1 largest
    g = NetworkGraph(5, ((1, 2, 1), (2, 1, 1), (2, 3, 1), (3, 2, 1),
                         (3, 4, 1), (4, 3, 1), (3, 5, 1), (5, 3, 1)))
    cut = min_vertex_cut(g, (1,), (4, 5))
    assert cut == CutPartition((1, 2), (3,), (4, 5))


def test_cut_may_remove_terminals():
    # 1 and 2 adjacent: one of them must go
    g = NetworkGraph(2, ((1, 2, 1), (2, 1, 1)))
    cut = min_vertex_cut(g, (1,), (2,))
    assert len(cut.vcut) == 1


def test_cut_with_inaccessible_sinks(regional_model):
    m = regional_model
    cut = min_vertex_cut(m.graph, m.actuation, m.measurement, m.accessible)
    assert cut.vcut == (5,)
    assert cut.v1 == (1, 2, 3, 4)
    assert cut.v3 == (6, 7)
    assert cut.v4 == (8, 9, 10)
    cut.check(m.graph, m.actuation, m.measurement, m.accessible)
    assert cut.accessible_region == (1, 2, 3, 4, 5, 6, 7)
    allowed = sorted(m.accessible)
    sinks = set(m.measurement) | {8, 9, 10}
    assert exhaustive_min_cut(m.graph, m.actuation, sinks, allowed) == 1


def test_check_rejects_bad_partitions(block_model):
    g = block_model.graph
    with pytest.raises(NotACut):
        CutPartition((1,), (2,), (3,)).check(g, (1,), (4,))
    with pytest.raises(NotACut):
        CutPartition((1, 2), (3,), (4,)).check(g, (1,), (4,))
    with pytest.raises(NotACut):
        CutPartition((1, 3), (2,), (4,)).check(g, (1,), (3,))


def test_partition_and_reassemble(regional_model):
    mats = build_matrices(regional_model)
    cut = min_vertex_cut(regional_model.graph, regional_model.actuation,
                         regional_model.measurement,
                         regional_model.accessible)
    bl = partition_blocks(mats, cut)
    np.testing.assert_array_equal(bl.reassemble(), mats.L)
    assert not np.any(bl["V1", "V2"])
    assert not np.any(bl["V2", "V1"])
    assert bl.block("V3", "V3").shape == (2, 2)
    with pytest.raises(NotACut):
        partition_blocks(mats, CutPartition((1, 2, 3, 4, 5), (), (6, 7, 8, 9,
                                                                  10)))
    with pytest.raises(NotACut):
        partition_blocks(mats, CutPartition((1,), (2,), (3,)))


def test_induced_block_identity(regional_model):
    mats = build_matrices(regional_model)
    cut = min_vertex_cut(regional_model.graph, regional_model.actuation,
                         regional_model.measurement,
                         regional_model.accessible)
    bl = partition_blocks(mats, cut)
    acc = bl.accessible
    sub = induced_subgraph(regional_model.graph, regional_model.accessible)
    Lt = laplacian(sub.graph)
    # the region block of L is the induced Laplacian plus inflow from V4
    np.testing.assert_allclose(bl.L[np.ix_(acc, acc)], Lt + bl.P1)
    inacc = induced_subgraph(regional_model.graph, cut.v4)
    np.testing.assert_allclose(bl.L_rem_tilde, laplacian(inacc.graph))
    np.testing.assert_allclose(bl.L_reg_rem.sum(axis=1), -np.diag(bl.P1))
    assert bl.L_rem_reg.shape == (3, 7)


def test_example_grounded_block(regional_model):
    # rows of nodes 6 and 7 in the induced accessible Laplacian
    sub = induced_subgraph(regional_model.graph, regional_model.accessible)
    Lt = laplacian(sub.graph)
    np.testing.assert_array_equal(Lt[np.ix_([5, 6], [5, 6])],
                                  np.diag([15.0, 14.0]))
    assert grounded_spectrum_gap(np.diag([15.0, 14.0]), 14.4812)
    assert not grounded_spectrum_gap(np.diag([15.0, 14.0]), 15.0)
    assert grounded_spectrum_gap(np.zeros((0, 0)), 0.0)


def test_induced_subgraph_ids(block_model):
    sub = induced_subgraph(block_model.graph, [4, 3])
    assert sub.ids == (3, 4)
    assert set(sub.graph.edges) == {(1, 2, 1.0), (2, 1, 3.0)}
    with pytest.raises(EmptyKeep):
        induced_subgraph(block_model.graph, [])
