import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from obsblock.errors import (DimensionMismatch, InvalidWeight,
                             NotStronglyConnected, ParseError,
                             ValidationError)
from obsblock.generators import random_digraph
from obsblock.netmodel import (NetworkGraph, NetworkModel, SystemMatrices,
                               build_matrices, laplacian, load_network,
                               model_from_dict, model_to_dict, save_network,
                               simulate)

L_BLOCK = np.array([[2, 0, -1, -1],
                    [0, 3, -3, 0],
                    [-1, -1, 5, -3],
                    [-1, 0, -1, 2]], dtype=float)


def test_fixture_matrices(block_mats):
    np.testing.assert_array_equal(block_mats.L, L_BLOCK)
    np.testing.assert_array_equal(block_mats.B, np.eye(4)[:, :3])
    np.testing.assert_array_equal(block_mats.C, np.eye(4)[[2, 3]])


def test_laplacian_convention():
    g = NetworkGraph(2, ((1, 2, 0.5), (2, 1, 2.0)))
    # edge 1 -> 2 with weight 0.5 enters row 2
    np.testing.assert_array_equal(laplacian(g), [[2.0, -2.0], [-0.5, 0.5]])


@given(st.integers(2, 12), st.integers(0, 2**31 - 1))
def test_laplacian_row_sums_vanish(n, seed):
    g = NetworkGraph(n, tuple(random_digraph(n, seed)))
    L = laplacian(g)
    np.testing.assert_allclose(L.sum(axis=1), 0.0, atol=1e-12)
    assert np.all(np.diag(L) > 0)
    off = L - np.diag(np.diag(L))
    assert np.all(off <= 0)
    assert g.is_strongly_connected()


@pytest.mark.parametrize("edges, err", [
    (((1, 2, 0.0),), InvalidWeight),
    (((1, 2, -1.0),), InvalidWeight),
    (((1, 2, float("nan")),), InvalidWeight),
    (((1, 1, 1.0),), ValidationError),
    (((1, 3, 1.0),), ValidationError),
    (((1, 2, 1.0), (1, 2, 2.0)), ValidationError),
])
def test_graph_rejects_bad_edges(edges, err):
    with pytest.raises(err):
        NetworkGraph(2, edges)


def test_model_validation():
    g = NetworkGraph(2, ((1, 2, 1.0), (2, 1, 1.0)))
    with pytest.raises(ValidationError):
        NetworkModel(g, (), (1,))
    with pytest.raises(ValidationError):
        NetworkModel(g, (1, 1), (2,))
    with pytest.raises(ValidationError):
        NetworkModel(g, (3,), (2,))
    with pytest.raises(ValidationError):
        NetworkModel(g, (2,), (1,), accessible={1})


def test_not_strongly_connected():
    g = NetworkGraph(3, ((1, 2, 1.0), (2, 3, 1.0)))
    with pytest.raises(NotStronglyConnected):
        build_matrices(NetworkModel(g, (1,), (3,)))


def test_validation_error_names_field():
    d = {"n": 2, "edges": [{"from": 1, "to": 2, "w": 1},
                           {"from": 2, "to": 1, "w": -2}],
         "actuation": [1], "measurement": [2]}
    with pytest.raises(InvalidWeight) as exc:
        model_from_dict(d)
    assert exc.value.path == "edges[1].w"
    with pytest.raises(ValidationError) as exc:
        model_from_dict({"n": 2, "edges": [], "measurement": [1]})
    assert exc.value.path == "actuation"


def test_undirected_flag_adds_reverse_edges():
    d = {"n": 2, "undirected": True, "edges": [{"from": 1, "to": 2, "w": 3}],
         "actuation": [1], "measurement": [2], "comment": "ignored"}
    m = model_from_dict(d)
    np.testing.assert_array_equal(laplacian(m.graph), [[3, -3], [-3, 3]])


def test_round_trip(tmp_path, regional_model):
    path = tmp_path / "net.json"
    save_network(regional_model, path)
    again = load_network(path)
    assert again == regional_model
    assert model_from_dict(model_to_dict(again)) == regional_model


def test_parse_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{\"n\": 2,")
    with pytest.raises(ParseError):
        load_network(path)


def test_with_nodes(block_model):
    m = block_model.with_nodes(measurement=(4,))
    assert m.measurement == (4,)
    assert m.actuation == block_model.actuation


def test_system_matrices_shapes():
    with pytest.raises(DimensionMismatch):
        SystemMatrices(np.zeros((2, 3)), np.zeros((2, 1)), np.zeros((1, 2)))
    with pytest.raises(DimensionMismatch):
        SystemMatrices(np.eye(2), np.zeros((3, 1)), np.zeros((1, 2)))
    mats = SystemMatrices(np.eye(2), np.ones((2, 1)), np.eye(2)[:1])
    with pytest.raises(DimensionMismatch):
        mats.closed_loop(np.zeros((2, 2)))
    assert not mats.L.flags.writeable


def test_simulate_matches_matrix_exponential(block_mats):
    from scipy.linalg import expm
    F = np.zeros((3, 4))
    x0 = np.array([1.0, -2.0, 0.5, 3.0])
    tr = simulate(block_mats, F, x0, horizon=2.0, dt=1e-3)
    np.testing.assert_allclose(tr.states[-1], expm(-2.0 * block_mats.L) @ x0,
                               atol=1e-9)
    np.testing.assert_allclose(tr.outputs, tr.states[:, [2, 3]])
    assert tr.times[-1] == pytest.approx(2.0)


def test_trace_csv(block_mats):
    tr = simulate(block_mats, np.zeros((3, 4)), np.ones(4), 0.01, 0.005)
    text = tr.to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "t,x1,x2,x3,x4,y1,y2,u1,u2,u3"
    assert len(lines) == 4


def test_simulate_rejects_bad_input(block_mats):
    with pytest.raises(DimensionMismatch):
        simulate(block_mats, np.zeros((3, 4)), np.ones(3), 1.0)
    with pytest.raises(ValueError):
        simulate(block_mats, np.zeros((3, 4)), np.ones(4), 1.0, dt=0)


def test_blocked_trajectory_stays_invisible(block_mats):
    from obsblock.blocker import algorithm1
    d = algorithm1(block_mats, 2)
    x0 = d.vhat_p
    tr = simulate(block_mats, d.gain, x0, horizon=5.0)
    assert np.abs(tr.outputs).max() <= 1e-8 * np.linalg.norm(x0)
    exact = np.exp(-3.0 * tr.times)[:, None] * x0
    assert np.abs(tr.states - exact).max() <= 1e-8


@given(st.integers(2, 8), st.integers(0, 2**31 - 1))
def test_balanced_network_conserves_average(n, seed):
    # an undirected graph has a balanced (symmetric) Laplacian
    edges = random_digraph(n, seed)
    both = {(min(i, k), max(i, k)): w for i, k, w in edges}
    sym = tuple((i, k, w) for (i, k), w in both.items()) + tuple(
        (k, i, w) for (i, k), w in both.items())
    g = NetworkGraph(n, sym)
    mats = build_matrices(NetworkModel(g, (1,), (n,)))
    x0 = np.random.default_rng(seed).standard_normal(n)
    tr = simulate(mats, np.zeros((1, n)), x0, horizon=1.0, dt=1e-2)
    np.testing.assert_allclose(tr.states.sum(axis=1), x0.sum(), atol=1e-10)
