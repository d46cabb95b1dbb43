"""Tests for communication graphs and gossip matrices."""

import os
import tempfile

import numpy as np
import pytest

from datos.sim.netgraph import (
    GraphGenerationError,
    NetworkGraph,
    complete_graph,
    contraction_bound,
    generate_erdos_renyi,
    graph_diameter,
    lazy_mix,
    metropolis_weights,
    path_graph,
    read_edge_list,
    second_eigenvalue,
    star_graph,
    validate_gossip,
    write_edge_list,
)


def test_lazy_mix_hand_example():
    """W = (1-c)I + cW̃ on a two-agent average with c = 1/3."""
    w_tilde = np.array([[0.5, 0.5], [0.5, 0.5]])
    gossip = lazy_mix(w_tilde, 1.0 / 3.0)
    np.testing.assert_allclose(gossip.w, [[5 / 6, 1 / 6], [1 / 6, 5 / 6]], atol=1e-15)


def test_lazy_mix_identity_and_bounds():
    """W̃ = I stays I; c outside (0, 1/2) is rejected."""
    gossip = lazy_mix(np.eye(4), 0.3)
    np.testing.assert_array_equal(gossip.w, np.eye(4))
    with pytest.raises(ValueError, match=r"\(0, 1/2\)"):
        lazy_mix(np.eye(2), 0.5)
    with pytest.raises(ValueError):
        lazy_mix(np.eye(2), 0.0)


def test_erdos_renyi_seeded_and_connected():
    """Same seed gives the same graph; every draw is connected."""
    g1 = generate_erdos_renyi(20, 0.1, seed=7)
    g2 = generate_erdos_renyi(20, 0.1, seed=7)
    assert g1.edges == g2.edges
    assert g1.to_networkx().number_of_nodes() == 20
    assert g1.diameter == graph_diameter(g1)
    for i in range(20):
        assert i not in g1.neighbors(i)


def test_erdos_renyi_redraw_cap():
    """A hopeless edge probability exhausts the redraw cap."""
    with pytest.raises(GraphGenerationError):
        generate_erdos_renyi(30, 0.001, seed=0, max_redraws=3)


def test_metropolis_gossip_is_valid():
    """Metropolis + lazy mixing passes every invariant on seeded graphs."""
    for p in (0.1, 0.5, 0.9):
        for seed in range(10):
            g = generate_erdos_renyi(20, p, seed)
            gossip = lazy_mix(metropolis_weights(g), 1.0 / 3.0)
            assert validate_gossip(gossip, g) == []
            lam_min = np.linalg.eigvalsh(gossip.w).min()
            assert lam_min >= 1.0 - 2.0 * gossip.c - 1e-12


def test_metropolis_weights_on_path():
    """Path 0-1-2: edge weights 1/3, diagonals fill the rows."""
    w = metropolis_weights(path_graph(3))
    expected = np.array([
        [2 / 3, 1 / 3, 0.0],
        [1 / 3, 1 / 3, 1 / 3],
        [0.0, 1 / 3, 2 / 3],
    ])
    np.testing.assert_allclose(w, expected, atol=1e-15)


def test_validate_gossip_reports_violations():
    """A matrix with an entry off the graph is flagged."""
    g = path_graph(3)
    bad = lazy_mix(np.full((3, 3), 1.0 / 3.0), 1.0 / 3.0)
    problems = validate_gossip(bad, g)
    assert any("sparsity" in p for p in problems)


def test_diameters_of_fixed_shapes():
    """Path, star and complete graphs have the textbook diameters."""
    assert path_graph(6).diameter == 5
    assert star_graph(6).diameter == 2
    assert complete_graph(6).diameter == 1
    assert NetworkGraph.from_edges(1, []).diameter == 0


def test_disconnected_edges_rejected():
    """from_edges refuses a graph with two components."""
    with pytest.raises(ValueError, match="not connected"):
        NetworkGraph.from_edges(4, [(0, 1), (2, 3)])


def test_complete_graph_spectrum():
    """Metropolis on K_m is J/m, so λ₂ = 0 and the contraction factor is sqrt(c)."""
    g = complete_graph(5)
    w_tilde = metropolis_weights(g)
    np.testing.assert_allclose(w_tilde, np.full((5, 5), 0.2), atol=1e-15)
    assert second_eigenvalue(w_tilde) == pytest.approx(0.0, abs=1e-12)
    assert contraction_bound(lazy_mix(w_tilde, 0.25)) == pytest.approx(0.5)


def test_edge_list_file():
    """Edge lists written to disk read back as the same graph."""
    g = generate_erdos_renyi(8, 0.5, seed=3)
    with tempfile.TemporaryDirectory() as tmpdir:
        path = os.path.join(tmpdir, "edges.txt")
        write_edge_list(g, path)
        assert read_edge_list(path).edges == g.edges
