"""Laplacian, pseudoinverse, and projection-context behavior against
closed-form oracles and Moore-Penrose identities."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from respark.graph import (
    Edge,
    GraphConnectivityError,
    WeightedGraph,
    build_laplacian,
    component_count,
    is_connected,
    lambda_max_bound,
    projection_context,
    projection_matrix,
    pseudo_factorize,
    read_edge_list,
    write_edge_list,
)

K3 = WeightedGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
C4 = WeightedGraph.from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)])
P2 = WeightedGraph.from_edges(2, [(0, 1, 1.0)])


@st.composite
def connected_graphs(draw):
    # spanning tree by random parent choice, then extra edges on top
    n = draw(st.integers(min_value=2, max_value=12))
    edges = []
    for v in range(1, n):
        u = draw(st.integers(min_value=0, max_value=v - 1))
        w = draw(st.floats(min_value=0.25, max_value=4.0))
        edges.append((u, v, w))
    extras = draw(st.integers(min_value=0, max_value=2 * n))
    for _ in range(extras):
        u = draw(st.integers(min_value=0, max_value=n - 1))
        v = draw(st.integers(min_value=0, max_value=n - 1))
        if u == v:
            continue
        w = draw(st.floats(min_value=0.25, max_value=4.0))
        edges.append((u, v, w))
    return WeightedGraph.from_edges(n, edges)


def test_edge_validation():
    with pytest.raises(ValueError):
        WeightedGraph.from_edges(3, [(0, 0, 1.0)])
    with pytest.raises(ValueError):
        WeightedGraph.from_edges(3, [(0, 1, 0.0)])
    with pytest.raises(ValueError):
        WeightedGraph.from_edges(3, [(0, 1, -2.0)])
    with pytest.raises(ValueError):
        WeightedGraph.from_edges(3, [(0, 3, 1.0)])
    with pytest.raises(ValueError):
        WeightedGraph(0, ())


def test_graph_accessors():
    g = WeightedGraph.from_edges(4, [(0, 1, 1.0), (1, 2, 0.5), (2, 3, 2.0)])
    assert g.m == 3
    assert g.edges[1] == Edge(1, 2, 0.5)
    assert np.array_equal(g.weights(), [1.0, 0.5, 2.0])
    assert g.prefix(2).edges == g.edges[:2]
    assert g.prefix(0).m == 0
    # kappa = sqrt(a_max / a_min) = sqrt(2 / 0.5) = 2
    assert g.kappa() == pytest.approx(2.0)
    assert WeightedGraph(3, ()).kappa() == 1.0


def test_single_edge_laplacian():
    assert np.array_equal(build_laplacian(P2), [[1.0, -1.0], [-1.0, 1.0]])


def test_k3_laplacian():
    l = build_laplacian(K3)
    assert np.array_equal(np.diag(l), [2.0, 2.0, 2.0])
    off = l[~np.eye(3, dtype=bool)]
    assert np.array_equal(off, [-1.0] * 6)


def test_duplicate_edges_add():
    g = WeightedGraph.from_edges(2, [(0, 1, 0.5), (0, 1, 0.5)])
    assert np.array_equal(build_laplacian(g), [[1.0, -1.0], [-1.0, 1.0]])


def test_build_laplacian_rejects_empty():
    with pytest.raises(ValueError):
        build_laplacian(WeightedGraph(3, ()))


@settings(max_examples=40, deadline=None)
@given(connected_graphs())
def test_laplacian_row_sums_and_psd(g):
    l = build_laplacian(g)
    a_max = g.weights().max()
    assert np.abs(l.sum(axis=1)).max() <= 1e-12 * a_max * g.n
    assert np.abs(l - l.T).max() == 0.0
    w = np.linalg.eigvalsh(l)
    assert w.min() >= -1e-10 * max(w.max(), 1.0)


def test_single_edge_pinv():
    # [[1,-1],[-1,1]] has nonzero eigenvalue 2 and pseudoinverse L/4
    l = build_laplacian(P2)
    factors = pseudo_factorize(l)
    assert factors.eigenvalues[-1] == pytest.approx(2.0)
    assert np.allclose(factors.pinv(), l / 4.0, atol=1e-14)


def test_k3_spectrum():
    factors = pseudo_factorize(build_laplacian(K3))
    assert np.allclose(factors.eigenvalues, [0.0, 3.0, 3.0], atol=1e-12)
    assert factors.null_count == 1


def test_zero_matrix_factorizes_to_zero():
    factors = pseudo_factorize(np.zeros((3, 3)))
    assert np.array_equal(factors.eigenvalues, np.zeros(3))
    assert np.array_equal(factors.pinv(), np.zeros((3, 3)))


def test_factorize_rejects_bad_input():
    with pytest.raises(ValueError):
        pseudo_factorize(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        pseudo_factorize(np.array([[-1.0, 0.0], [0.0, 1.0]]))


@settings(max_examples=40, deadline=None)
@given(connected_graphs())
def test_moore_penrose_identities(g):
    l = build_laplacian(g)
    plus = pseudo_factorize(l).pinv()
    scale = np.linalg.norm(l)
    assert np.linalg.norm(l @ plus @ l - l) <= 1e-8 * scale
    assert np.linalg.norm(plus @ l @ plus - plus) <= 1e-8 * np.linalg.norm(plus)


@settings(max_examples=40, deadline=None)
@given(connected_graphs())
def test_inv_sqrt_squares_to_pinv(g):
    factors = pseudo_factorize(build_laplacian(g))
    s = factors.inv_sqrt()
    assert np.allclose(s @ s, factors.pinv(), atol=1e-10)


def test_null_count_matches_components():
    two_triangles = WeightedGraph.from_edges(
        6,
        [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)],
    )
    factors = pseudo_factorize(build_laplacian(two_triangles))
    assert factors.null_count == component_count(two_triangles) == 2
    assert not is_connected(two_triangles)


def test_connectivity_basics():
    assert is_connected(P2)
    assert not is_connected(WeightedGraph(2, ()))
    assert component_count(WeightedGraph(3, ())) == 3


def test_projection_for_single_edge():
    # n=2: P = I - ones/2
    ctx = projection_context(P2)
    assert np.allclose(projection_matrix(ctx), [[0.5, -0.5], [-0.5, 0.5]], atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(connected_graphs())
def test_projection_invariants(g):
    ctx = projection_context(g)
    p = projection_matrix(ctx)
    assert np.linalg.norm(p @ p - p, ord=2) < 1e-8
    assert np.trace(p) == pytest.approx(g.n - 1, abs=1e-8)
    assert np.abs(p @ np.ones(g.n)).max() < 1e-8


def test_projection_rejects_disconnected():
    g = WeightedGraph.from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)])
    with pytest.raises(GraphConnectivityError):
        projection_context(g)


@settings(max_examples=30, deadline=None)
@given(connected_graphs())
def test_edge_vector_norms_and_projection_sum(g):
    ctx = projection_context(g)
    vectors = ctx.edge_vectors()
    pairs = [(e.u, e.v) for e in g.edges]
    resist = ctx.factors.resistances(pairs)
    # ||v_e||^2 = a_e r_e, and the v_e v_e' sum rebuilds P
    sq = (vectors * vectors).sum(axis=0)
    assert np.allclose(sq, g.weights() * resist, atol=1e-9)
    assert np.allclose(vectors @ vectors.T, ctx.projection, atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(connected_graphs())
def test_resistance_sum_identity(g):
    factors = pseudo_factorize(build_laplacian(g))
    resist = factors.resistances([(e.u, e.v) for e in g.edges])
    assert (g.weights() * resist).sum() == pytest.approx(g.n - 1, abs=1e-8 * g.n)


@settings(max_examples=30, deadline=None)
@given(connected_graphs(), st.integers(min_value=0, max_value=10**6))
def test_resistance_monotone_under_added_edge(g, pick):
    factors = pseudo_factorize(build_laplacian(g))
    pairs = [(e.u, e.v) for e in g.edges]
    before = factors.resistances(pairs)
    u = pick % g.n
    v = (pick // g.n) % g.n
    if u == v:
        v = (v + 1) % g.n
    bigger = WeightedGraph(g.n, g.edges + (Edge(min(u, v), max(u, v), 1.0),))
    after = pseudo_factorize(build_laplacian(bigger)).resistances(pairs)
    assert np.all(after <= before + 1e-10)


def test_lambda_max_bound_examples():
    assert lambda_max_bound(K3) == pytest.approx(3.0)
    actual_k3 = np.linalg.eigvalsh(build_laplacian(K3)).max()
    assert actual_k3 == pytest.approx(3.0, abs=1e-12)
    p4 = WeightedGraph.from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)])
    # P4 spectrum peaks at 2 + sqrt(2)
    assert np.linalg.eigvalsh(build_laplacian(p4)).max() == pytest.approx(2.0 + np.sqrt(2.0))
    assert lambda_max_bound(p4) == pytest.approx(4.0)
    half = WeightedGraph.from_edges(2, [(0, 1, 0.5)])
    assert lambda_max_bound(half) == pytest.approx(1.0)


@settings(max_examples=50, deadline=None)
@given(connected_graphs())
def test_lambda_max_bound_holds(g):
    actual = np.linalg.eigvalsh(build_laplacian(g)).max()
    assert actual <= lambda_max_bound(g) + 1e-9


def test_edge_list_roundtrip(tmp_path):
    g = WeightedGraph.from_edges(5, [(0, 1, 1.25), (1, 2, 0.5), (2, 3, 1.0)])
    path = tmp_path / "g.edges"
    write_edge_list(g, path, comment="roundtrip fixture")
    back = read_edge_list(path)
    assert back.n == 5  # isolated vertex 4 survives via the n header
    assert back.edges == g.edges


def test_edge_list_without_header(tmp_path):
    path = tmp_path / "bare.edges"
    path.write_text("# comment\n0 1 1.0\n\n2 1 0.5\n")
    g = read_edge_list(path)
    assert g.n == 3
    # endpoint order comes straight from the file
    assert g.edges == (Edge(0, 1, 1.0), Edge(2, 1, 0.5))


def test_edge_list_errors(tmp_path):
    bad = tmp_path / "bad.edges"
    bad.write_text("0 1\n")
    with pytest.raises(ValueError, match="bad.edges:1"):
        read_edge_list(bad)
    worse = tmp_path / "worse.edges"
    worse.write_text("0 1 1.0\n1 2 oops\n")
    with pytest.raises(ValueError, match="worse.edges:2"):
        read_edge_list(worse)
