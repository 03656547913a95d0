import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spacefill.graphs import GraphError, GraphSpec, build_graph, random_regular


def test_ring_adjacency():
    g = build_graph(GraphSpec(kind="ring", L=5))
    assert g.V == 5 and g.r == 2
    assert set(g.neighbors_of(0).tolist()) == {1, 4}
    assert set(g.neighbors_of(3).tolist()) == {2, 4}
    g.check_invariants()


def test_torus_adjacency():
    g = build_graph(GraphSpec(kind="torus", d=2, L=3))
    assert g.V == 9 and g.r == 4
    # row-major encoding: (c0, c1) -> 3*c0 + c1
    assert set(g.neighbors_of(0).tolist()) == {3, 6, 1, 2}
    g.check_invariants()


def test_torus_d1_matches_ring():
    ring = build_graph(GraphSpec(kind="ring", L=7))
    torus = build_graph(GraphSpec(kind="torus", d=1, L=7))
    for v in range(7):
        assert set(ring.neighbors_of(v).tolist()) == set(torus.neighbors_of(v).tolist())


def test_complete_graph():
    g = build_graph(GraphSpec(kind="complete", V=4))
    assert g.is_complete and g.r == 3
    nbr = g.neighbor_array()
    assert nbr.shape == (4, 3)
    edges = {frozenset((v, int(w))) for v in range(4) for w in nbr[v]}
    assert len(edges) == 6
    g.check_invariants()


def test_random_regular_on_four_vertices_is_k4():
    # K4 is the only simple 3-regular graph on 4 vertices (exhaustive fact),
    # so any seed must reproduce it
    expected = {v: {0, 1, 2, 3} - {v} for v in range(4)}
    for seed in (1, 2, 99):
        g = random_regular(4, 3, seed)
        assert {v: set(g.neighbors_of(v).tolist()) for v in range(4)} == expected


def test_random_regular_postconditions():
    g = random_regular(10, 3, graph_seed=7)
    assert g.V == 10 and g.r == 3
    g.check_invariants()


def test_random_regular_deterministic():
    a = random_regular(24, 3, graph_seed=5)
    b = random_regular(24, 3, graph_seed=5)
    assert np.array_equal(a.neighbors, b.neighbors)


def test_random_regular_parity_error():
    with pytest.raises(GraphError):
        random_regular(5, 3, graph_seed=1)


@pytest.mark.parametrize("spec", [
    GraphSpec(kind="ring", L=2),
    GraphSpec(kind="torus", d=2, L=2),
    GraphSpec(kind="torus", d=0, L=5),
    GraphSpec(kind="complete", V=1),
    GraphSpec(kind="random_regular", V=6, r=2, graph_seed=1),
    GraphSpec(kind="random_regular", V=6, r=6, graph_seed=1),
    GraphSpec(kind="nonsense"),
])
def test_invalid_specs_rejected(spec):
    with pytest.raises(GraphError):
        build_graph(spec)


def test_spec_from_dict_rejects_unknown_keys():
    with pytest.raises(GraphError, match="unknown key"):
        GraphSpec.from_dict({"kind": "ring", "L": 5, "bogus": 1})
    with pytest.raises(GraphError, match="kind"):
        GraphSpec.from_dict({"L": 5})


def test_spec_roundtrip():
    spec = GraphSpec.from_dict({"kind": "torus", "d": 2, "L": 32})
    assert GraphSpec.from_dict(spec.to_dict()) == spec
    assert spec.vertex_count == 1024


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=3, max_value=40))
def test_ring_invariants(L):
    build_graph(GraphSpec(kind="ring", L=L)).check_invariants()


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=1, max_value=3), st.integers(min_value=3, max_value=6))
def test_torus_invariants(d, L):
    g = build_graph(GraphSpec(kind="torus", d=d, L=L))
    assert g.r == 2 * d
    g.check_invariants()


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_random_regular_invariants(seed):
    for V, r in ((8, 3), (10, 4), (9, 4)):
        random_regular(V, r, graph_seed=seed).check_invariants()
