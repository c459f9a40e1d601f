from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cylpos import colops, oracle
from cylpos.colops import Certificate, Double, Join, Shift
from cylpos.cylnet import (
    EXAMPLE_CUT,
    CylNetwork,
    Edge,
    InvalidNetwork,
    boundary_measurements,
    example_network,
    format_network,
    is_perfect,
    parse_network,
    perfectize,
    slice_network,
    validate,
    vertex_layers,
)
from cylpos.errors import FormatError, InputError
from cylpos.exactmat import Matrix

F = Fraction
B = [[1, 2, 1], [1, 2, 1], [0, 1, 1]]


def single(w=1):
    return CylNetwork(("s",), ("t",), {}, (Edge("s", "t", F(w)),))


def hub(a, b, c, d):
    """Two sources into one vertex, two sinks out of it."""
    edges = (Edge("s1", "v", a), Edge("s2", "v", b), Edge("v", "t1", c), Edge("v", "t2", d))
    return CylNetwork(("s1", "s2"), ("t1", "t2"), {"v": F(1, 2)}, edges)


def test_example_network_validates_and_is_perfect():
    N = example_network()
    assert validate(N) is None
    assert (len(N.sources), len(N.sinks), len(N.layers)) == (3, 3, 8)
    assert is_perfect(N)


def test_example_measurements():
    assert boundary_measurements(example_network()).tolist() == B


def test_example_slice():
    cut = slice_network(example_network(), EXAMPLE_CUT)
    assert boundary_measurements(cut.network).tolist() == [[1, 1], [1, 1], [0, 1]]
    assert len(cut.network.sinks) == 2


def test_slice_extremes_of_example():
    N = example_network()
    layers = vertex_layers(N)
    low = slice_network(N, layers[0] / 2).network
    assert boundary_measurements(low) == Matrix.identity(3)
    high = slice_network(N, (layers[-1] + 1) / 2).network
    assert boundary_measurements(high) == boundary_measurements(N)


def test_slice_rejects_bad_cuts():
    N = example_network()
    with pytest.raises(InputError, match="collides"):
        slice_network(N, N.layers["f"])
    for t in (0, 1, F(3, 2)):
        with pytest.raises(InputError):
            slice_network(N, t)
    with pytest.raises(InputError, match="angle"):
        slice_network(hub(1, 1, 1, 1), F(1, 4))


def test_single_edge():
    assert validate(single()) is None
    assert is_perfect(single())
    assert boundary_measurements(single(F(3, 2))).tolist() == [[F(3, 2)]]


def test_two_cycle_is_an_oriented_loop():
    edges = (Edge("s", "a", F(1)), Edge("a", "b", F(1)), Edge("b", "a", F(1)), Edge("b", "t", F(1)))
    N = CylNetwork(("s",), ("t",), {"a": F(1, 3), "b": F(2, 3)}, edges)
    bad = validate(N)
    assert bad.condition == "oriented loop"
    assert set(bad.witness) == {"a", "b"}
    with pytest.raises(InvalidNetwork):
        boundary_measurements(N)


@pytest.mark.parametrize(
    "N,condition",
    [
        (CylNetwork(("s",), ("t",), {}, (Edge("s", "t", F(0)),)), "nonpositive-weight"),
        (CylNetwork(("s",), ("t",), {}, (Edge("s", "x", F(1)),)), "unknown-vertex"),
        (CylNetwork(("s",), ("s",), {}, ()), "duplicate-vertex"),
        (CylNetwork(("s",), ("t",), {"v": F(1)}, (Edge("s", "v", F(1)), Edge("v", "t", F(1)))), "layer-range"),
        (CylNetwork(("s",), ("t",), {"v": F(1, 2)}, (Edge("s", "v", F(1)),)), "interior"),
        (CylNetwork(("s",), ("t",), {}, (Edge("t", "s", F(1)),)), "boundary"),
        (
            CylNetwork(("s",), ("t",), {"a": F(2, 3), "b": F(1, 3)}, (Edge("s", "a", F(1)), Edge("a", "b", F(1)), Edge("b", "t", F(1)))),
            "orientation",
        ),
        (CylNetwork(("s",), ("t",), {}, (Edge("s", "t", F(1)),), {"s": F(1)}), "angle-range"),
    ],
)
def test_validation_conditions(N, condition):
    assert validate(N).condition == condition


def test_isolated_boundary_vertices_are_allowed():
    N = CylNetwork(("s1", "s2"), ("t1", "t2"), {}, (Edge("s1", "t1", F(1)),))
    assert validate(N) is None
    assert boundary_measurements(N).tolist() == [[1, 0], [0, 0]]
    with pytest.raises(InputError, match="isolated"):
        perfectize(N)


def test_degree_four_vertex_is_not_perfect():
    assert not is_perfect(hub(1, 1, 1, 1))


def test_perfectize_splits_a_degree_four_vertex():
    a, b, c, d = F(2), F(3), F(5), F(7)
    N = hub(a, b, c, d)
    P = perfectize(N)
    assert is_perfect(P)
    assert len(P.layers) == 2
    inner = [e for e in P.edges if e.tail in P.layers and e.head in P.layers]
    assert len(inner) == 1 and inner[0].weight == 1
    assert boundary_measurements(P).tolist() == [[a * c, a * d], [b * c, b * d]]
    assert boundary_measurements(P) == boundary_measurements(N)


def test_perfectize_splits_a_branching_source():
    N = CylNetwork(("s",), ("t1", "t2"), {}, (Edge("s", "t1", F(2)), Edge("s", "t2", F(3))))
    P = perfectize(N)
    assert is_perfect(P)
    assert P.degree("s") == 1
    (v,) = P.layers
    assert P.degree(v) == 3
    assert boundary_measurements(P).tolist() == [[2, 3]]


def test_parallel_edges_sum_after_perfectize():
    N = CylNetwork(("s",), ("t",), {}, (Edge("s", "t", F(2)), Edge("s", "t", F(5, 3))))
    P = perfectize(N)
    assert is_perfect(P)
    assert boundary_measurements(P).tolist() == [[F(11, 3)]]


def test_perfectize_leaves_perfect_network_alone():
    N = example_network()
    assert perfectize(N) is N


@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 3), st.integers(0, 6), st.integers(0, 6))
def test_perfectize_preserves_measurements(seed, s, t, k, extra):
    N = oracle.random_network(seed, s, t, k, extra)
    P = perfectize(N)
    assert is_perfect(P)
    assert boundary_measurements(P) == boundary_measurements(N)


@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 3), st.integers(0, 5), st.integers(0, 4))
def test_dp_matches_path_enumeration(seed, s, t, k, extra):
    N = oracle.random_network(seed, s, t, k, extra)
    if len(N.edges) <= 12:
        assert boundary_measurements(N) == oracle.brute_force_paths(N)


@given(st.integers(0, 10**6))
def test_measurements_are_nonnegative(seed):
    N = oracle.random_network(seed, 2, 3, 5, 5)
    assert all(x >= 0 for x in boundary_measurements(N).entries())


def _sweep(N):
    """Measurement matrices of the slices between consecutive vertex layers."""
    layers = [F(0), *vertex_layers(N), F(1)]
    bends = [l for e in N.edges for l, _ in e.via]
    first = min(layers[1:] + bends) / 2
    cuts = [first] + [(a + b) / 2 for a, b in zip(layers, layers[1:])]
    return [boundary_measurements(slice_network(N, t).network) for t in cuts]


def _unit_certificate(seed, m, length):
    c = oracle.random_certificate(m, length, seed)
    ops = [op for op in c.ops if not isinstance(op, colops.Rescale)]
    return Certificate(m, tuple(ops))


def test_sweep_of_example_network_moves_one_operation_at_a_time():
    mats = _sweep(example_network())
    assert mats[0] == Matrix.identity(3)
    assert mats[-1].tolist() == B
    for A, C in zip(mats, mats[1:]):
        assert isinstance(colops.step_between(A, C), (Double, Join, Shift))


@given(st.integers(0, 10**6), st.sampled_from([2, 3]), st.integers(0, 14))
def test_sweep_of_perfect_unit_network(seed, m, length):
    c = _unit_certificate(seed, m, length)
    N = colops.to_network(c)
    assert is_perfect(N)
    mats = _sweep(N)
    assert mats[0] == Matrix.identity(m)
    # sinks are labelled in wire order, the cut counts from angle 0
    M = boundary_measurements(N)
    assert any(colops.rotate(mats[-1], r) == M for r in range(M.n))
    for A, C in zip(mats, mats[1:]):
        step = colops.step_between(A, C)
        assert isinstance(step, (Double, Join, Shift)), (A, C, step)


def test_parse_and_format_round_trip():
    N = example_network()
    text = format_network(N)
    again = parse_network(text)
    assert again.canonical() == N.canonical()
    assert format_network(again) == text


def test_parse_errors():
    with pytest.raises(FormatError):
        parse_network("")
    with pytest.raises(FormatError) as err:
        parse_network("cylinder 1 1\nsource s\nsink t\nedge s t 1/0\n")
    assert err.value.line == 4
    with pytest.raises(FormatError):
        parse_network("cylinder 2 1\nsource s\nsink t\nedge s t 1\n")
    with pytest.raises(FormatError):
        parse_network("cylinder 1 1\nsource s\nsink t\nbogus s t 1\n")


def test_parse_geometry():
    N = parse_network(
        "cylinder 1 1\nsource s 1/4\nsink t 3/4\nvertex v 1/2 0\n"
        "edge s v 2 wind 1 via 1/4:1/2\nedge v t 3\n"
    )
    e = next(e for e in N.edges if e.tail == "s")
    assert e.wind == 1 and e.via == ((F(1, 4), F(1, 2)),)
    assert boundary_measurements(N).tolist() == [[6]]
