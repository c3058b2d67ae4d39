import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tswitch.errors import SingularTopology, ValidationError
from tswitch.network import (
    Bus,
    DemandProfile,
    Generator,
    Line,
    Network,
    Topology,
    angle_differences,
    connectivity,
    incidence_matrix,
    reduced_admittance,
)

from conftest import random_connected, triangle


def test_two_bus_incidence_is_plus_one():
    net = Network([Bus(1), Bus(2, True)], [Line(1, 1, 2, 10.0, 100.0)])
    np.testing.assert_array_equal(incidence_matrix(net), [[1.0]])


def test_triangle_incidence_shape_and_column_sums():
    psi = incidence_matrix(triangle(ref=3))
    assert psi.shape == (2, 3)
    assert set(psi.sum(axis=0)) <= {-1.0, 0.0, 1.0}


def test_random_incidence_columns(rng):
    net = random_connected(rng, 6, 3)
    psi = incidence_matrix(net)
    assert psi.shape == (5, 8)
    for col in psi.T:
        assert np.count_nonzero(col) <= 2
        assert col.sum() in (-1.0, 0.0, 1.0)


def test_two_bus_admittance():
    net = Network([Bus(1), Bus(2, True)], [Line(1, 1, 2, 10.0, 100.0)])
    np.testing.assert_allclose(reduced_admittance(net, net.all_closed()), [[10.0]])


def test_triangle_admittance_by_hand():
    net = triangle(ref=3)
    np.testing.assert_allclose(reduced_admittance(net, net.all_closed()), [[20, -10], [-10, 20]])


def test_triangle_one_open_still_positive_definite():
    net = triangle()
    Y = reduced_admittance(net, Topology((1, 0, 1)))
    assert np.all(np.linalg.eigvalsh(Y) > 0)


def test_islanded_topology_raises_with_partition():
    net = triangle(ref=3)
    with pytest.raises(SingularTopology) as exc:
        reduced_admittance(net, Topology((1, 0, 0)))
    assert exc.value.components == [[1, 2], [3]]


def test_connectivity_cases():
    net = triangle()
    assert connectivity(net, net.all_closed()) == [[1, 2, 3]]
    assert connectivity(net, Topology((0, 0, 0))) == [[1], [2], [3]]


def test_bridge_between_clusters_splits_in_two():
    # two triangles joined by line 7
    buses = [Bus(i, i == 1) for i in range(1, 7)]
    lines = [
        Line(1, 1, 2, 5, 10), Line(2, 2, 3, 5, 10), Line(3, 1, 3, 5, 10),
        Line(4, 4, 5, 5, 10), Line(5, 5, 6, 5, 10), Line(6, 4, 6, 5, 10),
        Line(7, 3, 4, 5, 10),
    ]
    net = Network(buses, lines)
    comps = connectivity(net, net.all_closed().with_status(6, 0))
    assert comps == [[1, 2, 3], [4, 5, 6]]


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 9), extra=st.integers(0, 6))
def test_psi_transpose_gives_angle_differences(seed, n, extra):
    rng = np.random.default_rng(seed)
    net = random_connected(rng, n, extra)
    theta = rng.normal(size=n)
    theta[net.ref_index] = 0.0
    via_psi = incidence_matrix(net).T @ theta[net.non_ref]
    np.testing.assert_allclose(via_psi, angle_differences(net, theta), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 9), extra=st.integers(1, 6))
def test_admittance_symmetric_pd_and_rank_one_update(seed, n, extra):
    rng = np.random.default_rng(seed)
    net = random_connected(rng, n, extra)
    Y = reduced_admittance(net, net.all_closed())
    assert np.max(np.abs(Y - Y.T)) <= 1e-12
    assert np.all(np.linalg.eigvalsh(Y) > 0)
    psi = incidence_matrix(net)
    for l in range(net.n_lines):
        topo = net.all_closed().with_status(l, 0)
        if len(connectivity(net, topo)) > 1:
            continue
        expected = Y - net.susceptance[l] * np.outer(psi[:, l], psi[:, l])
        np.testing.assert_allclose(reduced_admittance(net, topo), expected, atol=1e-12)


def test_validation_errors():
    with pytest.raises(ValidationError):
        Network([Bus(1), Bus(2)], [Line(1, 1, 2, 1.0, 1.0)])
    with pytest.raises(ValidationError):
        Network([Bus(1, True), Bus(1)], [])
    with pytest.raises(ValidationError):
        Network([Bus(1, True), Bus(2)], [Line(1, 1, 3, 1.0, 1.0)])
    with pytest.raises(ValidationError):
        Line(1, 1, 1, 1.0, 1.0)
    with pytest.raises(ValidationError):
        Line(1, 1, 2, -1.0, 1.0)
    with pytest.raises(ValidationError):
        Generator(1, 1, [1.0], [5.0], [2.0])
    with pytest.raises(ValidationError):
        DemandProfile([[1.0, -2.0]], [1.0, 1.0])
    with pytest.raises(ValidationError):
        Topology((1, 2))


def test_line_defaults_symmetric_limit():
    assert Line(1, 1, 2, 1.0, 40.0).f_min == -40.0
