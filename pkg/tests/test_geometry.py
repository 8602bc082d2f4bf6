import numpy as np
import pytest

from simsemcom.geometry import (
    ReceiverGeometry,
    SimGeometry,
    layer_coordinates,
    pairwise_distances,
    receiver_coordinates,
    transmitter_position,
    wavelength_from_frequency,
)


def test_layer_spacing_is_thickness_over_gaps():
    g = SimGeometry(num_layers=8, atoms_per_layer=441, thickness=10.0)
    assert g.layer_spacing == 10.0 / 7
    assert g.feed_distance == g.layer_spacing


@pytest.mark.parametrize("kwargs", [
    dict(num_layers=1, atoms_per_layer=4),
    dict(num_layers=2, atoms_per_layer=8),
    dict(num_layers=2, atoms_per_layer=0),
    dict(num_layers=2, atoms_per_layer=4, thickness=0.0),
    dict(num_layers=2, atoms_per_layer=4, atom_pitch=-1.0),
    dict(num_layers=2, atoms_per_layer=4, feed_distance=0.0),
])
def test_invalid_geometry_rejected(kwargs):
    with pytest.raises(ValueError):
        SimGeometry(**kwargs)


def test_single_atom_on_axis():
    pts = layer_coordinates(SimGeometry(3, 1), 2)
    np.testing.assert_array_equal(pts, [[0.0, 0.0, 5.0]])


def test_two_by_two_grid():
    pts = layer_coordinates(SimGeometry(2, 4, atom_pitch=1.0), 1)
    assert sorted(map(tuple, pts[:, :2])) == [(-0.5, -0.5), (-0.5, 0.5), (0.5, -0.5), (0.5, 0.5)]
    assert np.all(pts[:, 2] == 0.0)


def test_three_by_three_corner_and_center():
    pts = layer_coordinates(SimGeometry(2, 9), 2)
    np.testing.assert_array_equal(pts[0], [-1.0, -1.0, 10.0])
    np.testing.assert_array_equal(pts[4], [0.0, 0.0, 10.0])


def test_layer_out_of_range():
    g = SimGeometry(3, 4)
    for bad in (0, 4):
        with pytest.raises(ValueError):
            layer_coordinates(g, bad)


def test_transmitter_behind_first_layer():
    g = SimGeometry(3, 4, feed_distance=2.5)
    np.testing.assert_array_equal(transmitter_position(g), [[0.0, 0.0, -2.5]])


def test_receiver_grid_shapes():
    one = receiver_coordinates(ReceiverGeometry(1, 1), output_plane_z=3.0)
    assert one.shape == (1, 3)
    assert one[0, 0] == 0.0 and one[0, 1] == 0.0
    rx = ReceiverGeometry(2, 2, antenna_spacing=0.5)
    pts = receiver_coordinates(rx)
    np.testing.assert_allclose(np.abs(pts[:, :2]), 0.25)


def test_receiver_aperture_width_28():
    pts = receiver_coordinates(ReceiverGeometry(28, 28, antenna_spacing=0.5))
    assert pts[:, 0].max() - pts[:, 0].min() == pytest.approx(13.5)
    assert pts[:, 1].max() - pts[:, 1].min() == pytest.approx(13.5)


def test_receiver_row_major_order():
    rx = ReceiverGeometry(2, 3, antenna_spacing=1.0)
    pts = receiver_coordinates(rx)
    # index m = row * cols + col: x varies fastest
    assert pts[1, 0] > pts[0, 0] and pts[1, 1] == pts[0, 1]
    assert pts[3, 1] > pts[0, 1] and pts[3, 0] == pts[0, 0]


def test_receiver_plane_distance_in_wavelengths():
    lam = wavelength_from_frequency(28e9)
    rx = ReceiverGeometry(1, 1, link_distance=5.0, wavelength=lam)
    z = receiver_coordinates(rx, output_plane_z=10.0)[0, 2]
    assert z == pytest.approx(10.0 + 5.0 / lam)
    assert lam == pytest.approx(0.0107068735, rel=1e-9)


def test_pairwise_distances_basic():
    assert pairwise_distances([[0, 0, 0]], [[0, 0, 0]])[0, 0] == 0.0
    assert pairwise_distances([[0, 0, 1.25]], [[0, 0, 0]])[0, 0] == 1.25
    assert pairwise_distances([[3, 0, 4]], [[0, 0, 0]])[0, 0] == 5.0


def test_interlayer_distances_bounded_and_mirror_symmetric():
    g = SimGeometry(4, 16)
    a, b = layer_coordinates(g, 1), layer_coordinates(g, 2)
    d = pairwise_distances(b, a)
    assert d.min() >= g.layer_spacing
    mirror = a.copy()
    mirror[:, 0] *= -1
    # mirrored pairs are at identical distances
    idx = [int(np.argmin(np.linalg.norm(a - m, axis=1))) for m in mirror]
    np.testing.assert_allclose(d[np.ix_(idx, idx)], d)


def test_coordinates_reproducible():
    g = SimGeometry(5, 49)
    assert layer_coordinates(g, 3).tobytes() == layer_coordinates(SimGeometry(5, 49), 3).tobytes()
