"""Physical layout of the metasurface stack and the receive array.

Every length handled here is in units of the carrier wavelength, except
``ReceiverGeometry.link_distance`` and ``ReceiverGeometry.wavelength`` which
are metric and converted on access.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


def wavelength_from_frequency(freq_hz: float) -> float:
    """Free-space wavelength in meters for a carrier frequency in Hz."""
    if freq_hz <= 0:
        raise ValueError("carrier frequency must be positive")
    return SPEED_OF_LIGHT / freq_hz


class Point3(NamedTuple):
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class SimGeometry:
    """Metasurface stack layout in wavelength units.

    ``layer_spacing`` is derived from ``thickness`` and ``num_layers`` and
    ``feed_distance`` defaults to the layer spacing when not given.
    """

    num_layers: int
    atoms_per_layer: int
    thickness: float = 10.0
    atom_area: float = 1.0
    atom_pitch: float = 1.0
    feed_distance: float | None = None

    def __post_init__(self):
        if self.num_layers < 2:
            raise ValueError(f"num_layers must be >= 2, got {self.num_layers}")
        side = math.isqrt(self.atoms_per_layer) if self.atoms_per_layer > 0 else 0
        if self.atoms_per_layer < 1 or side * side != self.atoms_per_layer:
            raise ValueError(
                f"atoms_per_layer must be a positive perfect square, got {self.atoms_per_layer}"
            )
        for name in ("thickness", "atom_area", "atom_pitch"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value}")
        if self.feed_distance is None:
            object.__setattr__(self, "feed_distance", self.layer_spacing)
        elif not (self.feed_distance > 0 and math.isfinite(self.feed_distance)):
            raise ValueError(f"feed_distance must be positive, got {self.feed_distance}")

    @property
    def layer_spacing(self) -> float:
        return self.thickness / (self.num_layers - 1)

    @property
    def side(self) -> int:
        return math.isqrt(self.atoms_per_layer)

    @property
    def output_plane_z(self) -> float:
        return (self.num_layers - 1) * self.layer_spacing


@dataclass(frozen=True)
class ReceiverGeometry:
    """Uniform planar receive array.

    ``antenna_spacing`` is in wavelengths; ``link_distance`` and
    ``wavelength`` are in meters.
    """

    rows: int = 28
    cols: int = 28
    antenna_spacing: float = 0.5
    link_distance: float = 5.0
    wavelength: float = SPEED_OF_LIGHT / 28e9

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"receiver grid must be at least 1x1, got {self.rows}x{self.cols}")
        if not self.antenna_spacing > 0:
            raise ValueError("antenna_spacing must be positive")
        if not self.link_distance > 0:
            raise ValueError("link_distance must be positive")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")

    @property
    def num_antennas(self) -> int:
        return self.rows * self.cols

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def link_distance_wl(self) -> float:
        return self.link_distance / self.wavelength


def _centered_grid(rows: int, cols: int, pitch: float, z: float) -> np.ndarray:
    # row-major: index = row * cols + col, row runs along y, col along x
    ys = (np.arange(rows) - (rows - 1) / 2.0) * pitch
    xs = (np.arange(cols) - (cols - 1) / 2.0) * pitch
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    pts = np.empty((rows * cols, 3))
    pts[:, 0] = xx.ravel()
    pts[:, 1] = yy.ravel()
    pts[:, 2] = z
    return pts


def layer_coordinates(geom: SimGeometry, layer: int) -> np.ndarray:
    """Atom positions of a 1-based ``layer`` as an ``(N, 3)`` array.

    Layer 1 sits in the plane z = 0; the transmit antenna is at
    ``(0, 0, -feed_distance)``.
    """
    if not 1 <= layer <= geom.num_layers:
        raise ValueError(f"layer must be in [1, {geom.num_layers}], got {layer}")
    z = (layer - 1) * geom.layer_spacing
    return _centered_grid(geom.side, geom.side, geom.atom_pitch, z)


def transmitter_position(geom: SimGeometry) -> np.ndarray:
    return np.array([[0.0, 0.0, -geom.feed_distance]])


def receiver_coordinates(rx: ReceiverGeometry, output_plane_z: float = 0.0) -> np.ndarray:
    """Antenna positions as an ``(M, 3)`` array, row-major.

    The array plane lies ``rx.link_distance`` (converted to wavelengths)
    beyond ``output_plane_z``. Antenna ``m`` maps to pattern pixel
    ``divmod(m, rx.cols)``.
    """
    z = output_plane_z + rx.link_distance_wl
    return _centered_grid(rx.rows, rx.cols, rx.antenna_spacing, z)


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distances, entry ``(i, j)`` between ``a[i]`` and ``b[j]``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("point lists must be nonempty")
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
