"""Layer-to-layer diffraction and the end-to-end response of the stack.

Distances are in wavelengths, so the Rayleigh-Sommerfeld coefficient reads

    w = (gap * area / d**2) * (1 / (2*pi*d) - 1j) * exp(1j * 2*pi * d)

In metric units the phase would be ``2*pi*d/lambda``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from simsemcom.geometry import (
    SimGeometry,
    layer_coordinates,
    pairwise_distances,
    transmitter_position,
)

TWO_PI = 2.0 * np.pi


@dataclass
class StackState:
    """Trainable amplitudes in [0, 1) and phases in [0, 2pi), shape ``(L, N)``."""

    amplitudes: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=float)
        self.phases = np.asarray(self.phases, dtype=float)
        if self.amplitudes.ndim != 2 or self.amplitudes.shape != self.phases.shape:
            raise ValueError(
                f"amplitudes {self.amplitudes.shape} and phases {self.phases.shape} "
                "must be equal 2-D shapes (L, N)"
            )

    @property
    def num_layers(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def atoms_per_layer(self) -> int:
        return self.amplitudes.shape[1]

    def coefficients(self) -> np.ndarray:
        """Complex transmission coefficients a * exp(j*phi), shape ``(L, N)``."""
        return self.amplitudes * np.exp(1j * self.phases)

    def is_feasible(self) -> bool:
        a, p = self.amplitudes, self.phases
        return bool(np.all((a >= 0) & (a < 1) & (p >= 0) & (p < TWO_PI)))

    def copy(self) -> "StackState":
        return StackState(self.amplitudes.copy(), self.phases.copy())

    @classmethod
    def uniform(cls, num_layers: int, atoms: int, amplitude: float = 1.0, phase: float = 0.0):
        return cls(
            np.full((num_layers, atoms), float(amplitude)),
            np.full((num_layers, atoms), float(phase)),
        )


@dataclass(frozen=True)
class PropagationSet:
    """Geometry-only propagation operators.

    ``inter_layer[k]`` couples layer ``k + 1`` to layer ``k + 2`` (1-based),
    so there are ``L - 1`` matrices; ``feed`` couples the transmit antenna to
    layer 1.
    """

    inter_layer: tuple[np.ndarray, ...]
    feed: np.ndarray
    geometry: SimGeometry | None = field(default=None, compare=False)

    @property
    def num_layers(self) -> int:
        return len(self.inter_layer) + 1

    @property
    def atoms_per_layer(self) -> int:
        return self.feed.shape[0]


def propagation_coefficient(axial_gap, area, distance):
    """Rayleigh-Sommerfeld coupling between two points (wavelength units).

    Vectorized over ``distance``.
    """
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise ValueError("propagation distance must be positive")
    if axial_gap <= 0 or area <= 0:
        raise ValueError("axial_gap and area must be positive")
    out = (axial_gap * area / distance**2) * (1.0 / (TWO_PI * distance) - 1j) * np.exp(
        1j * TWO_PI * distance
    )
    return out[()] if out.ndim == 0 else out


def build_inter_layer_matrix(geom: SimGeometry, layer: int) -> np.ndarray:
    """Propagation matrix from layer ``layer - 1`` to ``layer`` (``2 <= layer <= L``).

    Entry ``(n, k)`` couples atom ``k`` of the previous layer to atom ``n``.
    """
    if not 2 <= layer <= geom.num_layers:
        raise ValueError(f"layer must be in [2, {geom.num_layers}], got {layer}")
    dst = layer_coordinates(geom, layer)
    src = layer_coordinates(geom, layer - 1)
    return propagation_coefficient(geom.layer_spacing, geom.atom_area, pairwise_distances(dst, src))


def build_feed_vector(geom: SimGeometry) -> np.ndarray:
    dist = pairwise_distances(layer_coordinates(geom, 1), transmitter_position(geom))[:, 0]
    return propagation_coefficient(geom.feed_distance, geom.atom_area, dist)


@functools.lru_cache(maxsize=32)
def build_propagation(geom: SimGeometry) -> PropagationSet:
    """Precompute (and cache per geometry) every operator of the stack."""
    mats = []
    for layer in range(2, geom.num_layers + 1):
        w = build_inter_layer_matrix(geom, layer)
        w.setflags(write=False)
        mats.append(w)
    feed = build_feed_vector(geom)
    feed.setflags(write=False)
    return PropagationSet(tuple(mats), feed, geom)


def _check_dims(stack: StackState, prop: PropagationSet) -> None:
    if stack.num_layers != prop.num_layers or stack.atoms_per_layer != prop.atoms_per_layer:
        raise ValueError(
            f"stack is {stack.num_layers}x{stack.atoms_per_layer} but propagation set is "
            f"{prop.num_layers}x{prop.atoms_per_layer}"
        )


def compose_response(stack: StackState, prop: PropagationSet) -> np.ndarray:
    """End-to-end response ``Z^L W^L ... Z^2 W^2 Z^1`` as an ``(N, N)`` matrix."""
    _check_dims(stack, prop)
    z = stack.coefficients()
    # Z^1 is diagonal: start from diag(z^1) and scale rows on each left multiply
    b = np.diag(z[0])
    for l, w in enumerate(prop.inter_layer, start=1):
        b = z[l][:, None] * (w @ b)
    return b


def upstream_fields(stack: StackState, prop: PropagationSet) -> np.ndarray:
    """Field arriving at each layer before its own transmission, shape ``(L, N)``.

    Row 0 is the feed vector; the stack output is ``z[-1] * rows[-1]``.
    """
    _check_dims(stack, prop)
    z = stack.coefficients()
    fields = np.empty_like(z)
    fields[0] = prop.feed
    for l, w in enumerate(prop.inter_layer, start=1):
        fields[l] = w @ (z[l - 1] * fields[l - 1])
    return fields


def forward_field(stack: StackState, prop: PropagationSet) -> np.ndarray:
    """Stack output ``B @ w1`` evaluated as a vector chain (O(L N^2))."""
    _check_dims(stack, prop)
    z = stack.coefficients()
    x = z[0] * prop.feed
    for l, w in enumerate(prop.inter_layer, start=1):
        x = z[l] * (w @ x)
    return x
