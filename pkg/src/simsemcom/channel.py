"""Rician block-fading channel from the stack output layer to the receive array."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from simsemcom.geometry import (
    ReceiverGeometry,
    SimGeometry,
    layer_coordinates,
    pairwise_distances,
    receiver_coordinates,
)


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def dbm_to_watts(value_dbm: float) -> float:
    return 10.0 ** (value_dbm / 10.0) / 1000.0


@dataclass(frozen=True)
class ChannelParams:
    rician_K_dB: float = 3.0
    pathloss_ref_C0_dB: float = -35.0
    pathloss_exponent: float = 2.8
    distance: float = 5.0

    def __post_init__(self):
        if not self.pathloss_exponent >= 0:
            raise ValueError("pathloss_exponent must be non-negative")
        if not self.distance > 0:
            raise ValueError("distance must be positive")

    @property
    def rician_K(self) -> float:
        return db_to_linear(self.rician_K_dB)

    @property
    def path_loss(self) -> float:
        return path_loss(self.pathloss_ref_C0_dB, self.pathloss_exponent, self.distance)


@dataclass(frozen=True)
class Channel:
    """One block-fading realization ``H`` of shape ``(M, N)``."""

    H: np.ndarray
    params: ChannelParams
    seed: int | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.H.shape

    def with_matrix(self, H: np.ndarray) -> "Channel":
        return Channel(H, self.params, self.seed)


def path_loss(C0_dB: float, gamma: float, d: float) -> float:
    """Linear power gain ``C0 * d**-gamma`` with ``d`` in meters."""
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    return db_to_linear(C0_dB) * d ** (-gamma)


def los_matrix(rx: ReceiverGeometry, geom: SimGeometry) -> np.ndarray:
    """Unit-modulus direct-path phases from output-layer atoms to antennas."""
    atoms = layer_coordinates(geom, geom.num_layers)
    ants = receiver_coordinates(rx, geom.output_plane_z)
    return np.exp(-2j * np.pi * pairwise_distances(ants, atoms))


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly-symmetric CN(0, variance) samples."""
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _as_rng(rng) -> tuple[np.random.Generator, int | None]:
    if isinstance(rng, np.random.Generator):
        return rng, None
    return np.random.default_rng(rng), rng


def sample_channel(
    params: ChannelParams,
    rx: ReceiverGeometry,
    geom: SimGeometry,
    rng: np.random.Generator | int | None = None,
    los: np.ndarray | None = None,
) -> Channel:
    """Draw ``H = sqrt(Kq/(1+K)) H_los + sqrt(q/(1+K)) H_nlos``.

    ``rng`` may be a generator or an integer seed (recorded on the result).
    A precomputed ``los`` matrix can be passed to skip the geometry step.
    """
    gen, seed = _as_rng(rng)
    if los is None:
        los = los_matrix(rx, geom)
    k = params.rician_K
    q = params.path_loss
    nlos = complex_normal(gen, los.shape)
    if math.isinf(k):
        H = math.sqrt(q) * los
    else:
        H = math.sqrt(k * q / (1 + k)) * los + math.sqrt(q / (1 + k)) * nlos
    return Channel(H, params, seed)


def perturb_channel(
    ch: Channel,
    beta: float,
    rng: np.random.Generator | int | None = None,
    normalized: bool = True,
) -> Channel:
    """Add a CN estimation error of normalized MSE ``beta``.

    With ``normalized`` (default) each entry gets variance
    ``beta * ||H||_F^2 / (M N)`` so that ``E||dH||^2 / ||H||^2 = beta``.
    With ``normalized=False`` each entry gets variance ``beta * ||H||_F^2``.
    """
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    if beta == 0:
        return ch.with_matrix(ch.H.copy())
    gen, _ = _as_rng(rng)
    energy = float(np.sum(np.abs(ch.H) ** 2))
    variance = beta * energy
    if normalized:
        variance /= ch.H.size
    return ch.with_matrix(ch.H + complex_normal(gen, ch.H.shape, variance))
