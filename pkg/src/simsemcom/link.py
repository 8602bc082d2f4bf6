"""PSK over the metasurface aperture: reception, MRC detection, energy decoding."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from simsemcom.channel import Channel, complex_normal, dbm_to_watts
from simsemcom.diffraction import PropagationSet, StackState, forward_field

TWO_PI = 2.0 * math.pi


class DetectionError(ValueError):
    """Raised when the effective gains carry no signal."""


class DegeneratePatternError(ValueError):
    """Raised when a received energy pattern is identically zero."""


@dataclass(frozen=True)
class PskConfig:
    order: int = 4
    tx_power_dBm: float = 40.0
    noise_power_dBm: float = -104.0
    gray: bool = False

    def __post_init__(self):
        if self.order < 2:
            raise ValueError(f"PSK order must be >= 2, got {self.order}")

    @property
    def tx_power(self) -> float:
        """Transmit power in watts."""
        return dbm_to_watts(self.tx_power_dBm)

    @property
    def noise_power(self) -> float:
        """Noise variance in watts."""
        return dbm_to_watts(self.noise_power_dBm)

    @property
    def bits_per_symbol(self) -> int:
        b = self.order.bit_length() - 1
        if 1 << b != self.order:
            raise ValueError(f"bit framing needs a power-of-two order, got {self.order}")
        return b


@dataclass
class ReceivedBlock:
    """Samples ``y[m, t]`` over ``T`` observation slots."""

    samples: np.ndarray
    symbols_sent: np.ndarray

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=complex))
        self.symbols_sent = np.asarray(self.symbols_sent, dtype=int)
        if self.samples.shape[1] < 1:
            raise ValueError("a block needs at least one slot")
        if self.symbols_sent.shape != (self.samples.shape[1],):
            raise ValueError("one symbol per slot is required")

    @property
    def num_slots(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class EnergyPattern:
    values: np.ndarray
    shape: tuple[int, int]

    def image(self) -> np.ndarray:
        return self.values.reshape(self.shape)


def modulate(index, cfg: PskConfig):
    """Constellation phase ``2*pi*index/J`` (natural mapping)."""
    idx = np.asarray(index)
    if np.any((idx < 0) | (idx >= cfg.order)):
        raise ValueError(f"symbol index out of range [0, {cfg.order})")
    phase = TWO_PI * idx / cfg.order
    return float(phase) if phase.ndim == 0 else phase


def constellation_points(symbols, cfg: PskConfig) -> np.ndarray:
    """Unit-modulus points ``exp(j*o)``; quadrant points are exactly 1, j, -1, -j."""
    symbols = np.asarray(symbols, dtype=int)
    pts = np.exp(1j * np.asarray(modulate(symbols, cfg)))
    quarter = (4 * symbols) % cfg.order == 0
    if np.any(quarter):
        k = (4 * symbols[quarter]) // cfg.order % 4
        pts[quarter] = np.array([1, 1j, -1, -1j])[k]
    return pts


def effective_gains(stack: StackState, prop: PropagationSet, ch: Channel) -> np.ndarray:
    """Per-antenna gain ``h_m^T B w1``."""
    return ch.H @ forward_field(stack, prop)


def receive_with_gains(gains, cfg: PskConfig, symbols, rng=None, noiseless=False) -> ReceivedBlock:
    gains = np.asarray(gains, dtype=complex)
    symbols = np.atleast_1d(np.asarray(symbols, dtype=int))
    tx = constellation_points(symbols, cfg)
    y = (math.sqrt(cfg.tx_power) * gains)[:, None] * tx[None, :]
    if not noiseless:
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        y = y + complex_normal(rng, y.shape, cfg.noise_power)
    return ReceivedBlock(y, symbols)


def receive(
    stack: StackState,
    prop: PropagationSet,
    ch: Channel,
    cfg: PskConfig,
    symbols,
    rng=None,
    noiseless: bool = False,
) -> ReceivedBlock:
    """Simulate ``y[m, t] = sqrt(p_s) exp(j o_t) g_m + v[m, t]``."""
    return receive_with_gains(effective_gains(stack, prop, ch), cfg, symbols, rng, noiseless)


def mrc_detect(block: ReceivedBlock, gains, cfg: PskConfig) -> np.ndarray:
    """Maximal-ratio-combined phase estimate per slot, wrapped to [0, 2pi)."""
    gains = np.asarray(gains, dtype=complex)
    power = float(np.sum(np.abs(gains) ** 2))
    if power == 0.0:
        raise DetectionError("all effective gains are zero")
    amp = math.sqrt(cfg.tx_power)
    combined = (np.conj(amp * gains) @ block.samples) / (cfg.tx_power * power)
    return np.mod(np.angle(combined), TWO_PI)


def demodulate(phase, order: int):
    """Nearest constellation index; exact ties go to the lower index."""
    if order < 2:
        raise ValueError("order must be >= 2")
    u = np.mod(np.asarray(phase, dtype=float), TWO_PI) / (TWO_PI / order)
    k = np.floor(u)
    k = np.where(u - k > 0.5, k + 1, k).astype(int) % order
    return int(k) if k.ndim == 0 else k


def energy_pattern(block: ReceivedBlock, shape) -> EnergyPattern:
    """Slot-averaged received energy normalized by its maximum."""
    mean_energy = np.mean(np.abs(block.samples) ** 2, axis=1)
    peak = mean_energy.max()
    if peak == 0.0:
        raise DegeneratePatternError("received energy is zero everywhere")
    shape = tuple(int(s) for s in shape)
    if shape[0] * shape[1] != mean_energy.size:
        raise ValueError(f"shape {shape} does not match {mean_energy.size} antennas")
    return EnergyPattern(mean_energy / peak, shape)


def symbol_error_rate(sent, detected) -> float:
    sent = np.asarray(sent)
    detected = np.asarray(detected)
    if sent.shape != detected.shape or sent.size == 0:
        raise ValueError("sent and detected must be nonempty and equally long")
    return float(np.mean(sent != detected))


def ssim(a, b) -> float:
    """Global-window SSIM of two images with values in [0, 1].

    Images are treated on an 8-bit scale (dynamic range 255) with the
    usual constants K1 = 0.01, K2 = 0.03.
    """
    a = np.asarray(a, dtype=float) * 255.0
    b = np.asarray(b, dtype=float) * 255.0
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    mu_a, mu_b = a.mean(), b.mean()
    var_a, var_b = a.var(), b.var()
    cov = np.mean((a - mu_a) * (b - mu_b))
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(num / den)


# Byte payloads <-> symbol streams


def _gray_decode(g: np.ndarray) -> np.ndarray:
    n = g.copy()
    shift = g >> 1
    while np.any(shift):
        n ^= shift
        shift >>= 1
    return n


def bytes_to_symbols(payload: bytes, cfg: PskConfig) -> tuple[np.ndarray, int]:
    """Split ``payload`` MSB-first into symbol indices; returns (symbols, n_bits).

    The bit stream is zero-padded to a whole number of symbols.
    """
    k = cfg.bits_per_symbol
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))
    n_bits = bits.size
    pad = (-n_bits) % k
    bits = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)]).reshape(-1, k)
    weights = 1 << np.arange(k - 1, -1, -1)
    labels = bits.astype(int) @ weights
    symbols = _gray_decode(labels) if cfg.gray else labels
    return symbols.astype(int), n_bits


def symbols_to_bytes(symbols, n_bits: int, cfg: PskConfig) -> bytes:
    k = cfg.bits_per_symbol
    symbols = np.asarray(symbols, dtype=int)
    labels = symbols ^ (symbols >> 1) if cfg.gray else symbols
    bits = ((labels[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8).ravel()
    return np.packbits(bits[:n_bits]).tobytes()


def bit_error_rate(sent: bytes, received: bytes, n_bits: int) -> float:
    a = np.unpackbits(np.frombuffer(sent, dtype=np.uint8))[:n_bits]
    b = np.unpackbits(np.frombuffer(received, dtype=np.uint8))[:n_bits]
    return float(np.mean(a != b)) if n_bits else 0.0
