"""End-to-end experiment drivers shared by the CLI and the acceptance suite."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from simsemcom.channel import Channel, perturb_channel, sample_channel
from simsemcom.config import ExperimentConfig
from simsemcom.diffraction import PropagationSet, StackState, build_propagation
from simsemcom.geometry import ReceiverGeometry, SimGeometry
from simsemcom.link import (
    PskConfig,
    bit_error_rate,
    bytes_to_symbols,
    demodulate,
    effective_gains,
    energy_pattern,
    mrc_detect,
    receive_with_gains,
    ssim,
    symbol_error_rate,
    symbols_to_bytes,
)
from simsemcom.optimizer import TrainReport, pattern_mse, received_signal, train, zeta
from simsemcom.patterns import TargetPattern, edge_detect, glyph, load_pattern, read_pgm

log = logging.getLogger(__name__)

# Sub-stream tags for np.random.default_rng([seed, tag, ...])
CHANNEL_STREAM = 0
LINK_NOISE_STREAM = 2
PERTURB_STREAM = 3


@dataclass
class Scenario:
    geom: SimGeometry
    rx: ReceiverGeometry
    prop: PropagationSet
    channel: Channel
    psk: PskConfig
    target: TargetPattern


def resolve_target(cfg: ExperimentConfig) -> TargetPattern:
    t = cfg.sections["target"]
    shape = (cfg.sections["receiver"]["rows"], cfg.sections["receiver"]["cols"])
    if t["path"]:
        if t["edge_threshold"] is not None:
            pattern = edge_detect(read_pgm(t["path"]), t["edge_threshold"])
            if pattern.shape != shape:
                raise ValueError(f"{t['path']}: edge map is {pattern.shape}, expected {shape}")
            return pattern
        return load_pattern(t["path"], shape, allow_empty=t["allow_empty"])
    return glyph(t["glyph"], *shape)


def channel_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, CHANNEL_STREAM])


def build_scenario(cfg: ExperimentConfig) -> Scenario:
    geom = cfg.sim_geometry()
    rx = cfg.receiver_geometry()
    prop = build_propagation(geom)
    ch = sample_channel(cfg.channel_params(), rx, geom, channel_rng(cfg.seed))
    return Scenario(geom, rx, prop, ch, cfg.psk_config(), resolve_target(cfg))


@dataclass
class TrainResult:
    scenario: Scenario
    stack: StackState
    report: TrainReport

    def generated_pattern(self) -> np.ndarray:
        """Scaled energy ``zeta * |y|^2`` of the trained stack."""
        return scaled_energy(self.stack, self.scenario)


def scaled_energy(stack: StackState, sc: Scenario, channel: Channel | None = None) -> np.ndarray:
    ch = sc.channel if channel is None else channel
    e = np.abs(received_signal(stack, sc.prop, ch, sc.psk)) ** 2
    return zeta(e, sc.target) * e


def run_training(cfg: ExperimentConfig, callback=None) -> TrainResult:
    sc = build_scenario(cfg)
    stack, report = train(sc.geom, sc.prop, sc.channel, sc.psk, sc.target, cfg.train_config(), callback=callback)
    log.info("trained seed=%d final_loss=%.6g in %.2fs", cfg.seed, report.final_loss, report.wall_time)
    return TrainResult(sc, stack, report)


def evaluation_mse(stack: StackState, sc: Scenario, channel: Channel | None = None) -> float:
    """Noiseless pattern MSE of ``stack`` as seen through ``channel``."""
    ch = sc.channel if channel is None else channel
    e = np.abs(received_signal(stack, sc.prop, ch, sc.psk)) ** 2
    return pattern_mse(e, sc.target)


def robustness_mses(
    stack: StackState,
    sc: Scenario,
    beta: float,
    draws: int,
    seed: int,
    normalized: bool = True,
) -> np.ndarray:
    """Evaluation MSE under ``draws`` independent channel-estimate errors of size ``beta``."""
    out = np.empty(draws)
    for i in range(draws):
        rng = np.random.default_rng([seed, PERTURB_STREAM, i])
        ch = perturb_channel(sc.channel, beta, rng, normalized=normalized)
        out[i] = evaluation_mse(stack, sc, ch)
    return out


@dataclass
class LinkResult:
    payload: bytes
    recovered: bytes
    n_bits: int
    n_symbols: int
    ser: float
    ber: float
    pattern: np.ndarray
    pattern_mse: float
    pattern_ssim: float


def simulate_link(
    stack: StackState,
    sc: Scenario,
    payload: bytes,
    slots: int | None = None,
    seed: int = 0,
    noiseless: bool = False,
) -> LinkResult:
    """Send ``payload`` over PSK, detect by MRC and decode the energy pattern.

    The energy pattern averages ``slots`` observation slots (default: one
    per payload symbol); the payload symbol stream is cycled when more slots
    are requested than symbols exist.
    """
    symbols, n_bits = bytes_to_symbols(payload, sc.psk)
    n_sym = symbols.size
    total = n_sym if slots is None else max(slots, 1)
    stream = symbols if total == n_sym else np.resize(symbols, max(total, n_sym))
    gains = effective_gains(stack, sc.prop, sc.channel)
    rng = np.random.default_rng([seed, LINK_NOISE_STREAM])
    block = receive_with_gains(gains, sc.psk, stream, rng, noiseless=noiseless)

    detected = demodulate(mrc_detect(block, gains, sc.psk), sc.psk.order)
    payload_det = detected[:n_sym]
    recovered = symbols_to_bytes(payload_det, n_bits, sc.psk)

    obs = type(block)(block.samples[:, :total], block.symbols_sent[:total])
    pattern = energy_pattern(obs, sc.target.shape)
    return LinkResult(
        payload=payload,
        recovered=recovered,
        n_bits=n_bits,
        n_symbols=n_sym,
        ser=symbol_error_rate(symbols, payload_det) if n_sym else 0.0,
        ber=bit_error_rate(payload, recovered, n_bits),
        pattern=pattern.values,
        pattern_mse=pattern_mse(pattern.values, sc.target),
        pattern_ssim=ssim(pattern.image(), sc.target.image()),
    )


SWEEP_AXES = ("layers", "atoms", "lr", "beta")
SWEEP_HEADER = ("axis", "value", "seed", "final_mse", "train_loss", "epochs", "lr_events")


def _cell_config(cfg: ExperimentConfig, axis: str, value, seed: int) -> ExperimentConfig:
    if axis == "layers":
        return cfg.replace(seed=seed, geometry__num_layers=int(value))
    if axis == "atoms":
        return cfg.replace(seed=seed, geometry__atoms_per_layer=int(value))
    if axis == "lr":
        return cfg.replace(seed=seed, train__learning_rate=float(value))
    if axis == "beta":
        return cfg.replace(seed=seed)
    raise ValueError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")


def sweep_cell(cfg: ExperimentConfig, axis: str, values, seed: int, draws: int = 1) -> list[tuple]:
    """Rows for one sweep cell.

    For ``layers``/``atoms``/``lr`` a cell is one (value, seed) training run
    and ``values`` holds that single value. For ``beta`` a cell trains once
    on the clean channel for ``seed`` and evaluates every value in
    ``values`` under ``draws`` channel-error draws (median reported).
    """
    if axis == "beta":
        result = run_training(_cell_config(cfg, axis, None, seed))
        rep = result.report
        rows = []
        for beta in values:
            mses = robustness_mses(
                result.stack,
                result.scenario,
                float(beta),
                draws,
                seed,
                normalized=cfg.sections["channel"]["normalized_error"],
            )
            rows.append((axis, beta, seed, float(np.median(mses)), rep.final_loss, rep.epochs, len(rep.lr_events)))
        return rows
    (value,) = values
    result = run_training(_cell_config(cfg, axis, value, seed))
    rep = result.report
    if not math.isfinite(rep.final_loss):
        raise ArithmeticError("non-finite MSE")
    return [(axis, value, seed, rep.final_loss, rep.final_loss, rep.epochs, len(rep.lr_events))]


def _run_cell(args):
    return sweep_cell(*args)


def run_sweep(cfg: ExperimentConfig, axis: str, values, seeds, draws: int = 1, workers: int = 1) -> list[tuple]:
    """Cross-product sweep; rows come back in (value, seed) order regardless of workers."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    if not values or not seeds:
        raise ValueError("sweep needs at least one value and one seed")
    if axis == "beta":
        cells = [(cfg, axis, list(values), s, draws) for s in seeds]
    else:
        cells = [(cfg, axis, [v], s, draws) for v in values for s in seeds]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_cell, cells))
    else:
        chunks = [_run_cell(c) for c in cells]
    rows = [row for chunk in chunks for row in chunk]
    if axis == "beta":
        order = {v: i for i, v in enumerate(values)}
        rows.sort(key=lambda r: (order[r[1]], seeds.index(r[2])))
    return rows
