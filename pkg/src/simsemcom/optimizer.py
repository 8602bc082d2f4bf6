"""Pattern-synthesis optimizer for the metasurface stack.

The objective is the mean squared error between the scaled received energy
``zeta * |y_m|^2`` and a binary target, where ``zeta`` is the closed-form
least-squares scale recomputed from the current energies. Gradients with
respect to every amplitude and phase are obtained by a reverse (adjoint)
sweep through the layer chain.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from simsemcom.channel import Channel, complex_normal
from simsemcom.diffraction import PropagationSet, StackState, upstream_fields
from simsemcom.geometry import SimGeometry
from simsemcom.link import PskConfig
from simsemcom.patterns import TargetPattern

TWO_PI = 2.0 * math.pi
AMPLITUDE_EPS = 1e-6


class DegenerateEnergyError(ValueError):
    """Raised when every received energy is zero, so the scale is undefined."""


class NumericalError(RuntimeError):
    """Raised when training produces a non-finite loss."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 2000
    learning_rate: float = 0.005
    decay_factor: float = 0.8
    plateau_window: int = 50
    plateau_rel_tol: float = 1e-4
    seed: int = 0
    train_with_noise: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0 < self.decay_factor <= 1:
            raise ValueError("decay_factor must lie in (0, 1]")
        if self.plateau_window < 1:
            raise ValueError("plateau_window must be >= 1")
        if self.plateau_rel_tol < 0:
            raise ValueError("plateau_rel_tol must be non-negative")


@dataclass
class TrainReport:
    loss_history: np.ndarray
    lr_history: np.ndarray
    lr_events: list[tuple[int, float]]
    final_loss: float
    final_zeta: float
    best_epoch: int
    wall_time: float
    seed: int = 0

    @property
    def epochs(self) -> int:
        return len(self.loss_history)

    def curve_rows(self):
        """(epoch, loss, lr) triples for the loss-curve CSV."""
        return [
            (i, float(l), float(r))
            for i, (l, r) in enumerate(zip(self.loss_history, self.lr_history))
        ]


def _target_bits(target) -> np.ndarray:
    if isinstance(target, TargetPattern):
        return target.bits
    return np.asarray(target, dtype=float).ravel()


def init_stack(geom: SimGeometry, rng=None) -> StackState:
    """Uniform random start: amplitudes in [0, 1), phases in [0, 2pi)."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    shape = (geom.num_layers, geom.atoms_per_layer)
    amps = rng.random(shape)
    phases = TWO_PI * rng.random(shape)
    phases[phases >= TWO_PI] = 0.0
    return StackState(amps, phases)


def zeta(energies, target) -> float:
    """Least-squares scale ``sum(t * e) / sum(e**2)`` aligning energies to target."""
    e = np.asarray(energies, dtype=float)
    t = _target_bits(target)
    denom = float(np.dot(e, e))
    if denom == 0.0:
        raise DegenerateEnergyError("received energies are all zero")
    return float(np.dot(t, e)) / denom


def pattern_mse(energies, target, scale: float | None = None) -> float:
    """Mean squared error between ``scale * energies`` and the target bits."""
    e = np.asarray(energies, dtype=float)
    t = _target_bits(target)
    if scale is None:
        scale = zeta(e, t)
    r = scale * e - t
    return float(np.dot(r, r)) / e.size


def received_signal(stack, prop, ch: Channel, cfg: PskConfig, noise=None) -> np.ndarray:
    """Training-time signal ``sqrt(p_s) * g`` (symbol fixed to phase 0), plus optional noise."""
    z = stack.coefficients()
    fields = upstream_fields(stack, prop)
    y = math.sqrt(cfg.tx_power) * (ch.H @ (z[-1] * fields[-1]))
    return y if noise is None else y + noise


def loss(stack, prop, ch, cfg, target, noise=None) -> float:
    y = received_signal(stack, prop, ch, cfg, noise)
    return pattern_mse(np.abs(y) ** 2, target)


def _loss_and_gradients(stack, prop, ch, cfg, target, noise=None):
    t = _target_bits(target)
    z = stack.coefficients()
    fields = upstream_fields(stack, prop)
    amp = math.sqrt(cfg.tx_power)
    y = amp * (ch.H @ (z[-1] * fields[-1]))
    if noise is not None:
        y = y + noise
    e = np.abs(y) ** 2
    scale = zeta(e, t)
    resid = scale * e - t
    m = e.size
    value = float(np.dot(resid, resid)) / m

    # dL/de_m with the scale held fixed; de_m = 2 Re(conj(y_m) * amp * dg_m)
    weight = (2.0 * scale / m) * resid
    adj = (2.0 * amp * weight * np.conj(y)) @ ch.H
    grad_a = np.empty_like(stack.amplitudes)
    grad_p = np.empty_like(stack.phases)
    phase_factor = np.exp(1j * stack.phases)
    for l in range(stack.num_layers - 1, -1, -1):
        base = adj * fields[l]
        grad_a[l] = np.real(base * phase_factor[l])
        grad_p[l] = np.real(1j * base * z[l])
        if l > 0:
            adj = (adj * z[l]) @ prop.inter_layer[l - 1]
    return value, scale, grad_a, grad_p


def gradients(stack, prop, ch, cfg, target, noise=None) -> tuple[np.ndarray, np.ndarray]:
    """Partial derivatives of the loss w.r.t. amplitudes and phases, each ``(L, N)``.

    The scale factor enters as a per-evaluation constant. Because it is the
    exact minimizer over the scale, these also equal the derivatives of the
    loss with the scale re-optimized at every point.
    """
    _, _, ga, gp = _loss_and_gradients(stack, prop, ch, cfg, target, noise)
    return ga, gp


def step(stack: StackState, grads, lr: float) -> StackState:
    ga, gp = grads
    return StackState(stack.amplitudes - lr * ga, stack.phases - lr * gp)


def wrap_phase(phases) -> np.ndarray:
    out = np.mod(phases, TWO_PI)
    out[out >= TWO_PI] = 0.0
    return out


def project(stack: StackState, eps: float = AMPLITUDE_EPS) -> StackState:
    """Per-layer min-max rescale of amplitudes onto [0, 1 - eps]; wrap phases.

    A layer whose amplitudes are constant is clamped into [0, 1 - eps]
    instead. Already-normalized layers pass through unchanged.
    """
    top = 1.0 - eps
    amps = stack.amplitudes.copy()
    for l, row in enumerate(amps):
        lo, hi = row.min(), row.max()
        if lo == 0.0 and hi == top:
            continue
        if hi > lo:
            amps[l] = (row - lo) / (hi - lo) * top
        else:
            amps[l] = np.clip(row, 0.0, top)
    return StackState(amps, wrap_phase(stack.phases))


class PlateauDecay:
    """Multiply the learning rate by ``factor`` after ``window`` flat iterations.

    An iteration is flat when the loss changed by less than ``rel_tol``
    relative to the previous one. The counter resets after each decay, so
    the schedule can fire repeatedly.
    """

    def __init__(self, lr: float, factor: float, window: int, rel_tol: float):
        self.lr = lr
        self.factor = factor
        self.window = window
        self.rel_tol = rel_tol
        self._prev = None
        self._flat = 0

    def update(self, value: float) -> bool:
        fired = False
        if self._prev is not None:
            ref = max(abs(self._prev), np.finfo(float).tiny)
            if abs(value - self._prev) / ref < self.rel_tol:
                self._flat += 1
            else:
                self._flat = 0
            if self._flat >= self.window:
                self.lr *= self.factor
                self._flat = 0
                fired = True
        self._prev = value
        return fired


def train(
    geom: SimGeometry,
    prop: PropagationSet,
    ch: Channel,
    cfg: PskConfig,
    target,
    tcfg: TrainConfig,
    init: StackState | None = None,
    callback=None,
) -> tuple[StackState, TrainReport]:
    """Gradient descent with projection and plateau-triggered decay.

    Each epoch evaluates loss and gradients at the current iterate, records
    the loss, takes a step and projects back onto the feasible set. The
    lowest-loss iterate seen (including the final one) is returned.
    """
    rng = np.random.default_rng(tcfg.seed)
    stack = init.copy() if init is not None else init_stack(geom, rng)
    noise_rng = np.random.default_rng([tcfg.seed, 1])
    m = ch.H.shape[0]

    def draw_noise():
        if not tcfg.train_with_noise:
            return None
        return complex_normal(noise_rng, m, cfg.noise_power)

    sched = PlateauDecay(tcfg.learning_rate, tcfg.decay_factor, tcfg.plateau_window, tcfg.plateau_rel_tol)
    losses = np.empty(tcfg.epochs)
    lrs = np.empty(tcfg.epochs)
    events: list[tuple[int, float]] = []
    best = (math.inf, None, 0.0, -1)
    start = time.perf_counter()
    for epoch in range(tcfg.epochs):
        value, scale, ga, gp = _loss_and_gradients(stack, prop, ch, cfg, target, draw_noise())
        if not math.isfinite(value):
            raise NumericalError(f"non-finite loss at epoch {epoch}")
        losses[epoch] = value
        lrs[epoch] = sched.lr
        if value < best[0]:
            best = (value, stack, scale, epoch)
        stack = project(step(stack, (ga, gp), sched.lr))
        if sched.update(value):
            events.append((epoch, sched.lr))
        if callback is not None:
            callback(epoch, value, sched.lr, stack)

    y = received_signal(stack, prop, ch, cfg, draw_noise())
    e = np.abs(y) ** 2
    final_scale = zeta(e, target)
    final_value = pattern_mse(e, target, final_scale)
    if math.isfinite(final_value) and final_value < best[0]:
        best = (final_value, stack, final_scale, tcfg.epochs)
    report = TrainReport(
        loss_history=losses,
        lr_history=lrs,
        lr_events=events,
        final_loss=best[0],
        final_zeta=best[2],
        best_epoch=best[3],
        wall_time=time.perf_counter() - start,
        seed=tcfg.seed,
    )
    return best[1].copy(), report
