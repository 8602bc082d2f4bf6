"""Experiment configuration: a YAML file whose every field has a default.

The defaults reproduce the reference parameter table (28 GHz carrier,
10-wavelength stack, 28x28 half-wavelength receive array, K = 3 dB,
40 dBm transmit power, -104 dBm noise, C0 = -35 dB, exponent 2.8,
2000 epochs at learning rate 0.005).
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from typing import Any

import yaml

from simsemcom.channel import ChannelParams
from simsemcom.geometry import ReceiverGeometry, SimGeometry, wavelength_from_frequency
from simsemcom.link import PskConfig
from simsemcom.optimizer import TrainConfig


class ConfigError(ValueError):
    """Invalid configuration; the message carries ``file:line`` when known."""


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


# section -> key -> (type, default, check, requirement text)
SCHEMA: dict[str, dict[str, tuple]] = {
    "geometry": {
        "carrier_frequency_hz": (float, 28e9, _pos, "must be > 0"),
        "num_layers": (int, 8, lambda v: v >= 2, "must be >= 2 (needs at least two layers)"),
        "atoms_per_layer": (
            int,
            441,
            lambda v: v >= 1 and math.isqrt(v) ** 2 == v,
            "must be a positive perfect square",
        ),
        "thickness_wl": (float, 10.0, _pos, "must be > 0"),
        "atom_area_wl2": (float, 1.0, _pos, "must be > 0"),
        "atom_pitch_wl": (float, 1.0, _pos, "must be > 0"),
        "feed_distance_wl": (float, None, _pos, "must be > 0 (omit to use the layer spacing)"),
    },
    "receiver": {
        "rows": (int, 28, lambda v: v >= 1, "must be >= 1"),
        "cols": (int, 28, lambda v: v >= 1, "must be >= 1"),
        "antenna_spacing_wl": (float, 0.5, _pos, "must be > 0"),
        "link_distance_m": (float, 5.0, _pos, "must be > 0"),
    },
    "channel": {
        "rician_K_dB": (float, 3.0, math.isfinite, "must be finite"),
        "pathloss_ref_C0_dB": (float, -35.0, math.isfinite, "must be finite"),
        "pathloss_exponent": (float, 2.8, _nonneg, "must be >= 0"),
        "normalized_error": (bool, True, None, ""),
    },
    "psk": {
        "order": (int, 4, lambda v: v >= 2, "must be >= 2"),
        "tx_power_dBm": (float, 40.0, math.isfinite, "must be finite"),
        "noise_power_dBm": (float, -104.0, math.isfinite, "must be finite"),
        "gray": (bool, False, None, ""),
    },
    "train": {
        "epochs": (int, 2000, lambda v: v >= 1, "must be >= 1"),
        "learning_rate": (float, 0.005, _pos, "must be > 0"),
        "decay_factor": (float, 0.8, lambda v: 0 < v <= 1, "must lie in (0, 1]"),
        "plateau_window": (int, 50, lambda v: v >= 1, "must be >= 1"),
        "plateau_rel_tol": (float, 1e-4, _nonneg, "must be >= 0"),
        "train_with_noise": (bool, False, None, ""),
    },
    "target": {
        "glyph": (str, "cross", None, ""),
        "path": (str, None, None, ""),
        "edge_threshold": (float, None, lambda v: 0 < v < 1, "must lie in (0, 1)"),
        "allow_empty": (bool, False, None, ""),
    },
}
TOP_LEVEL = {
    "seed": (int, 0, _nonneg, "must be a non-negative integer"),
    "output_dir": (str, "out", None, ""),
}


def _coerce(value, typ):
    if value is None:
        return None
    if typ is bool:
        if isinstance(value, bool):
            return value
        raise TypeError("expected true/false")
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise TypeError("expected an integer")
        return value
    if typ is float:
        if isinstance(value, bool):
            raise TypeError("expected a number")
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                raise TypeError("expected a number") from None
        if not isinstance(value, (int, float)):
            raise TypeError("expected a number")
        return float(value)
    if typ is str:
        if not isinstance(value, str):
            raise TypeError("expected a string")
        return value
    raise TypeError(f"unsupported type {typ}")


def _key_lines(text: str) -> dict[tuple[str, ...], int]:
    """Map key paths to 1-based line numbers using the YAML node tree."""
    lines: dict[tuple[str, ...], int] = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = (*path, str(k.value))
                lines[key] = k.start_mark.line + 1
                walk(v, key)

    if root is not None:
        walk(root, ())
    return lines


@dataclass
class ExperimentConfig:
    sections: dict[str, dict[str, Any]]
    seed: int = 0
    output_dir: str = "out"
    source: str | None = None

    # -- derived domain objects ----------------------------------------------------
    @property
    def wavelength(self) -> float:
        return wavelength_from_frequency(self.sections["geometry"]["carrier_frequency_hz"])

    def sim_geometry(self) -> SimGeometry:
        g = self.sections["geometry"]
        return SimGeometry(
            num_layers=g["num_layers"],
            atoms_per_layer=g["atoms_per_layer"],
            thickness=g["thickness_wl"],
            atom_area=g["atom_area_wl2"],
            atom_pitch=g["atom_pitch_wl"],
            feed_distance=g["feed_distance_wl"],
        )

    def receiver_geometry(self) -> ReceiverGeometry:
        r = self.sections["receiver"]
        return ReceiverGeometry(
            rows=r["rows"],
            cols=r["cols"],
            antenna_spacing=r["antenna_spacing_wl"],
            link_distance=r["link_distance_m"],
            wavelength=self.wavelength,
        )

    def channel_params(self) -> ChannelParams:
        c = self.sections["channel"]
        return ChannelParams(
            rician_K_dB=c["rician_K_dB"],
            pathloss_ref_C0_dB=c["pathloss_ref_C0_dB"],
            pathloss_exponent=c["pathloss_exponent"],
            distance=self.sections["receiver"]["link_distance_m"],
        )

    def psk_config(self) -> PskConfig:
        p = self.sections["psk"]
        return PskConfig(p["order"], p["tx_power_dBm"], p["noise_power_dBm"], p["gray"])

    def train_config(self) -> TrainConfig:
        t = self.sections["train"]
        return TrainConfig(
            epochs=t["epochs"],
            learning_rate=t["learning_rate"],
            decay_factor=t["decay_factor"],
            plateau_window=t["plateau_window"],
            plateau_rel_tol=t["plateau_rel_tol"],
            seed=self.seed,
            train_with_noise=t["train_with_noise"],
        )

    # -- manipulation ----------------------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"seed": self.seed, "output_dir": self.output_dir}
        out.update(copy.deepcopy(self.sections))
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def replace(self, seed: int | None = None, output_dir: str | None = None, **dotted) -> "ExperimentConfig":
        """Copy with overrides given as ``section__key=value``."""
        data = self.to_dict()
        if seed is not None:
            data["seed"] = seed
        if output_dir is not None:
            data["output_dir"] = output_dir
        for name, value in dotted.items():
            section, key = name.split("__", 1)
            data[section][key] = value
        return from_dict(data, source=self.source)


def from_dict(data: dict | None, source: str | None = None, text: str | None = None) -> ExperimentConfig:
    data = {} if data is None else data
    where = source or "<config>"
    lines = _key_lines(text) if text is not None else {}

    def fail(path, msg):
        line = lines.get(path)
        loc = f"{where}:{line}" if line else where
        raise ConfigError(f"{loc}: {'.'.join(path)} {msg}")

    if not isinstance(data, dict):
        raise ConfigError(f"{where}: top level must be a mapping")

    def read(spec, given, path_prefix):
        out = {}
        for key in given:
            if key not in spec:
                fail((*path_prefix, str(key)), f"is not a recognized key (expected one of {sorted(spec)})")
        for key, (typ, default, check, req) in spec.items():
            path = (*path_prefix, key)
            raw = given.get(key, default)
            try:
                value = _coerce(raw, typ)
            except TypeError as exc:
                fail(path, f"{exc}, got {raw!r}")
            if value is not None and check is not None and not check(value):
                fail(path, f"{req}, got {value!r}")
            out[key] = value
        return out

    top_given = {k: v for k, v in data.items() if k not in SCHEMA}
    top = read(TOP_LEVEL, top_given, ())
    sections = {}
    for name, spec in SCHEMA.items():
        given = data.get(name) or {}
        if not isinstance(given, dict):
            fail((name,), "must be a mapping")
        sections[name] = read(spec, given, (name,))

    cfg = ExperimentConfig(sections, seed=top["seed"], output_dir=top["output_dir"], source=source)
    # cross-field checks through the domain constructors
    for section, build in (
        ("geometry", cfg.sim_geometry),
        ("receiver", cfg.receiver_geometry),
        ("channel", cfg.channel_params),
        ("psk", cfg.psk_config),
        ("train", cfg.train_config),
    ):
        try:
            build()
        except ValueError as exc:
            fail((section,), f"is invalid: {exc}")
    return cfg


def default_config() -> ExperimentConfig:
    return from_dict({})


def load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return default_config()
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"{path}:{mark.line + 1}" if mark is not None else path
        raise ConfigError(f"{loc}: malformed YAML: {getattr(exc, 'problem', exc)}") from None
    return from_dict(data, source=path, text=text)
