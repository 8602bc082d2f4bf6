"""Command-line entry point: ``simsemcom {train,sweep,link,pattern}``.

Exit codes: 0 success, 2 configuration error, 3 numeric failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shlex
import sys

import numpy as np

from simsemcom import __version__
from simsemcom.config import ConfigError, ExperimentConfig, load_config
from simsemcom.experiments import (
    SWEEP_AXES,
    SWEEP_HEADER,
    build_scenario,
    run_sweep,
    run_training,
    simulate_link,
)
from simsemcom.io import load_stack, save_stack, write_csv
from simsemcom.link import DegeneratePatternError, DetectionError
from simsemcom.optimizer import DegenerateEnergyError, NumericalError
from simsemcom.patterns import (
    PatternError,
    edge_detect,
    glyph,
    load_pattern,
    read_pgm,
    save_pattern_pgm,
    save_pattern_text,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("simsemcom")


def _resolve(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    return cfg.replace(seed=args.seed, output_dir=args.out)


def _outdir(cfg: ExperimentConfig) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    return cfg.output_dir


def _provenance(cfg: ExperimentConfig, argv) -> list[str]:
    return [
        f"simsemcom {__version__}",
        f"command: simsemcom {shlex.join(argv)}",
        f"seed: {cfg.seed}",
        f"config: {cfg.to_json()}",
    ]


def _write_json(path, data) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_train(args, argv) -> int:
    cfg = _resolve(args)
    out = _outdir(cfg)
    result = run_training(cfg)
    rep = result.report
    sc = result.scenario
    write_csv(
        os.path.join(out, "loss_curve.csv"),
        ("epoch", "loss", "lr"),
        rep.curve_rows(),
        _provenance(cfg, argv),
    )
    save_stack(result.stack, os.path.join(out, "stack.txt"))
    generated = np.clip(result.generated_pattern(), 0.0, 1.0)
    save_pattern_pgm(generated, sc.target.shape, os.path.join(out, "pattern.pgm"))
    save_pattern_pgm(sc.target.bits, sc.target.shape, os.path.join(out, "target.pgm"))
    summary = {
        "final_mse": rep.final_loss,
        "initial_mse": float(rep.loss_history[0]),
        "final_zeta": rep.final_zeta,
        "best_epoch": rep.best_epoch,
        "epochs": rep.epochs,
        "lr_events": [[e, lr] for e, lr in rep.lr_events],
        "wall_time_s": rep.wall_time,
        "seed": cfg.seed,
        "num_layers": sc.geom.num_layers,
        "atoms_per_layer": sc.geom.atoms_per_layer,
        "num_antennas": sc.rx.num_antennas,
    }
    _write_json(os.path.join(out, "summary.json"), summary)
    print(f"final MSE {rep.final_loss:.6g} (zeta {rep.final_zeta:.6g}, {rep.wall_time:.2f}s) -> {out}")
    return EXIT_OK


def _parse_values(text: str, axis: str) -> list:
    try:
        vals = [v.strip() for v in text.split(",") if v.strip()]
        if axis in ("layers", "atoms"):
            return [int(v) for v in vals]
        return [float(v) for v in vals]
    except ValueError:
        raise ConfigError(f"--values: cannot parse {text!r} for axis {axis}") from None


def cmd_sweep(args, argv) -> int:
    cfg = _resolve(args)
    values = _parse_values(args.values, args.axis)
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else [cfg.seed]
    if not values:
        raise ConfigError("--values must list at least one value")
    # validate every cell's config before spending time on training
    for v in values:
        if args.axis == "layers":
            cfg.replace(geometry__num_layers=v)
        elif args.axis == "atoms":
            cfg.replace(geometry__atoms_per_layer=v)
        elif args.axis == "lr":
            cfg.replace(train__learning_rate=v)
        elif v < 0:
            raise ConfigError(f"--values: beta must be >= 0, got {v}")
    out = _outdir(cfg)
    rows = run_sweep(cfg, args.axis, values, seeds, draws=args.draws, workers=args.workers)
    path = os.path.join(out, f"sweep_{args.axis}.csv")
    write_csv(path, SWEEP_HEADER, rows, _provenance(cfg, argv))
    for row in rows:
        print(f"{row[0]}={row[1]} seed={row[2]} final_mse={row[3]:.6g}")
    print(f"-> {path}")
    return EXIT_OK


def cmd_link(args, argv) -> int:
    cfg = _resolve(args)
    stack_path = args.stack or os.path.join(cfg.output_dir, "stack.txt")
    if not os.path.exists(stack_path):
        raise FileNotFoundError(f"stack file not found: {stack_path} (run `simsemcom train` first)")
    stack = load_stack(stack_path)
    sc = build_scenario(cfg)
    if (stack.num_layers, stack.atoms_per_layer) != (sc.geom.num_layers, sc.geom.atoms_per_layer):
        raise ConfigError(
            f"{stack_path}: stack is {stack.num_layers}x{stack.atoms_per_layer}, config expects "
            f"{sc.geom.num_layers}x{sc.geom.atoms_per_layer}"
        )
    try:
        payload = args.payload.encode("ascii")
    except UnicodeEncodeError:
        raise ConfigError("--payload must be ASCII text") from None
    out = _outdir(cfg)
    res = simulate_link(stack, sc, payload, slots=args.slots, seed=cfg.seed, noiseless=args.noiseless)
    write_csv(
        os.path.join(out, "link.csv"),
        ("n_bits", "n_symbols", "ser", "ber", "pattern_mse", "pattern_ssim", "payload_ok"),
        [(res.n_bits, res.n_symbols, res.ser, res.ber, res.pattern_mse, res.pattern_ssim, int(res.recovered == payload))],
        _provenance(cfg, argv),
    )
    save_pattern_pgm(res.pattern, sc.target.shape, os.path.join(out, "received_pattern.pgm"))
    save_pattern_pgm(sc.target.bits, sc.target.shape, os.path.join(out, "target.pgm"))
    _write_json(
        os.path.join(out, "link_report.json"),
        {
            "payload": payload.decode("ascii"),
            "recovered": res.recovered.decode("ascii", errors="replace"),
            "payload_bits": res.n_bits,
            "symbols": res.n_symbols,
            "ser": res.ser,
            "ber": res.ber,
            "pattern_mse": res.pattern_mse,
            "pattern_ssim": res.pattern_ssim,
            "seed": cfg.seed,
        },
    )
    print(f"{res.n_bits} bits in {res.n_symbols} symbols: SER {res.ser:.3g}, BER {res.ber:.3g}")
    print(f"recovered: {res.recovered.decode('ascii', errors='replace')!r}")
    return EXIT_OK


def cmd_pattern(args, argv) -> int:
    if args.action == "edge":
        pattern = edge_detect(read_pgm(args.input), args.threshold)
    elif args.action == "convert":
        pattern = load_pattern(args.input, allow_empty=args.allow_empty)
    else:
        pattern = glyph(args.name, args.rows, args.cols)
    out_dir = os.path.dirname(os.path.abspath(args.output))
    os.makedirs(out_dir, exist_ok=True)
    if args.output.endswith(".txt"):
        save_pattern_text(pattern, args.output)
    else:
        save_pattern_pgm(pattern.bits, pattern.shape, args.output)
    print(f"{pattern.shape[0]}x{pattern.shape[1]} pattern, {int(pattern.bits.sum())} ones -> {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simsemcom", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML experiment config (defaults used when omitted)")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--out", help="output directory (overrides the config)")

    p = sub.add_parser("train", help="optimize the stack for the target pattern")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="final MSE across a parameter axis and seeds")
    common(p)
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.add_argument("--seeds", help="comma-separated seeds (default: the master seed)")
    p.add_argument("--draws", type=int, default=1, help="channel-error draws per beta (median reported)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("link", help="send a text payload through a trained stack")
    common(p)
    p.add_argument("--stack", help="stack file (default: <out>/stack.txt)")
    p.add_argument("--payload", default="A desk with blue surface")
    p.add_argument("--slots", type=int, help="observation slots for the energy pattern")
    p.add_argument("--noiseless", action="store_true")
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("pattern", help="edge-detect, convert or generate target patterns")
    psub = p.add_subparsers(dest="action", required=True)
    e = psub.add_parser("edge", help="Sobel edge map of a grayscale PGM")
    e.add_argument("--input", required=True)
    e.add_argument("--threshold", type=float, default=0.5)
    c = psub.add_parser("convert", help="convert between PGM and 0/1 text")
    c.add_argument("--input", required=True)
    c.add_argument("--allow-empty", action="store_true")
    g = psub.add_parser("glyph", help="render a built-in glyph")
    g.add_argument("--name", default="cross")
    g.add_argument("--rows", type=int, default=28)
    g.add_argument("--cols", type=int, default=28)
    for q in (e, c, g):
        q.add_argument("--output", required=True, help="output path (.pgm or .txt)")
    p.set_defaults(func=cmd_pattern)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args, argv)
    except (ConfigError, PatternError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, DegenerateEnergyError, DegeneratePatternError, DetectionError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
