"""Stack-state text files and CSV output with provenance headers."""

from __future__ import annotations

import csv
from typing import Iterable, Sequence

import numpy as np

from simsemcom.diffraction import StackState

STACK_MAGIC = "# simsemcom stack v1"


def save_stack(stack: StackState, path) -> None:
    """Header ``L N`` then one ``amplitude,phase`` line per atom, layer-major."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(STACK_MAGIC + "\n")
        fh.write(f"{stack.num_layers} {stack.atoms_per_layer}\n")
        for a, p in zip(stack.amplitudes.ravel(), stack.phases.ravel()):
            fh.write(f"{float(a)!r},{float(p)!r}\n")


def load_stack(path) -> StackState:
    with open(path, encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != STACK_MAGIC:
        raise ValueError(f"{path}: not a stack file")
    try:
        num_layers, atoms = (int(v) for v in lines[1].split())
        pairs = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:]])
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{path}: malformed stack file") from exc
    if pairs.shape != (num_layers * atoms, 2):
        raise ValueError(f"{path}: expected {num_layers * atoms} amplitude,phase pairs")
    return StackState(
        pairs[:, 0].reshape(num_layers, atoms), pairs[:, 1].reshape(num_layers, atoms)
    )


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()) -> None:
    """RFC-4180 CSV preceded by ``# `` comment lines; floats use ``repr``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def read_csv(path) -> tuple[list[str], list[list[str]], list[str]]:
    """Return (header, rows, comment lines)."""
    comments = []
    with open(path, newline="", encoding="utf-8") as fh:
        body = []
        for line in fh:
            if line.startswith("# "):
                comments.append(line[2:].rstrip("\r\n"))
            else:
                body.append(line)
    parsed = list(csv.reader(body))
    return parsed[0], parsed[1:], comments
