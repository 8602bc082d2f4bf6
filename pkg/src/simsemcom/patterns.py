"""Binary target patterns: file I/O, built-in glyphs and edge extraction."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np


class PatternError(ValueError):
    """Malformed, mismatched or empty pattern input."""


@dataclass(frozen=True)
class TargetPattern:
    """Row-major {0, 1} vector of length ``rows * cols``.

    Pixel ``(r, c)`` corresponds to receive antenna ``r * cols + c``.
    """

    bits: np.ndarray
    shape: tuple[int, int]
    allow_empty: bool = False

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=float).ravel()
        shape = (int(self.shape[0]), int(self.shape[1]))
        if bits.size != shape[0] * shape[1]:
            raise PatternError(f"{bits.size} bits do not fill shape {shape}")
        if not np.all((bits == 0) | (bits == 1)):
            raise PatternError("pattern bits must be 0 or 1")
        if not self.allow_empty and not bits.any():
            raise PatternError("pattern is all zero")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "shape", shape)

    @property
    def size(self) -> int:
        return self.bits.size

    def image(self) -> np.ndarray:
        return self.bits.reshape(self.shape)

    @classmethod
    def from_image(cls, image, allow_empty: bool = False) -> "TargetPattern":
        image = np.asarray(image)
        return cls(image.ravel(), image.shape, allow_empty)


# -- PGM ---------------------------------------------------------------------


def _pgm_tokens(data: bytes, count: int, start: int = 0) -> tuple[list[bytes], int]:
    tokens = []
    i = start
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < n and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
            j += 1
        if j == i:
            raise PatternError("truncated PGM header")
        tokens.append(data[i:j])
        i = j
    return tokens, i


def read_pgm(path) -> np.ndarray:
    """Read a P2 or P5 PGM into a float image scaled to [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise PatternError(f"{path}: not a P2/P5 PGM file")
    try:
        (w, h, maxval), pos = _pgm_tokens(data, 3, 2)
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise PatternError(f"{path}: bad PGM header") from exc
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise PatternError(f"{path}: bad PGM dimensions or maxval")
    count = width * height
    if magic == b"P2":
        raw, _ = _pgm_tokens(data, count, pos)
        try:
            pixels = np.array([int(t) for t in raw], dtype=float)
        except ValueError as exc:
            raise PatternError(f"{path}: non-integer pixel in P2 body") from exc
    else:
        body = data[pos + 1 :]
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        if len(body) < count * dtype.itemsize:
            raise PatternError(f"{path}: truncated P5 body")
        pixels = np.frombuffer(body[: count * dtype.itemsize], dtype=dtype).astype(float)
    if np.any(pixels > maxval) or np.any(pixels < 0):
        raise PatternError(f"{path}: pixel exceeds maxval")
    return pixels.reshape(height, width) / maxval


def write_pgm(image, path) -> None:
    """Write an image with values in [0, 1] as an 8-bit binary PGM."""
    image = np.asarray(image, dtype=float)
    levels = np.floor(255.0 * np.clip(image, 0.0, 1.0) + 0.5).astype(np.uint8)
    h, w = levels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(levels.tobytes())


def save_pattern_pgm(values, shape, path) -> None:
    values = np.asarray(values, dtype=float)
    rows, cols = shape
    if values.size != rows * cols:
        raise PatternError(f"{values.size} values do not fill shape {tuple(shape)}")
    write_pgm(values.reshape(rows, cols), path)


def _read_text_grid(path) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            if any(t not in ("0", "1") for t in tokens):
                raise PatternError(f"{path}:{lineno}: tokens must be 0 or 1")
            rows.append([int(t) for t in tokens])
    if not rows:
        raise PatternError(f"{path}: empty pattern file")
    if len({len(r) for r in rows}) != 1:
        raise PatternError(f"{path}: ragged rows")
    return np.array(rows, dtype=float)


def load_pattern(path, expected_shape=None, allow_empty: bool = False) -> TargetPattern:
    """Load a 0/1 text grid or a PGM (thresholded at mid-gray)."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic in (b"P2", b"P5"):
        image = (read_pgm(path) >= 0.5).astype(float)
    else:
        image = _read_text_grid(path)
    if expected_shape is not None and tuple(image.shape) != tuple(expected_shape):
        raise PatternError(f"{path}: pattern is {image.shape}, expected {tuple(expected_shape)}")
    return TargetPattern.from_image(image, allow_empty)


def save_pattern_text(pattern: TargetPattern, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in pattern.image().astype(int):
            fh.write(" ".join(str(v) for v in row) + "\n")


# -- edge extraction -----------------------------------------------------------

def sobel_magnitude(image) -> np.ndarray:
    """Sobel gradient magnitude with replicate padding, same shape as input."""
    img = np.asarray(image, dtype=float)
    p = np.pad(img, 1, mode="edge")
    # separable form: central difference along one axis, (1, 2, 1) smoothing along the other
    dx = p[:, 2:] - p[:, :-2]
    dy = p[2:, :] - p[:-2, :]
    gx = dx[:-2] + 2.0 * dx[1:-1] + dx[2:]
    gy = dy[:, :-2] + 2.0 * dy[:, 1:-1] + dy[:, 2:]
    return np.hypot(gx, gy)


def edge_detect(image, threshold: float = 0.5) -> TargetPattern:
    """Binary edge map: Sobel magnitude / max, kept where ``>= threshold``."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 2 or min(img.shape) < 3:
        raise PatternError("edge detection needs a 2-D image of at least 3x3")
    if not np.all(np.isfinite(img)):
        raise PatternError("image contains non-finite values")
    if not 0 < threshold < 1:
        raise PatternError("threshold must lie in (0, 1)")
    mag = sobel_magnitude(img)
    peak = mag.max()
    if peak == 0:
        raise PatternError("image is constant; no edges")
    return TargetPattern.from_image((mag / peak >= threshold).astype(float))


# -- built-in glyphs -------------------------------------------------------------


def _band(n: int) -> slice:
    width = max(1, round(n / 7))
    if (n - width) % 2:
        width += 1
    lo = (n - width) // 2
    return slice(lo, lo + width)


def _glyph_cross(rows, cols):
    img = np.zeros((rows, cols))
    img[_band(rows), :] = 1
    img[:, _band(cols)] = 1
    return img


def _glyph_ring(rows, cols):
    y = np.arange(rows) - (rows - 1) / 2
    x = np.arange(cols) - (cols - 1) / 2
    r = np.hypot(*np.meshgrid(x, y, indexing="xy"))
    outer = min(rows, cols) / 2 - 0.5
    width = max(1.0, min(rows, cols) / 7)
    return ((r <= outer) & (r > outer - width)).astype(float)


def _glyph_letter_t(rows, cols):
    img = np.zeros((rows, cols))
    top = max(1, round(rows / 7))
    img[1 : 1 + top, 1 : cols - 1] = 1
    img[1:, _band(cols)] = 1
    img[rows - 1, :] = 0
    return img


def _glyph_letter_l(rows, cols):
    img = np.zeros((rows, cols))
    t = max(1, round(min(rows, cols) / 7))
    img[1 : rows - 1, 1 : 1 + t] = 1
    img[rows - 1 - t : rows - 1, 1 : cols - 1] = 1
    return img


def _glyph_letter_x(rows, cols):
    img = np.zeros((rows, cols))
    t = max(1.0, min(rows, cols) / 10)
    r, c = np.mgrid[0:rows, 0:cols]
    u = r / max(rows - 1, 1) * (cols - 1)
    img[np.abs(u - c) < t] = 1
    img[np.abs(u - (cols - 1 - c)) < t] = 1
    return img


GLYPHS = {
    "cross": _glyph_cross,
    "ring": _glyph_ring,
    "T": _glyph_letter_t,
    "L": _glyph_letter_l,
    "X": _glyph_letter_x,
}


def glyph(name: str, rows: int, cols: int) -> TargetPattern:
    """Built-in geometric target such as ``"cross"`` or ``"ring"``."""
    try:
        fn = GLYPHS[name]
    except KeyError:
        raise PatternError(f"unknown glyph {name!r}; choose from {sorted(GLYPHS)}") from None
    return TargetPattern.from_image(fn(rows, cols))
