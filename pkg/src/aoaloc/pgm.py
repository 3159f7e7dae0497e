"""Strict binary PGM (P5) I/O with an embedded grid-geometry comment.

Wire formats:
  input images      maxval 255, sample = round(intensity * 255)
  label images      maxval 255, samples restricted to {0, 255}
  probability maps  maxval 65535, big-endian, probability = sample / 65535

Every file we write carries one comment line of the form
  # aoaloc-grid x_min=... x_max=... y_min=... y_max=... resolution=... row_order=north-up
with repr-exact floats, so the world mapping survives the file round trip
bit-for-bit. The reader is strict: any deviation raises PgmFormatError
naming the byte offset of the problem.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import PgmFormatError
from .geometry import Region
from .raster import ROW_ORDER, GridSpec, InputImage, LabelImage

GRID_COMMENT_TAG = "aoaloc-grid"

_WHITESPACE = b" \t\n\r\x0b\x0c"


@dataclass(frozen=True)
class PgmFile:
    samples: np.ndarray  # (H, W) uint8 or uint16
    maxval: int
    grid: GridSpec | None


def _grid_comment(grid: GridSpec) -> str:
    r = grid.region
    return (
        f"# {GRID_COMMENT_TAG} x_min={r.x_min!r} x_max={r.x_max!r} "
        f"y_min={r.y_min!r} y_max={r.y_max!r} "
        f"resolution={grid.resolution!r} row_order={grid.row_order}"
    )


def _parse_grid_comment(text: str, offset: int, shape: tuple[int, int]) -> GridSpec:
    fields = {}
    for token in text.split()[2:]:  # drop "#" and the tag
        key, _, value = token.partition("=")
        fields[key] = value
    try:
        region = Region(
            float(fields["x_min"]), float(fields["x_max"]),
            float(fields["y_min"]), float(fields["y_max"]),
        )
        resolution = float(fields["resolution"])
        row_order = fields["row_order"]
    except (KeyError, ValueError) as exc:
        raise PgmFormatError(f"bad {GRID_COMMENT_TAG} comment ({exc})", offset) from None
    if row_order != ROW_ORDER:
        raise PgmFormatError(f"unsupported row_order {row_order!r}", offset)
    try:
        grid = GridSpec(region=region, resolution=resolution, width=shape[1], height=shape[0])
    except ValueError as exc:
        raise PgmFormatError(f"grid does not fit the image: {exc}", offset)
    return grid


class _Cursor:
    """Byte-level header scanner that knows where it is."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
        self.comments: list[tuple[int, str]] = []  # (offset, text) per comment line

    def fail(self, message: str, offset: int | None = None):
        raise PgmFormatError(message, self.pos if offset is None else offset)

    def skip_separators(self):
        """Whitespace and comment lines between header tokens."""
        while self.pos < len(self.data):
            byte = self.data[self.pos : self.pos + 1]
            if byte in (b"#",):
                start = self.pos
                end = self.data.find(b"\n", self.pos)
                if end < 0:
                    self.fail("unterminated comment", start)
                try:
                    text = self.data[start:end].decode("ascii")
                except UnicodeDecodeError:
                    self.fail("non-ASCII comment", start)
                self.comments.append((start, text))
                self.pos = end + 1
            elif byte and byte in _WHITESPACE:
                self.pos += 1
            else:
                return

    def read_int(self, what: str) -> int:
        start = self.pos
        while self.pos < len(self.data) and self.data[self.pos : self.pos + 1].isdigit():
            self.pos += 1
        if self.pos == start:
            self.fail(f"expected {what}", start)
        return int(self.data[start : self.pos])


def read_pgm(path: str | Path) -> PgmFile:
    data = Path(path).read_bytes()
    cur = _Cursor(data)
    if not data.startswith(b"P5"):
        cur.fail("not a binary PGM (missing P5 magic)", 0)
    cur.pos = 2
    cur.skip_separators()
    width = cur.read_int("width")
    cur.skip_separators()
    height = cur.read_int("height")
    cur.skip_separators()
    maxval = cur.read_int("maxval")
    if width <= 0 or height <= 0:
        cur.fail(f"bad dimensions {width}x{height}", 0)
    if not 0 < maxval < 65536:
        cur.fail(f"maxval {maxval} outside [1, 65535]")
    if cur.pos >= len(data) or data[cur.pos : cur.pos + 1] not in _WHITESPACE:
        cur.fail("expected single whitespace after maxval")
    cur.pos += 1

    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    got = len(data) - cur.pos
    if got < expected:
        raise PgmFormatError(
            f"truncated raster: expected {expected} bytes, found {got}", len(data)
        )
    if got > expected:
        raise PgmFormatError("trailing bytes after raster", cur.pos + expected)
    samples = np.frombuffer(data, dtype=dtype, offset=cur.pos).reshape(height, width)
    if samples.max(initial=0) > maxval:
        bad = int(np.argmax(samples.reshape(-1) > maxval))
        raise PgmFormatError(
            f"sample exceeds maxval {maxval}", cur.pos + bad * dtype.itemsize
        )

    grid = None
    for offset, text in cur.comments:
        if text.split()[1:2] == [GRID_COMMENT_TAG]:
            grid = _parse_grid_comment(text, offset, (height, width))
            break
    native = samples.astype(np.uint16 if maxval > 255 else np.uint8)
    return PgmFile(samples=native, maxval=maxval, grid=grid)


def write_pgm(path: str | Path, samples: np.ndarray, maxval: int, grid: GridSpec) -> None:
    if samples.ndim != 2:
        raise ValueError(f"samples must be 2-D, got shape {samples.shape}")
    if (samples.shape[0], samples.shape[1]) != grid.shape:
        raise ValueError(f"samples shape {samples.shape} disagrees with grid {grid.shape}")
    if samples.min(initial=0) < 0 or samples.max(initial=0) > maxval:
        raise ValueError(f"samples outside [0, {maxval}]")
    header = (
        f"P5\n{_grid_comment(grid)}\n{samples.shape[1]} {samples.shape[0]}\n{maxval}\n"
    )
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    Path(path).write_bytes(header.encode("ascii") + samples.astype(dtype).tobytes())


def _require_grid(pf: PgmFile, path: str | Path) -> GridSpec:
    if pf.grid is None:
        raise PgmFormatError(f"{path}: missing {GRID_COMMENT_TAG} comment", 2)
    return pf.grid


def write_input_pgm(path: str | Path, img: InputImage) -> None:
    samples = np.floor(img.intensities * 255.0 + 0.5).astype(np.uint8)
    write_pgm(path, samples, 255, img.grid)


def read_input_pgm(path: str | Path) -> InputImage:
    pf = read_pgm(path)
    if pf.maxval != 255:
        raise PgmFormatError(f"{path}: input image must have maxval 255, got {pf.maxval}", 2)
    grid = _require_grid(pf, path)
    return InputImage(intensities=pf.samples.astype(np.float64) / 255.0, grid=grid)


def write_label_pgm(path: str | Path, label: LabelImage) -> None:
    write_pgm(path, label.mask.astype(np.uint8) * 255, 255, label.grid)


def read_label_pgm(path: str | Path) -> LabelImage:
    pf = read_pgm(path)
    if pf.maxval != 255:
        raise PgmFormatError(f"{path}: label image must have maxval 255, got {pf.maxval}", 2)
    if not np.isin(pf.samples, (0, 255)).all():
        raise PgmFormatError(f"{path}: label samples must be 0 or 255", 2)
    grid = _require_grid(pf, path)
    return LabelImage(mask=(pf.samples == 255).astype(np.uint8), grid=grid)


def write_probability_pgm(path: str | Path, values: np.ndarray, grid: GridSpec) -> None:
    if values.min(initial=0.0) < 0.0 or values.max(initial=0.0) > 1.0:
        raise ValueError("probabilities outside [0, 1]")
    samples = np.floor(values * 65535.0 + 0.5).astype(np.uint16)
    write_pgm(path, samples, 65535, grid)


def read_probability_pgm(path: str | Path) -> tuple[np.ndarray, GridSpec]:
    pf = read_pgm(path)
    if pf.maxval != 65535:
        raise PgmFormatError(
            f"{path}: probability map must have maxval 65535, got {pf.maxval}", 2
        )
    grid = _require_grid(pf, path)
    return pf.samples.astype(np.float64) / 65535.0, grid
