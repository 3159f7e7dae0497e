"""Dataset access for the rasterized bearing-ray corpus.

This package exchanges data with the localization workbench purely
through files: binary PGM images (8-bit inputs and labels, 16-bit
probability maps) whose header comment carries the world georeferencing,
plus one scenario JSON per sample. The tiny PGM codec here exists so
that boundary stays file-shaped; it reads exactly the P5 subset the
workbench writes and preserves header comments verbatim for re-emission.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

__all__ = ["PgmImage", "read_pgm", "write_probability_pgm", "list_samples", "load_pair"]


@dataclass(frozen=True)
class PgmImage:
    samples: np.ndarray  # (H, W), uint8 or uint16
    maxval: int
    comments: tuple[str, ...]  # header comment lines, without '#' or newline


def read_pgm(path: str | Path) -> PgmImage:
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    comments: list[str] = []
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        if pos >= len(data):
            raise ValueError(f"{path}: truncated header")
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            end = data.index(b"\n", pos)
            comments.append(data[pos + 1 : end].decode("ascii").strip())
            pos = end + 1
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            token = data[pos:end]
            if not token.isdigit():
                raise ValueError(f"{path}: bad header token {token!r}")
            fields.append(int(token))
            pos = end
    pos += 1  # single whitespace byte separates the header from the raster
    width, height, maxval = fields
    if maxval < 1 or maxval > 65535:
        raise ValueError(f"{path}: maxval {maxval} out of range")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    raster = data[pos : pos + expected]
    if len(raster) != expected:
        raise ValueError(f"{path}: expected {expected} raster bytes, got {len(raster)}")
    samples = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    return PgmImage(samples=samples, maxval=maxval, comments=tuple(comments))


def write_probability_pgm(path: str | Path, values: np.ndarray, comments: tuple[str, ...]) -> None:
    """16-bit big-endian PGM from values in [0, 1], comments re-emitted
    verbatim so the georeferencing survives the round trip."""
    if values.ndim != 2:
        raise ValueError(f"probability map must be 2-d, got shape {values.shape}")
    if np.min(values) < 0.0 or np.max(values) > 1.0:
        raise ValueError("probability values must lie in [0, 1]")
    quantized = np.rint(values * 65535.0).astype(">u2")
    header = "P5\n" + "".join(f"# {c}\n" for c in comments)
    header += f"{values.shape[1]} {values.shape[0]}\n65535\n"
    Path(path).write_bytes(header.encode("ascii") + quantized.tobytes())


def list_samples(dataset_dir: str | Path) -> list[tuple[Path, Path]]:
    """Sorted (input, label) file pairs of a generated dataset directory."""
    root = Path(dataset_dir)
    pairs = []
    for input_path in sorted(root.glob("*_input.pgm")):
        label_path = input_path.with_name(input_path.name[: -len("_input.pgm")] + "_label.pgm")
        if not label_path.exists():
            raise FileNotFoundError(f"{input_path} has no matching label {label_path.name}")
        pairs.append((input_path, label_path))
    if not pairs:
        raise FileNotFoundError(f"no *_input.pgm samples under {root}")
    return pairs


def load_pair(input_path: Path, label_path: Path) -> tuple[torch.Tensor, torch.Tensor]:
    """(1, H, W) float32 tensors: input normalized by maxval, label in {0, 1}."""
    image = read_pgm(input_path)
    label = read_pgm(label_path)
    if image.samples.shape != label.samples.shape:
        raise ValueError(
            f"{input_path} is {image.samples.shape} but its label is {label.samples.shape}"
        )
    x = torch.from_numpy(image.samples.astype(np.float32) / image.maxval).unsqueeze(0)
    y = torch.from_numpy((label.samples > 0).astype(np.float32)).unsqueeze(0)
    return x, y
