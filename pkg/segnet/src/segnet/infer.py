"""Checkpoint loading and file-to-file inference.

Inference is stateless per file: read an input PGM, run the model in
eval mode, write a 16-bit probability map that carries the input's
georeferencing comment forward unchanged.
"""

from pathlib import Path

import numpy as np
import torch

from .data import read_pgm, write_probability_pgm
from .models import SegModelConfig, build_model

__all__ = ["load_checkpoint", "infer_file"]


def load_checkpoint(path: str | Path, device: str = "cpu") -> tuple[torch.nn.Module, SegModelConfig]:
    payload = torch.load(path, map_location=device, weights_only=True)
    config = SegModelConfig(**payload["model_config"])
    model = build_model(config).to(device)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, config


def infer_file(
    model: torch.nn.Module,
    config: SegModelConfig,
    input_path: str | Path,
    output_path: str | Path,
    device: str = "cpu",
) -> None:
    image = read_pgm(input_path)
    size = config.input_size
    if image.samples.shape != (size, size):
        raise ValueError(
            f"{input_path}: expected {size}x{size} input, got "
            f"{image.samples.shape[0]}x{image.samples.shape[1]}"
        )
    x = torch.from_numpy(image.samples.astype(np.float32) / image.maxval)
    with torch.no_grad():
        prob = model(x.unsqueeze(0).unsqueeze(0).to(device))[0, 0].cpu().numpy()
    write_probability_pgm(output_path, np.clip(prob.astype(np.float64), 0.0, 1.0), image.comments)
