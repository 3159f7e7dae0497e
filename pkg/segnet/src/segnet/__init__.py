"""Segmentation models over rasterized bearing-ray images.

Companion package to the localization workbench: trains encoder-decoder
models on its generated (input, label) PGM datasets and emits 16-bit
probability-map PGMs that the workbench's decode pipeline consumes. The
only coupling is those file formats.
"""

from .data import PgmImage, list_samples, load_pair, read_pgm, write_probability_pgm
from .infer import infer_file, load_checkpoint
from .loss import weighted_dice_loss
from .models import ARCHITECTURES, SegModelConfig, UNet, UNetPP, build_model
from .train import TrainConfig, TrainDivergedError, train

__version__ = "0.1.0"

__all__ = [
    "ARCHITECTURES",
    "PgmImage",
    "SegModelConfig",
    "TrainConfig",
    "TrainDivergedError",
    "UNet",
    "UNetPP",
    "build_model",
    "infer_file",
    "list_samples",
    "load_checkpoint",
    "load_pair",
    "read_pgm",
    "train",
    "weighted_dice_loss",
    "write_probability_pgm",
    "__version__",
]
