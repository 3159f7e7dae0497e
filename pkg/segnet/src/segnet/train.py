"""Training loop: seeded, file-in/file-out, with a divergence guard.

Determinism note: runs are reproducible given (dataset, configs, seed) on
CPU; accelerator backends may reorder reductions, so cross-device
bit-identity is not promised.
"""

import csv
import math
import random
from dataclasses import asdict, dataclass
from pathlib import Path

import torch

from .data import list_samples, load_pair
from .loss import weighted_dice_loss
from .models import SegModelConfig, build_model

__all__ = ["TrainConfig", "TrainDivergedError", "train"]


class TrainDivergedError(RuntimeError):
    """Raised when the training or validation loss stops being finite."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 8
    learning_rate: float = 1e-3
    foreground_weight: float = 1000.0
    train_fraction: float = 0.9
    val_fraction: float = 0.1
    seed: int = 0
    symmetric_loss: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.foreground_weight <= 0:
            raise ValueError(f"foreground_weight must be > 0, got {self.foreground_weight}")
        if min(self.train_fraction, self.val_fraction) < 0 or not math.isclose(
            self.train_fraction + self.val_fraction, 1.0, rel_tol=0.0, abs_tol=1e-9
        ):
            raise ValueError(
                f"split fractions must be >= 0 and sum to 1, got "
                f"{self.train_fraction} + {self.val_fraction}"
            )


def _check_finite(loss: torch.Tensor, stage: str, epoch: int) -> float:
    value = float(loss.detach())
    if not math.isfinite(value):
        raise TrainDivergedError(
            f"{stage} loss became non-finite ({value}) at epoch {epoch}; "
            "lower the learning rate or the foreground weight"
        )
    return value


def _batches(tensors, batch_size):
    for start in range(0, len(tensors), batch_size):
        chunk = tensors[start : start + batch_size]
        yield torch.stack([c[0] for c in chunk]), torch.stack([c[1] for c in chunk])


def train(
    dataset_dir: str | Path,
    model_config: SegModelConfig,
    train_config: TrainConfig,
    checkpoint_path: str | Path,
    log_path: str | Path,
    device: str = "cpu",
) -> list[dict]:
    """Fit a model on a generated dataset directory.

    Writes the checkpoint and a CSV log (epoch, train_loss, val_loss; the
    log also flushes per epoch so aborted runs keep their history) and
    returns the per-epoch history. Losses are means over batches. With a
    zero validation split the val_loss column repeats the train loss.
    """
    torch.manual_seed(train_config.seed)
    rng = random.Random(train_config.seed)

    pairs = list_samples(dataset_dir)
    data = [load_pair(i, l) for i, l in pairs]
    size = model_config.input_size
    for (x, _), (input_path, _) in zip(data, pairs):
        if x.shape[-2:] != (size, size):
            raise ValueError(
                f"{input_path}: expected {size}x{size} input, got "
                f"{x.shape[-2]}x{x.shape[-1]}"
            )
    rng.shuffle(data)
    n_val = round(train_config.val_fraction * len(data))
    if train_config.val_fraction > 0 and len(data) > 1:
        n_val = min(max(n_val, 1), len(data) - 1)
    val_data, train_data = data[:n_val], data[n_val:]

    model = build_model(model_config).to(device)
    optimizer = torch.optim.Adam(model.parameters(), lr=train_config.learning_rate)
    w = train_config.foreground_weight
    symmetric = train_config.symmetric_loss

    history: list[dict] = []
    log_path = Path(log_path)
    log_path.parent.mkdir(parents=True, exist_ok=True)
    with log_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss"])
        for epoch in range(1, train_config.epochs + 1):
            model.train()
            rng.shuffle(train_data)
            total = 0.0
            batches = 0
            for x, y in _batches(train_data, train_config.batch_size):
                optimizer.zero_grad()
                loss = weighted_dice_loss(model(x.to(device)), y.to(device), w, symmetric)
                total += _check_finite(loss, "training", epoch)
                loss.backward()
                optimizer.step()
                batches += 1
            train_loss = total / batches

            if val_data:
                model.eval()
                with torch.no_grad():
                    total = 0.0
                    batches = 0
                    for x, y in _batches(val_data, train_config.batch_size):
                        loss = weighted_dice_loss(model(x.to(device)), y.to(device), w, symmetric)
                        total += _check_finite(loss, "validation", epoch)
                        batches += 1
                val_loss = total / batches
            else:
                val_loss = train_loss

            writer.writerow([epoch, repr(train_loss), repr(val_loss)])
            fh.flush()
            history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})

    checkpoint_path = Path(checkpoint_path)
    checkpoint_path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "model_config": asdict(model_config),
            "train_config": asdict(train_config),
            "state_dict": model.state_dict(),
            "history": history,
        },
        checkpoint_path,
    )
    return history
