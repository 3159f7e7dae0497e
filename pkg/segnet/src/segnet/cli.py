"""Command line entry point: train a model, run inference on files."""

import argparse
import sys
from pathlib import Path

from .infer import infer_file, load_checkpoint
from .models import ARCHITECTURES, SegModelConfig
from .train import TrainConfig, TrainDivergedError, train


def cmd_train(args) -> int:
    model_config = SegModelConfig(
        architecture=args.arch,
        depth=args.depth,
        base_channels=args.base_channels,
        input_size=args.input_size,
    )
    train_config = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        foreground_weight=args.weight,
        train_fraction=1.0 - args.val_fraction,
        val_fraction=args.val_fraction,
        seed=args.seed,
        symmetric_loss=args.symmetric,
    )
    history = train(args.data, model_config, train_config, args.out, args.log, device=args.device)
    last = history[-1]
    print(
        f"trained {args.arch} for {len(history)} epochs, final train/val loss "
        f"{last['train_loss']:.4f}/{last['val_loss']:.4f} -> {args.out} (log {args.log})"
    )
    return 0


def cmd_infer(args) -> int:
    model, config = load_checkpoint(args.model, device=args.device)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for input_path in map(Path, args.inputs):
        stem = input_path.name
        if stem.endswith("_input.pgm"):
            stem = stem[: -len("_input.pgm")]
        else:
            stem = input_path.stem
        out = out_dir / f"{stem}_prob.pgm"
        infer_file(model, config, input_path, out, device=args.device)
        print(f"{input_path} -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segnet", description="segmentation models for bearing-ray images"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model on a generated dataset directory")
    p.add_argument("--data", required=True, help="dataset directory of *_input/_label.pgm pairs")
    p.add_argument("--arch", choices=list(ARCHITECTURES), default="unet")
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--base-channels", type=int, default=16)
    p.add_argument("--input-size", type=int, default=128)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--weight", type=float, default=1000.0, help="foreground loss weight")
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--symmetric", action="store_true", help="weight both denominator terms")
    p.add_argument("--device", default="cpu")
    p.add_argument("--out", default="model.pt", help="checkpoint path")
    p.add_argument("--log", default="train_log.csv", help="per-epoch loss CSV")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("infer", help="probability maps for input images")
    p.add_argument("inputs", nargs="+", help="input PGM files")
    p.add_argument("--model", required=True, help="checkpoint from train")
    p.add_argument("--out-dir", default=".", help="where *_prob.pgm files go")
    p.add_argument("--device", default="cpu")
    p.set_defaults(fn=cmd_infer)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except TrainDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
