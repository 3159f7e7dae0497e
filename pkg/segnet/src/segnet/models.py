"""Encoder-decoder segmentation backbones.

Both models map a 1-channel image to a 1-channel per-pixel probability
(sigmoid applied inside ``forward``). Channel widths double per encoder
level: C, 2C, ..., C * 2^(D-1). The plain variant concatenates each
encoder feature map once into the mirrored decoder level; the nested
variant ("unetpp") fills the whole triangle of intermediate nodes, where
node (i, j) fuses all previous nodes on row i with the upsampled node
(i+1, j-1), which strictly increases the parameter count at equal (C, D).
"""

from dataclasses import dataclass

import torch
import torch.nn as nn

__all__ = ["SegModelConfig", "UNet", "UNetPP", "build_model", "ARCHITECTURES"]

ARCHITECTURES = ("unet", "unetpp")


@dataclass(frozen=True)
class SegModelConfig:
    architecture: str = "unet"
    depth: int = 4
    base_channels: int = 16
    input_size: int = 128

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"architecture must be one of {ARCHITECTURES}, got {self.architecture!r}")
        if self.depth < 2:
            raise ValueError(f"depth must be >= 2, got {self.depth}")
        if self.base_channels < 8:
            raise ValueError(f"base_channels must be >= 8, got {self.base_channels}")
        stride = 2 ** (self.depth - 1)
        if self.input_size < stride or self.input_size % stride != 0:
            raise ValueError(
                f"input size {self.input_size} must be a positive multiple of "
                f"2^(depth-1) = {stride}"
            )


class ConvBlock(nn.Module):
    """Two 3x3 conv + batch-norm + ReLU stages at a fixed resolution."""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(in_channels, out_channels, 3, padding=1, bias=False),
            nn.BatchNorm2d(out_channels),
            nn.ReLU(inplace=True),
            nn.Conv2d(out_channels, out_channels, 3, padding=1, bias=False),
            nn.BatchNorm2d(out_channels),
            nn.ReLU(inplace=True),
        )

    def forward(self, x):
        return self.net(x)


class UNet(nn.Module):
    def __init__(self, base_channels: int = 16, depth: int = 4, in_channels: int = 1):
        super().__init__()
        chs = [base_channels * 2**i for i in range(depth)]
        self.encoders = nn.ModuleList()
        cin = in_channels
        for c in chs:
            self.encoders.append(ConvBlock(cin, c))
            cin = c
        self.pool = nn.MaxPool2d(2)
        self.upsamplers = nn.ModuleList()
        self.decoders = nn.ModuleList()
        for i in range(depth - 2, -1, -1):
            self.upsamplers.append(nn.ConvTranspose2d(chs[i + 1], chs[i], 2, stride=2))
            self.decoders.append(ConvBlock(2 * chs[i], chs[i]))
        self.head = nn.Conv2d(chs[0], 1, 1)

    def forward(self, x):
        skips = []
        for i, enc in enumerate(self.encoders):
            x = enc(x)
            if i < len(self.encoders) - 1:
                skips.append(x)
                x = self.pool(x)
        for up, dec in zip(self.upsamplers, self.decoders):
            skip = skips.pop()
            x = dec(torch.cat([up(x), skip], dim=1))
        return torch.sigmoid(self.head(x))


class UNetPP(nn.Module):
    def __init__(self, base_channels: int = 16, depth: int = 4, in_channels: int = 1):
        super().__init__()
        self.depth = depth
        chs = [base_channels * 2**i for i in range(depth)]
        self.pool = nn.MaxPool2d(2)
        self.blocks = nn.ModuleDict()
        self.upsamplers = nn.ModuleDict()
        for i in range(depth):
            self.blocks[f"x{i}_0"] = ConvBlock(in_channels if i == 0 else chs[i - 1], chs[i])
        for j in range(1, depth):
            for i in range(depth - j):
                self.upsamplers[f"u{i}_{j}"] = nn.ConvTranspose2d(chs[i + 1], chs[i], 2, stride=2)
                # node (i, j) sees rows x[i][0..j-1] plus the upsampled deeper node
                self.blocks[f"x{i}_{j}"] = ConvBlock((j + 1) * chs[i], chs[i])
        self.head = nn.Conv2d(chs[0], 1, 1)

    def forward(self, x):
        nodes = {}
        for i in range(self.depth):
            x = self.blocks[f"x{i}_0"](x if i == 0 else self.pool(nodes[(i - 1, 0)]))
            nodes[(i, 0)] = x
        for j in range(1, self.depth):
            for i in range(self.depth - j):
                up = self.upsamplers[f"u{i}_{j}"](nodes[(i + 1, j - 1)])
                row = [nodes[(i, k)] for k in range(j)]
                nodes[(i, j)] = self.blocks[f"x{i}_{j}"](torch.cat(row + [up], dim=1))
        return torch.sigmoid(self.head(nodes[(0, self.depth - 1)]))


def build_model(config: SegModelConfig) -> nn.Module:
    cls = UNet if config.architecture == "unet" else UNetPP
    return cls(base_channels=config.base_channels, depth=config.depth)
