"""The equivariant neural decoder.

A periodic-convolution body maps the two syndrome channels to a field of 16
class logits at every lattice position. Each position stands for one
translation; the head undoes that translation's twist on the logits and
averages, which makes the predictor transform exactly like ``p(gamma | s)``.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from toric_workbench.errors import ParameterError, SizeMismatchError
from toric_workbench.lattice import Lattice
from toric_workbench.symmetry import N_CLASSES, field_masks

logger = logging.getLogger(__name__)

POOLINGS = ("twisted", "average", "flatten")
# Negative slope handed to the fan-in scaled uniform initialiser.
LEAKY_SLOPE = 0.01


@dataclass(frozen=True)
class ModelConfig:
    """Architecture of the decoder body and head.

    ``channels`` lists the width of each block; every block stacks ``depth``
    residual units. ``L`` is only consulted by the ``flatten`` head, whose dense
    layer is sized for one lattice.
    """

    channels: Tuple[int, ...] = (32, 64, 64)
    depth: int = 3
    kernel_size: int = 3
    pooling: str = "twisted"
    batch_norm: bool = False
    L: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))
        if not self.channels or min(self.channels) < 1:
            raise ParameterError(f"Channel plan must list positive widths, got {self.channels}.")
        if self.depth < 1:
            raise ParameterError(f"Block depth must be at least 1, got {self.depth}.")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ParameterError(f"Kernel size must be odd and positive, got {self.kernel_size}.")
        if self.pooling not in POOLINGS:
            raise ParameterError(f"Unknown pooling '{self.pooling}'. Available poolings: {', '.join(POOLINGS)}.")
        if self.pooling == "flatten" and self.L is None:
            raise ParameterError("The flatten head needs the lattice size L.")


class PeriodicConv2d(nn.Conv2d):
    """Stride-1 convolution that wraps around both lattice axes."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int = 3):
        super().__init__(
            in_channels,
            out_channels,
            kernel_size,
            padding=kernel_size // 2,
            padding_mode="circular",
        )
        nn.init.kaiming_uniform_(self.weight, a=LEAKY_SLOPE, nonlinearity="leaky_relu")
        nn.init.zeros_(self.bias)


class ChannelAffine(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.scale = nn.Parameter(torch.ones(1, channels, 1, 1))
        self.shift = nn.Parameter(torch.zeros(1, channels, 1, 1))

    def forward(self, x):
        return x * self.scale + self.shift


def _norm(channels: int, batch_norm: bool) -> nn.Module:
    if batch_norm:
        return nn.BatchNorm2d(channels)
    return ChannelAffine(channels)


class ResidualUnit(nn.Module):
    """Pre-activation wide-resnet unit: (norm, GELU, conv) twice plus a skip."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int, batch_norm: bool):
        super().__init__()
        self.norm1 = _norm(in_channels, batch_norm)
        self.conv1 = PeriodicConv2d(in_channels, out_channels, kernel_size)
        self.norm2 = _norm(out_channels, batch_norm)
        self.conv2 = PeriodicConv2d(out_channels, out_channels, kernel_size)
        self.skip: nn.Module = nn.Identity()
        if in_channels != out_channels:
            self.skip = PeriodicConv2d(in_channels, out_channels, 1)

    def forward(self, x):
        h = self.conv1(F.gelu(self.norm1(x)))
        h = self.conv2(F.gelu(self.norm2(h)))
        return self.skip(x) + h


class Body(nn.Module):
    """``phi``: syndrome channels ``(B, 2, L, L)`` to class logits ``(B, 16, L, L)``."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        k = config.kernel_size
        self.stem = PeriodicConv2d(2, config.channels[0], k)
        units = []
        width = config.channels[0]
        for channels in config.channels:
            for _ in range(config.depth):
                units.append(ResidualUnit(width, channels, k, config.batch_norm))
                width = channels
        self.units = nn.Sequential(*units)
        self.head_norm = _norm(width, config.batch_norm)
        self.head = PeriodicConv2d(width, N_CLASSES, 1)

    def forward(self, x):
        return self.head(F.gelu(self.head_norm(self.units(self.stem(x)))))


def _class_index(masks: torch.Tensor) -> torch.Tensor:
    classes = torch.arange(N_CLASSES, device=masks.device).view(1, N_CLASSES, 1, 1)
    return classes ^ masks.unsqueeze(1)


class TwistedPool(nn.Module):
    """``out[b, gamma] = mean over positions of field[b, gamma ^ mask[b, r, c], r, c]``."""

    def forward(self, field: torch.Tensor, masks: torch.Tensor) -> torch.Tensor:
        if field.dim() != 4 or field.shape[1] != N_CLASSES or masks.shape != field.shape[:1] + field.shape[2:]:
            raise SizeMismatchError(
                f"Expected field (B, {N_CLASSES}, L, L) and masks (B, L, L), got "
                f"{tuple(field.shape)} and {tuple(masks.shape)}."
            )
        return field.gather(1, _class_index(masks)).mean(dim=(2, 3))


class AveragePool(nn.Module):
    """Plain global average pooling; ignores the twists."""

    def forward(self, field: torch.Tensor, masks: torch.Tensor) -> torch.Tensor:
        return field.mean(dim=(2, 3))


class FlattenHead(nn.Module):
    """Dense layer over the whole field; ignores the twists and is tied to one L."""

    def __init__(self, L: int):
        super().__init__()
        self.L = L
        self.dense = nn.Linear(N_CLASSES * L * L, N_CLASSES)

    def forward(self, field: torch.Tensor, masks: torch.Tensor) -> torch.Tensor:
        if field.shape[-1] != self.L:
            raise SizeMismatchError(f"Flatten head was built for L={self.L}, got L={field.shape[-1]}.")
        return self.dense(field.flatten(1))


class EquivariantDecoder(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.body = Body(config)
        if config.pooling == "twisted":
            self.pool: nn.Module = TwistedPool()
        elif config.pooling == "average":
            self.pool = AveragePool()
        else:
            self.pool = FlattenHead(config.L)

    def forward(self, syndromes: torch.Tensor, masks: torch.Tensor) -> torch.Tensor:
        return self.pool(self.body(syndromes), masks)

    @property
    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


def build_model(config: ModelConfig, dtype: torch.dtype = torch.float32) -> EquivariantDecoder:
    model = EquivariantDecoder(config).to(dtype)
    logger.debug("Built %s decoder with %d parameters.", config.pooling, model.parameter_count)
    return model


@dataclass
class EncodedBatch:
    """Network inputs for a batch of syndromes."""

    syndromes: torch.Tensor
    masks: torch.Tensor
    classes: Optional[torch.Tensor] = None


def encode(sx: np.ndarray, sz: np.ndarray, classes=None, dtype: torch.dtype = torch.float32) -> EncodedBatch:
    """Stack ``(B, L, L)`` syndrome grids into channels and attach their position masks."""
    sx = np.asarray(sx)
    sz = np.asarray(sz)
    if sx.ndim == 2:
        sx, sz = sx[None], sz[None]
    syndromes = torch.as_tensor(np.stack([sx, sz], axis=1), dtype=dtype)
    masks = torch.as_tensor(field_masks(sx, sz), dtype=torch.long)
    target = None
    if classes is not None:
        target = torch.as_tensor(np.asarray(classes), dtype=torch.long)
    return EncodedBatch(syndromes, masks, target)


def forward_body(model: EquivariantDecoder, syndromes: torch.Tensor) -> torch.Tensor:
    if syndromes.dim() != 4 or syndromes.shape[1] != 2 or syndromes.shape[2] != syndromes.shape[3]:
        raise SizeMismatchError(f"Expected syndrome channels (B, 2, L, L), got {tuple(syndromes.shape)}.")
    return model.body(syndromes)


def twisted_pool(field: torch.Tensor, sx: np.ndarray, sz: np.ndarray) -> torch.Tensor:
    """Twisted global average pooling with masks derived from the syndromes."""
    masks = torch.as_tensor(field_masks(np.asarray(sx), np.asarray(sz)), dtype=torch.long, device=field.device)
    return TwistedPool()(field, masks)


def predict(model: EquivariantDecoder, batch: EncodedBatch) -> torch.Tensor:
    """``(B, 16)`` class probabilities; softmax is taken after pooling."""
    return torch.softmax(model(batch.syndromes, batch.masks), dim=-1)


def loss(model: EquivariantDecoder, batch: EncodedBatch) -> torch.Tensor:
    """Mean negative log-likelihood of the true classes."""
    if batch.classes is None or batch.classes.numel() == 0:
        raise ParameterError("Loss needs a non-empty batch with target classes.")
    return F.cross_entropy(model(batch.syndromes, batch.masks), batch.classes)


class NeuralDecoder:
    """Batch decoding with a trained model; works at any odd L unless the head is ``flatten``."""

    def __init__(self, lattice: Lattice, model: EquivariantDecoder, batch_size: int = 4096):
        self.lattice = lattice
        self.model = model.eval()
        self.batch_size = batch_size
        self.dtype = next(model.parameters()).dtype

    @torch.no_grad()
    def decode_batch(self, sx: np.ndarray, sz: np.ndarray) -> np.ndarray:
        decoded = []
        for start in range(0, len(sx), self.batch_size):
            batch = encode(sx[start : start + self.batch_size], sz[start : start + self.batch_size], dtype=self.dtype)
            decoded.append(self.model(batch.syndromes, batch.masks).argmax(dim=-1).numpy())
        return np.concatenate(decoded).astype(np.int64)
