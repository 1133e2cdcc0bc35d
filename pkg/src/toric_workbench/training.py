"""Training loop, configuration and checkpoints for the neural decoder."""
import dataclasses
import json
import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Any, Dict, List, Optional, Tuple, Union

import numpy as np
import torch

from toric_workbench.errors import ConfigError, NumericalError, SizeMismatchError
from toric_workbench.lattice import Lattice
from toric_workbench.neural import EquivariantDecoder, ModelConfig, build_model, encode, loss
from toric_workbench.noise import DepolarizingNoise, sample_batch

logger = logging.getLogger(__name__)

TRAIN_STREAM = 0
EVAL_STREAM = 1

CHECKPOINT_MAGIC = b"TWCKPT\x00\x00"
CHECKPOINT_VERSION = 1
LOG_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Everything a training run depends on.

    Examples:
        >>> TrainConfig(L=3, p_train=0.1, steps=10).model_config().channels
        (32, 64, 64)
        >>> TrainConfig(L=3, p_train=1.5)
        Traceback (most recent call last):
        ...
        toric_workbench.errors.ConfigError: p_train must be in (0, 1), got 1.5.
    """

    L: int = 7
    p_train: float = 0.155
    batch_size: int = 512
    steps: int = 5000
    learning_rate: float = 0.01
    weight_decay: float = 0.01
    cosine_decay: bool = False
    seed: int = 0
    channels: Tuple[int, ...] = (32, 64, 64)
    depth: int = 3
    kernel_size: int = 3
    pooling: str = "twisted"
    batch_norm: bool = False
    micro_batches: int = 1
    eval_every: int = 500
    eval_samples: int = 10000
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if not 0 < self.p_train < 1:
            raise ConfigError(f"p_train must be in (0, 1), got {self.p_train}.")
        positive = ("L", "batch_size", "steps", "learning_rate", "depth", "micro_batches", "eval_every", "threads")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}.")
        if self.eval_samples < 0:
            raise ConfigError(f"eval_samples must be non-negative, got {self.eval_samples}.")
        if self.batch_size % self.micro_batches:
            raise ConfigError(
                f"batch_size ({self.batch_size}) must split evenly into {self.micro_batches} micro batches."
            )
        try:
            Lattice(self.L)
            self.model_config()
        except ValueError as e:
            raise ConfigError(str(e)) from e

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(
                f"Unknown training option(s): {', '.join(unknown)}. Available options include: {', '.join(sorted(known))}."
            )
        return cls(**data)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "TrainConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read training config {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Training config {path} must hold a JSON object.")
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        data = dataclasses.asdict(self)
        data["channels"] = list(self.channels)
        return data

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            channels=self.channels,
            depth=self.depth,
            kernel_size=self.kernel_size,
            pooling=self.pooling,
            batch_norm=self.batch_norm,
            L=self.L,
        )


@dataclass(frozen=True)
class TrainRecord:
    step: int
    loss: float
    eval_accuracy: Optional[float] = None


@dataclass
class TrainResult:
    model: EquivariantDecoder
    config: TrainConfig
    log: List[TrainRecord]


def evaluate_model(model: EquivariantDecoder, config: TrainConfig, samples: Optional[int] = None, seed: Optional[int] = None) -> float:
    """Accuracy on the held-out stream of a run (same stream at every call)."""
    n = config.eval_samples if samples is None else samples
    noise = DepolarizingNoise(config.p_train, seed=config.seed if seed is None else seed)
    data = sample_batch(noise, Lattice(config.L), n, worker=EVAL_STREAM)
    dtype = next(model.parameters()).dtype
    was_training = model.training
    model.eval()
    correct = 0
    with torch.no_grad():
        for start in range(0, n, config.batch_size):
            stop = start + config.batch_size
            batch = encode(data.sx[start:stop], data.sz[start:stop], data.classes[start:stop], dtype=dtype)
            correct += int((model(batch.syndromes, batch.masks).argmax(dim=-1) == batch.classes).sum())
    model.train(was_training)
    return correct / n


def train(config: TrainConfig, log_file: Optional[IO[str]] = None, dtype: torch.dtype = torch.float32) -> TrainResult:
    """Sample, forward, backpropagate and step, ``config.steps`` times.

    Batches come from stream ``(seed, TRAIN_STREAM, step)`` so a run is a pure
    function of its config. Micro batches accumulate gradients in a fixed
    order before each optimiser step.
    """
    torch.manual_seed(config.seed)
    torch.set_num_threads(config.threads)
    lattice = Lattice(config.L)
    noise = DepolarizingNoise(config.p_train, seed=config.seed)
    model = build_model(config.model_config(), dtype=dtype)
    model.train()
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay)
    scheduler = None
    if config.cosine_decay:
        scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(optimizer, T_max=config.steps)

    logger.info(
        "Training %s decoder (%d parameters) at L=%d, p=%s for %d steps.",
        config.pooling,
        model.parameter_count,
        config.L,
        config.p_train,
        config.steps,
    )
    if log_file is not None:
        write_log_header(log_file)

    records = []
    micro = config.batch_size // config.micro_batches
    for step in range(1, config.steps + 1):
        data = sample_batch(noise, lattice, config.batch_size, batch=step, worker=TRAIN_STREAM)
        optimizer.zero_grad()
        total = 0.0
        for start in range(0, config.batch_size, micro):
            stop = start + micro
            batch = encode(data.sx[start:stop], data.sz[start:stop], data.classes[start:stop], dtype=dtype)
            value = loss(model, batch) / config.micro_batches
            value.backward()
            total += value.item()

        if not math.isfinite(total):
            raise NumericalError(
                f"Loss became {total} at step {step} (lr={optimizer.param_groups[0]['lr']:.3g}); "
                "lower the learning rate or enable batch_norm."
            )
        optimizer.step()
        if scheduler is not None:
            scheduler.step()

        accuracy = None
        if step % config.eval_every == 0 or step == config.steps:
            if config.eval_samples:
                accuracy = evaluate_model(model, config)
            logger.info("step=%d loss=%.5f eval_accuracy=%s", step, total, accuracy)
        record = TrainRecord(step, total, accuracy)
        records.append(record)
        if log_file is not None:
            write_log_record(log_file, record)

    model.eval()
    return TrainResult(model, config, records)


def write_log_header(fp: IO[str]):
    fp.write(f"# toric-workbench training log v{LOG_VERSION}\n")
    fp.write("step,loss,eval_accuracy\n")


def write_log_record(fp: IO[str], record: TrainRecord):
    accuracy = "" if record.eval_accuracy is None else repr(record.eval_accuracy)
    fp.write(f"{record.step},{record.loss!r},{accuracy}\n")


def save_checkpoint(model: EquivariantDecoder, config: TrainConfig, path: Union[str, Path]) -> None:
    """Write ``magic | u32 version | u64 header length | JSON header | payload``.

    The header records the training config and, per state entry, its name, shape
    and dtype; the payload holds the entries' raw little-endian bytes in header
    order.
    """
    tensors = []
    entries = []
    for name, tensor in model.state_dict().items():
        array = tensor.detach().cpu().numpy()
        dtype = array.dtype.newbyteorder("<")
        tensors.append(array.astype(dtype).tobytes())
        entries.append({"name": name, "shape": list(array.shape), "dtype": dtype.str})
    header = json.dumps({"config": config.to_dict(), "tensors": entries}).encode()
    with open(path, "wb") as fp:
        fp.write(CHECKPOINT_MAGIC)
        fp.write(struct.pack("<IQ", CHECKPOINT_VERSION, len(header)))
        fp.write(header)
        for blob in tensors:
            fp.write(blob)


def load_checkpoint(path: Union[str, Path]) -> Tuple[EquivariantDecoder, TrainConfig]:
    with open(path, "rb") as fp:
        if fp.read(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
            raise ConfigError(f"{path} is not a toric-workbench checkpoint.")
        version, header_length = struct.unpack("<IQ", fp.read(12))
        if version != CHECKPOINT_VERSION:
            raise ConfigError(f"Checkpoint version {version} is not supported (expected {CHECKPOINT_VERSION}).")
        header = json.loads(fp.read(header_length))
        payload = fp.read()

    config = TrainConfig.from_dict(header["config"])
    state = {}
    offset = 0
    for entry in header["tensors"]:
        dtype = np.dtype(entry["dtype"])
        count = int(np.prod(entry["shape"], dtype=np.int64))
        array = np.frombuffer(payload, dtype=dtype, count=count, offset=offset).reshape(entry["shape"])
        offset += count * dtype.itemsize
        state[entry["name"]] = torch.from_numpy(array.astype(dtype.newbyteorder("=")))
    if offset != len(payload):
        raise SizeMismatchError(f"Checkpoint payload has {len(payload) - offset} trailing bytes.")

    first = next(iter(state.values()), None)
    model = build_model(config.model_config(), dtype=first.dtype if first is not None and first.is_floating_point() else torch.float32)
    model.load_state_dict(state)
    model.eval()
    return model, config
