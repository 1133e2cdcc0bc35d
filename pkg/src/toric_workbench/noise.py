"""Noise models and on-the-fly ``(syndrome, logical)`` sample generation.

Random streams are counter-based (Philox) and keyed by ``(seed, worker, batch)``
so a batch can be regenerated in any process without replaying the ones before
it.
"""
import abc
import logging
from dataclasses import dataclass
from typing import IO, Iterator, Optional

import numpy as np

from toric_workbench.errors import ParameterError, SizeMismatchError
from toric_workbench.lattice import (
    Lattice,
    LogicalBits,
    PauliError,
    Syndrome,
    class_indices,
    logical_bits,
    syndrome_bits,
)

logger = logging.getLogger(__name__)

CSV_VERSION = 1


def stream(seed: int, worker: int = 0, batch: int = 0) -> np.random.Generator:
    """An independent generator for one ``(worker, batch)`` cell of a run."""
    sequence = np.random.SeedSequence(seed, spawn_key=(worker, batch))
    return np.random.Generator(np.random.Philox(sequence))


class NoiseModel(abc.ABC):
    """An i.i.d.-per-edge Pauli channel.

    Subclasses give the categorical probabilities of ``(I, X, Z, XZ)`` on every
    edge; sampling and exact likelihoods are derived from them.
    """

    p: float
    seed: int

    @abc.abstractmethod
    def edge_probabilities(self, L: int) -> np.ndarray:
        """Shape ``(2, L, L, 4)`` probabilities for ``(I, X, Z, XZ)`` per edge."""

    def sample_arrays(self, L: int, n: int, rng: np.random.Generator):
        """Draw ``n`` errors as ``(x, z)`` uint8 arrays shaped ``(n, 2, L, L)``."""
        cumulative = np.cumsum(self.edge_probabilities(L), axis=-1)[..., :3]
        u = rng.random((n, 2, L, L))
        category = (u[..., None] >= cumulative).sum(axis=-1).astype(np.uint8)
        return category & 1, category >> 1

    def log_probability(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        """``log p(E)`` as a product over edges, batched over leading axes."""
        L = x.shape[-1]
        with np.errstate(divide="ignore"):
            table = np.log(self.edge_probabilities(L))
        category = (np.asarray(x, dtype=np.intp) & 1) | ((np.asarray(z, dtype=np.intp) & 1) << 1)
        per_edge = np.take_along_axis(
            np.broadcast_to(table, category.shape + (4,)), category[..., None], axis=-1
        )[..., 0]
        return per_edge.reshape(per_edge.shape[:-3] + (-1,)).sum(axis=-1)


@dataclass(frozen=True)
class DepolarizingNoise(NoiseModel):
    """``(1 - p, p/3, p/3, p/3)`` on every edge.

    Examples:
        >>> DepolarizingNoise(0.3).edge_probabilities(3)[0, 0, 0].round(3).tolist()
        [0.7, 0.1, 0.1, 0.1]
        >>> DepolarizingNoise(1.0)
        Traceback (most recent call last):
        ...
        toric_workbench.errors.ParameterError: Physical error probability must be in [0, 1), got 1.0.
    """

    p: float
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.p < 1:
            raise ParameterError(f"Physical error probability must be in [0, 1), got {self.p}.")

    def edge_probabilities(self, L: int) -> np.ndarray:
        single = np.array([1 - self.p, self.p / 3, self.p / 3, self.p / 3])
        return np.broadcast_to(single, (2, L, L, 4)).copy()

    def sample_arrays(self, L: int, n: int, rng: np.random.Generator):
        u = rng.random((n, 2, L, L))
        flipped = u < self.p
        # u / (p / 3) lands in [0, 3) on flipped edges: 0 -> X, 1 -> Z, 2 -> XZ.
        category = np.where(flipped, 1 + np.floor(3 * u / max(self.p, 1e-300)), 0)
        category = np.minimum(category, 3).astype(np.uint8)
        return category & 1, category >> 1

    @property
    def weight_log_odds(self) -> float:
        """``log((p/3) / (1 - p))``: the log-likelihood cost of one more faulty edge."""
        return float(np.log(self.p / 3) - np.log1p(-self.p))


def sample_error(model: NoiseModel, lattice: Lattice, rng: np.random.Generator) -> PauliError:
    x, z = model.sample_arrays(lattice.L, 1, rng)
    return PauliError(x[0], z[0])


@dataclass(frozen=True)
class Sample:
    syndrome: Syndrome
    logical: LogicalBits
    error: Optional[PauliError] = None


@dataclass(frozen=True)
class SampleBatch:
    """Array form of ``n`` samples.

    ``sx`` and ``sz`` are ``(n, L, L)``, ``logical`` is ``(n, 4)``; ``x`` and ``z``
    are the ``(n, 2, L, L)`` errors when they were retained.
    """

    sx: np.ndarray
    sz: np.ndarray
    logical: np.ndarray
    x: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None

    @classmethod
    def from_errors(cls, x: np.ndarray, z: np.ndarray, keep_errors: bool = False) -> "SampleBatch":
        sx, sz = syndrome_bits(x, z)
        logical = logical_bits(x, z)
        if keep_errors:
            return cls(sx, sz, logical, x, z)
        return cls(sx, sz, logical)

    @property
    def L(self) -> int:
        return self.sx.shape[-1]

    @property
    def classes(self) -> np.ndarray:
        """Joint logical class indices in ``[0, 16)``."""
        return class_indices(self.logical)

    def syndromes(self) -> np.ndarray:
        """Stacked ``(n, 2, L, L)`` channel layout."""
        return np.stack([self.sx, self.sz], axis=1)

    def __len__(self):
        return self.sx.shape[0]

    def __getitem__(self, i: int) -> Sample:
        error = None
        if self.x is not None:
            error = PauliError(self.x[i], self.z[i])
        return Sample(Syndrome(self.sx[i], self.sz[i]), LogicalBits(*(int(b) for b in self.logical[i])), error)

    def __iter__(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield self[i]


def sample_batch(
    model: NoiseModel,
    lattice: Lattice,
    n: int,
    *,
    batch: int = 0,
    worker: int = 0,
    keep_errors: bool = False,
) -> SampleBatch:
    """``n`` i.i.d. samples, a pure function of ``(model.seed, worker, batch)``.

    Examples:
        >>> samples = sample_batch(DepolarizingNoise(0.0, seed=3), Lattice(3), 4)
        >>> len(samples), int(samples.sx.sum() + samples.sz.sum()), samples.classes.tolist()
        (4, 0, [0, 0, 0, 0])
    """
    if n < 1:
        raise ParameterError(f"Batch size must be at least 1, got {n}.")
    rng = stream(model.seed, worker, batch)
    x, z = model.sample_arrays(lattice.L, n, rng)
    return SampleBatch.from_errors(x, z, keep_errors=keep_errors)


def write_csv(samples: SampleBatch, fp: IO[str]) -> None:
    """Dump samples as CSV: a version comment line, a header row, then one row per sample."""
    L = samples.L
    cells = [f"{r}_{c}" for r in range(L) for c in range(L)]
    header = ",".join([f"sx_{cell}" for cell in cells] + [f"sz_{cell}" for cell in cells] + ["g1", "g2", "g3", "g4"])
    rows = np.concatenate(
        [samples.sx.reshape(len(samples), -1), samples.sz.reshape(len(samples), -1), samples.logical], axis=1
    )
    fp.write(f"# toric-workbench samples v{CSV_VERSION} L={L}\n")
    np.savetxt(fp, rows, fmt="%d", delimiter=",", header=header, comments="")


def read_csv(fp: IO[str]) -> SampleBatch:
    version_line = fp.readline()
    if not version_line.startswith("# toric-workbench samples"):
        raise ParameterError("Not a toric-workbench sample file: missing version comment line.")
    rows = np.loadtxt(fp, delimiter=",", skiprows=1, dtype=np.uint8, ndmin=2)
    L = int(round(((rows.shape[1] - 4) / 2) ** 0.5))
    if 2 * L * L + 4 != rows.shape[1]:
        raise SizeMismatchError(f"Sample rows have {rows.shape[1]} columns, which matches no lattice size.")
    n = rows.shape[0]
    sx = rows[:, : L * L].reshape(n, L, L)
    sz = rows[:, L * L : 2 * L * L].reshape(n, L, L)
    return SampleBatch(sx, sz, rows[:, -4:])
