"""Exact maximum likelihood decoding by summing over stabilizer cosets.

``p(gamma, s)`` is the probability mass of the coset ``E0(s, gamma) * Stab``.
Vertex stabilizers only touch the X part of an error and plaquette stabilizers
only the Z part, so each coset factorises into ``2^(L^2-1)`` X patterns times
``2^(L^2-1)`` Z patterns. For an i.i.d. channel the log-probability of a pair of
patterns is bilinear in their bits, so all 16 cosets are one matrix product.
"""
import functools
import logging
from typing import Tuple

import numpy as np

from toric_workbench.errors import CapacityError, InvalidSyndromeError
from toric_workbench.lattice import (
    HORIZONTAL,
    VERTICAL,
    Lattice,
    LogicalBits,
    PauliError,
    Syndrome,
    logical_content,
)
from toric_workbench.noise import DepolarizingNoise, NoiseModel

logger = logging.getLogger(__name__)

MAX_EXACT_L = 3
# Stand-in for log(0) that keeps 0 * log(0) finite in the bilinear expansion.
_LOG_ZERO = -1.0e4


def _check_capacity(L: int):
    if L > MAX_EXACT_L:
        raise CapacityError(
            f"Exact decoding enumerates 2^{2 * L * L - 2} stabilizers per class; "
            f"L={L} is above the supported maximum of {MAX_EXACT_L}."
        )


def _check_syndrome(s: Syndrome):
    if not s.is_valid:
        raise InvalidSyndromeError(
            f"Syndrome has odd defect parity (sx: {int(s.sx.sum())}, sz: {int(s.sz.sum())}); "
            "no error produces it."
        )


def representative_error(s: Syndrome, gamma: LogicalBits) -> PauliError:
    """Some error with syndrome ``s`` and logical content ``gamma``.

    Every vertex defect is joined to vertex ``(0, 0)`` by Z flips along its row
    and then down column 0; plaquette defects are joined to plaquette ``(0, 0)``
    the same way on the dual lattice with X flips. Logical operators are then
    multiplied in to reach ``gamma``.

    Examples:
        >>> e = representative_error(Syndrome.zero(3), LogicalBits(0, 0, 1, 0))
        >>> e == Lattice(3).logical_operators()[0]
        True
    """
    _check_syndrome(s)
    L = s.L
    x = np.zeros((2, L, L), dtype=np.uint8)
    z = np.zeros((2, L, L), dtype=np.uint8)
    for r, c in np.argwhere(s.sx):
        z[HORIZONTAL, r, :c] ^= 1
        z[VERTICAL, :r, 0] ^= 1
    for r, c in np.argwhere(s.sz):
        x[VERTICAL, r, 1 : c + 1] ^= 1
        x[HORIZONTAL, 1 : r + 1, 0] ^= 1

    error = PauliError(x, z)
    x1, x2, z1, z2 = Lattice(L).logical_operators()
    fix = LogicalBits(*gamma).index ^ logical_content(error).index
    for bit, logical in zip((8, 4, 2, 1), (z1, z2, x1, x2)):
        if fix & bit:
            error = error * logical
    return error


@functools.lru_cache(maxsize=None)
def _coset_patterns(L: int) -> Tuple[np.ndarray, np.ndarray]:
    """Flattened X and Z patterns of the stabilizer group times the logical classes.

    Returns ``(xs, zs)``, each ``(4, 2^(L^2-1), 2 L^2)``. ``xs[a]`` carries
    ``X1^(a >> 1) X2^(a & 1)`` and ``zs[b]`` carries ``Z1^(b >> 1) Z2^(b & 1)``.
    """
    lattice = Lattice(L)
    cells = list(lattice.coordinates())[:-1]
    vertex_gens = np.array([lattice.stabilizer_x(r, c).x.ravel() for r, c in cells])
    plaquette_gens = np.array([lattice.stabilizer_z(r, c).z.ravel() for r, c in cells])
    m = len(cells)
    combos = (np.arange(2**m)[:, None] >> np.arange(m)[None, :]) & 1
    x_group = (combos @ vertex_gens) % 2
    z_group = (combos @ plaquette_gens) % 2

    x1, x2, z1, z2 = lattice.logical_operators()
    xs = np.stack([x_group ^ (((a >> 1) & 1) * x1.x.ravel()) ^ ((a & 1) * x2.x.ravel()) for a in range(4)])
    zs = np.stack([z_group ^ (((b >> 1) & 1) * z1.z.ravel()) ^ ((b & 1) * z2.z.ravel()) for b in range(4)])
    return xs.astype(np.uint8), zs.astype(np.uint8)


def _depolarizing_coset_mass(xs: np.ndarray, zs: np.ndarray, p: float) -> np.ndarray:
    n_edges = xs.shape[-1]
    a = xs.reshape(-1, n_edges).astype(np.float64)
    b = zs.reshape(-1, n_edges).astype(np.float64)
    # Overlaps are small integers, exact in float64.
    overlap = np.rint(a @ b.T).astype(np.int64)
    weight = a.sum(axis=1).astype(np.int64)[:, None] + b.sum(axis=1).astype(np.int64)[None, :] - overlap
    w = np.arange(n_edges + 1)
    powers = (p / 3) ** w * (1 - p) ** (n_edges - w)
    return powers[weight]


def _general_coset_mass(xs: np.ndarray, zs: np.ndarray, model: NoiseModel, L: int) -> np.ndarray:
    n_edges = xs.shape[-1]
    probabilities = model.edge_probabilities(L).reshape(n_edges, 4)
    with np.errstate(divide="ignore"):
        table = np.where(probabilities > 0, np.log(probabilities), _LOG_ZERO)
    t_i, t_x, t_z, t_xz = table.T
    alpha = t_x - t_i
    beta = t_z - t_i
    kappa = t_xz - t_x - t_z + t_i
    a = xs.reshape(-1, n_edges).astype(np.float64)
    b = zs.reshape(-1, n_edges).astype(np.float64)
    log_mass = t_i.sum() + (a @ alpha)[:, None] + (b @ beta)[None, :] + (a * kappa) @ b.T
    return np.exp(log_mass)


def exact_distribution(s: Syndrome, model: NoiseModel, normalize: bool = True) -> np.ndarray:
    """The ``(2, 2, 2, 2)`` tensor ``p(gamma | s)`` (or ``p(gamma, s)`` unnormalised).

    Examples:
        >>> t = exact_distribution(Syndrome.zero(3), DepolarizingNoise(0.0))
        >>> float(t[0, 0, 0, 0]), float(t.sum())
        (1.0, 1.0)
    """
    L = s.L
    _check_capacity(L)
    _check_syndrome(s)
    base = representative_error(s, LogicalBits(0, 0, 0, 0))
    xs, zs = _coset_patterns(L)
    xs = xs ^ base.x.ravel()
    zs = zs ^ base.z.ravel()

    if isinstance(model, DepolarizingNoise):
        mass = _depolarizing_coset_mass(xs, zs, model.p)
    else:
        mass = _general_coset_mass(xs, zs, model, L)

    group = xs.shape[1]
    # Rows are X classes (g3, g4), columns Z classes (g1, g2).
    by_class = mass.reshape(4, group, 4, group).sum(axis=(1, 3))
    tensor = by_class.T.reshape(2, 2, 2, 2)
    if normalize:
        total = tensor.sum()
        if total <= 0:
            raise InvalidSyndromeError("Syndrome has zero probability under this noise model.")
        tensor = tensor / total
    return tensor


def decode_mld(s: Syndrome, model: NoiseModel) -> LogicalBits:
    """The most likely logical class; ties go to the smallest class index.

    Examples:
        >>> decode_mld(Syndrome.zero(3), DepolarizingNoise(0.05))
        LogicalBits(g1=0, g2=0, g3=0, g4=0)
    """
    tensor = exact_distribution(s, model, normalize=False)
    return LogicalBits.from_index(int(np.argmax(tensor.ravel())))


def logical_probabilities(tensor: np.ndarray) -> np.ndarray:
    """Marginals ``p(gamma_a = 1 | s)`` for ``a = 1..4``."""
    tensor = np.asarray(tensor).reshape(2, 2, 2, 2)
    tensor = tensor / tensor.sum()
    return np.array([tensor.sum(axis=tuple(k for k in range(4) if k != a))[1] for a in range(4)])


class ExactDecoder:
    """Batch front end to :func:`decode_mld` that memoises repeated syndromes."""

    def __init__(self, lattice: Lattice, model: NoiseModel):
        _check_capacity(lattice.L)
        self.lattice = lattice
        self.model = model
        self._cache = {}

    def decode(self, s: Syndrome) -> LogicalBits:
        key = s.to_bits().tobytes()
        if key not in self._cache:
            self._cache[key] = decode_mld(s, self.model)
        return self._cache[key]

    def decode_batch(self, sx: np.ndarray, sz: np.ndarray) -> np.ndarray:
        return np.array([self.decode(Syndrome(a, b)).index for a, b in zip(sx, sz)], dtype=np.int64)
