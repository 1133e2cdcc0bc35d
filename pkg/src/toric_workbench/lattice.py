"""Toric code geometry and Pauli algebra over F2.

Grids are indexed ``[row, col]`` with rows increasing downward and every
coordinate taken mod ``L``. Each unit cell ``(r, c)`` owns two edges: the
horizontal edge joining vertex ``(r, c)`` to ``(r, c + 1)`` and the vertical
edge joining ``(r, c)`` to ``(r + 1, c)``. Plaquette ``(r, c)`` is the face to
the bottom-right of vertex ``(r, c)``.

Edge-valued arrays have shape ``(..., 2, L, L)`` where the orientation axis is
:data:`HORIZONTAL` or :data:`VERTICAL`. The vectorised kernels
(:func:`syndrome_bits`, :func:`logical_bits`) accept any number of leading batch
axes, which is how the samplers and decoders use them.
"""
from typing import Iterator, NamedTuple, Tuple

import numpy as np
from scipy import sparse

from toric_workbench.errors import ParameterError, SizeMismatchError

HORIZONTAL = 0
VERTICAL = 1


def _frozen(array) -> np.ndarray:
    array = np.asarray(array, dtype=np.uint8) & 1
    array.setflags(write=False)
    return array


class LogicalBits(NamedTuple):
    """The logical content ``gamma = omega(E, (X1, X2, Z1, Z2))``.

    The joint class is addressed by the 4-bit integer ``index`` with ``g1`` the
    most significant bit, matching the C-order flattening of a ``2x2x2x2``
    logical tensor.

    Examples:
        >>> LogicalBits(0, 0, 1, 0).index
        2
        >>> LogicalBits.from_index(9)
        LogicalBits(g1=1, g2=0, g3=0, g4=1)
    """

    g1: int
    g2: int
    g3: int
    g4: int

    @property
    def index(self) -> int:
        return (self.g1 << 3) | (self.g2 << 2) | (self.g3 << 1) | self.g4

    @classmethod
    def from_index(cls, index: int) -> "LogicalBits":
        if not 0 <= index < 16:
            raise ParameterError(f"Logical class index must be in [0, 16), got {index}.")
        return cls((index >> 3) & 1, (index >> 2) & 1, (index >> 1) & 1, index & 1)

    def flip(self, mask: int) -> "LogicalBits":
        return self.from_index(self.index ^ mask)


class PauliError:
    """An element of the Pauli group on the lattice edges, phases discarded.

    Composition is elementwise XOR of both parts and is spelled ``a * b``.

    Examples:
        >>> lattice = Lattice(3)
        >>> e = lattice.stabilizer_x(0, 0)
        >>> e.weight
        4
        >>> (e * e).is_identity
        True
    """

    __slots__ = ("x", "z")

    def __init__(self, x, z):
        x = _frozen(x)
        z = _frozen(z)
        if x.shape != z.shape or x.ndim != 3 or x.shape[0] != 2 or x.shape[1] != x.shape[2]:
            raise SizeMismatchError(
                f"Expected X and Z parts of shape (2, L, L), got {x.shape} and {z.shape}."
            )
        self.x = x
        self.z = z

    @classmethod
    def identity(cls, L: int) -> "PauliError":
        return cls(np.zeros((2, L, L)), np.zeros((2, L, L)))

    @property
    def L(self) -> int:
        return self.x.shape[-1]

    @property
    def is_identity(self) -> bool:
        return not (self.x.any() or self.z.any())

    @property
    def support(self) -> np.ndarray:
        return self.x | self.z

    @property
    def weight(self) -> int:
        return int(self.support.sum())

    def __mul__(self, other: "PauliError") -> "PauliError":
        _check_same_size(self, other)
        return PauliError(self.x ^ other.x, self.z ^ other.z)

    def __eq__(self, other):
        if not isinstance(other, PauliError):
            return NotImplemented
        return self.L == other.L and np.array_equal(self.x, other.x) and np.array_equal(self.z, other.z)

    def __hash__(self):
        return hash((self.x.tobytes(), self.z.tobytes()))

    def __repr__(self):
        return f"PauliError(L={self.L}, x_edges={int(self.x.sum())}, z_edges={int(self.z.sum())})"


class Syndrome:
    """Vertex defects ``sx`` (X-stabilizer violations) and plaquette defects ``sz``.

    Examples:
        >>> s = Syndrome.zero(3)
        >>> s.is_valid, s.defect_count
        (True, 0)
        >>> Syndrome.from_bits(s.to_bits(), 3) == s
        True
    """

    __slots__ = ("sx", "sz")

    def __init__(self, sx, sz):
        sx = _frozen(sx)
        sz = _frozen(sz)
        if sx.shape != sz.shape or sx.ndim != 2 or sx.shape[0] != sx.shape[1]:
            raise SizeMismatchError(
                f"Expected sx and sz of shape (L, L), got {sx.shape} and {sz.shape}."
            )
        self.sx = sx
        self.sz = sz

    @classmethod
    def zero(cls, L: int) -> "Syndrome":
        return cls(np.zeros((L, L)), np.zeros((L, L)))

    @classmethod
    def from_bits(cls, bits, L: int) -> "Syndrome":
        """Build from ``2 L^2`` bits: ``sx`` row-major, then ``sz`` row-major."""
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.size != 2 * L * L:
            raise SizeMismatchError(f"Expected {2 * L * L} syndrome bits for L={L}, got {bits.size}.")
        return cls(bits[: L * L].reshape(L, L), bits[L * L :].reshape(L, L))

    def to_bits(self) -> np.ndarray:
        return np.concatenate([self.sx.ravel(), self.sz.ravel()])

    @property
    def L(self) -> int:
        return self.sx.shape[0]

    @property
    def is_valid(self) -> bool:
        return int(self.sx.sum()) % 2 == 0 and int(self.sz.sum()) % 2 == 0

    @property
    def defect_count(self) -> int:
        return int(self.sx.sum() + self.sz.sum())

    def stacked(self) -> np.ndarray:
        """The ``(2, L, L)`` channel layout fed to neural decoders."""
        return np.stack([self.sx, self.sz])

    def __eq__(self, other):
        if not isinstance(other, Syndrome):
            return NotImplemented
        return np.array_equal(self.sx, other.sx) and np.array_equal(self.sz, other.sz)

    def __hash__(self):
        return hash((self.L, self.sx.tobytes(), self.sz.tobytes()))

    def __repr__(self):
        return f"Syndrome(L={self.L}, sx_defects={int(self.sx.sum())}, sz_defects={int(self.sz.sum())})"


class Lattice:
    """An ``L x L`` torus with qubits on edges.

    Examples:
        >>> lattice = Lattice(3)
        >>> lattice.n_edges, lattice.n_vertices, lattice.n_plaquettes
        (18, 9, 9)
        >>> Lattice(4)
        Traceback (most recent call last):
        ...
        toric_workbench.errors.ParameterError: Lattice size must be an odd integer >= 3, got 4.
    """

    def __init__(self, L: int):
        if not isinstance(L, (int, np.integer)) or L < 3 or L % 2 == 0:
            raise ParameterError(f"Lattice size must be an odd integer >= 3, got {L}.")
        self.L = int(L)

    @property
    def n_edges(self) -> int:
        return 2 * self.L * self.L

    @property
    def n_vertices(self) -> int:
        return self.L * self.L

    @property
    def n_plaquettes(self) -> int:
        return self.L * self.L

    def coordinates(self) -> Iterator[Tuple[int, int]]:
        for r in range(self.L):
            for c in range(self.L):
                yield r, c

    def edge_index(self, r: int, c: int, orientation: int) -> int:
        """Flat index of an edge in the ``(2, L, L)`` row-major layout."""
        L = self.L
        return orientation * L * L + (r % L) * L + (c % L)

    def _grid(self, edges) -> np.ndarray:
        grid = np.zeros((2, self.L, self.L), dtype=np.uint8)
        for r, c, o in edges:
            grid[o, r % self.L, c % self.L] ^= 1
        return grid

    def vertex_edges(self, r: int, c: int):
        return [(r, c, HORIZONTAL), (r, c - 1, HORIZONTAL), (r, c, VERTICAL), (r - 1, c, VERTICAL)]

    def plaquette_edges(self, r: int, c: int):
        return [(r, c, HORIZONTAL), (r + 1, c, HORIZONTAL), (r, c, VERTICAL), (r, c + 1, VERTICAL)]

    def stabilizer_x(self, r: int, c: int) -> PauliError:
        """Bit flips on the four edges meeting at vertex ``(r, c)``."""
        return PauliError(self._grid(self.vertex_edges(r, c)), np.zeros((2, self.L, self.L)))

    def stabilizer_z(self, r: int, c: int) -> PauliError:
        """Phase flips on the four edges around plaquette ``(r, c)``."""
        return PauliError(np.zeros((2, self.L, self.L)), self._grid(self.plaquette_edges(r, c)))

    def stabilizers(self) -> Iterator[PauliError]:
        for r, c in self.coordinates():
            yield self.stabilizer_x(r, c)
        for r, c in self.coordinates():
            yield self.stabilizer_z(r, c)

    def logical_operators(self) -> Tuple[PauliError, PauliError, PauliError, PauliError]:
        """``(X1, X2, Z1, Z2)`` along the non-contractible cycles through row and column 0.

        ``Z1`` runs down primal column 0, ``Z2`` along primal row 0, ``X1`` along
        the dual row just below row 0 and ``X2`` down the dual column just right
        of column 0.
        """
        L = self.L
        empty = np.zeros((2, L, L))
        x1 = self._grid((0, c, VERTICAL) for c in range(L))
        x2 = self._grid((r, 0, HORIZONTAL) for r in range(L))
        z1 = self._grid((r, 0, VERTICAL) for r in range(L))
        z2 = self._grid((0, c, HORIZONTAL) for c in range(L))
        return (
            PauliError(x1, empty),
            PauliError(x2, empty),
            PauliError(empty, z1),
            PauliError(empty, z2),
        )

    def check_matrices(self) -> Tuple[sparse.csr_matrix, sparse.csr_matrix]:
        """Vertex-by-edge and plaquette-by-edge incidence matrices over F2.

        The first detects Z errors (it is the X-stabilizer check matrix), the
        second detects X errors. Rows follow the row-major vertex/plaquette order,
        columns follow :meth:`edge_index`.
        """
        rows_x, cols_x, rows_z, cols_z = [], [], [], []
        for r, c in self.coordinates():
            row = r * self.L + c
            for edge in self.vertex_edges(r, c):
                rows_x.append(row)
                cols_x.append(self.edge_index(*edge))
            for edge in self.plaquette_edges(r, c):
                rows_z.append(row)
                cols_z.append(self.edge_index(*edge))
        shape = (self.n_vertices, self.n_edges)
        data = np.ones(len(rows_x), dtype=np.uint8)
        hx = sparse.csr_matrix((data, (rows_x, cols_x)), shape=shape)
        hz = sparse.csr_matrix((data, (rows_z, cols_z)), shape=shape)
        return hx, hz

    def __eq__(self, other):
        if not isinstance(other, Lattice):
            return NotImplemented
        return self.L == other.L

    def __hash__(self):
        return hash(self.L)

    def __repr__(self):
        return f"Lattice(L={self.L})"


def _check_same_size(a, b):
    if a.L != b.L:
        raise SizeMismatchError(f"Operands live on different lattices: L={a.L} and L={b.L}.")


def symplectic_product(a: PauliError, b: PauliError) -> int:
    """Return 1 when ``a`` and ``b`` anticommute, else 0.

    Examples:
        >>> x1, x2, z1, z2 = Lattice(3).logical_operators()
        >>> symplectic_product(x1, z1), symplectic_product(x1, z2)
        (1, 0)
    """
    _check_same_size(a, b)
    overlaps = np.count_nonzero(a.x & b.z) + np.count_nonzero(a.z & b.x)
    return int(overlaps % 2)


def syndrome_bits(x: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised syndrome of edge arrays shaped ``(..., 2, L, L)``."""
    zh, zv = z[..., HORIZONTAL, :, :], z[..., VERTICAL, :, :]
    xh, xv = x[..., HORIZONTAL, :, :], x[..., VERTICAL, :, :]
    sx = zh ^ np.roll(zh, 1, axis=-1) ^ zv ^ np.roll(zv, 1, axis=-2)
    sz = xh ^ np.roll(xh, -1, axis=-2) ^ xv ^ np.roll(xv, -1, axis=-1)
    return sx, sz


def logical_bits(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Vectorised logical content of edge arrays shaped ``(..., 2, L, L)``.

    Returns an array of shape ``(..., 4)`` holding ``(g1, g2, g3, g4)``.
    """
    g1 = z[..., VERTICAL, 0, :].sum(axis=-1)
    g2 = z[..., HORIZONTAL, :, 0].sum(axis=-1)
    g3 = x[..., VERTICAL, :, 0].sum(axis=-1)
    g4 = x[..., HORIZONTAL, 0, :].sum(axis=-1)
    return (np.stack([g1, g2, g3, g4], axis=-1) % 2).astype(np.uint8)


def class_indices(bits: np.ndarray) -> np.ndarray:
    """Collapse ``(..., 4)`` logical bits into joint class indices."""
    bits = np.asarray(bits, dtype=np.int64)
    return (bits[..., 0] << 3) | (bits[..., 1] << 2) | (bits[..., 2] << 1) | bits[..., 3]


def syndrome(e: PauliError) -> Syndrome:
    """The stabilizer violations of ``e``.

    Examples:
        >>> lattice = Lattice(3)
        >>> z = np.zeros((2, 3, 3)); z[HORIZONTAL, 0, 0] = 1
        >>> s = syndrome(PauliError(np.zeros((2, 3, 3)), z))
        >>> [tuple(int(i) for i in v) for v in np.argwhere(s.sx)]
        [(0, 0), (0, 1)]
    """
    return Syndrome(*syndrome_bits(e.x, e.z))


def logical_content(e: PauliError) -> LogicalBits:
    """``omega(e, L_a)`` for ``L = (X1, X2, Z1, Z2)``.

    Examples:
        >>> x1, _, _, _ = Lattice(3).logical_operators()
        >>> logical_content(x1)
        LogicalBits(g1=0, g2=0, g3=1, g4=0)
    """
    return LogicalBits(*(int(b) for b in logical_bits(e.x, e.z)))
