"""Translation symmetry of the maximum likelihood decoder.

A translation ``g = (i, j)`` shifts the lattice ``i`` columns to the right and
``j`` rows down. It acts on syndromes and errors by pullback,
``(g . s)[v] = s[v + g]``, so ``g^-1 . s`` is ``s`` rolled forward by ``g``.

Translating a logical operator returns the same logical times a strip of
stabilizers, so the logical content of a translated error differs from the
original by the syndrome parity over that strip. That parity is the twist mask:

    p(s)[gamma] == p(g^-1 . s)[gamma ^ twist(g, s).mask]

Every mask depends on the syndrome only through its row and column parities,
which is what makes :func:`all_twists` linear in the number of group elements.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from toric_workbench.lattice import PauliError, Syndrome

N_CLASSES = 16


@dataclass(frozen=True)
class Translation:
    """An element of ``Z_L x Z_L``; ``i`` is the right shift, ``j`` the down shift.

    Examples:
        >>> Translation(1, 2) + Translation(3, 4)
        Translation(i=4, j=6)
        >>> -Translation(1, 2)
        Translation(i=-1, j=-2)
    """

    i: int = 0
    j: int = 0

    def __add__(self, other: "Translation") -> "Translation":
        return Translation(self.i + other.i, self.j + other.j)

    def __neg__(self) -> "Translation":
        return Translation(-self.i, -self.j)

    def reduced(self, L: int) -> "Translation":
        return Translation(self.i % L, self.j % L)

    @classmethod
    def all(cls, L: int):
        for i in range(L):
            for j in range(L):
                yield cls(i, j)


@dataclass(frozen=True)
class Twist:
    """XOR mask acting on logical tensor indices; ``mask`` bit 3 is ``g1``.

    Examples:
        >>> (Twist(0b1010) @ Twist(0b0110)).mask
        12
        >>> Twist(0b1010).bits
        (1, 0, 1, 0)
    """

    mask: int = 0

    def __matmul__(self, other: "Twist") -> "Twist":
        return Twist(self.mask ^ other.mask)

    @property
    def bits(self) -> Tuple[int, int, int, int]:
        return tuple((self.mask >> shift) & 1 for shift in (3, 2, 1, 0))  # type: ignore

    def inverse(self) -> "Twist":
        return self


def translate_syndrome(g: Translation, s: Syndrome) -> Syndrome:
    shift = (-g.j, -g.i)
    return Syndrome(np.roll(s.sx, shift, axis=(0, 1)), np.roll(s.sz, shift, axis=(0, 1)))


def translate_error(g: Translation, e: PauliError) -> PauliError:
    shift = (-g.j, -g.i)
    return PauliError(np.roll(e.x, shift, axis=(1, 2)), np.roll(e.z, shift, axis=(1, 2)))


def _strip_parities(sx: np.ndarray, sz: np.ndarray):
    """Prefix parities of the strips swept by 0..L-1 unit translations.

    Returns four ``(..., L)`` arrays ``(d1, d2, d3, d4)`` where ``d2[..., i]`` and
    ``d3[..., i]`` belong to a right shift by ``i`` and ``d1[..., j]``,
    ``d4[..., j]`` to a down shift by ``j``.
    """
    L = sx.shape[-1]
    k = np.arange(L)
    col_x = sx.sum(axis=-2)
    col_z = sz.sum(axis=-2)
    row_x = sx.sum(axis=-1)
    row_z = sz.sum(axis=-1)

    def prefix(lines, offsets):
        swept = np.take(lines, offsets % L, axis=-1)
        exclusive = np.cumsum(swept, axis=-1) - swept
        return (exclusive % 2).astype(np.int64)

    d1 = prefix(row_x, -k)
    d2 = prefix(col_x, -k)
    d3 = prefix(col_z, -1 - k)
    d4 = prefix(row_z, -1 - k)
    return d1, d2, d3, d4


def delta(g: Translation, s: Syndrome) -> Tuple[int, int, int, int]:
    """The four strip parities of ``g`` evaluated on ``g^-1 . s``, expressed in ``s``.

    A right shift by ``i`` sums the vertex columns ``0, -1, .., 1 - i`` into the
    second entry and the plaquette columns ``-1, .., -i`` into the third; a down
    shift by ``j`` does the same with rows into the first and fourth entries.

    Examples:
        >>> delta(Translation(0, 3), Syndrome.zero(3))
        (0, 0, 0, 0)
    """
    L = s.L
    i, j = g.i % L, g.j % L
    return (
        _sweep(s.sx.sum(axis=1), -np.arange(j)),
        _sweep(s.sx.sum(axis=0), -np.arange(i)),
        _sweep(s.sz.sum(axis=0), -1 - np.arange(i)),
        _sweep(s.sz.sum(axis=1), -1 - np.arange(j)),
    )


def _sweep(lines: np.ndarray, offsets: np.ndarray) -> int:
    return int(np.take(lines, offsets % lines.shape[-1]).sum() % 2)


def _pack(d1, d2, d3, d4):
    return (d1 << 3) | (d2 << 2) | (d3 << 1) | d4


def twist(g: Translation, s: Syndrome) -> Twist:
    """``M_g(s)`` restricted to translations.

    Examples:
        >>> twist(Translation(0, 0), Syndrome.zero(5))
        Twist(mask=0)
    """
    return Twist(_pack(*delta(g, s)))


def twist_grid(sx: np.ndarray, sz: np.ndarray) -> np.ndarray:
    """Masks of every translation at once, batched over leading axes.

    ``grid[..., i, j]`` is the mask of ``Translation(i, j)``.
    """
    d1, d2, d3, d4 = _strip_parities(sx, sz)
    horizontal = _pack(0, d2, d3, 0)[..., :, None]
    vertical = _pack(d1, 0, 0, d4)[..., None, :]
    return horizontal | vertical


def all_twists(s: Syndrome) -> np.ndarray:
    """``(L, L)`` integer masks with ``grid[i, j] == twist(Translation(i, j), s).mask``."""
    return twist_grid(s.sx, s.sz)


def field_masks(sx: np.ndarray, sz: np.ndarray) -> np.ndarray:
    """Masks laid out on lattice positions for a translation-equivariant field.

    A convolutional field responds to ``g^-1 . s`` by rolling forward by ``g``,
    so the group element ``h = (i, j)`` lives at position ``(-j, -i)``. Entry
    ``[..., r, c]`` is the mask of ``Translation(-c, -r)``.
    """
    grid = twist_grid(sx, sz)
    L = grid.shape[-1]
    flip = (-np.arange(L)) % L
    return np.swapaxes(grid[..., flip, :][..., :, flip], -1, -2)


def class_permutation(mask: int) -> np.ndarray:
    return np.arange(N_CLASSES) ^ mask


def apply_twist(m: Twist, t):
    """Permute logical tensor entries: ``out[gamma] = t[gamma ^ mask]``.

    ``t`` may be a numpy array or a torch tensor with trailing shape ``(16,)`` or
    ``(2, 2, 2, 2)``.

    Examples:
        >>> t = np.zeros(16); t[0] = 1.0
        >>> int(np.argmax(apply_twist(Twist(0b1000), t)))
        8
    """
    index = class_permutation(m.mask).tolist()
    shape = tuple(t.shape)
    if shape[-4:] == (2, 2, 2, 2):
        flat = t.reshape(shape[:-4] + (N_CLASSES,))
        return flat[..., index].reshape(shape)
    return t[..., index]
