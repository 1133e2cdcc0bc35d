"""Minimum-weight perfect matching baseline.

Vertex defects and plaquette defects are matched independently on the torus
with an exact blossom matching; every matched pair is joined by a fixed
geodesic. The correction's logical content is the decoded class.
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from toric_workbench.errors import InvalidSyndromeError, ParameterError
from toric_workbench.lattice import (
    HORIZONTAL,
    VERTICAL,
    Lattice,
    LogicalBits,
    PauliError,
    Syndrome,
    class_indices,
    logical_bits,
    logical_content,
)

logger = logging.getLogger(__name__)

Coordinate = Tuple[int, int]
Pairing = List[Tuple[int, int]]

BACKENDS = ("auto", "blossom", "pymatching")


def torus_distance(a: Coordinate, b: Coordinate, L: int) -> int:
    """Manhattan distance with wrap-around on both axes.

    Examples:
        >>> torus_distance((0, 0), (0, 4), 5), torus_distance((1, 1), (3, 2), 5)
        (1, 3)
    """
    dr = abs(a[0] - b[0]) % L
    dc = abs(a[1] - b[1]) % L
    return min(dr, L - dr) + min(dc, L - dc)


@dataclass(frozen=True)
class DefectGraph:
    """Defects of one species with torus distances as edge weights.

    With ``k`` set, each defect is only joined to its ``k`` nearest neighbours;
    the default is the complete graph.
    """

    L: int
    nodes: Tuple[Coordinate, ...]
    k: Optional[int] = None
    edges: Tuple[Tuple[int, int, int], ...] = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.nodes) % 2:
            raise InvalidSyndromeError(f"Cannot perfectly match an odd number ({len(self.nodes)}) of defects.")
        if self.k is not None and self.k < 1:
            raise ParameterError(f"Sparsification needs k >= 1 neighbours, got {self.k}.")
        object.__setattr__(self, "edges", tuple(self._build_edges()))

    @classmethod
    def from_grid(cls, grid: np.ndarray, k: Optional[int] = None) -> "DefectGraph":
        nodes = tuple((int(r), int(c)) for r, c in np.argwhere(grid))
        return cls(grid.shape[-1], nodes, k)

    def weight(self, u: int, v: int) -> int:
        return torus_distance(self.nodes[u], self.nodes[v], self.L)

    def _build_edges(self):
        n = len(self.nodes)
        if self.k is None or self.k >= n - 1:
            for u, v in itertools.combinations(range(n), 2):
                yield u, v, self.weight(u, v)
            return

        chosen = set()
        for u in range(n):
            nearest = sorted((self.weight(u, v), v) for v in range(n) if v != u)[: self.k]
            chosen.update((min(u, v), max(u, v)) for _, v in nearest)
        for u, v in sorted(chosen):
            yield u, v, self.weight(u, v)

    def complete(self) -> "DefectGraph":
        return DefectGraph(self.L, self.nodes)


def matching_weight(graph: DefectGraph, pairing: Pairing) -> int:
    return sum(graph.weight(u, v) for u, v in pairing)


def min_weight_matching(graph: DefectGraph) -> Pairing:
    """An exact minimum-weight perfect matching, pairs sorted by first node.

    Weights are flipped to ``(max + 1) - w`` so the maximum-cardinality
    maximum-weight blossom matching is the minimum-weight perfect matching.

    Examples:
        >>> min_weight_matching(DefectGraph(5, ((0, 0), (0, 1), (2, 2), (2, 4))))
        [(0, 1), (2, 3)]
    """
    n = len(graph.nodes)
    if n == 0:
        return []

    ceiling = max(w for _, _, w in graph.edges) + 1
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_weighted_edges_from((u, v, ceiling - w) for u, v, w in graph.edges)
    matched = nx.max_weight_matching(g, maxcardinality=True)

    if 2 * len(matched) != n:
        logger.warning(
            "Sparsified defect graph (k=%s) has no perfect matching over %d defects; retrying on the complete graph.",
            graph.k,
            n,
        )
        return min_weight_matching(graph.complete())
    return sorted((min(u, v), max(u, v)) for u, v in matched)


def _steps(start: int, stop: int, L: int) -> Tuple[int, int]:
    """Direction (+1/-1) and count of the shorter wrap from ``start`` to ``stop``; ties go forward."""
    forward = (stop - start) % L
    if forward <= L - forward:
        return 1, forward
    return -1, L - forward


def geodesic_edges(a: Coordinate, b: Coordinate, L: int, dual: bool = False) -> List[Tuple[int, int, int]]:
    """Edges ``(r, c, orientation)`` of the path joining two defects.

    The horizontal leg runs first along ``a``'s row, then the vertical leg along
    ``b``'s column. On the dual lattice the path joins plaquettes and the listed
    edges are the ones it crosses.

    Examples:
        >>> geodesic_edges((0, 0), (1, 4), 5)
        [(0, 4, 0), (0, 4, 1)]
    """
    (r, c), (r_end, c_end) = a, b
    edges = []
    step, count = _steps(c, c_end, L)
    for _ in range(count):
        if dual:
            edges.append((r, (c + 1) % L if step > 0 else c, VERTICAL))
        else:
            edges.append((r, c if step > 0 else (c - 1) % L, HORIZONTAL))
        c = (c + step) % L
    step, count = _steps(r, r_end, L)
    for _ in range(count):
        if dual:
            edges.append(((r + 1) % L if step > 0 else r, c, HORIZONTAL))
        else:
            edges.append((r if step > 0 else (r - 1) % L, c, VERTICAL))
        r = (r + step) % L
    return edges


def _correction_grid(graph: DefectGraph, pairing: Pairing, dual: bool) -> np.ndarray:
    L = graph.L
    grid = np.zeros((2, L, L), dtype=np.uint8)
    for u, v in pairing:
        for r, c, o in geodesic_edges(graph.nodes[u], graph.nodes[v], L, dual=dual):
            grid[o, r, c] ^= 1
    return grid


def mwpm_correction(s: Syndrome, k: Optional[int] = None) -> PauliError:
    """Z corrections joining vertex defects and X corrections joining plaquette defects."""
    if not s.is_valid:
        raise InvalidSyndromeError("Syndrome has odd defect parity; no perfect matching exists.")
    vertex_graph = DefectGraph.from_grid(s.sx, k)
    plaquette_graph = DefectGraph.from_grid(s.sz, k)
    z = _correction_grid(vertex_graph, min_weight_matching(vertex_graph), dual=False)
    x = _correction_grid(plaquette_graph, min_weight_matching(plaquette_graph), dual=True)
    return PauliError(x, z)


def resolve_backend(backend: str) -> str:
    """Pick ``pymatching`` for ``auto`` when it can be imported, ``blossom`` otherwise."""
    if backend not in BACKENDS:
        raise ParameterError(f"Unknown matching backend '{backend}'. Available backends: {', '.join(BACKENDS)}.")
    if backend != "auto":
        return backend
    try:
        import pymatching  # noqa: F401
    except ImportError:
        logger.warning("pymatching is not installed; matching with networkx blossom, which is slow for large L.")
        return "blossom"
    return "pymatching"


def mwpm_decode(s: Syndrome, k: Optional[int] = None) -> LogicalBits:
    """Logical content of the matching correction.

    Examples:
        >>> mwpm_decode(Syndrome.zero(5))
        LogicalBits(g1=0, g2=0, g3=0, g4=0)
    """
    return logical_content(mwpm_correction(s, k))


class MatchingDecoder:
    """Batch MWPM decoding with a selectable matching backend.

    ``blossom`` matches every syndrome's :class:`DefectGraph` with networkx.
    ``pymatching`` runs sparse blossom on the lattice matching graph, where
    shortest paths have the same torus lengths; corrections may differ from
    ``blossom`` on degenerate ties. ``auto`` uses ``pymatching`` when it is
    installed.
    """

    def __init__(self, lattice: Lattice, backend: str = "blossom", k: Optional[int] = None):
        self.lattice = lattice
        self.backend = resolve_backend(backend)
        self.k = k
        self._matchers = None
        if self.backend == "pymatching":
            import pymatching

            hx, hz = lattice.check_matrices()
            self._matchers = (pymatching.Matching(hx), pymatching.Matching(hz))

    def decode_batch(self, sx: np.ndarray, sz: np.ndarray) -> np.ndarray:
        if self._matchers is None:
            return np.array([mwpm_decode(Syndrome(a, b), self.k).index for a, b in zip(sx, sz)], dtype=np.int64)

        n, L = sx.shape[0], self.lattice.L
        vertex_matcher, plaquette_matcher = self._matchers
        z = vertex_matcher.decode_batch(sx.reshape(n, -1)).reshape(n, 2, L, L).astype(np.uint8)
        x = plaquette_matcher.decode_batch(sz.reshape(n, -1)).reshape(n, 2, L, L).astype(np.uint8)
        return class_indices(logical_bits(x, z))


def brute_force_matching(graph: DefectGraph) -> int:
    """Minimum total weight over every perfect matching; exponential, for checks only."""

    def best(remaining: Sequence[int]) -> int:
        if not remaining:
            return 0
        first, rest = remaining[0], remaining[1:]
        return min(
            graph.weight(first, partner) + best(rest[:i] + rest[i + 1 :]) for i, partner in enumerate(rest)
        )

    return best(tuple(range(len(graph.nodes))))
