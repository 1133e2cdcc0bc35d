import logging
import sys

import numpy as np
import pytest

from tests import random_syndromes, single_edge
from toric_workbench import decoders  # noqa: F401
from toric_workbench.errors import InvalidSyndromeError, ParameterError
from toric_workbench.harness import evaluate
from toric_workbench.lattice import (
    HORIZONTAL,
    VERTICAL,
    Lattice,
    LogicalBits,
    PauliError,
    Syndrome,
    logical_content,
    syndrome,
)
from toric_workbench.matching import (
    DefectGraph,
    MatchingDecoder,
    brute_force_matching,
    geodesic_edges,
    matching_weight,
    min_weight_matching,
    mwpm_correction,
    mwpm_decode,
    resolve_backend,
    torus_distance,
)
from toric_workbench.noise import stream


class TestDistances:
    def test_wraps(self):
        assert torus_distance((0, 0), (4, 4), 5) == 2
        assert torus_distance((0, 0), (2, 2), 5) == 4
        assert torus_distance((3, 1), (3, 1), 5) == 0

    @pytest.mark.parametrize("dual", [False, True])
    def test_geodesic_length(self, dual):
        rng = stream(1)
        for _ in range(50):
            a = tuple(int(v) for v in rng.integers(0, 7, size=2))
            b = tuple(int(v) for v in rng.integers(0, 7, size=2))
            assert len(geodesic_edges(a, b, 7, dual=dual)) == torus_distance(a, b, 7)

    def test_ties_go_forward(self):
        assert geodesic_edges((0, 0), (0, 2), 4) == [(0, 0, HORIZONTAL), (0, 1, HORIZONTAL)]


class TestDefectGraph:
    def test_odd_defects(self):
        with pytest.raises(InvalidSyndromeError):
            DefectGraph(5, ((0, 0),))

    def test_bad_k(self):
        with pytest.raises(ParameterError):
            DefectGraph(5, ((0, 0), (1, 1)), k=0)

    def test_complete_edges(self):
        graph = DefectGraph(5, ((0, 0), (0, 1), (2, 2), (3, 3)))
        assert len(graph.edges) == 6

    def test_sparsified_fallback(self, caplog):
        nodes = ((0, 0), (0, 1), (0, 2), (4, 1))
        graph = DefectGraph(9, nodes, k=1)
        with caplog.at_level(logging.WARNING):
            pairing = min_weight_matching(graph)
        assert sorted(v for pair in pairing for v in pair) == [0, 1, 2, 3]
        assert matching_weight(graph, pairing) == 6
        assert "no perfect matching" in caplog.text


class TestBlossom:
    def test_matches_exhaustive_search(self):
        rng = stream(2)
        cells = [(r, c) for r in range(7) for c in range(7)]
        for _ in range(60):
            count = 2 * int(rng.integers(1, 6))
            picked = sorted(rng.choice(len(cells), size=count, replace=False))
            graph = DefectGraph(7, tuple(cells[i] for i in picked))
            assert matching_weight(graph, min_weight_matching(graph)) == brute_force_matching(graph)

    def test_empty(self):
        assert min_weight_matching(DefectGraph(3, ())) == []


class TestMwpm:
    def test_correction_clears_syndrome(self):
        for s in random_syndromes(7, 20):
            assert syndrome(mwpm_correction(s)) == s

    @pytest.mark.parametrize("orientation", [HORIZONTAL, VERTICAL])
    @pytest.mark.parametrize("pauli", ["x", "z"])
    def test_single_errors_are_corrected(self, orientation, pauli):
        L = 5
        for r in range(L):
            for c in range(L):
                error = PauliError(*single_edge(L, orientation, r, c, pauli=pauli))
                s = syndrome(error)
                assert mwpm_decode(s) == logical_content(error)
                assert logical_content(mwpm_correction(s) * error) == LogicalBits(0, 0, 0, 0)

    def test_invalid(self):
        sx = np.zeros((3, 3))
        sx[0, 0] = 1
        with pytest.raises(InvalidSyndromeError):
            mwpm_correction(Syndrome(sx, np.zeros((3, 3))))


class TestMatchingDecoder:
    def test_unknown_backend(self):
        with pytest.raises(ParameterError) as e:
            MatchingDecoder(Lattice(3), backend="greedy")
        assert "blossom, pymatching" in str(e.value)

    def test_batch(self):
        syndromes = random_syndromes(5, 10, p=0.05)
        decoder = MatchingDecoder(Lattice(5))
        decoded = decoder.decode_batch(np.stack([s.sx for s in syndromes]), np.stack([s.sz for s in syndromes]))
        assert decoded.tolist() == [mwpm_decode(s).index for s in syndromes]

    def test_pymatching_backend(self):
        pytest.importorskip("pymatching")
        L = 5
        decoder = MatchingDecoder(Lattice(L), backend="pymatching")
        sx, sz = [], []
        for orientation in (HORIZONTAL, VERTICAL):
            for pauli in ("x", "z"):
                s = syndrome(PauliError(*single_edge(L, orientation, 2, 3, pauli=pauli)))
                sx.append(s.sx)
                sz.append(s.sz)
        assert decoder.decode_batch(np.stack(sx), np.stack(sz)).tolist() == [0, 0, 0, 0]

    def test_pymatching_corrects_single_errors(self):
        pytest.importorskip("pymatching")
        L = 5
        decoder = MatchingDecoder(Lattice(L), backend="pymatching")
        errors = [
            PauliError(*single_edge(L, orientation, r, c, pauli=pauli))
            for orientation in (HORIZONTAL, VERTICAL)
            for pauli in ("x", "z")
            for r in range(L)
            for c in range(L)
        ]
        syndromes = [syndrome(e) for e in errors]
        decoded = decoder.decode_batch(np.stack([s.sx for s in syndromes]), np.stack([s.sz for s in syndromes]))
        assert decoded.tolist() == [logical_content(e).index for e in errors]

    def test_pymatching_agrees_with_blossom(self):
        pytest.importorskip("pymatching")
        syndromes = random_syndromes(7, 40, p=0.05, seed=9)
        sx, sz = np.stack([s.sx for s in syndromes]), np.stack([s.sz for s in syndromes])
        blossom = MatchingDecoder(Lattice(7), backend="blossom").decode_batch(sx, sz)
        fast = MatchingDecoder(Lattice(7), backend="pymatching").decode_batch(sx, sz)
        assert np.mean(blossom == fast) >= 0.9


class TestResolveBackend:
    def test_explicit(self):
        assert resolve_backend("blossom") == "blossom"

    def test_unknown(self):
        with pytest.raises(ParameterError):
            resolve_backend("greedy")

    def test_auto_prefers_pymatching(self):
        pytest.importorskip("pymatching")
        assert resolve_backend("auto") == "pymatching"
        assert MatchingDecoder(Lattice(3), backend="auto").backend == "pymatching"

    def test_auto_falls_back(self, monkeypatch, caplog):
        monkeypatch.setitem(sys.modules, "pymatching", None)
        with caplog.at_level(logging.WARNING):
            assert resolve_backend("auto") == "blossom"
        assert "pymatching is not installed" in caplog.text


@pytest.mark.slow
def test_backends_reach_the_same_accuracy():
    pytest.importorskip("pymatching")
    blossom = evaluate("mwpm", 7, 0.12, 2000, seed=5, matcher="blossom")
    fast = evaluate("mwpm", 7, 0.12, 2000, seed=5, matcher="pymatching")
    assert abs(blossom.p_acc - fast.p_acc) <= 2 * max(blossom.std_err, fast.std_err)
