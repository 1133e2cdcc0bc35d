import itertools

import numpy as np
import pytest
import torch

from tests import random_errors, random_syndromes
from toric_workbench.exact import exact_distribution
from toric_workbench.lattice import Syndrome, logical_content, syndrome
from toric_workbench.noise import DepolarizingNoise
from toric_workbench.symmetry import (
    N_CLASSES,
    Translation,
    Twist,
    all_twists,
    apply_twist,
    class_permutation,
    delta,
    field_masks,
    translate_error,
    translate_syndrome,
    twist,
    twist_grid,
)


def defects(L, vertices=(), plaquettes=()):
    sx = np.zeros((L, L), dtype=np.uint8)
    sz = np.zeros((L, L), dtype=np.uint8)
    for r, c in vertices:
        sx[r, c] = 1
    for r, c in plaquettes:
        sz[r, c] = 1
    return Syndrome(sx, sz)


class TestTranslation:
    def test_reduced(self):
        assert Translation(-1, 7).reduced(5) == Translation(4, 2)

    def test_all(self):
        assert len(list(Translation.all(3))) == 9

    def test_full_turn_is_identity(self):
        s = random_syndromes(5, 1)[0]
        assert translate_syndrome(Translation(5, 5), s) == s

    def test_composition(self):
        s = random_syndromes(5, 1)[0]
        g, h = Translation(1, 3), Translation(2, 4)
        assert translate_syndrome(g + h, s) == translate_syndrome(g, translate_syndrome(h, s))

    def test_pullback_convention(self):
        s = defects(5, vertices=[(0, 0), (0, 1)])
        moved = translate_syndrome(Translation(1, 0), s)
        assert moved.sx[0, 4] == 1 and moved.sx[0, 0] == 1 and moved.sx.sum() == 2

    def test_syndrome_commutes_with_translation(self):
        for sample in random_errors(5, 10):
            for g in [Translation(1, 0), Translation(2, 3), Translation(4, 4)]:
                assert syndrome(translate_error(g, sample.error)) == translate_syndrome(g, sample.syndrome)


class TestTwist:
    def test_composition_is_xor(self):
        assert (Twist(0b0011) @ Twist(0b0101)).mask == 0b0110
        assert Twist(5).inverse() == Twist(5)

    def test_identity_translation_has_no_twist(self):
        for s in random_syndromes(5, 10):
            assert twist(Translation(0, 0), s) == Twist(0)

    def test_zero_syndrome_has_no_twist(self):
        s = Syndrome.zero(5)
        assert all(twist(g, s) == Twist(0) for g in Translation.all(5))

    def test_unit_right_shift_reads_column_zero(self):
        s = defects(5, vertices=[(1, 0), (3, 2)])
        assert delta(Translation(1, 0), s) == (0, 1, 0, 0)

    def test_unit_down_shift_reads_row_zero(self):
        s = defects(5, vertices=[(0, 2), (3, 2)])
        assert delta(Translation(0, 1), s) == (1, 0, 0, 0)

    def test_double_down_shift_reads_rows_zero_and_last(self):
        s = defects(5, plaquettes=[(4, 1), (2, 3)])
        assert delta(Translation(0, 2), s) == (0, 0, 0, 1)
        s = defects(5, plaquettes=[(4, 1), (3, 3)])
        assert delta(Translation(0, 2), s) == (0, 0, 0, 0)

    def test_mask_packing(self):
        s = defects(5, vertices=[(1, 0), (3, 2)])
        assert twist(Translation(1, 0), s).mask == 0b0100

    def test_translation_changes_logical_content_by_twist(self):
        for sample in random_errors(5, 20, seed=3):
            for g in [Translation(1, 0), Translation(0, 1), Translation(3, 2)]:
                moved = translate_error(-g, sample.error)
                mask = twist(g, sample.syndrome).mask
                assert logical_content(moved).index ^ mask == sample.logical.index

    def test_homomorphism_exhaustive_on_small_lattice(self):
        for s in random_syndromes(3, 20, seed=1):
            for g, h in itertools.product(Translation.all(3), repeat=2):
                assert twist(g + h, s) == twist(g, s) @ twist(h, translate_syndrome(-g, s))

    def test_factorization(self):
        for s in random_syndromes(7, 10):
            for g in Translation.all(7):
                assert twist(g, s) == twist(Translation(g.i, 0), s) @ twist(Translation(0, g.j), s)


class TestAllTwists:
    @pytest.mark.parametrize("L", [3, 5, 7])
    def test_matches_direct(self, L):
        for s in random_syndromes(L, 10, seed=L):
            direct = [[twist(Translation(i, j), s).mask for j in range(L)] for i in range(L)]
            assert all_twists(s).tolist() == direct

    def test_batched(self):
        syndromes = random_syndromes(5, 4)
        sx = np.stack([s.sx for s in syndromes])
        sz = np.stack([s.sz for s in syndromes])
        grid = twist_grid(sx, sz)
        assert grid.shape == (4, 5, 5)
        for s, g in zip(syndromes, grid):
            assert np.array_equal(g, all_twists(s))

    def test_field_masks_layout(self):
        s = random_syndromes(5, 1, seed=9)[0]
        masks = field_masks(s.sx, s.sz)
        for r, c in itertools.product(range(5), repeat=2):
            assert masks[r, c] == twist(Translation(-c, -r).reduced(5), s).mask


class TestApplyTwist:
    def test_permutation(self):
        assert class_permutation(0b0001).tolist()[:4] == [1, 0, 3, 2]

    def test_tensor_shapes(self):
        flat = np.arange(N_CLASSES, dtype=float)
        out = apply_twist(Twist(0b1000), flat)
        assert out[0] == 8 and out[8] == 0
        grid = apply_twist(Twist(0b1000), flat.reshape(2, 2, 2, 2))
        assert grid.shape == (2, 2, 2, 2)
        assert np.array_equal(grid.ravel(), out)

    def test_torch_batch(self):
        t = torch.arange(2 * N_CLASSES, dtype=torch.float32).reshape(2, N_CLASSES)
        out = apply_twist(Twist(3), t)
        assert out[1, 0].item() == 19.0

    def test_exact_invariance(self):
        noise = DepolarizingNoise(0.1)
        for s in random_syndromes(3, 5, seed=2):
            reference = exact_distribution(s, noise)
            for g in Translation.all(3):
                moved = exact_distribution(translate_syndrome(-g, s), noise)
                assert np.abs(apply_twist(twist(g, s), moved) - reference).max() <= 1e-12
