import math

import numpy as np
import pytest
import torch
from torch import nn
from torch.autograd import gradcheck
from torch.func import functional_call

from tests import random_errors, random_syndromes
from toric_workbench.errors import ParameterError, SizeMismatchError
from toric_workbench.lattice import Lattice
from toric_workbench.neural import (
    EncodedBatch,
    ModelConfig,
    NeuralDecoder,
    TwistedPool,
    build_model,
    encode,
    forward_body,
    loss,
    predict,
    twisted_pool,
)
from toric_workbench.symmetry import Translation, apply_twist, translate_syndrome, twist

SMALL = dict(channels=(8, 8), depth=1)


def stack(syndromes):
    return np.stack([s.sx for s in syndromes]), np.stack([s.sz for s in syndromes])


def invariance_gap(model, L, n=5, dtype=torch.float32):
    worst = 0.0
    for s in random_syndromes(L, n, seed=L):
        group = list(Translation.all(L))
        moved = [translate_syndrome(-g, s) for g in group]
        with torch.no_grad():
            reference = predict(model, encode(s.sx, s.sz, dtype=dtype))[0]
            outputs = predict(model, encode(*stack(moved), dtype=dtype))
        for g, out in zip(group, outputs):
            worst = max(worst, float((apply_twist(twist(g, s), out) - reference).abs().max()))
    return worst


class TestModelConfig:
    def test_unknown_pooling(self):
        with pytest.raises(ParameterError) as e:
            ModelConfig(pooling="max")
        assert "twisted, average, flatten" in str(e.value)

    def test_flatten_needs_size(self):
        with pytest.raises(ParameterError):
            ModelConfig(pooling="flatten")

    def test_even_kernel(self):
        with pytest.raises(ParameterError):
            ModelConfig(kernel_size=2)

    def test_channels(self):
        with pytest.raises(ParameterError):
            ModelConfig(channels=())


class TestInvariance:
    @pytest.mark.parametrize("L", [3, 5, 7])
    def test_twisted_pooling_is_invariant(self, L):
        torch.manual_seed(0)
        model = build_model(ModelConfig(**SMALL))
        assert invariance_gap(model, L) <= 1e-5

    def test_invariant_with_batch_norm(self):
        torch.manual_seed(1)
        model = build_model(ModelConfig(batch_norm=True, **SMALL)).eval()
        assert invariance_gap(model, 5) <= 1e-5

    def test_average_pooling_is_not(self):
        torch.manual_seed(0)
        model = build_model(ModelConfig(pooling="average", **SMALL))
        assert invariance_gap(model, 5) > 1e-5

    def test_decoded_class_is_equivariant(self):
        torch.manual_seed(2)
        model = build_model(ModelConfig(**SMALL), dtype=torch.float64)
        decoder = NeuralDecoder(Lattice(5), model)
        for s in random_syndromes(5, 5, seed=3):
            group = list(Translation.all(5))
            moved = [translate_syndrome(-g, s) for g in group]
            reference = decoder.decode_batch(s.sx[None], s.sz[None])[0]
            decoded = decoder.decode_batch(*stack(moved))
            for g, d in zip(group, decoded):
                assert d ^ twist(g, s).mask == reference


class TestShapes:
    def test_size_transfer(self):
        torch.manual_seed(0)
        model = build_model(ModelConfig(**SMALL))
        for L in (3, 9):
            batch = encode(*stack(random_syndromes(L, 4)))
            assert predict(model, batch).shape == (4, 16)

    def test_flatten_refuses_other_sizes(self):
        model = build_model(ModelConfig(pooling="flatten", L=3, **SMALL))
        assert predict(model, encode(*stack(random_syndromes(3, 2)))).shape == (2, 16)
        with pytest.raises(SizeMismatchError):
            model(*_inputs(random_syndromes(5, 2)))

    def test_probabilities_sum_to_one(self):
        model = build_model(ModelConfig(**SMALL))
        out = predict(model, encode(*stack(random_syndromes(5, 6))))
        assert torch.allclose(out.sum(dim=-1), torch.ones(6))

    def test_body_shape(self):
        model = build_model(ModelConfig(**SMALL))
        batch = encode(*stack(random_syndromes(5, 3)))
        field = forward_body(model, batch.syndromes)
        assert field.shape == (3, 16, 5, 5)
        pooled = twisted_pool(field, *stack(random_syndromes(5, 3)))
        assert pooled.shape == (3, 16)

    def test_body_commutes_with_shifts(self):
        model = build_model(ModelConfig(**SMALL), dtype=torch.float64)
        syndromes = encode(*stack(random_syndromes(5, 2)), dtype=torch.float64).syndromes
        with torch.no_grad():
            field = forward_body(model, syndromes)
            for shift in [(1, 0), (0, 2), (3, 4)]:
                moved = forward_body(model, torch.roll(syndromes, shifts=shift, dims=(2, 3)))
                assert torch.allclose(moved, torch.roll(field, shifts=shift, dims=(2, 3)), atol=1e-12)

    def test_constant_input_gives_constant_field(self):
        model = build_model(ModelConfig(**SMALL), dtype=torch.float64)
        with torch.no_grad():
            field = forward_body(model, torch.ones(1, 2, 5, 5, dtype=torch.float64))
        assert torch.allclose(field, field[:, :, :1, :1].expand_as(field), atol=1e-12)

    def test_body_rejects_bad_input(self):
        model = build_model(ModelConfig(**SMALL))
        with pytest.raises(SizeMismatchError):
            forward_body(model, torch.zeros(2, 3, 5, 5))

    def test_pool_rejects_mismatched_masks(self):
        with pytest.raises(SizeMismatchError):
            TwistedPool()(torch.zeros(2, 16, 5, 5), torch.zeros(2, 3, 3, dtype=torch.long))


def _inputs(syndromes):
    batch = encode(*stack(syndromes))
    return batch.syndromes, batch.masks


class TestLoss:
    def test_uniform_prediction(self):
        model = build_model(ModelConfig(**SMALL))
        nn.init.zeros_(model.body.head.weight)
        nn.init.zeros_(model.body.head.bias)
        data = random_errors(5, 8)
        batch = encode(data.sx, data.sz, data.classes)
        assert loss(model, batch).item() == pytest.approx(math.log(16), abs=1e-6)

    def test_needs_targets(self):
        model = build_model(ModelConfig(**SMALL))
        with pytest.raises(ParameterError):
            loss(model, encode(*stack(random_syndromes(3, 2))))

    def test_gradients_match_finite_differences(self):
        torch.manual_seed(0)
        model = build_model(ModelConfig(channels=(4,), depth=1), dtype=torch.float64)
        data = random_errors(3, 3)
        batch = encode(data.sx, data.sz, dtype=torch.float64)
        names = [name for name, _ in model.named_parameters()]
        params = tuple(p.detach().clone().requires_grad_(True) for _, p in model.named_parameters())

        def forward(*tensors):
            return functional_call(model, dict(zip(names, tensors)), (batch.syndromes, batch.masks))

        assert gradcheck(forward, params, eps=1e-6, atol=1e-6, rtol=1e-4)


class TestNeuralDecoder:
    def test_matches_argmax(self):
        torch.manual_seed(0)
        model = build_model(ModelConfig(**SMALL))
        data = random_errors(5, 20)
        decoder = NeuralDecoder(Lattice(5), model, batch_size=7)
        decoded = decoder.decode_batch(data.sx, data.sz)
        with torch.no_grad():
            expected = predict(model, encode(data.sx, data.sz)).argmax(dim=-1).numpy()
        assert np.array_equal(decoded, expected)
        assert decoded.dtype == np.int64

    def test_encoded_batch(self):
        data = random_errors(3, 4)
        batch = encode(data.sx, data.sz, data.classes)
        assert isinstance(batch, EncodedBatch)
        assert batch.syndromes.shape == (4, 2, 3, 3)
        assert batch.masks.shape == (4, 3, 3)
        assert batch.classes.tolist() == data.classes.tolist()
