import pytest

from toric_workbench.errors import UsageError
from toric_workbench.exact import ExactDecoder
from toric_workbench.lattice import Lattice
from toric_workbench.matching import MatchingDecoder
from toric_workbench.neural import ModelConfig, NeuralDecoder, build_model
from toric_workbench.noise import DepolarizingNoise
from toric_workbench.registry import DecoderFactory, Registry


class TestRegistry:
    def test_duplicate_names(self):
        registry = Registry()

        @registry.register_at("foo")
        def new_foo(lattice, noise):
            return None

        with pytest.raises(ValueError) as e:
            registry.register_at("foo")(new_foo)
        assert "already registered" in str(e.value)

    def test_decorator_returns_function(self):
        registry = Registry()

        @registry.register_at("foo", max_L=3)
        def new_foo(lattice, noise):
            return "foo"

        assert new_foo(None, None) == "foo"
        assert registry.get("foo").max_L == 3

    def test_empty_registry_error(self):
        with pytest.raises(UsageError) as e:
            Registry().get("foo")
        assert "include: N/A" in str(e.value)

    def test_clear(self):
        registry = Registry()
        registry.register_at("foo")(lambda lattice, noise: None)
        registry.clear()
        assert registry.names() == []

    def test_factory_repr(self):
        def new_foo(lattice, noise):
            return None

        assert repr(DecoderFactory(new_foo)) == f"DecoderFactory({new_foo})"
        assert repr(DecoderFactory(new_foo, max_L=3)) == f"DecoderFactory({new_foo}, max_L=3)"


class TestDefaultDecoders:
    def test_names(self, tw_registry):
        assert {"mwpm", "mld", "end"} <= set(tw_registry.names())

    def test_mwpm(self, tw_registry, tw_lattice):
        decoder = tw_registry.create("mwpm", tw_lattice, DepolarizingNoise(0.1), matcher="blossom", k=4)
        assert isinstance(decoder, MatchingDecoder)
        assert decoder.k == 4

    def test_mld(self, tw_registry, tw_lattice):
        decoder = tw_registry.create("mld", tw_lattice, DepolarizingNoise(0.1))
        assert isinstance(decoder, ExactDecoder)
        assert tw_registry.get("mld").max_L == 3

    def test_end_needs_model(self, tw_registry, tw_lattice):
        with pytest.raises(UsageError):
            tw_registry.create("end", tw_lattice, DepolarizingNoise(0.1))

    def test_end_with_model(self, tw_registry):
        model = build_model(ModelConfig(channels=(4,), depth=1))
        decoder = tw_registry.create("end", Lattice(5), DepolarizingNoise(0.1), model=model)
        assert isinstance(decoder, NeuralDecoder)
