"""The decoders shipped with the workbench, registered on the default registry."""
from pathlib import Path
from typing import Optional, Union

from toric_workbench.errors import UsageError
from toric_workbench.exact import MAX_EXACT_L, ExactDecoder
from toric_workbench.lattice import Lattice
from toric_workbench.matching import MatchingDecoder
from toric_workbench.neural import EquivariantDecoder, NeuralDecoder
from toric_workbench.noise import NoiseModel
from toric_workbench.registry import register_at


@register_at("mwpm", description="Minimum-weight perfect matching, X and Z independently.")
def new_mwpm(lattice: Lattice, noise: NoiseModel, matcher: str = "auto", k: Optional[int] = None, **_):
    return MatchingDecoder(lattice, backend=matcher, k=k)


@register_at("mld", max_L=MAX_EXACT_L, description="Exact maximum likelihood over stabilizer cosets.")
def new_mld(lattice: Lattice, noise: NoiseModel, **_):
    return ExactDecoder(lattice, noise)


@register_at("end", description="Equivariant neural decoder from a checkpoint.")
def new_end(lattice: Lattice, noise: NoiseModel, model: Union[None, str, Path, EquivariantDecoder] = None, **_):
    if model is None:
        raise UsageError("The end decoder needs a trained model (--model <checkpoint>).")
    if not isinstance(model, EquivariantDecoder):
        from toric_workbench.training import load_checkpoint

        model, _config = load_checkpoint(model)
    return NeuralDecoder(lattice, model)
