from toric_workbench.errors import (
    CapacityError,
    ConfigError,
    DegenerateFitWarning,
    FitError,
    InvalidSyndromeError,
    NumericalError,
    ParameterError,
    SizeMismatchError,
    UsageError,
    WorkbenchError,
)
from toric_workbench.exact import ExactDecoder, decode_mld, exact_distribution, logical_probabilities
from toric_workbench.harness import EvalReport, ThresholdFit, evaluate, sweep, threshold_fit
from toric_workbench.lattice import Lattice, LogicalBits, PauliError, Syndrome, logical_content, symplectic_product, syndrome
from toric_workbench.matching import MatchingDecoder, mwpm_decode
from toric_workbench.noise import DepolarizingNoise, NoiseModel, sample_batch, sample_error
from toric_workbench.registry import Registry, register_at, registry
from toric_workbench.symmetry import Translation, Twist, all_twists, apply_twist, translate_syndrome, twist

from toric_workbench import decoders  # noqa: F401,E402

__all__ = [
    "all_twists",
    "apply_twist",
    "CapacityError",
    "ConfigError",
    "decode_mld",
    "DegenerateFitWarning",
    "DepolarizingNoise",
    "evaluate",
    "EvalReport",
    "exact_distribution",
    "ExactDecoder",
    "FitError",
    "InvalidSyndromeError",
    "Lattice",
    "logical_content",
    "logical_probabilities",
    "LogicalBits",
    "MatchingDecoder",
    "mwpm_decode",
    "NoiseModel",
    "NumericalError",
    "ParameterError",
    "PauliError",
    "register_at",
    "Registry",
    "registry",
    "sample_batch",
    "sample_error",
    "SizeMismatchError",
    "sweep",
    "symplectic_product",
    "syndrome",
    "Syndrome",
    "threshold_fit",
    "ThresholdFit",
    "translate_syndrome",
    "Translation",
    "twist",
    "Twist",
    "UsageError",
    "WorkbenchError",
]
