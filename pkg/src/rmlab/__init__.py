"""Reed-Muller code laboratory: codes, derivatives, weight bounds and channel simulation."""

from .errors import (
    CapExceededError,
    HypothesisWarning,
    InconsistentWordError,
    PreconditionError,
    RMLabError,
)
from .gf2poly import EvalVec, PolyANF, anf_to_eval, eval_to_anf
from .rmcode import CodeParams, encode, generator_matrix, min_distance

__version__ = "0.1.0"

__all__ = [
    "CapExceededError",
    "CodeParams",
    "EvalVec",
    "HypothesisWarning",
    "InconsistentWordError",
    "PolyANF",
    "PreconditionError",
    "RMLabError",
    "__version__",
    "anf_to_eval",
    "encode",
    "eval_to_anf",
    "generator_matrix",
    "min_distance",
]
