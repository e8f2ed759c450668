"""Confidence-set support vector machines.

A CSVM learns a discriminant ``f`` and a margin ``eps``. A point is
assigned ``{+1}`` when ``f > eps``, ``{-1}`` when ``f < -eps`` and the
ambiguous set ``{-1, +1}`` otherwise, with the class-wise non-coverage rates
held at prescribed levels.
"""
__version__ = "0.1.0"

from .core import CsvmModel, Dataset, NoncoverageTargets, SetLabel, TheoryParams  # noqa: E402
from .errors import (  # noqa: E402
    CsvmError, DimensionError, InfeasibleError, InvalidArgumentError, MissingColumnsError,
    NumericalError, SchemaError, TrainingError,
)
from .inference import Thresholds, evaluate, robust_thresholds  # noqa: E402
from .kernel import KernelSpec, gram_matrix  # noqa: E402
from .trainer import TrainConfig, fit_csvm  # noqa: E402

__all__ = [
    "__version__", "CsvmModel", "Dataset", "NoncoverageTargets", "SetLabel", "TheoryParams",
    "CsvmError", "DimensionError", "InfeasibleError", "InvalidArgumentError", "MissingColumnsError",
    "NumericalError", "SchemaError", "TrainingError", "Thresholds", "evaluate", "robust_thresholds",
    "KernelSpec", "gram_matrix", "TrainConfig", "fit_csvm",
]
