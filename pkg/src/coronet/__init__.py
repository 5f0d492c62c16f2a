"""CoroNet: a NumPy CNN micro-framework, the Xception-based CoroNet model,
its chest X-ray data pipeline, and confusion-matrix metrics."""

from .errors import (ConfigError, CoronetError, FormatError, InputError, ParseError,
                     ShapeError, StateError)
from .graph import ComputeGraph, ParameterStore
from .model import ArchitectureConfig, build_coronet, count_parameters, predict

__all__ = [
    "ArchitectureConfig", "ComputeGraph", "ConfigError", "CoronetError", "FormatError",
    "InputError", "ParameterStore", "ParseError", "ShapeError", "StateError",
    "build_coronet", "count_parameters", "predict",
]
