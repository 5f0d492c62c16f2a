"""Dense tensor primitives.

Tensors are plain row-major ``numpy.ndarray`` values (batch images are laid out
N x H x W x C).  The helpers here add the shape checking the layers rely on.
All kernels preserve the input dtype, so float64 can be used for gradient
checks while float32 stays the default.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import ShapeError

DEFAULT_DTYPE = np.float32


def tensor_from_values(shape: Sequence[int], values, dtype=DEFAULT_DTYPE) -> np.ndarray:
    shape = tuple(int(d) for d in shape)
    if any(d < 0 for d in shape):
        raise ShapeError(f"negative extent in shape {shape}")
    flat = np.asarray(values, dtype=dtype).reshape(-1)
    expected = math.prod(shape)
    if flat.size != expected:
        raise ShapeError(f"{flat.size} values cannot fill shape {shape} ({expected} elements)")
    return flat.reshape(shape).copy()


def zeros(shape: Sequence[int], dtype=DEFAULT_DTYPE) -> np.ndarray:
    return np.zeros(tuple(shape), dtype=dtype)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rank-2 matrix product ``a @ b``."""
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs rank-2 operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner extents differ: {a.shape} x {b.shape}")
    return a @ b


_ZIP_OPS = {"add": np.add, "mul": np.multiply}


def elementwise_zip(a: np.ndarray, b: np.ndarray, op: str) -> np.ndarray:
    if op not in _ZIP_OPS:
        raise ValueError(f"unknown elementwise op {op!r}")
    if a.shape != b.shape:
        raise ShapeError(f"elementwise {op} on mismatched shapes {a.shape} and {b.shape}")
    return _ZIP_OPS[op](a, b)
