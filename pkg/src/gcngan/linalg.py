"""Dense matrix helpers shared by every other module.

Matrices are plain ``numpy.ndarray`` objects of dtype float64 and rank 2,
stored in C (row-major) order. The functions here add the shape checks the
rest of the package relies on; anything numpy already does correctly is used
directly.
"""
from __future__ import annotations

import numpy as np

Matrix = np.ndarray


class ShapeError(ValueError):
    """Raised when matrix dimensions are incompatible."""


def as_matrix(values, rows: int | None = None, cols: int | None = None) -> Matrix:
    m = np.array(values, dtype=np.float64, order="C")
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got {m.ndim} dimensions")
    if rows is not None and m.shape[0] != rows:
        raise ShapeError(f"expected {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise ShapeError(f"expected {cols} columns, got {m.shape[1]}")
    return m


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator; the only source of randomness in the package."""
    return np.random.Generator(np.random.PCG64(seed))


def check_same_shape(a: Matrix, b: Matrix, what: str = "operands") -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{what} differ in shape: {a.shape} vs {b.shape}")


def check_square(a: Matrix, what: str = "matrix") -> int:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"{what} must be square, got shape {a.shape}")
    return a.shape[0]


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def reshape_rowwise(m: Matrix, rows: int, cols: int) -> Matrix:
    """Reshape keeping row-major element order (the row-wise long vector)."""
    if m.size != rows * cols:
        raise ShapeError(f"cannot reshape {m.shape} into ({rows}, {cols})")
    return np.reshape(m, (rows, cols), order="C")


def uniform_noise(rng: np.random.Generator, rows: int, cols: int) -> Matrix:
    """Independent draws from U[0, 1)."""
    if rows < 1 or cols < 1:
        raise ShapeError(f"noise shape must be positive, got ({rows}, {cols})")
    return rng.random((rows, cols))


def add(a: Matrix, b: Matrix) -> Matrix:
    check_same_shape(a, b)
    return a + b


def sub(a: Matrix, b: Matrix) -> Matrix:
    check_same_shape(a, b)
    return a - b


def hadamard(a: Matrix, b: Matrix) -> Matrix:
    check_same_shape(a, b)
    return a * b


def scale(a: Matrix, k: float) -> Matrix:
    return a * float(k)


def transpose(a: Matrix) -> Matrix:
    return np.ascontiguousarray(a.T)


def total(a: Matrix) -> float:
    return float(np.sum(a))


def frobenius_norm_sq(a: Matrix) -> float:
    return float(np.sum(a * a))
