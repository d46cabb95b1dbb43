"""Isometric flat coordinates for symmetric matrices.

A symmetric d×d matrix is stored as its upper triangle (row-major, diagonal
included) with off-diagonal entries scaled by sqrt(2), so that the Frobenius
inner product of two matrices equals the Euclidean inner product of their flats.
"""

import math

import numpy as np

SQRT2 = math.sqrt(2.0)


def sym_size(dim: int) -> int:
    """Number of flat coordinates for a dim×dim symmetric matrix."""
    return dim * (dim + 1) // 2


def sym_dim(size: int) -> int:
    """Inverse of `sym_size`; raises if `size` is not triangular."""
    dim = int((math.isqrt(8 * size + 1) - 1) // 2)
    if sym_size(dim) != size:
        raise ValueError(f"{size} is not a triangular number")
    return dim


def _weights(dim: int) -> tuple[tuple[np.ndarray, np.ndarray], np.ndarray]:
    rows, cols = np.triu_indices(dim)
    scale = np.where(rows == cols, 1.0, SQRT2)
    return (rows, cols), scale


def sym_flatten(mat: np.ndarray) -> np.ndarray:
    """Symmetric matrix -> flat coordinate vector."""
    mat = np.asarray(mat, dtype=float)
    idx, scale = _weights(mat.shape[0])
    return mat[idx] * scale


def sym_unflatten(coords: np.ndarray, dim: int | None = None) -> np.ndarray:
    """Flat coordinate vector -> symmetric matrix."""
    coords = np.asarray(coords, dtype=float)
    dim = sym_dim(coords.shape[0]) if dim is None else dim
    idx, scale = _weights(dim)
    mat = np.zeros((dim, dim))
    mat[idx] = coords / scale
    return mat + np.triu(mat, 1).T
