"""Orthonormal 1-D / 2-D discrete cosine transforms and zonal masking.

The forward transform of an m x n block A is

    B[p, q] = a_p * a_q * sum_ij A[i, j] * cos(pi*(2i+1)*p / (2m))
                                         * cos(pi*(2j+1)*q / (2n))

with a_0 = 1/sqrt(m) and a_p = sqrt(2/m) otherwise (same for q with n).
The basis is orthonormal, so the inverse is the transpose and energy is
preserved. Computed separably (row pass then column pass); the direct
double sum lives in the test suite as the oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ZonalMask", "dct_basis", "dct2", "idct2", "dct1", "idct1", "zonal_mask"]


@dataclass(frozen=True)
class ZonalMask:
    """Retain the first ``u`` rows and ``v`` columns of a coefficient block."""

    u: int
    v: int | None = None

    def __post_init__(self):
        if self.u < 1:
            raise ValueError(f"u must be >= 1, got {self.u}")
        if self.v is not None and self.v < 1:
            raise ValueError(f"v must be >= 1, got {self.v}")


def dct_basis(m: int) -> np.ndarray:
    """Orthonormal DCT basis matrix C with C[p, i] = a_p cos(pi(2i+1)p/2m)."""
    if m < 1:
        raise ValueError(f"size must be >= 1, got {m}")
    i = np.arange(m)
    p = np.arange(m)[:, None]
    c = np.cos(np.pi * (2 * i + 1) * p / (2 * m))
    c[0, :] *= 1.0 / np.sqrt(m)
    c[1:, :] *= np.sqrt(2.0 / m)
    return c


def dct2(a: np.ndarray) -> np.ndarray:
    """2-D DCT coefficients of an m x n block."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"expected a non-empty 2-D array, got shape {a.shape}")
    m, n = a.shape
    return dct_basis(m) @ a @ dct_basis(n).T


def idct2(b: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dct2` (transpose of the orthonormal basis)."""
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 2 or b.size == 0:
        raise ValueError(f"expected a non-empty 2-D array, got shape {b.shape}")
    m, n = b.shape
    return dct_basis(m).T @ b @ dct_basis(n)


def dct1(x: np.ndarray) -> np.ndarray:
    """1-D DCT coefficients: the n = 1 column specialization of :func:`dct2`."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError(f"expected a non-empty 1-D array, got shape {x.shape}")
    return dct_basis(x.size) @ x


def idct1(c: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dct1`."""
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 1 or c.size == 0:
        raise ValueError(f"expected a non-empty 1-D array, got shape {c.shape}")
    return dct_basis(c.size).T @ c


def zonal_mask(b: np.ndarray, mask: ZonalMask) -> np.ndarray:
    """Unroll the low-index coefficient block row-major into a flat vector.

    For a 2-D block the result has length u*v with ordering
    (0,0), (0,1), ..., (0,v-1), (1,0), ...; for a 1-D block, length u.
    """
    b = np.asarray(b)
    if b.ndim == 2:
        if mask.v is None:
            raise ValueError("2-D coefficients need both u and v")
        if mask.u > b.shape[0] or mask.v > b.shape[1]:
            raise ValueError(
                f"mask {mask.u}x{mask.v} exceeds coefficient block {b.shape[0]}x{b.shape[1]}"
            )
        return b[: mask.u, : mask.v].ravel()
    if b.ndim == 1:
        if mask.u > b.shape[0]:
            raise ValueError(f"mask u={mask.u} exceeds coefficient length {b.shape[0]}")
        return b[: mask.u].copy()
    raise ValueError(f"coefficients must be 1-D or 2-D, got shape {b.shape}")
