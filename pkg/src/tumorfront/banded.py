"""Thin LAPACK wrapper for general banded LU with reusable factors.

scipy.linalg.solve_banded neither keeps the factorization nor exposes
transpose solves; both are needed here (repeated Newton steps, adjoint null
vectors via the transposed factors).
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import lapack

__all__ = ["BandAssembler", "BandedLU"]


class BandAssembler:
    """Accumulates entries of an n-by-n matrix with bandwidths (kl, ku).

    Storage layout matches LAPACK's gbtrf expectation: row kl+ku+i-j of
    column j holds A[i, j], with kl extra rows on top for pivoting fill-in.
    """

    def __init__(self, n: int, kl: int, ku: int, dtype=np.float64):
        self.n, self.kl, self.ku = n, kl, ku
        self.ab = np.zeros((2 * kl + ku + 1, n), dtype=dtype)

    def add(self, rows, cols, vals):
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        np.add.at(self.ab, (self.kl + self.ku + rows - cols, cols), vals)

    def shifted(self, sigma) -> "BandAssembler":
        """Copy of A - sigma*I (complex storage when sigma is complex)."""
        out = BandAssembler(self.n, self.kl, self.ku,
                            dtype=np.result_type(self.ab.dtype, type(sigma)))
        out.ab[...] = self.ab
        out.ab[self.kl + self.ku, :] -= sigma
        return out

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=self.ab.dtype)
        for j in range(self.n):
            i_lo = max(0, j - self.ku)
            i_hi = min(self.n - 1, j + self.kl)
            for i in range(i_lo, i_hi + 1):
                a[i, j] = self.ab[self.kl + self.ku + i - j, j]
        return a

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Banded matrix-vector product from the assembled storage."""
        y = np.zeros(self.n, dtype=np.result_type(self.ab.dtype, x.dtype))
        for d in range(-self.kl, self.ku + 1):
            band = self.ab[self.kl + self.ku - d, :]
            if d >= 0:
                # entries A[i, i+d]
                y[: self.n - d] += band[d:] * x[d:]
            else:
                y[-d:] += band[: self.n + d] * x[: self.n + d]
        return y

    def rmatvec(self, x: np.ndarray) -> np.ndarray:
        """Transposed product A^T x."""
        y = np.zeros(self.n, dtype=np.result_type(self.ab.dtype, x.dtype))
        for d in range(-self.kl, self.ku + 1):
            band = self.ab[self.kl + self.ku - d, :]
            if d >= 0:
                y[d:] += band[d:] * x[: self.n - d]
            else:
                y[: self.n + d] += band[: self.n + d] * x[-d:]
        return y


class BandedLU:
    """LU factors of a real or complex banded matrix; solves with A or A^T."""

    def __init__(self, assembler: BandAssembler):
        self.n, self.kl, self.ku = assembler.n, assembler.kl, assembler.ku
        self._complex = np.iscomplexobj(assembler.ab)
        gbtrf = lapack.zgbtrf if self._complex else lapack.dgbtrf
        lu, ipiv, info = gbtrf(assembler.ab, assembler.kl, assembler.ku)
        if info < 0:
            raise ValueError(f"gbtrf: illegal argument {-info}")
        if info > 0:
            raise np.linalg.LinAlgError(f"banded matrix is singular at pivot {info}")
        self.lu, self.ipiv = lu, ipiv

    def solve(self, b: np.ndarray, transposed: bool = False) -> np.ndarray:
        if self._complex:
            x, info = lapack.zgbtrs(self.lu, self.kl, self.ku,
                                    b.astype(np.complex128, copy=False), self.ipiv,
                                    trans=1 if transposed else 0)
        elif np.iscomplexobj(b):
            # real factors solve the real and imaginary parts independently
            xr = self.solve(np.ascontiguousarray(b.real), transposed)
            xi = self.solve(np.ascontiguousarray(b.imag), transposed)
            return xr + 1j * xi
        else:
            x, info = lapack.dgbtrs(self.lu, self.kl, self.ku, b, self.ipiv,
                                    trans=1 if transposed else 0)
        if info != 0:
            raise np.linalg.LinAlgError(f"gbtrs failed with info={info}")
        return x
