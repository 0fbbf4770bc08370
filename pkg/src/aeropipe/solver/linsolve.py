"""Sparse direct solves with a factorization kept for repeated right-hand sides."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from ..errors import LinearSolveFailure

RESIDUAL_TOL = 1e-10


class SparseDirectSolver:
    """LU factorization of a fixed sparse matrix, reused by :meth:`solve`.

    Every solution is checked against ``||A x - b|| <= 1e-10 ||b||``; one
    step of iterative refinement is tried before giving up.
    """

    def __init__(self, A):
        A = sp.csc_matrix(A, dtype=float)
        if A.shape[0] != A.shape[1]:
            raise LinearSolveFailure(f"matrix is not square: {A.shape}")
        empty = np.nonzero(np.diff(sp.csr_matrix(A).indptr) == 0)[0]
        if empty.size:
            raise LinearSolveFailure(f"matrix is singular: row {empty[0]} is empty")
        self.A = A
        try:
            self._lu = sla.splu(A, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise LinearSolveFailure(f"factorization failed: {exc}") from None
        self.factorizations = 1

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        nb = np.linalg.norm(b)
        if nb == 0.0:
            return np.zeros_like(b)
        x = self._lu.solve(b)
        r = b - self.A @ x
        if not np.linalg.norm(r) <= RESIDUAL_TOL * nb:
            x = x + self._lu.solve(r)
            r = b - self.A @ x
        res = np.linalg.norm(r) / nb
        if not res <= RESIDUAL_TOL:
            raise LinearSolveFailure(f"relative residual {res:.3e} exceeds {RESIDUAL_TOL:g}")
        return x


def linear_solve(A, b) -> np.ndarray:
    return SparseDirectSolver(A).solve(b)
