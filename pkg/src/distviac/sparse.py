"""Compressed sparse symmetric matrices and SPD solvers.

Storage is full CSR: both triangles of a symmetric matrix are kept
explicitly, with column indices sorted ascending within each row.
Triplet input is canonicalized (sorted, duplicates summed in sorted
order) so assembled matrices are reproducible regardless of the order
contributions arrive in.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, NonFiniteError

SYMMETRY_TOL = 1e-14


class SparseSymMatrix:
    """Symmetric matrix in CSR form (both triangles stored)."""

    def __init__(self, n, indptr, indices, data):
        self.n = int(n)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.data = np.asarray(data, dtype=np.float64)
        # row id of every stored entry, for O(nnz) matvec via bincount
        self._rows = np.repeat(np.arange(self.n), np.diff(self.indptr))

    @classmethod
    def from_triplets(cls, n, rows, cols, vals, check_symmetry=True):
        """Build from (row, col, value) contributions.

        Duplicate positions are summed.  Exact zeros that are structurally
        present are kept.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if len(rows) == 0:
            return cls(n, np.zeros(n + 1, dtype=np.int64), [], [])

        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        key = rows * n + cols
        first = np.concatenate([[True], key[1:] != key[:-1]])
        starts = np.flatnonzero(first)
        summed = np.add.reduceat(vals, starts)
        rows, cols = rows[first], cols[first]

        indptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=n))])
        mat = cls(n, indptr, cols, summed)
        if check_symmetry:
            mat._check_symmetric()
        return mat

    @classmethod
    def identity(cls, n):
        return cls(n, np.arange(n + 1), np.arange(n), np.ones(n))

    @property
    def nnz(self):
        return len(self.data)

    def _check_symmetric(self):
        order = np.lexsort((self._rows, self.indices))
        if not (
            np.array_equal(self.indices[order], self._rows)
            and np.array_equal(self._rows[order], self.indices)
        ):
            raise ValueError("sparsity pattern is not symmetric")
        scale = max(1.0, float(np.abs(self.data).max(initial=0.0)))
        if np.abs(self.data[order] - self.data).max(initial=0.0) > SYMMETRY_TOL * scale:
            raise ValueError("matrix values are not symmetric")

    def diagonal(self):
        d = np.zeros(self.n)
        on_diag = self._rows == self.indices
        d[self._rows[on_diag]] = self.data[on_diag]
        return d

    def matvec(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise DimensionMismatchError(
                f"vector has shape {x.shape}, matrix dimension is {self.n}"
            )
        return np.bincount(self._rows, weights=self.data * x[self.indices],
                           minlength=self.n)

    __matmul__ = matvec

    def to_dense(self):
        dense = np.zeros((self.n, self.n))
        dense[self._rows, self.indices] = self.data
        return dense

    def to_scipy(self):
        from scipy.sparse import csr_matrix

        return csr_matrix((self.data, self.indices, self.indptr),
                          shape=(self.n, self.n))

    def scaled_sum(self, *terms):
        """Return sum of ``coeff * matrix`` terms plus self (same dimension)."""
        rows = [self._rows]
        cols = [self.indices]
        vals = [self.data]
        for coeff, other in terms:
            rows.append(other._rows)
            cols.append(other.indices)
            vals.append(coeff * other.data)
        return SparseSymMatrix.from_triplets(
            self.n, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
        )


def spmv(A, x):
    """Matrix-vector product ``A @ x`` exactly as stored."""
    return A.matvec(x)


@dataclass
class SolveStats:
    iterations: int
    relative_residual: float
    wall_time: float
    converged: bool = True
    residual_norms: list = field(default_factory=list)


def spd_solve(A, b, tol=1e-12, max_iter=None, x0=None, callback=None):
    """Conjugate gradient with Jacobi preconditioning.

    Returns ``(x, SolveStats)``.  On stagnation past ``max_iter`` the best
    iterate is returned with ``converged=False``.  Deterministic for
    identical inputs.  ``callback``, when given, receives the iterate after
    every iteration (scipy style).

    Raises
    ------
    NonFiniteError
        A NaN or infinity appeared during the iteration.
    """
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tol must be in (0, 1), got {tol}")
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (A.n,):
        raise DimensionMismatchError(
            f"rhs has shape {b.shape}, matrix dimension is {A.n}"
        )
    if max_iter is None:
        max_iter = 20 * max(A.n, 1)
    t0 = time.perf_counter()

    if not np.isfinite(b).all():
        raise NonFiniteError("right-hand side contains non-finite values")
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return np.zeros(A.n), SolveStats(0, 0.0, time.perf_counter() - t0)

    diag = A.diagonal()
    if (diag <= 0.0).any():
        raise ValueError("matrix diagonal is not positive; not SPD")
    inv_diag = 1.0 / diag

    x = np.zeros(A.n) if x0 is None else np.array(x0, dtype=np.float64)
    r = b - A.matvec(x)
    history = [float(np.linalg.norm(r) / norm_b)]
    if history[-1] <= tol:
        return x, SolveStats(0, history[-1], time.perf_counter() - t0,
                             residual_norms=history)

    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    best_x, best_res = x.copy(), history[-1]

    iterations = 0
    for iterations in range(1, max_iter + 1):
        Ap = A.matvec(p)
        pAp = float(p @ Ap)
        if not np.isfinite(pAp) or pAp <= 0.0:
            raise NonFiniteError(f"curvature p'Ap = {pAp} at iteration {iterations}")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if callback is not None:
            callback(x.copy())
        relres = float(np.linalg.norm(r) / norm_b)
        if not np.isfinite(relres):
            raise NonFiniteError(f"residual became non-finite at iteration {iterations}")
        history.append(relres)
        if relres < best_res:
            best_res = relres
            best_x = x.copy()
        if relres <= tol:
            return x, SolveStats(iterations, relres, time.perf_counter() - t0,
                                 residual_norms=history)
        z = inv_diag * r
        rz_next = float(r @ z)
        p = z + (rz_next / rz) * p
        rz = rz_next

    return best_x, SolveStats(iterations, best_res, time.perf_counter() - t0,
                              converged=False, residual_norms=history)


def dense_solve(A, b, size_limit=2000):
    """Dense Cholesky solve, the reference path for small systems."""
    from scipy.linalg import cho_factor, cho_solve

    if A.n > size_limit:
        raise ValueError(f"dense path limited to n <= {size_limit}, got {A.n}")
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (A.n,):
        raise DimensionMismatchError(
            f"rhs has shape {b.shape}, matrix dimension is {A.n}"
        )
    if A.n == 0:
        return np.zeros(0)
    return cho_solve(cho_factor(A.to_dense()), b)


class SpdFactorization:
    """Reusable sparse LU factorization for repeated solves with fixed A.

    The assembled operators here are (possibly mildly perturbed) Stieltjes
    matrices, for which the factorized solve is componentwise stable: the
    exponentially small solution entries that encode large distances keep
    their relative accuracy.
    """

    def __init__(self, A):
        from scipy.sparse.linalg import splu

        self.n = A.n
        if A.n:
            self._lu = splu(A.to_scipy().tocsc(), permc_spec="MMD_AT_PLUS_A")

    def solve(self, b):
        b = np.asarray(b, dtype=np.float64)
        if b.shape != (self.n,):
            raise DimensionMismatchError(
                f"rhs has shape {b.shape}, matrix dimension is {self.n}"
            )
        if self.n == 0:
            return np.zeros(0)
        x = self._lu.solve(b)
        if not np.isfinite(x).all():
            raise NonFiniteError("factorized solve produced non-finite values")
        return x


def spd_factorize(A):
    return SpdFactorization(A)


def write_matrix_market(A, path):
    """Dump in MatrixMarket coordinate format (general, 1-based)."""
    with open(path, "w", newline="\n") as f:
        f.write("%%MatrixMarket matrix coordinate real general\n")
        f.write(f"{A.n} {A.n} {A.nnz}\n")
        for i, j, v in zip(A._rows, A.indices, A.data):
            f.write(f"{i + 1} {j + 1} {v:.17g}\n")
