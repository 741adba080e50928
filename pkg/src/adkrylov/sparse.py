"""Compressed sparse row matrices over plain or dual scalars.

Matrix values are either a float64 ndarray or a :class:`~adkrylov.scalar.DualArray`
whose tangent holds dA/du on the same sparsity pattern.  Dense oracles
(direct solve, condition number) work on the primal values and exist for
verification only.
"""

from __future__ import annotations

import io
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DimensionError,
    MatrixMarketError,
    SingularMatrixError,
    SizeError,
    UnsupportedFormatError,
)
from .scalar import DualArray, primal, tangent

__all__ = [
    "CsrMatrix",
    "spmv",
    "parse_matrix_market",
    "read_matrix_market",
    "write_matrix_market",
    "dense_solve_oracle",
    "condition_number",
]

DENSE_SOLVE_MAX_DIM = 2000
CONDITION_MAX_DIM = 1000


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    nrows: int
    ncols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray | DualArray
    # row index of every stored entry, used by spmv
    _entry_rows: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        row_ptr = np.asarray(self.row_ptr, dtype=np.int64)
        col_idx = np.asarray(self.col_idx, dtype=np.int64)
        values = self.values
        if not isinstance(values, DualArray):
            values = np.asarray(values, dtype=float)
        nnz = len(values)
        if row_ptr.shape != (self.nrows + 1,):
            raise ValueError(f"row_ptr must have length nrows+1={self.nrows + 1}")
        if row_ptr[0] != 0 or row_ptr[-1] != nnz or len(col_idx) != nnz:
            raise ValueError("row_ptr[0] must be 0 and row_ptr[-1] must equal nnz")
        counts = np.diff(row_ptr)
        if (counts < 0).any():
            raise ValueError("row_ptr must be nondecreasing")
        if nnz:
            if col_idx.min() < 0 or col_idx.max() >= self.ncols:
                raise ValueError("column index out of range")
            rows = np.repeat(np.arange(self.nrows), counts)
            # strictly increasing columns within each row
            same_row = rows[1:] == rows[:-1]
            if (np.diff(col_idx)[same_row] <= 0).any():
                raise ValueError("column indices must be strictly increasing within a row")
        else:
            rows = np.zeros(0, dtype=np.int64)
        object.__setattr__(self, "row_ptr", row_ptr)
        object.__setattr__(self, "col_idx", col_idx)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_entry_rows", rows)

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def nnz(self):
        return len(self.col_idx)

    @property
    def is_dual(self):
        return isinstance(self.values, DualArray)

    @classmethod
    def from_triplets(cls, rows, cols, vals, shape):
        """Build a matrix from (row, col, value) triplets, summing duplicates."""
        nrows, ncols = shape
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        if not (len(rows) == len(cols) == len(vals)):
            raise DimensionError("triplet arrays differ in length")
        if len(rows) and (
            rows.min() < 0 or rows.max() >= nrows or cols.min() < 0 or cols.max() >= ncols
        ):
            raise DimensionError("triplet index out of range")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if len(rows):
            new = np.ones(len(rows), dtype=bool)
            new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(new)
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
        row_ptr = np.zeros(nrows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=nrows), out=row_ptr[1:])
        return cls(nrows, ncols, row_ptr, cols, vals)

    @classmethod
    def from_dense(cls, dense):
        dense = np.asarray(dense, dtype=float)
        rows, cols = np.nonzero(dense)
        return cls.from_triplets(rows, cols, dense[rows, cols], dense.shape)

    @classmethod
    def identity(cls, n):
        idx = np.arange(n)
        return cls(n, n, np.arange(n + 1), idx, np.ones(n))

    def triplets(self):
        """Return 0-based (rows, cols, primal values)."""
        return self._entry_rows.copy(), self.col_idx.copy(), np.array(primal(self.values))

    def to_dense(self):
        """Densify the primal values."""
        out = np.zeros(self.shape)
        out[self._entry_rows, self.col_idx] = primal(self.values)
        return out

    def tangent_matrix(self):
        """The tangent values as a plain matrix on the same pattern."""
        return CsrMatrix(self.nrows, self.ncols, self.row_ptr, self.col_idx,
                         np.array(tangent(self.values)))

    def primal_matrix(self):
        if not self.is_dual:
            return self
        return CsrMatrix(self.nrows, self.ncols, self.row_ptr, self.col_idx,
                         self.values.value.copy())

    def lift(self, dA=None):
        """Pair the values with tangents taken from ``dA``.

        ``dA`` may have a different sparsity pattern; the result then lives on
        the union pattern with explicit zeros where only one of them is stored.
        """
        values = np.array(primal(self.values))
        if dA is None:
            return CsrMatrix(self.nrows, self.ncols, self.row_ptr, self.col_idx,
                             DualArray(values))
        if dA.shape != self.shape:
            raise DimensionError(f"dA shape {dA.shape} differs from A shape {self.shape}")
        if np.array_equal(dA.row_ptr, self.row_ptr) and np.array_equal(dA.col_idx, self.col_idx):
            return CsrMatrix(self.nrows, self.ncols, self.row_ptr, self.col_idx,
                             DualArray(values, np.array(primal(dA.values))))
        r1, c1, v1 = self.triplets()
        r2, c2, v2 = dA.triplets()
        rows = np.concatenate([r1, r2])
        cols = np.concatenate([c1, c2])
        pattern = CsrMatrix.from_triplets(rows, cols, np.zeros(len(rows)), self.shape)
        val = _scatter(pattern, r1, c1, v1)
        tan = _scatter(pattern, r2, c2, v2)
        return CsrMatrix(self.nrows, self.ncols, pattern.row_ptr, pattern.col_idx,
                         DualArray(val, tan))

    def __matmul__(self, x):
        return spmv(self, x)


def _scatter(pattern, rows, cols, vals):
    """Place triplet values onto the positions of an existing pattern."""
    out = np.zeros(pattern.nnz)
    for r, c, v in zip(rows, cols, vals):
        lo, hi = pattern.row_ptr[r], pattern.row_ptr[r + 1]
        k = lo + np.searchsorted(pattern.col_idx[lo:hi], c)
        out[k] += v
    return out


def _segment_sum(weights, rows, n):
    return np.bincount(rows, weights=weights, minlength=n)


def spmv(A: CsrMatrix, x):
    """y = A x for plain or dual matrices and vectors."""
    if len(x) != A.ncols:
        raise DimensionError(f"matrix has {A.ncols} columns but vector has length {len(x)}")
    xg = x[A.col_idx]
    prods = A.values * xg
    if isinstance(prods, DualArray):
        return DualArray(
            _segment_sum(prods.value, A._entry_rows, A.nrows),
            _segment_sum(prods.tangent, A._entry_rows, A.nrows),
        )
    return _segment_sum(prods, A._entry_rows, A.nrows)


# Matrix Market ---------------------------------------------------------------

_SUPPORTED_FIELDS = {"real", "integer"}
_SUPPORTED_SYMMETRY = {"general", "symmetric"}


def parse_matrix_market(text) -> CsrMatrix:
    """Parse a Matrix Market ``coordinate`` file given as bytes or str."""
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("ascii", errors="replace")
    lines = text.splitlines()
    if not lines:
        raise MatrixMarketError("empty input", 1)
    header = lines[0].split()
    if len(header) != 5 or header[0].lower() != "%%matrixmarket":
        raise MatrixMarketError("missing %%MatrixMarket header", 1)
    obj, fmt, fld, sym = (h.lower() for h in header[1:])
    if obj != "matrix":
        raise UnsupportedFormatError(header[1])
    if fmt != "coordinate":
        raise UnsupportedFormatError(header[2])
    if fld not in _SUPPORTED_FIELDS:
        raise UnsupportedFormatError(header[3])
    if sym not in _SUPPORTED_SYMMETRY:
        raise UnsupportedFormatError(header[4])

    lineno = 1
    size = None
    for lineno in range(2, len(lines) + 1):
        line = lines[lineno - 1].strip()
        if not line or line.startswith("%"):
            continue
        size = line.split()
        break
    if size is None:
        raise MatrixMarketError("missing size line", lineno)
    try:
        nrows, ncols, nnz = (int(s) for s in size)
    except ValueError:
        raise MatrixMarketError(f"bad size line {' '.join(size)!r}", lineno) from None

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    k = 0
    for lineno in range(lineno + 1, len(lines) + 1):
        line = lines[lineno - 1].strip()
        if not line or line.startswith("%"):
            continue
        parts = line.split()
        if k >= nnz:
            raise MatrixMarketError(f"more than the declared {nnz} entries", lineno)
        if len(parts) != 3:
            raise MatrixMarketError(f"expected 'row col value', got {line!r}", lineno)
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise MatrixMarketError(f"cannot parse entry {line!r}", lineno) from None
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise MatrixMarketError(
                f"index ({i}, {j}) outside a {nrows}x{ncols} matrix", lineno
            )
        rows[k], cols[k], vals[k] = i - 1, j - 1, v
        k += 1
    if k != nnz:
        raise MatrixMarketError(f"declared {nnz} entries but found {k}", lineno)

    if sym == "symmetric":
        off = rows != cols
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, vals[off]]),
        )
    return CsrMatrix.from_triplets(rows, cols, vals, (nrows, ncols))


def read_matrix_market(path) -> CsrMatrix:
    with open(path, "rb") as fh:
        return parse_matrix_market(fh.read())


def write_matrix_market(A: CsrMatrix, path=None, comment=None) -> str:
    """Serialize the primal values as ``coordinate real general``.

    Values use the shortest round-trip representation, so reading the output
    back gives an identical matrix.
    """
    buf = io.StringIO()
    buf.write("%%MatrixMarket matrix coordinate real general\n")
    if comment:
        for line in comment.splitlines():
            buf.write(f"%{line}\n")
    buf.write(f"{A.nrows} {A.ncols} {A.nnz}\n")
    rows, cols, vals = A.triplets()
    for i, j, v in zip(rows, cols, vals):
        buf.write(f"{i + 1} {j + 1} {float(v)!r}\n")
    text = buf.getvalue()
    if path is not None:
        with open(os.fspath(path), "w", newline="\n") as fh:
            fh.write(text)
    return text


# dense oracles ---------------------------------------------------------------


def _dense(A):
    if isinstance(A, CsrMatrix):
        return A.to_dense()
    return np.asarray(A, dtype=float)


def dense_solve_oracle(A, b):
    """Solve A x = b by dense LU with partial pivoting (test reference only)."""
    M = _dense(A)
    n = M.shape[0]
    if M.shape != (n, n):
        raise DimensionError(f"matrix must be square, got {M.shape}")
    if n > DENSE_SOLVE_MAX_DIM:
        raise SizeError(f"dense solve limited to n <= {DENSE_SOLVE_MAX_DIM}, got {n}")
    b = np.asarray(primal(b), dtype=float)
    if b.shape != (n,):
        raise DimensionError(f"right-hand side has shape {b.shape}, expected ({n},)")
    if n == 0:
        return np.zeros(0)
    with warnings.catch_warnings():
        # singularity is reported below as SingularMatrixError
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=True)
    diag = np.abs(np.diag(lu))
    if diag.min() <= n * np.finfo(float).eps * diag.max():
        raise SingularMatrixError("matrix is singular to working precision")
    return scipy.linalg.lu_solve((lu, piv), b)


def condition_number(A) -> float:
    """2-norm condition number from the singular values of the dense matrix."""
    M = _dense(A)
    n = max(M.shape)
    if n > CONDITION_MAX_DIM:
        raise SizeError(f"condition number limited to n <= {CONDITION_MAX_DIM}, got {n}")
    s = np.linalg.svd(M, compute_uv=False)
    if s[-1] == 0:
        return float("inf")
    return float(s[0] / s[-1])
