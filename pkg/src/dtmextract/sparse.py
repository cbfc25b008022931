"""CSR matrices, forward-difference operators and the 5-point system matrix.

The difference operators use zero derivatives on the right and bottom
boundaries: the last column of every row has no x-derivative and the last
raster row has no y-derivative.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, NotSquare, SingularSystem


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    n_rows: int
    n_cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        row_ptr = np.ascontiguousarray(self.row_ptr, dtype=np.int64)
        col_idx = np.ascontiguousarray(self.col_idx, dtype=np.int64)
        vals = np.ascontiguousarray(self.vals, dtype=np.float64)
        if row_ptr.shape != (self.n_rows + 1,):
            raise DimensionMismatch("row_ptr must have n_rows + 1 entries")
        if row_ptr[0] != 0 or row_ptr[-1] != len(col_idx) or len(col_idx) != len(vals):
            raise DimensionMismatch("row_ptr does not match col_idx/vals lengths")
        if np.any(np.diff(row_ptr) < 0):
            raise ValueError("row_ptr must be non-decreasing")
        if len(col_idx) and (col_idx.min() < 0 or col_idx.max() >= self.n_cols):
            raise ValueError("column index out of range")
        if len(col_idx) > 1:
            # strictly increasing within a row: a step may only drop at a row start
            steps = np.diff(col_idx)
            row_starts = np.zeros(len(col_idx) - 1, dtype=bool)
            starts = row_ptr[1:-1]
            starts = starts[(starts > 0) & (starts < len(col_idx))]
            row_starts[starts - 1] = True
            if np.any((steps <= 0) & ~row_starts):
                raise ValueError("column indices must be strictly increasing within rows")
        if not np.all(np.isfinite(vals)):
            raise ValueError("matrix values must be finite")
        for name, arr in (("row_ptr", row_ptr), ("col_idx", col_idx), ("vals", vals)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self) -> int:
        return len(self.vals)

    def row_indices(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_rows), np.diff(self.row_ptr))

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.shape)
        dense[self.row_indices(), self.col_idx] = self.vals
        return dense

    def to_scipy(self):
        import scipy.sparse

        return scipy.sparse.csr_matrix(
            (self.vals, self.col_idx, self.row_ptr), shape=self.shape
        )

    @classmethod
    def from_coo(cls, n_rows: int, n_cols: int, rows, cols, vals) -> "CsrMatrix":
        """Build from triplets; duplicate entries are summed."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if len(rows):
            new = np.ones(len(rows), dtype=bool)
            new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            group = np.cumsum(new) - 1
            vals = np.bincount(group, weights=vals)
            rows, cols = rows[new], cols[new]
        row_ptr = np.zeros(n_rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n_rows), out=row_ptr[1:])
        return cls(n_rows, n_cols, row_ptr, cols, vals)

    @classmethod
    def from_dense(cls, dense) -> "CsrMatrix":
        dense = np.asarray(dense, dtype=np.float64)
        r, c = np.nonzero(dense)
        return cls.from_coo(dense.shape[0], dense.shape[1], r, c, dense[r, c])

    @classmethod
    def identity(cls, n: int) -> "CsrMatrix":
        idx = np.arange(n)
        return cls(n, n, np.arange(n + 1), idx, np.ones(n))

    def transpose(self) -> "CsrMatrix":
        return CsrMatrix.from_coo(
            self.n_cols, self.n_rows, self.col_idx, self.row_indices(), self.vals
        )

    def diagonal(self) -> np.ndarray:
        rows = self.row_indices()
        on_diag = rows == self.col_idx
        diag = np.zeros(min(self.shape))
        diag[rows[on_diag]] = self.vals[on_diag]
        return diag

    def lower(self) -> "CsrMatrix":
        """Lower triangle including the diagonal."""
        rows = self.row_indices()
        keep = self.col_idx <= rows
        row_ptr = np.zeros(self.n_rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows[keep], minlength=self.n_rows), out=row_ptr[1:])
        return CsrMatrix(self.n_rows, self.n_cols, row_ptr, self.col_idx[keep], self.vals[keep])

    def is_symmetric(self) -> bool:
        if self.n_rows != self.n_cols:
            return False
        t = self.transpose()
        ours = CsrMatrix.from_coo(self.n_rows, self.n_cols, self.row_indices(), self.col_idx, self.vals)
        return (
            np.array_equal(ours.row_ptr, t.row_ptr)
            and np.array_equal(ours.col_idx, t.col_idx)
            and np.array_equal(ours.vals, t.vals)
        )

    def __matmul__(self, x):
        return spmv(self, x)


def spmv(m: CsrMatrix, x) -> np.ndarray:
    """Sparse matrix-vector product, accumulating each row in column order."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (m.n_cols,):
        raise DimensionMismatch(f"vector of length {x.shape} for {m.shape} matrix")
    out = np.empty(m.n_rows)
    return _kernels.csr_matvec(m.row_ptr, m.col_idx, m.vals, x, out)


def _forward_difference(rows: int, cols: int, step: int, has_next: np.ndarray) -> CsrMatrix:
    n = rows * cols
    active = np.flatnonzero(has_next)
    counts = np.zeros(n, dtype=np.int64)
    counts[active] = 2
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=row_ptr[1:])
    col_idx = np.column_stack([active, active + step]).reshape(-1)
    vals = np.tile([-1.0, 1.0], len(active))
    return CsrMatrix(n, n, row_ptr, col_idx, vals)


def build_diff_x(rows: int, cols: int) -> CsrMatrix:
    """Forward difference along a raster row: (Cx f)_p = f_{p+1} - f_p."""
    if rows < 1 or cols < 1:
        raise ValueError(f"grid dimensions must be positive, got {rows}x{cols}")
    col = np.tile(np.arange(cols), rows)
    return _forward_difference(rows, cols, 1, col < cols - 1)


def build_diff_y(rows: int, cols: int) -> CsrMatrix:
    """Forward difference down a raster column: (Cy f)_p = f_{p+cols} - f_p."""
    if rows < 1 or cols < 1:
        raise ValueError(f"grid dimensions must be positive, got {rows}x{cols}")
    row = np.repeat(np.arange(rows), cols)
    return _forward_difference(rows, cols, cols, row < rows - 1)


def _diag_weights(w, n: int, name: str) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if w.shape != (n,):
        raise DimensionMismatch(f"{name} has {w.size} entries, expected {n}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError(f"{name} must be finite and non-negative")
    return w


def assemble_stencil(
    wx,
    wy,
    r_diag,
    h_diag,
    lam: float,
    lam_p: float,
    rows: int,
    cols: int,
    include_penalty: bool = True,
) -> CsrMatrix:
    """Assemble diag(r) + lam_p*diag(h) + lam*(Cx' Wx Cx + Cy' Wy Cy) directly.

    Every row carries the full structural pattern of its 5-point
    neighbourhood (up, left, self, right, down), in ascending column order.
    With ``include_penalty=False`` the ``lam_p*diag(h)`` term is left out.
    """
    n = rows * cols
    wx = _diag_weights(wx, n, "wx")
    wy = _diag_weights(wy, n, "wy")
    r_diag = _diag_weights(r_diag, n, "r_diag")
    h_diag = _diag_weights(h_diag, n, "h_diag")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if not lam_p >= 0:
        raise ValueError(f"lambda_p must be non-negative, got {lam_p}")

    fidelity = r_diag + lam_p * h_diag if include_penalty else r_diag.copy()
    if not np.any(fidelity > 0):
        raise SingularSystem(
            "no cell carries a data-fidelity term; the system is singular "
            "(constant vectors lie in its null space)"
        )

    p = np.arange(n)
    r = p // cols
    c = p % cols
    has_up = r > 0
    has_left = c > 0
    has_right = c < cols - 1
    has_down = r < rows - 1

    wx_left = np.where(has_left, wx[np.maximum(p - 1, 0)], 0.0)
    wy_up = np.where(has_up, wy[np.maximum(p - cols, 0)], 0.0)
    wx_here = np.where(has_right, wx, 0.0)
    wy_here = np.where(has_down, wy, 0.0)

    cand_cols = np.stack([p - cols, p - 1, p, p + 1, p + cols], axis=1)
    cand_vals = np.stack(
        [
            -lam * wy_up,
            -lam * wx_left,
            fidelity + lam * (wx_here + wx_left + wy_here + wy_up),
            -lam * wx_here,
            -lam * wy_here,
        ],
        axis=1,
    )
    mask = np.stack([has_up, has_left, np.ones(n, dtype=bool), has_right, has_down], axis=1)
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(mask.sum(axis=1), out=row_ptr[1:])
    return CsrMatrix(n, n, row_ptr, cand_cols[mask], cand_vals[mask])


def check_square(m: CsrMatrix) -> None:
    if m.n_rows != m.n_cols:
        raise NotSquare(f"matrix is {m.n_rows}x{m.n_cols}")
