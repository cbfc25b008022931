"""Preconditioned conjugate gradient with a zero-fill incomplete Cholesky
preconditioner, for the symmetric positive definite systems built by
:mod:`dtmextract.sparse`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, FactorizationFailed, NonFiniteEncountered
from .sparse import CsrMatrix, check_square, spmv

log = logging.getLogger(__name__)

# escalating relative diagonal shifts tried after an IC(0) pivot breakdown
SHIFT_SCHEDULE = (1e-3, 1e-2, 1e-1, 1.0)


@dataclass(frozen=True, eq=False)
class IcFactor:
    lower: CsrMatrix
    shift_used: float = 0.0

    def apply(self, r: np.ndarray) -> np.ndarray:
        """Return z with L L^T z = r."""
        m = self.lower
        y = _kernels.lower_solve(m.row_ptr, m.col_idx, m.vals, r, np.empty_like(r))
        return _kernels.lower_transpose_solve(m.row_ptr, m.col_idx, m.vals, y, np.empty_like(r))


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    final_relative_residual: float
    converged: bool
    shift_used: float = 0.0


def ic0_factor(a: CsrMatrix) -> IcFactor:
    """Incomplete Cholesky factor L (lower, pattern of tril(a)), L L^T ~ a.

    On a non-positive pivot the factorization is retried on
    ``a + sigma * diag(a)`` for each sigma in :data:`SHIFT_SCHEDULE`.
    """
    check_square(a)
    low = a.lower()
    diag_pos = low.row_ptr[1:] - 1
    if (
        np.any(np.diff(low.row_ptr) == 0)
        or not np.array_equal(low.col_idx[diag_pos], np.arange(a.n_rows))
    ):
        raise ValueError("ic0_factor needs a stored diagonal entry in every row")

    out = np.empty_like(low.vals)
    failed = _kernels.ic0_lower(low.row_ptr, low.col_idx, low.vals, out)
    if failed < 0:
        return IcFactor(CsrMatrix(low.n_rows, low.n_cols, low.row_ptr, low.col_idx, out), 0.0)

    diag = low.vals[diag_pos]
    for sigma in SHIFT_SCHEDULE:
        log.debug("IC(0) pivot breakdown at row %d; retrying with shift %g", failed, sigma)
        shifted = low.vals.copy()
        shifted[diag_pos] += sigma * diag
        failed = _kernels.ic0_lower(low.row_ptr, low.col_idx, shifted, out)
        if failed < 0:
            factor = CsrMatrix(low.n_rows, low.n_cols, low.row_ptr, low.col_idx, out)
            return IcFactor(factor, sigma)
    raise FactorizationFailed(f"IC(0) pivot breakdown at row {failed} persists at shift 1")


def pcg_solve(
    a: CsrMatrix,
    b,
    x0=None,
    precond: Optional[IcFactor] = None,
    tol: float = 1e-3,
    max_iter: int = 1000,
) -> tuple[np.ndarray, SolveReport]:
    """Solve ``a x = b`` by preconditioned conjugate gradients.

    Stops once ``||b - a x||_2 / ||b||_2 <= tol``. If ``max_iter`` is hit
    first, the iterate with the smallest residual is returned with
    ``converged=False``. ``precond=None`` runs plain CG.
    """
    check_square(a)
    n = a.n_rows
    b = np.ascontiguousarray(b, dtype=np.float64)
    if b.shape != (n,):
        raise DimensionMismatch(f"rhs has shape {b.shape}, expected ({n},)")
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    if x.shape != (n,):
        raise DimensionMismatch(f"x0 has shape {x.shape}, expected ({n},)")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    shift = precond.shift_used if precond is not None else 0.0

    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return np.zeros(n), SolveReport(0, 0.0, True, shift)

    apply_m = precond.apply if precond is not None else np.copy

    r = b - spmv(a, x)
    res = np.linalg.norm(r) / b_norm
    if res <= tol:
        return x, SolveReport(0, float(res), True, shift)
    best_x, best_res = x.copy(), res

    z = apply_m(r)
    p = z.copy()
    rz = r @ z
    it = 0
    while it < max_iter:
        it += 1
        q = spmv(a, p)
        pq = p @ q
        if not np.isfinite(pq):
            raise NonFiniteEncountered(f"non-finite curvature at PCG iteration {it}")
        if pq <= 0.0:
            log.warning("PCG curvature breakdown (p'Ap=%g) at iteration %d", pq, it)
            break
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(r))):
            raise NonFiniteEncountered(f"non-finite iterate at PCG iteration {it}")
        res = np.linalg.norm(r) / b_norm
        if res <= tol:
            # confirm against the true residual; recurrence drift can lie
            r = b - spmv(a, x)
            res = np.linalg.norm(r) / b_norm
            if res <= tol:
                return x, SolveReport(it, float(res), True, shift)
        if res < best_res:
            best_x, best_res = x.copy(), res
        z = apply_m(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new

    final = np.linalg.norm(b - spmv(a, best_x)) / b_norm
    return best_x, SolveReport(it, float(final), False, shift)
