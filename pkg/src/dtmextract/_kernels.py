"""Compiled inner loops for CSR products, IC(0) and triangular solves.

All loops run sequentially in a fixed order so results are bit-reproducible.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def csr_matvec(row_ptr, col_idx, vals, x, out):
    n = row_ptr.shape[0] - 1
    for i in range(n):
        acc = 0.0
        for k in range(row_ptr[i], row_ptr[i + 1]):
            acc += vals[k] * x[col_idx[k]]
        out[i] = acc
    return out


@njit(cache=True)
def ic0_lower(row_ptr, col_idx, vals, out):
    """IC(0) on a CSR lower triangle (diagonal stored last in each row).

    ``out`` receives the factor values on the same pattern. Returns -1 on
    success or the index of the first row whose pivot is not positive.
    """
    n = row_ptr.shape[0] - 1
    for i in range(n):
        start = row_ptr[i]
        end = row_ptr[i + 1]
        for k in range(start, end):
            j = col_idx[k]
            # sum over shared columns m < j of L[i, m] * L[j, m]
            acc = vals[k]
            a = start
            b = row_ptr[j]
            b_end = row_ptr[j + 1]
            while a < k and b < b_end:
                ca = col_idx[a]
                cb = col_idx[b]
                if cb >= j:
                    break
                if ca == cb:
                    acc -= out[a] * out[b]
                    a += 1
                    b += 1
                elif ca < cb:
                    a += 1
                else:
                    b += 1
            if j < i:
                out[k] = acc / out[b_end - 1]
            else:
                if not acc > 0.0:
                    return i
                out[k] = np.sqrt(acc)
    return -1


@njit(cache=True)
def lower_solve(row_ptr, col_idx, vals, rhs, out):
    """Forward substitution L y = rhs (diagonal last in each row)."""
    n = row_ptr.shape[0] - 1
    for i in range(n):
        acc = rhs[i]
        end = row_ptr[i + 1] - 1
        for k in range(row_ptr[i], end):
            acc -= vals[k] * out[col_idx[k]]
        out[i] = acc / vals[end]
    return out


@njit(cache=True)
def lower_transpose_solve(row_ptr, col_idx, vals, rhs, out):
    """Back substitution L^T z = rhs using the row storage of L."""
    n = row_ptr.shape[0] - 1
    for i in range(n):
        out[i] = rhs[i]
    for i in range(n - 1, -1, -1):
        end = row_ptr[i + 1] - 1
        zi = out[i] / vals[end]
        out[i] = zi
        for k in range(row_ptr[i], end):
            out[col_idx[k]] -= vals[k] * zi
    return out
