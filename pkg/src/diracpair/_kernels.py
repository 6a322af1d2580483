"""Fused elementwise kernels for the packed spinor state.

The evolving state is packed as (n_modes, 2, N_x) complex128 so both spinor
components of a row chunk feed one batched FFT.  Kernels are strictly
elementwise per mode row, so results are independent of chunking and thread
scheduling down to the bit.
"""

from __future__ import annotations

import numpy as np
from numba import njit

CHUNK_ROWS = 256  # fixed blocking constant; never derived from worker count


@njit(cache=True, nogil=True)
def kick(z: np.ndarray, phase: np.ndarray) -> None:
    """z[i, c, j] *= phase[j] for both spinor components."""
    m, _, n = z.shape
    for i in range(m):
        for j in range(n):
            z[i, 0, j] = z[i, 0, j] * phase[j]
            z[i, 1, j] = z[i, 1, j] * phase[j]


@njit(cache=True, nogil=True)
def mix(f: np.ndarray, a: np.ndarray, b: np.ndarray, d: np.ndarray) -> None:
    """Apply the 2x2 momentum-space factor [[a, b], [b, d]] per column."""
    m, _, n = f.shape
    for i in range(m):
        for j in range(n):
            fu = f[i, 0, j]
            fl = f[i, 1, j]
            f[i, 0, j] = a[j] * fu + b[j] * fl
            f[i, 1, j] = b[j] * fu + d[j] * fl


@njit(cache=True, nogil=True)
def project_rows(
    f: np.ndarray, wp: np.ndarray, wm: np.ndarray, up: np.ndarray, um: np.ndarray
) -> None:
    """Branch projections from component FFTs: U_b[i, k] = sum_c W_b[c,k] f[i,c,k]."""
    m, _, n = f.shape
    for i in range(m):
        for j in range(n):
            up[i, j] = wp[0, j] * f[i, 0, j] + wp[1, j] * f[i, 1, j]
            um[i, j] = wm[0, j] * f[i, 0, j] + wm[1, j] * f[i, 1, j]


@njit(cache=True, nogil=True)
def abs2_reductions(
    up: np.ndarray,
    um: np.ndarray,
    f: np.ndarray,
    weight_sq: float,
    row_plus: np.ndarray,
    row_minus: np.ndarray,
    row_norm: np.ndarray,
    col_plus: np.ndarray,
) -> None:
    """Per-row and per-column |U|^2 sums plus the Parseval norm per row.

    row_plus[i] = sum_k |U+_{ik}|^2, row_minus likewise for the negative
    branch, row_norm[i] = weight_sq * sum_{c,k} |f[i,c,k]|^2, and col_plus
    accumulates sum_i |U+_{ik}|^2 for the rows of this chunk (caller zeroes).
    """
    m, n = up.shape
    for i in range(m):
        sp = 0.0
        sm = 0.0
        sn = 0.0
        for j in range(n):
            a = up[i, j]
            pa = a.real * a.real + a.imag * a.imag
            sp += pa
            b = um[i, j]
            sm += b.real * b.real + b.imag * b.imag
            f0 = f[i, 0, j]
            f1 = f[i, 1, j]
            sn += f0.real * f0.real + f0.imag * f0.imag
            sn += f1.real * f1.real + f1.imag * f1.imag
            col_plus[j] += pa
        row_plus[i] = sp
        row_minus[i] = sm
        row_norm[i] = sn * weight_sq


@njit(cache=True, nogil=True)
def accumulate_density(phi: np.ndarray, rho: np.ndarray) -> None:
    """rho[j] += sum_{i,c} |phi[i, c, j]|^2."""
    m, _, n = phi.shape
    for i in range(m):
        for j in range(n):
            a = phi[i, 0, j]
            b = phi[i, 1, j]
            rho[j] += a.real * a.real + a.imag * a.imag
            rho[j] += b.real * b.real + b.imag * b.imag
