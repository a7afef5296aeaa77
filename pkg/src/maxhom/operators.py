"""Symmetrized curl-div operators: variable-coefficient applies and constant
Fourier symbols.

The second-order operator family used throughout is

    L[A, B] f = A^{-1/2} curl B^{-1} curl A^{-1/2} f
                - A^{1/2} grad div A^{1/2} f          (+ optional shift * f)

with symmetric positive definite matrix coefficients A, B.  It is Hermitian
nonnegative for the grid inner product; the grad-div term is kept so the
discrete operator matches the continuous structure.  For constant (A0, B0)
the operator is the Fourier multiplier

    P(k) = A0^{-1/2} [k]x^T B0^{-1} [k]x A0^{-1/2}
         + A0^{1/2} k k^T A0^{1/2} + shift * 1,

which is assembled mode-by-mode as a (n1, n2, n3, 3, 3) array; this is both
the exact solver for effective problems and the preconditioner for the
variable-coefficient CG.
"""

from __future__ import annotations

import numpy as np

from .fields import curl_vals, div_vals, fftn, grad_vals, ifftn, matvec_vals
from .lattice import GridSpec


def apply_sym(grid: GridSpec, a_sqrt, a_isqrt, b_inv, f: np.ndarray,
              shift: float = 0.0) -> np.ndarray:
    """L[A, B] f (+ shift f) with pointwise coefficient arrays of shape (3,3,n)."""
    c = curl_vals(grid, matvec_vals(a_isqrt, f))
    t1 = matvec_vals(a_isqrt, curl_vals(grid, matvec_vals(b_inv, c)))
    p = div_vals(grid, matvec_vals(a_sqrt, f))
    t2 = matvec_vals(a_sqrt, grad_vals(grid, p))
    out = t1 - t2
    if shift:
        out = out + shift * f
    return out


def _cross_matrices(grid: GridSpec) -> np.ndarray:
    """[k]x for every grid mode, shape (n1, n2, n3, 3, 3)."""
    k = np.moveaxis(grid.freq_deriv, 0, -1)
    K = np.zeros(grid.n + (3, 3))
    K[..., 0, 1] = -k[..., 2]
    K[..., 0, 2] = k[..., 1]
    K[..., 1, 0] = k[..., 2]
    K[..., 1, 2] = -k[..., 0]
    K[..., 2, 0] = -k[..., 1]
    K[..., 2, 1] = k[..., 0]
    return K


def matrix_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(np.asarray(m, dtype=float))
    if w.min() <= 0:
        raise ValueError(f"matrix not positive definite (eig {w.min():.3e})")
    return v @ np.diag(np.sqrt(w)) @ v.T


def matrix_inv_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(np.asarray(m, dtype=float))
    if w.min() <= 0:
        raise ValueError(f"matrix not positive definite (eig {w.min():.3e})")
    return v @ np.diag(1.0 / np.sqrt(w)) @ v.T


def sym_symbol(grid: GridSpec, a0, b0, shift: float = 0.0) -> np.ndarray:
    """Constant-coefficient symbol P(k), shape (n1, n2, n3, 3, 3)."""
    S = matrix_inv_sqrt(a0)
    T = matrix_sqrt(a0)
    Binv = np.linalg.inv(np.asarray(b0, dtype=float))
    K = _cross_matrices(grid)
    term1 = S @ (np.swapaxes(K, -1, -2) @ (Binv @ K)) @ S
    Tk = np.moveaxis(grid.freq_deriv, 0, -1) @ T  # rows (T k)^T
    term2 = Tk[..., :, None] * Tk[..., None, :]
    sym = term1 + term2
    if shift:
        sym = sym + shift * np.eye(3)
    return sym


def sym_symbol_inverse(grid: GridSpec, a0, b0, shift: float = 0.0) -> np.ndarray:
    """Mode-wise inverse of the symbol; with shift = 0 the singular modes
    (k = 0 under the derivative convention) are mapped to zero."""
    sym = sym_symbol(grid, a0, b0, shift=shift)
    if shift > 0:
        return np.linalg.inv(sym)
    mask = grid.k2_deriv > 0
    out = np.zeros_like(sym)
    out[mask] = np.linalg.inv(sym[mask])
    return out


def apply_symbol(grid: GridSpec, symbol: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Apply a mode-wise (3, 3) multiplier to a vector-valued array (3, n)."""
    fh = np.moveaxis(fftn(f), 0, -1)
    out = np.einsum("...ij,...j->...i", symbol, fh)
    return ifftn(np.moveaxis(out, -1, 0))
