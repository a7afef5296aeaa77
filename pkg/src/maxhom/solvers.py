"""Preconditioned conjugate gradients for the periodic spectral operators.

All cell and torus operators in this package are Hermitian positive
(semi-)definite with respect to the plain grid inner product, and every
preconditioner is an exactly invertible constant-coefficient Fourier symbol.
The stopping criterion is the preconditioned residual norm relative to the
preconditioned source norm, which for the Laplacian-like preconditioners used
here is the natural dual (spectral) norm of the residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NoConvergence(RuntimeError):
    """Iterative solve stalled before reaching the requested tolerance."""

    def __init__(self, iterations: int, residual: float, context: str = ""):
        self.iterations = iterations
        self.residual = residual
        msg = f"no convergence after {iterations} iterations (residual {residual:.3e})"
        if context:
            msg = f"{context}: {msg}"
        super().__init__(msg)


@dataclass
class SolveInfo:
    iterations: int
    residual: float       # preconditioned relative residual at exit
    true_residual: float  # plain relative residual ||b - Ax|| / ||b||


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    # Hermitian inner product; for Hermitian PD systems the value is real.
    return float(np.real(np.vdot(a, b)))


def pcg(apply_op, b: np.ndarray, apply_prec, tol: float, maxiter: int,
        context: str = "") -> tuple[np.ndarray, SolveInfo]:
    """Solve A x = b for Hermitian positive definite A.

    apply_op / apply_prec map arrays of b's shape to arrays of that shape;
    apply_prec realizes M^-1.  Raises :class:`NoConvergence` after `maxiter`
    iterations.
    """
    bnorm2 = _dot(b, b)
    if bnorm2 == 0.0:
        return np.zeros_like(b), SolveInfo(0, 0.0, 0.0)

    x = np.zeros_like(b)
    r = b.copy()
    z = apply_prec(r)
    p = z.copy()
    rz = _dot(r, z)
    rz0 = rz
    it = 0
    rel = 1.0
    while it < maxiter:
        ap = apply_op(p)
        pap = _dot(p, ap)
        if pap <= 0:
            raise NoConvergence(it, rel, context or "indefinite operator")
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        z = apply_prec(r)
        rz_new = _dot(r, z)
        it += 1
        rel = np.sqrt(max(rz_new, 0.0) / rz0)
        if rel <= tol:
            res = b - apply_op(x)
            true_rel = np.sqrt(_dot(res, res) / bnorm2)
            return x, SolveInfo(it, rel, true_rel)
        beta = rz_new / rz
        p = z + beta * p
        rz = rz_new
    raise NoConvergence(it, rel, context)
