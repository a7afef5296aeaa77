"""Dense coupled-mode oracles for the symmetrized torus solves.

These assemble the Fourier-space matrix of the symmetrized operator from
first principles -- circular convolution matrices built by explicit index
arithmetic on the coefficient spectra, composed with the mode-wise curl /
div / grad symbols -- and solve the resulting linear system directly.  They
share nothing with the FFT-apply + CG path beyond the coefficient samples,
so agreement validates both the operator assembly and the iterative solve.

Two variants:

* :func:`dense_solve_1d`: coefficients constant along axes 1 and 2.  The
  system block-diagonalizes over the transverse mode pairs into dense
  3*n1 x 3*n1 blocks; practical up to 16^3 and beyond.
* :func:`dense_solve_3d`: fully general coefficients, one dense 3N x 3N
  matrix; practical for small grids (8^3).
"""

from __future__ import annotations

import numpy as np

from .fields import VectorField, fftn, ifftn
from .maxwell import MaxwellProblem, _branch_coeffs, symmetrized_rhs


def _conv1_matrix(profile: np.ndarray) -> np.ndarray:
    """Circular convolution matrix of a 1D profile: C[k, k'] = phat[k-k'] / n."""
    n = profile.shape[0]
    ph = np.fft.fft(profile)
    k = np.arange(n)
    return ph[(k[:, None] - k[None, :]) % n] / n


def _axis_profiles(vals: np.ndarray) -> np.ndarray:
    """Extract the (3, 3, n1) profiles of a coefficient that depends on axis 0
    only; raises if it actually varies along axes 1 or 2."""
    ref = vals[:, :, :, :1, :1]
    if not np.allclose(vals, ref, atol=1e-13 * max(1.0, np.abs(vals).max())):
        raise ValueError("coefficient varies along a transverse axis")
    return vals[:, :, :, 0, 0]


def _conv_blocks_1d(mat_profiles: np.ndarray) -> np.ndarray:
    """(3, 3) block of 1D convolution matrices -> (3 n1, 3 n1) dense array."""
    n1 = mat_profiles.shape[-1]
    out = np.zeros((3 * n1, 3 * n1), dtype=complex)
    for i in range(3):
        for j in range(3):
            out[i * n1:(i + 1) * n1, j * n1:(j + 1) * n1] = _conv1_matrix(
                mat_profiles[i, j])
    return out


def dense_solve_1d(problem: MaxwellProblem, branch: str,
                   rhs: VectorField | None = None) -> VectorField:
    """Direct coupled-mode solve for coefficients depending on axis 0 only."""
    A, B, _ = _branch_coeffs(problem, branch)
    g = problem.torus
    n1, n2, n3 = g.n
    if rhs is None:
        rhs = symmetrized_rhs(problem, branch)

    Ca_s = _conv_blocks_1d(_axis_profiles(A.power(0.5).values))
    Ca_is = _conv_blocks_1d(_axis_profiles(A.power(-0.5).values))
    Cb_inv = _conv_blocks_1d(_axis_profiles(B.inv().values))

    rh = fftn(rhs.values)  # (3, n1, n2, n3)
    k = g.freq_deriv       # (3, n1, n2, n3), Nyquist already zeroed
    out_h = np.zeros_like(rh)

    eye = np.eye(3 * n1, dtype=complex)
    for i2 in range(n2):
        for i3 in range(n3):
            kv = k[:, :, i2, i3]  # (3, n1) frequency per axial mode
            # mode-wise curl symbol i [k]x as a (3 n1, 3 n1) block-diagonal-in-k1
            Bc = np.zeros((3 * n1, 3 * n1), dtype=complex)
            d = np.arange(n1)
            Bc[0 * n1 + d, 1 * n1 + d] = -1j * kv[2]
            Bc[0 * n1 + d, 2 * n1 + d] = 1j * kv[1]
            Bc[1 * n1 + d, 0 * n1 + d] = 1j * kv[2]
            Bc[1 * n1 + d, 2 * n1 + d] = -1j * kv[0]
            Bc[2 * n1 + d, 0 * n1 + d] = -1j * kv[1]
            Bc[2 * n1 + d, 1 * n1 + d] = 1j * kv[0]
            D = np.zeros((n1, 3 * n1), dtype=complex)
            D[d, 0 * n1 + d] = 1j * kv[0]
            D[d, 1 * n1 + d] = 1j * kv[1]
            D[d, 2 * n1 + d] = 1j * kv[2]

            A1 = Bc @ Ca_is
            A2 = D @ Ca_s
            L = A1.conj().T @ (Cb_inv @ A1) + A2.conj().T @ A2 + eye
            b = rh[:, :, i2, i3].reshape(3 * n1)
            out_h[:, :, i2, i3] = np.linalg.solve(L, b).reshape(3, n1)

    return VectorField(g, ifftn(out_h))


def _conv3_matrix(vals: np.ndarray, g) -> np.ndarray:
    """Circular convolution matrix of a 3D scalar field (N x N dense)."""
    vh = fftn(vals) / g.size
    n1, n2, n3 = g.n
    i1 = np.arange(n1)
    i2 = np.arange(n2)
    i3 = np.arange(n3)
    I1 = (i1[:, None] - i1[None, :]) % n1
    I2 = (i2[:, None] - i2[None, :]) % n2
    I3 = (i3[:, None] - i3[None, :]) % n3
    out = vh[
        I1[:, None, None, :, None, None],
        I2[None, :, None, None, :, None],
        I3[None, None, :, None, None, :],
    ]
    return out.reshape(g.size, g.size)


def _conv3_blocks(mat_vals: np.ndarray, g) -> np.ndarray:
    N = g.size
    out = np.zeros((3 * N, 3 * N), dtype=complex)
    for i in range(3):
        for j in range(3):
            out[i * N:(i + 1) * N, j * N:(j + 1) * N] = _conv3_matrix(
                mat_vals[i, j], g)
    return out


def dense_operator_3d(problem: MaxwellProblem, branch: str) -> np.ndarray:
    """Full dense Fourier-space matrix of (L_eps + 1); small grids only."""
    A, B, _ = _branch_coeffs(problem, branch)
    g = problem.torus
    N = g.size
    Ca_s = _conv3_blocks(A.power(0.5).values, g)
    Ca_is = _conv3_blocks(A.power(-0.5).values, g)
    Cb_inv = _conv3_blocks(B.inv().values, g)
    k = g.freq_deriv.reshape(3, N)
    Bc = np.zeros((3 * N, 3 * N), dtype=complex)
    d = np.arange(N)
    Bc[0 * N + d, 1 * N + d] = -1j * k[2]
    Bc[0 * N + d, 2 * N + d] = 1j * k[1]
    Bc[1 * N + d, 0 * N + d] = 1j * k[2]
    Bc[1 * N + d, 2 * N + d] = -1j * k[0]
    Bc[2 * N + d, 0 * N + d] = -1j * k[1]
    Bc[2 * N + d, 1 * N + d] = 1j * k[0]
    D = np.zeros((N, 3 * N), dtype=complex)
    for c in range(3):
        D[d, c * N + d] = 1j * k[c]
    A1 = Bc @ Ca_is
    A2 = D @ Ca_s
    return A1.conj().T @ (Cb_inv @ A1) + A2.conj().T @ A2 + np.eye(3 * N)


def dense_solve_3d(problem: MaxwellProblem, branch: str,
                   rhs: VectorField | None = None) -> VectorField:
    g = problem.torus
    if rhs is None:
        rhs = symmetrized_rhs(problem, branch)
    L = dense_operator_3d(problem, branch)
    b = fftn(rhs.values).reshape(3 * g.size)
    x = np.linalg.solve(L, b)
    return VectorField(g, ifftn(x.reshape((3,) + g.n)))
