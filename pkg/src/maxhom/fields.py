"""Periodic grid fields with exact spectral calculus.

Fields are complex samples on a :class:`~maxhom.lattice.GridSpec`; a scalar
field stores shape (n1, n2, n3), a vector field (3, n1, n2, n3), and a matrix
field (3, 3, n1, n2, n3).  All calculus (gradient, divergence, curl, Poisson
inverse) acts on the trigonometric interpolant and is therefore exact on
band-limited data; there are no finite differences anywhere.

curl is realized through the representation curl = sum_j b_j D_j with the
constant antisymmetric matrices b_j, i.e. mode-wise as i k x (.), and shares
its frequency array with gradient/divergence so that curl(grad f) = 0 and
div(curl v) = 0 hold to rounding.

Pointwise products of band-limited fields alias; the `dealias=True` paths
evaluate products on a 2x padded grid and truncate back, which keeps identity
checks honest.  Solver operator applications use plain collocation products
(the standard Fourier collocation scheme).

Integral conventions over the cell Omega:

    mean(f)   = |Omega|^-1 int_Omega f dx      (zero-frequency coefficient)
    ||f||^2   = int_Omega |f|^2 dx             (carries the |Omega| factor)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field as dc_field
from typing import ClassVar

import numpy as np
import scipy.fft as sfft

from .lattice import GridSpec

# Number of FFT worker threads; fixed per process so results are reproducible
# for a given setting.
_FFT_WORKERS = 1


def set_fft_workers(workers: int) -> None:
    global _FFT_WORKERS
    _FFT_WORKERS = max(1, int(workers))


class GridMismatch(ValueError):
    """Raised when two fields (or a field and a multiplier) live on different grids."""


class SingularPoint(ValueError):
    """Raised when a pointwise matrix inversion / square root fails."""


def fftn(values: np.ndarray) -> np.ndarray:
    return sfft.fftn(values, axes=(-3, -2, -1), workers=_FFT_WORKERS)


def ifftn(values: np.ndarray) -> np.ndarray:
    return sfft.ifftn(values, axes=(-3, -2, -1), workers=_FFT_WORKERS)


# ---------------------------------------------------------------------------
# field containers
# ---------------------------------------------------------------------------


@dataclass
class Field:
    grid: GridSpec
    values: np.ndarray
    real: bool = False

    RANK_SHAPE: ClassVar[tuple] = ()

    def __post_init__(self):
        expect = self.RANK_SHAPE + self.grid.n
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != expect:
            raise ValueError(
                f"{type(self).__name__} expects shape {expect}, got {self.values.shape}"
            )

    def check_real(self, rtol: float = 1e-10) -> float:
        """Max imaginary part relative to the sup-norm; asserts the `real` flag."""
        sup = np.max(np.abs(self.values))
        rel = 0.0 if sup == 0 else np.max(np.abs(self.values.imag)) / sup
        if self.real and rel > rtol:
            raise ValueError(f"field flagged real has relative imag part {rel:.3e}")
        return rel

    def _like(self, values, real=None):
        return type(self)(self.grid, values, self.real if real is None else real)


class ScalarField(Field):
    RANK_SHAPE: ClassVar[tuple] = ()


class VectorField(Field):
    RANK_SHAPE: ClassVar[tuple] = (3,)


class MatrixField(Field):
    RANK_SHAPE: ClassVar[tuple] = (3, 3)


def scalar_from_function(grid: GridSpec, fn, real=True) -> ScalarField:
    return ScalarField(grid, fn(grid.coords()), real=real)


def vector_from_function(grid: GridSpec, fn, real=True) -> VectorField:
    x = grid.coords()
    return VectorField(grid, np.stack([fn(x)[d] for d in range(3)]), real=real)


def _check_same_grid(a: Field, b) -> None:
    bg = b.grid if isinstance(b, Field) else b
    if not a.grid.compatible(bg):
        raise GridMismatch(f"grids differ: {a.grid} vs {bg}")


# ---------------------------------------------------------------------------
# spectral calculus
# ---------------------------------------------------------------------------


def gradient(f: ScalarField) -> VectorField:
    fh = fftn(f.values)
    out = ifftn(1j * f.grid.freq_deriv * fh[None])
    return VectorField(f.grid, out, real=f.real)


def divergence(v: VectorField) -> ScalarField:
    vh = fftn(v.values)
    out = ifftn(np.einsum("d...,d...->...", 1j * v.grid.freq_deriv, vh))
    return ScalarField(v.grid, out, real=v.real)


def curl(v: VectorField) -> VectorField:
    k = v.grid.freq_deriv
    vh = fftn(v.values)
    out = np.empty_like(vh)
    out[0] = 1j * (k[1] * vh[2] - k[2] * vh[1])
    out[1] = 1j * (k[2] * vh[0] - k[0] * vh[2])
    out[2] = 1j * (k[0] * vh[1] - k[1] * vh[0])
    return VectorField(v.grid, ifftn(out), real=v.real)


def mean(f: Field):
    """Cell average |Omega|^-1 int f dx (zero-frequency Fourier coefficient).

    Returns a scalar / length-3 vector / (3, 3) matrix according to rank.
    """
    m = f.values.reshape(f.RANK_SHAPE + (-1,)).mean(axis=-1)
    if f.real:
        m = m.real
    return m


def l2_norm(f: Field) -> float:
    """L2(Omega) norm of the field (all components), including the |Omega| factor."""
    w = f.grid.cell_volume / f.grid.size
    return float(np.sqrt(w * np.sum(np.abs(f.values) ** 2)))


def inner(f: Field, g: Field) -> complex:
    """L2(Omega) inner product (f, g) = int <f, g-bar> dx."""
    _check_same_grid(f, g)
    w = f.grid.cell_volume / f.grid.size
    return complex(w * np.sum(f.values * np.conj(g.values)))


def grad_norm(f: Field) -> float:
    """L2 norm of the (componentwise) gradient, computed in Fourier space."""
    fh = fftn(f.values) / f.grid.size
    k2 = f.grid.k2_deriv
    return float(
        np.sqrt(f.grid.cell_volume * np.sum(k2 * np.abs(fh) ** 2))
    )


def poisson_solve(rhs: ScalarField) -> ScalarField:
    """Zero-mean periodic solution of Laplace(u) = rhs (Cartesian Laplacian).

    Exact in Fourier: division by -|k|^2.  Modes with |k|^2 = 0 under the
    derivative convention (the zero mode and pure Nyquist modes) are dropped;
    solvability therefore requires mean(rhs) = 0, which the caller guarantees.
    """
    g = rhs.grid
    rh = fftn(rhs.values)
    k2 = g.k2_deriv
    with np.errstate(divide="ignore", invalid="ignore"):
        uh = np.where(k2 > 0, -rh / np.where(k2 > 0, k2, 1.0), 0.0)
    return ScalarField(g, ifftn(uh), real=rhs.real)


# raw-array variants used inside the iterative solvers (no Field wrappers)


def grad_vals(grid: GridSpec, s: np.ndarray) -> np.ndarray:
    return ifftn(1j * grid.freq_deriv * fftn(s)[None])


def div_vals(grid: GridSpec, v: np.ndarray) -> np.ndarray:
    return ifftn(np.einsum("d...,d...->...", 1j * grid.freq_deriv, fftn(v)))


def curl_vals(grid: GridSpec, v: np.ndarray) -> np.ndarray:
    k = grid.freq_deriv
    vh = fftn(v)
    out = np.empty_like(vh)
    out[0] = 1j * (k[1] * vh[2] - k[2] * vh[1])
    out[1] = 1j * (k[2] * vh[0] - k[0] * vh[2])
    out[2] = 1j * (k[0] * vh[1] - k[1] * vh[0])
    return ifftn(out)


def matvec_vals(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("ij...,j...->i...", m, v)


# ---------------------------------------------------------------------------
# pointwise algebra (collocation and de-aliased)
# ---------------------------------------------------------------------------


def _pad_spectrum(vals: np.ndarray, n, pn) -> np.ndarray:
    """Zero-pad the spectrum of `vals` from grid n to grid pn (per axis)."""
    vh = fftn(vals)
    out = np.zeros(vals.shape[:-3] + tuple(pn), dtype=complex)
    sl = [slice(None)] * (vals.ndim - 3)
    idx_src, idx_dst = [], []
    for nk, pk in zip(n, pn):
        h = nk // 2
        idx_src.append(np.r_[0:h, nk - h : nk])
        idx_dst.append(np.r_[0:h, pk - h : pk])
    src = np.ix_(*idx_src)
    dst = np.ix_(*idx_dst)
    out[tuple(sl) + dst] = vh[tuple(sl) + src]
    scale = np.prod(pn) / np.prod(n)
    return ifftn(out * scale)


def _truncate_spectrum(vals: np.ndarray, pn, n) -> np.ndarray:
    vh = fftn(vals)
    out = np.zeros(vals.shape[:-3] + tuple(n), dtype=complex)
    sl = [slice(None)] * (vals.ndim - 3)
    idx_src, idx_dst = [], []
    for nk, pk in zip(n, pn):
        h = nk // 2
        idx_src.append(np.r_[0:h, pk - h : pk])
        idx_dst.append(np.r_[0:h, nk - h : nk])
    out[tuple(sl) + np.ix_(*idx_dst)] = vh[tuple(sl) + np.ix_(*idx_src)]
    scale = np.prod(n) / np.prod(pn)
    return ifftn(out * scale)


def _product_values(a: np.ndarray, b: np.ndarray, spec: str) -> np.ndarray:
    if spec == "ss":
        return a * b
    if spec == "sv" or spec == "sm":
        return a[None] * b if spec == "sv" else a[None, None] * b
    if spec == "mv":
        return np.einsum("ij...,j...->i...", a, b)
    if spec == "mm":
        return np.einsum("ij...,jk...->ik...", a, b)
    if spec == "vdot":
        return np.einsum("i...,i...->...", a, b)
    raise ValueError(f"unknown product spec {spec}")


def pointwise(a: Field, b: Field, spec: str, dealias: bool = False) -> Field:
    """Pointwise product of two fields.

    spec: "ss" scalar*scalar, "sv" scalar*vector, "sm" scalar*matrix,
    "mv" matrix@vector, "mm" matrix@matrix, "vdot" <vector, vector>
    (bilinear, no conjugation).

    With dealias=True both factors are padded to the doubled grid, multiplied
    there, and the result truncated back; exact whenever the true product is
    band-limited to the doubled grid.
    """
    _check_same_grid(a, b)
    g = a.grid
    if dealias:
        pn = tuple(2 * nk for nk in g.n)
        av = _pad_spectrum(a.values, g.n, pn)
        bv = _pad_spectrum(b.values, g.n, pn)
        pv = _product_values(av, bv, spec)
        vals = _truncate_spectrum(pv, pn, g.n)
    else:
        vals = _product_values(a.values, b.values, spec)
    cls = {"ss": ScalarField, "sv": VectorField, "sm": MatrixField,
           "mv": VectorField, "mm": MatrixField, "vdot": ScalarField}[spec]
    return cls(g, vals, real=a.real and b.real)


def matvec(m: MatrixField, v: VectorField, dealias: bool = False) -> VectorField:
    return pointwise(m, v, "mv", dealias=dealias)


def const_matvec(m, v: VectorField) -> VectorField:
    """Constant 3x3 matrix applied to a vector field."""
    m = np.asarray(m)
    vals = np.einsum("ij,j...->i...", m, v.values)
    return VectorField(v.grid, vals, real=v.real and np.isrealobj(m))


def transpose(m: MatrixField) -> MatrixField:
    return MatrixField(m.grid, np.swapaxes(m.values, 0, 1), real=m.real)


def add(a: Field, b: Field) -> Field:
    _check_same_grid(a, b)
    return a._like(a.values + b.values, real=a.real and b.real)


def sub(a: Field, b: Field) -> Field:
    _check_same_grid(a, b)
    return a._like(a.values - b.values, real=a.real and b.real)


def scale(a: Field, c) -> Field:
    return a._like(a.values * c, real=a.real and np.isreal(c))


def rescale_periodic(f: Field, n_periods: int, torus: GridSpec) -> Field:
    """Exact nodal samples of x -> f(x / eps), eps = 1/n_periods, on a torus
    grid commensurate with the cell grid of f.

    Torus node j maps to the cell fractional coordinate
    n_periods * (j / N_t - 1/2) mod 1, which must land on a cell node; this
    holds whenever n_periods * N_cell is a multiple of N_torus per axis
    (in the common equal-resolution case: n_periods divides N).
    """
    if not np.allclose(torus.lattice.basis, f.grid.lattice.basis):
        raise GridMismatch("torus and cell grids use different lattices")
    idx = []
    for ax in range(3):
        nt, nc = torus.n[ax], f.grid.n[ax]
        # torus node j at fractional n*(j/nt - 1/2) lands on cell node
        # nc * (n*(j/nt - 1/2) + 1/2) mod nc
        num = n_periods * np.arange(nt) * nc
        if np.any(num % nt):
            raise GridMismatch(
                f"axis {ax}: {n_periods} periods not representable on torus "
                f"grid {nt} from cell grid {nc}"
            )
        idx.append((num // nt + (nc * (1 - n_periods)) // 2) % nc)
    vals = f.values[..., idx[0][:, None, None], idx[1][None, :, None],
                    idx[2][None, None, :]]
    return type(f)(torus, vals, real=f.real)


# ---------------------------------------------------------------------------
# coefficient fields (symmetric positive definite matrix data)
# ---------------------------------------------------------------------------

_EIG_FLOOR = 1e-8  # coefficients with smaller eigenvalues are rejected


@dataclass
class CoefficientField:
    """Symmetric positive definite matrix-valued coefficient on a grid.

    Stores the essential bounds (min / max eigenvalue over the grid) and the
    pointwise matrix functions needed by the solvers (inverse, +-1/2 powers),
    computed once through a per-node eigendecomposition.
    """

    matrix: MatrixField
    ess_lower: float = dc_field(init=False)
    ess_upper: float = dc_field(init=False)

    def __post_init__(self):
        vals = self.matrix.values
        asym = np.max(np.abs(vals - np.swapaxes(vals, 0, 1)))
        ref = np.max(np.abs(vals))
        if asym > 1e-12 * max(ref, 1.0):
            raise ValueError(f"coefficient not pointwise symmetric: {asym:.3e}")
        a = np.moveaxis(vals.real, (0, 1), (-2, -1))
        w, v = np.linalg.eigh(a)
        self.ess_lower = float(w.min())
        self.ess_upper = float(w.max())
        if self.ess_lower < _EIG_FLOOR:
            raise SingularPoint(
                f"coefficient eigenvalue {self.ess_lower:.3e} below floor {_EIG_FLOOR}"
            )
        self._eig_w = w
        self._eig_v = v
        self._power_cache: dict = {}

    @property
    def grid(self) -> GridSpec:
        return self.matrix.grid

    def _matfun(self, f) -> MatrixField:
        w, v = self._eig_w, self._eig_v
        out = (v * f(w)[..., None, :]) @ np.swapaxes(v, -1, -2)
        out = np.moveaxis(out, (-2, -1), (0, 1))
        return MatrixField(self.grid, np.ascontiguousarray(out), real=True)

    def power(self, p: float) -> MatrixField:
        """Pointwise matrix power (p = -1, +-1/2, ...); cached."""
        if p not in self._power_cache:
            self._power_cache[p] = self._matfun(lambda w: w**p)
        return self._power_cache[p]

    def inv(self) -> MatrixField:
        return self.power(-1.0)

    def sup_norms(self) -> tuple[float, float]:
        """(||a||_Linf, ||a^-1||_Linf) over the grid (pointwise operator norms)."""
        return self.ess_upper, 1.0 / self.ess_lower


def identity_coefficient(grid: GridSpec, value: float = 1.0) -> CoefficientField:
    vals = np.zeros((3, 3) + grid.n, dtype=complex)
    for d in range(3):
        vals[d, d] = value
    return CoefficientField(MatrixField(grid, vals, real=True))


def harmonic_mean_matrix(a: CoefficientField) -> np.ndarray:
    """Inverse of the cell mean of the pointwise inverse (a lower bound for
    the effective matrix in quadratic-form order)."""
    inv_mean = mean(a.inv())
    return np.linalg.inv(inv_mean)


def arithmetic_mean_matrix(a: CoefficientField) -> np.ndarray:
    return mean(a.matrix)


# ---------------------------------------------------------------------------
# binary field dump (MXHF) and CSV slices
# ---------------------------------------------------------------------------

_MAGIC = b"MXHF"
_RANK_OF = {ScalarField: 0, VectorField: 1, MatrixField: 2}
_CLS_OF_RANK = {0: ScalarField, 1: VectorField, 2: MatrixField}
_FLAG_REAL = 1


def write_field(path, f: Field) -> None:
    """Field dump: little-endian header (magic, rank, n1, n2, n3, flags)
    followed by the row-major complex samples as (re, im) float64 pairs."""
    rank = _RANK_OF[type(f)]
    flags = _FLAG_REAL if f.real else 0
    header = struct.pack("<4sIIIII", _MAGIC, rank, *f.grid.n, flags)
    data = np.ascontiguousarray(f.values, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def read_field(path, grid: GridSpec) -> Field:
    with open(path, "rb") as fh:
        header = fh.read(24)
        magic, rank, n1, n2, n3, flags = struct.unpack("<4sIIIII", header)
        if magic != _MAGIC:
            raise ValueError(f"not an MXHF file: magic {magic!r}")
        if (n1, n2, n3) != grid.n:
            raise GridMismatch(f"file grid {(n1, n2, n3)} vs {grid.n}")
        cls = _CLS_OF_RANK[rank]
        raw = np.frombuffer(fh.read(), dtype="<c16")
    vals = raw.reshape(cls.RANK_SHAPE + grid.n)
    return cls(grid, vals.copy(), real=bool(flags & _FLAG_REAL))


def export_slice_csv(path, f: Field, axis: int = 0, component=None) -> None:
    """1D slice along `axis` through the node at index 0 of the other axes."""
    idx = [0, 0, 0]
    idx[axis] = slice(None)
    vals = f.values[(Ellipsis,) + tuple(idx)]
    if component is not None:
        vals = vals[component] if np.ndim(component) == 0 else vals[tuple(component)]
    vals = np.atleast_2d(vals.reshape(-1, f.grid.n[axis]))
    t = np.arange(f.grid.n[axis]) / f.grid.n[axis] - 0.5
    with open(path, "w") as fh:
        fh.write("t," + ",".join(
            f"re_{c},im_{c}" for c in range(vals.shape[0])) + "\n")
        for i, ti in enumerate(t):
            row = [f"{ti:.16g}"]
            for c in range(vals.shape[0]):
                row += [f"{vals[c, i].real:.16g}", f"{vals[c, i].imag:.16g}"]
            fh.write(",".join(row) + "\n")
