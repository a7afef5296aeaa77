import numpy as np
import pytest

import maxhom as mh
import maxhom.fields as F
from maxhom.harness import random_band_scalar, random_band_vector


def test_gradient_of_single_mode(grid16):
    f = F.scalar_from_function(grid16, lambda x: np.cos(2 * np.pi * x[0]))
    g = F.gradient(f)
    x = grid16.coords()
    assert np.max(np.abs(g.values[0] + 2 * np.pi * np.sin(2 * np.pi * x[0]))) < 1e-12
    assert np.max(np.abs(g.values[1])) < 1e-14
    assert np.max(np.abs(g.values[2])) < 1e-14


def test_curl_grad_and_div_curl_vanish(grid16):
    for seed in range(3):
        f = random_band_scalar(grid16, 5, seed)
        v = F.gradient(f)
        assert np.max(np.abs(F.curl(v).values)) < 1e-10 * max(
            1.0, np.max(np.abs(v.values)))
        w = random_band_vector(grid16, 5, seed + 10)
        c = F.curl(w)
        assert np.max(np.abs(F.divergence(c).values)) < 1e-10 * max(
            1.0, np.max(np.abs(c.values)))


def test_derivative_means_vanish(grid16):
    f = random_band_scalar(grid16, 6, 3)
    for d in (F.gradient(f), ):
        assert np.max(np.abs(F.mean(d))) < 1e-12
    v = random_band_vector(grid16, 6, 4)
    assert abs(F.mean(F.divergence(v))) < 1e-12
    assert np.max(np.abs(F.mean(F.curl(v)))) < 1e-12


def test_mixed_partials_commute(grid16):
    f = random_band_scalar(grid16, 5, 7)
    g = F.gradient(f)
    d01 = F.gradient(F.ScalarField(grid16, g.values[0], real=True)).values[1]
    d10 = F.gradient(F.ScalarField(grid16, g.values[1], real=True)).values[0]
    assert np.max(np.abs(d01 - d10)) < 1e-10 * max(1.0, np.max(np.abs(d01)))


def test_mean_examples(grid16):
    c = F.ScalarField(grid16, np.full(grid16.n, 4.2 + 0j), real=True)
    assert F.mean(c) == pytest.approx(4.2)
    s = F.scalar_from_function(grid16, lambda x: np.sin(2 * np.pi * x[0]))
    assert abs(F.mean(s)) < 1e-14
    f = F.scalar_from_function(grid16, lambda x: 2 + np.cos(2 * np.pi * x[0]))
    assert F.mean(f) == pytest.approx(2.0, abs=1e-13)


def test_parseval(grid16):
    f = random_band_vector(grid16, 6, 8)
    coef = F.fftn(f.values) / grid16.size
    coef_norm = np.sqrt(grid16.cell_volume * np.sum(np.abs(coef) ** 2))
    assert F.l2_norm(f) == pytest.approx(coef_norm, rel=1e-12)


def test_harmonic_mean_matrix_constant(grid16):
    a = mh.generate_coefficient(
        mh.CoefficientDescriptor("constant", {"value": 2.0}), grid16)
    assert np.allclose(mh.harmonic_mean_matrix(a), 2.0 * np.eye(3), atol=1e-13)


def test_harmonic_mean_matrix_trig(grid32):
    a = mh.generate_coefficient(
        mh.CoefficientDescriptor("trig_isotropic",
                                 {"base": 2.0, "amplitude": 1.0}), grid32)
    # (2 pi)^-1 int dtheta / (2 + cos theta) = 1 / sqrt(3): the harmonic mean
    # of an isotropic field is isotropic, sqrt(3) * identity
    h = mh.harmonic_mean_matrix(a)
    assert np.max(np.abs(h - np.sqrt(3.0) * np.eye(3))) < 1e-10


def test_harmonic_mean_matrix_layered_limit():
    lat = mh.cubic_lattice()
    grid = mh.GridSpec((256, 4, 4), lat)
    a = mh.generate_coefficient(
        mh.CoefficientDescriptor(
            "layered_smoothed",
            {"alpha": 1.0, "beta": 4.0, "fill": 0.5, "width": 0.02}), grid)
    h = mh.harmonic_mean_matrix(a)
    # matches the 1D quadrature on the same smoothed profile tightly, and the
    # sharp-interface value 2*1*4/(1+4) = 1.6 up to a transition-layer shift
    oracle = mh.layered_oracle_smoothed(1.0, 4.0, 0.5, 0.02)
    assert h[0, 0] == pytest.approx(oracle[0, 0], abs=1e-9)
    assert h[0, 0] == pytest.approx(1.6, abs=0.1)


def test_dealiased_product_is_exact(grid16):
    x = grid16.coords()
    # modes 5 and 6: the product mode 11 aliases on a 16-grid but is exact
    # on the padded 32-grid
    a = F.ScalarField(grid16, np.cos(2 * np.pi * 5 * x[0]) + 0j, real=True)
    b = F.ScalarField(grid16, np.cos(2 * np.pi * 6 * x[0]) + 0j, real=True)
    exact = 0.5 * (np.cos(2 * np.pi * 11 * x[0]) + np.cos(2 * np.pi * x[0]))
    plain = F.pointwise(a, b, "ss").values
    deal = F.pointwise(a, b, "ss", dealias=True).values
    # plain collocation equals the aliased nodal product exactly
    assert np.max(np.abs(plain - exact)) < 1e-13
    # de-aliased result drops the unrepresentable mode 11: compare spectra
    # (DFT coefficients carry the (-1)^m phase of the t = -1/2 grid origin)
    dh = F.fftn(deal) / grid16.size
    assert abs(abs(dh[1, 0, 0]) - 0.25) < 1e-13  # cos(2 pi x) keeps weight 1/4
    assert abs(dh[5, 0, 0]) < 1e-13              # no spurious content at mode 5


def test_rescale_periodic(grid16, cubic):
    f = F.scalar_from_function(grid16, lambda x: np.cos(2 * np.pi * x[0]))
    f2 = F.rescale_periodic(f, 2, grid16)
    x = grid16.coords()
    assert np.max(np.abs(f2.values - np.cos(4 * np.pi * x[0]))) < 1e-13
    # equal grids admit any integer period count exactly
    f3 = F.rescale_periodic(f, 3, grid16)
    assert np.max(np.abs(f3.values - np.cos(6 * np.pi * x[0]))) < 1e-13
    # incommensurate cell/torus resolutions are rejected
    torus24 = mh.GridSpec((24, 24, 24), cubic)
    with pytest.raises(F.GridMismatch):
        F.rescale_periodic(f, 2, torus24)


def test_field_shape_validation(grid16):
    with pytest.raises(ValueError):
        F.VectorField(grid16, np.zeros(grid16.n))
    with pytest.raises(ValueError):
        F.ScalarField(grid16, np.zeros((3,) + grid16.n))


def test_real_flag_check(grid16):
    vals = np.full(grid16.n, 1.0 + 1e-3j)
    f = F.ScalarField(grid16, vals, real=True)
    with pytest.raises(ValueError):
        f.check_real()
    g = F.ScalarField(grid16, vals.real + 0j, real=True)
    assert g.check_real() == 0.0


def test_coefficient_validation(grid16):
    vals = np.zeros((3, 3) + grid16.n, dtype=complex)
    vals[0, 0] = vals[1, 1] = vals[2, 2] = 1.0
    vals[0, 1] = 0.5  # asymmetric
    with pytest.raises(ValueError):
        F.CoefficientField(F.MatrixField(grid16, vals))
    vals[0, 1] = 0.0
    vals[0, 0] = 1e-12  # below the eigenvalue floor
    with pytest.raises(F.SingularPoint):
        F.CoefficientField(F.MatrixField(grid16, vals))


def test_coefficient_matrix_functions(grid16, trig_eta):
    lo, hi = trig_eta.ess_lower, trig_eta.ess_upper
    assert lo == pytest.approx(1.0, abs=0.05)
    assert hi == pytest.approx(3.0, abs=0.05)
    s = trig_eta.power(0.5).values
    back = np.einsum("ij...,jk...->ik...", s, s)
    assert np.max(np.abs(back - trig_eta.matrix.values)) < 1e-12
    inv = trig_eta.inv().values
    prod = np.einsum("ij...,jk...->ik...", inv, trig_eta.matrix.values)
    eye = np.eye(3).reshape(3, 3, 1, 1, 1)
    assert np.max(np.abs(prod - eye)) < 1e-12


def test_mxhf_round_trip(tmp_path, grid16):
    v = random_band_vector(grid16, 4, 5)
    path = tmp_path / "field.mxhf"
    F.write_field(path, v)
    back = F.read_field(path, grid16)
    assert isinstance(back, F.VectorField)
    assert back.real
    assert np.array_equal(back.values, v.values)
    # header is little-endian magic + 5 uint32 words
    raw = path.read_bytes()
    assert raw[:4] == b"MXHF"
    assert len(raw) == 24 + v.values.size * 16


def test_mxhf_grid_mismatch(tmp_path, grid16, cubic):
    v = random_band_vector(grid16, 4, 5)
    path = tmp_path / "field.mxhf"
    F.write_field(path, v)
    other = mh.GridSpec((8, 8, 8), cubic)
    with pytest.raises(F.GridMismatch):
        F.read_field(path, other)


def test_csv_slice_export(tmp_path, grid16):
    f = F.scalar_from_function(grid16, lambda x: np.cos(2 * np.pi * x[0]))
    path = tmp_path / "slice.csv"
    F.export_slice_csv(path, f, axis=0)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 1 + grid16.n[0]
    assert lines[0].startswith("t,re_0,im_0")
