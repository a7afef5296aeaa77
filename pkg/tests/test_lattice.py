import numpy as np
import pytest

import maxhom as mh
from maxhom.lattice import DegenerateBasis, GridError

from conftest import random_spd_basis


def test_cubic_lattice_constants(cubic):
    assert np.allclose(cubic.dual, 2 * np.pi * np.eye(3), atol=1e-14)
    assert cubic.cell_volume == pytest.approx(1.0)
    assert cubic.r0 == pytest.approx(np.pi)
    assert cubic.r1 == pytest.approx(np.sqrt(3) / 2)


def test_axis_scaled_basis():
    lat = mh.make_lattice(np.diag([2.0, 1.0, 1.0]))
    assert np.allclose(lat.dual, np.diag([np.pi, 2 * np.pi, 2 * np.pi]))
    assert lat.r0 == pytest.approx(np.pi / 2)
    assert lat.cell_volume == pytest.approx(2.0)


def test_degenerate_basis_rejected():
    basis = np.array([[1.0, 0, 0], [1.0, 0, 0], [0, 0, 1.0]])
    with pytest.raises(DegenerateBasis):
        mh.make_lattice(basis)


def test_biorthogonality_random_bases():
    rng = np.random.default_rng(0)
    for _ in range(100):
        b = random_spd_basis(rng)
        lat = mh.make_lattice(b)
        gram = lat.dual @ lat.basis.T
        assert np.max(np.abs(gram - 2 * np.pi * np.eye(3))) < 1e-12 * np.max(
            np.abs(gram))


def test_cell_constants_match_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(20):
        b = random_spd_basis(rng)
        lat = mh.make_lattice(b)
        # r0 from an independently computed dual basis
        dual = np.array([2 * np.pi * np.linalg.solve(b, e)
                         for e in np.eye(3)])
        assert lat.r0 == pytest.approx(min(np.linalg.norm(dual, axis=1)) / 2)
        # r1 from the 8x8 vertex-pair loop
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1)
                          for sz in (-1, 1)]) / 2.0
        verts = signs @ b
        diam = max(np.linalg.norm(v1 - v2) for v1 in verts for v2 in verts)
        assert lat.r1 == pytest.approx(diam / 2)


def test_grid_validation(cubic):
    with pytest.raises(GridError):
        mh.GridSpec((3, 4, 4), cubic)
    with pytest.raises(GridError):
        mh.GridSpec((4, 5, 4), cubic)
    with pytest.raises(GridError):
        mh.GridSpec((2, 4, 4), cubic)


def test_frequency_set_small_cubic(cubic):
    grid = mh.GridSpec((4, 4, 4), cubic)
    freqs = mh.frequency_set(grid)
    assert freqs.shape == (64, 3)
    zero_rows = np.sum(np.all(freqs == 0.0, axis=1))
    assert zero_rows == 1
    # integer mode range is {-2, -1, 0, 1} per axis
    modes = np.unique(np.rint(freqs / (2 * np.pi)))
    assert set(modes.astype(int)) == {-2, -1, 0, 1}
    # max |k| by direct enumeration equals |(-2,-2,-2)| * 2 pi
    max_norm = np.linalg.norm(freqs, axis=1).max()
    brute = max(
        np.linalg.norm(2 * np.pi * np.array([m1, m2, m3]))
        for m1 in (-2, -1, 0, 1) for m2 in (-2, -1, 0, 1)
        for m3 in (-2, -1, 0, 1))
    assert max_norm == pytest.approx(brute)
    assert max_norm == pytest.approx(4 * np.pi * np.sqrt(3))


def test_frequency_set_anisotropic_grid(cubic):
    grid = mh.GridSpec((4, 6, 8), cubic)
    freqs = mh.frequency_set(grid)
    assert freqs.shape == (4 * 6 * 8, 3)
    assert np.sum(np.all(freqs == 0.0, axis=1)) == 1
