"""Effective tensors from periodic cell problems.

Solves the scalar cell problems for three media (trigonometric, smoothed
layered, smoothed checkerboard), prints the effective matrices next to their
analytic oracles, and shows the Voigt-Reuss bracketing

    harmonic mean  <=  effective  <=  arithmetic mean   (quadratic-form order).
"""

import numpy as np

import maxhom as mh

lat = mh.cubic_lattice()
grid = mh.GridSpec((32, 32, 32), lat)

print("== trigonometric isotropic medium a(x) = (2 + cos 2 pi x1) I ==")
a = mh.generate_coefficient(
    mh.CoefficientDescriptor("trig_isotropic", {"base": 2.0, "amplitude": 1.0}),
    grid)
cell = mh.solve_scalar_cell(a, tol=1e-11)
print("effective diag :", np.diag(cell.effective))
print("exact          :", [np.sqrt(3.0), 2.0, 2.0],
      "(harmonic / arithmetic means of the profile)")

print("\n== smoothed layered medium, contrast 1:4, fill 1/2, width 0.05 ==")
grid_l = mh.GridSpec((128, 4, 4), lat)
desc = mh.CoefficientDescriptor(
    "layered_smoothed", {"alpha": 1.0, "beta": 4.0, "fill": 0.5, "width": 0.05})
a_l = mh.generate_coefficient(desc, grid_l)
cell_l = mh.solve_scalar_cell(a_l, tol=1e-11)
oracle = mh.layered_oracle_smoothed(1.0, 4.0, 0.5, 0.05)
print("effective diag :", np.diag(cell_l.effective))
print("1D quadrature  :", np.diag(oracle))
print("sharp layers   :", np.diag(mh.layered_oracle(1.0, 4.0, 0.5)),
      "(width -> 0 limit)")

print("\n== Voigt-Reuss bracketing for a randomized checkerboard ==")
desc = mh.CoefficientDescriptor(
    "checkerboard_smoothed", {"alpha": 1.0, "beta": 5.0, "width": 0.1})
a_c = mh.generate_coefficient(desc, grid)
cell_c = mh.solve_scalar_cell(a_c, tol=1e-9)
harm = mh.harmonic_mean_matrix(a_c)
arith = np.real(mh.arithmetic_mean_matrix(a_c))
print("harmonic eigs  :", np.linalg.eigvalsh(harm))
print("effective eigs :", np.linalg.eigvalsh(cell_c.effective))
print("arithmetic eigs:", np.linalg.eigvalsh(arith))
print("lower margin   :", np.linalg.eigvalsh(cell_c.effective - harm).min())
print("upper margin   :", np.linalg.eigvalsh(arith - cell_c.effective).min())
