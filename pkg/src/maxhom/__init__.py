"""maxhom: FFT-spectral periodic homogenization of the stationary Maxwell
system on the torus.

Module map: lattice (cells, grids, frequencies), fields (spectral calculus),
smoothing (Steklov averaging), cell (scalar/vector cell problems, effective
tensors, correctors), maxwell (torus Maxwell pipeline), harness (coefficient
catalogue + convergence studies), brute (dense coupled-mode oracles),
cli (command-line driver).
"""

from .lattice import (
    DegenerateBasis,
    GridSpec,
    LatticeSpec,
    cubic_lattice,
    frequency_set,
    make_lattice,
)
from .fields import (
    CoefficientField,
    GridMismatch,
    MatrixField,
    ScalarField,
    SingularPoint,
    VectorField,
    arithmetic_mean_matrix,
    curl,
    divergence,
    export_slice_csv,
    gradient,
    harmonic_mean_matrix,
    inner,
    l2_norm,
    mean,
    pointwise,
    read_field,
    rescale_periodic,
    set_fft_workers,
    write_field,
)
from .smoothing import SteklovMultiplier, steklov_apply, steklov_multiplier
from .solvers import NoConvergence
from .cell import (
    CellSolution,
    CorrectorSet,
    MultiplierBounds,
    build_antisym_potentials,
    cell_identity_slacks,
    estimate_multiplier_bounds,
    multiplier_check,
    solve_scalar_cell,
    solve_vector_cell,
)
from .maxwell import (
    MaxwellProblem,
    MaxwellSolution,
    approximant_fields,
    correction_rhs,
    first_order_approx,
    leray_project_weighted,
    make_problem,
    reconstruct_fields,
    run_maxwell,
    solve_effective,
    solve_symmetrized,
)
from .harness import (
    CoefficientDescriptor,
    ConvergenceReport,
    InvalidParams,
    StudyConfig,
    convergence_study,
    generate_coefficient,
    layered_oracle,
    layered_oracle_smoothed,
    random_divfree_field,
)

__version__ = "0.1.0"
