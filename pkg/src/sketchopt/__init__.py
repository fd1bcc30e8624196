"""Randomized pre-conditioned first-order solvers for overdetermined least squares.

Subpackages by concern: linalg (dense primitives), sketching (Gaussian, SRHT
and Haar embeddings), spectral (limiting eigenvalue densities and Stieltjes
transform), orthopoly (update-coefficient schedules and error polynomials),
solvers (the iterative methods), harness (benchmark experiments and file
output), cli (the `sketchopt` command).
"""

from .linalg import (
    CholeskyFactor,
    LsProblem,
    NotPositiveDefinite,
    cholesky,
    cholesky_solve,
    matmul,
    prediction_error_sq,
    qr_least_squares,
    sym_eigenvalues,
)
from .sketching import (
    AspectRatios,
    RngStream,
    SketchResult,
    SketchTooThin,
    fwht_in_place,
    gaussian_sketch,
    haar_sketch,
    make_sketch,
    pad_to_power_of_two,
    srht_apply,
)
from .spectral import (
    DensitySpec,
    EmpiricalSpectrum,
    cdf_eval,
    density_eval,
    empirical_spectrum,
    ks_distance,
    stieltjes_mh,
    support_edges,
)
from .orthopoly import (
    CoefficientSchedule,
    RateReport,
    SrhtParams,
    chebyshev_q_eval,
    gaussian_coefficients,
    heavy_ball_coefficients,
    mp_poly_eval,
    rate_report,
    srht_coefficients,
    srht_params,
    srht_poly_eval,
    theoretical_loss_gaussian,
)
from .solvers import (
    Preconditioner,
    SolverConfig,
    SolverDiverged,
    SolverTrace,
    build_preconditioner,
    edge_heavy_ball_params,
    solve,
)
from .harness import (
    ExperimentConfig,
    SyntheticSpec,
    fit_rate,
    gen_synthetic,
    run_convergence_experiment,
    run_density_experiment,
    run_experiment,
    run_rates_experiment,
)

__version__ = "0.1.0"
