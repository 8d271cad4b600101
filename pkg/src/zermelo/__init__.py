"""Zermelo and co-Zermelo navigation on two-dimensional Riemannian surfaces."""

from .conjugate import (
    ConjugateReport,
    ConstantCurvatureProblem,
    RiccatiEstimate,
    first_conjugate_time,
    jacobi_solve,
    riccati_yplus,
)
from .config import RunConfig, emit_config, load_config, parse_config
from .curvature import (
    CurvatureField,
    curvature_bracket_oracle,
    kappa_cozermelo,
    kappa_mag,
    kappa_zermelo,
    oracle,
    schwarzian,
)
from .drift import DriftKind, DriftSpec, omega, phi, validate_drift
from .duality import DualityReport, DualProblem, dualize, dualize_cozermelo, dualize_zermelo, verify_duality
from .errors import ChartExitError, ConfigError, DomainError, NumericalError, ValidationError, ZermeloError
from .geometry import (
    Chart,
    FrameGeometry,
    Surface,
    builtin_surface,
    conformal_surface,
    flat_torus,
    gaussian_curvature,
    hyperbolic_disk,
    sphere,
    structural_constants,
)
from .hamiltonian import (
    CoZermeloProblem,
    CotangentPoint,
    ExtremalTrajectory,
    FiberPoint,
    SolverConfig,
    ZermeloProblem,
    h_cozermelo,
    h_zermelo,
    integrate_extremal,
)
from .integrals import (
    GaussBonnetReport,
    QuadratureGrid,
    gauss_bonnet_report,
    integrate_over_H,
    integrate_over_M,
    total_curvature,
)
from .verify import VerificationSuiteResult, run_suite

__version__ = "0.1.0"
