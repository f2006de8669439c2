"""fbmlab: strong-error laboratory for SDEs driven by smooth fractional noise.

Builds fractional Brownian motion with non-integer Hurst index above 1 as
iterated time-integrals of a rough fBM, runs the Euler-Maruyama scheme for
bounded Holder drifts on the shared noise, and measures strong convergence
rates and the first-order scaled-error limit.
"""

from .config import ExperimentConfig
from .drifts import Drift, drift_from_spec, holder_certificate, make_drift, require_assumption
from .errors import (
    ErrorRecord,
    RateReport,
    cp_half_norm,
    cp_half_seminorm,
    fit_rate,
    lp_moment,
    optimality_verdict,
    strong_error_sample,
)
from .exceptions import ConfigurationError, NumericalAbort, SpectralFactorizationError
from .experiments import (
    run_optimality_experiment,
    run_rate_experiment,
    simulate_hierarchy,
)
from .hierarchy import NoiseHierarchy, derivative_of_top, lift, restrict
from .noise import (
    HurstParams,
    NoiseProvenance,
    RngSpec,
    SamplePath,
    UniformGrid,
    exact_integrated_bm,
    fbm_path,
    fgn_autocovariance,
    fgn_covariance_matrix,
    sample_fgn,
    write_path_csv,
)
from .solvers import (
    EmSolution,
    OptimalityRecord,
    coupled_integrate,
    em_difference,
    euler_maruyama,
    optimality_ode,
    optimality_record,
    reference_solution,
    verify_recursion,
)

__version__ = "0.1.0"
