"""
zenofisher: quantum Zeno dynamics under stochastically timed measurements
and the Fisher information of the survival outcome.

All physical quantities are in SI units (seconds, rad/s); nanosecond
columns appear only in CSV output.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ArgumentError,
    EstimationError,
    EvaluationError,
    QuadratureError,
    ResourceError,
    SingularityError,
    ZenoError,
)
from .linalg import SpectralDecomposition, eig_hermitian, evolve, kron_chain  # noqa: E402
from .spins import (  # noqa: E402
    SpinModel,
    SurvivalModel,
    ZenoSubspace,
    beta_coefficients,
    build_spin_model,
    ghz_state,
    product_zero_state,
    survival_q,
    uniform_alphas,
    variance_hpi,
)
from .distributions import (  # noqa: E402
    Dirac,
    PerturbationDirection,
    Tabulated,
    Uniform,
    moment,
    mu2_shift_direction,
    pair_with_log_q,
    sample,
)
from .fisher import (  # noqa: E402
    chain_rule_check,
    fim_report,
    fio_eigenvalue,
    fisher_along_direction,
    functional_derivative_pairing,
    most_probable_survival,
    survival_from_moments,
    uniform_mu2_fisher,
    zeno_confinement,
    zeno_limit_condition,
)
from .trajectories import (  # noqa: E402
    EnsembleSpec,
    TrajectoryEnsemble,
    ld_convergence,
    simulate_ensemble,
    trajectory_survival,
)
from .estimation import EstimationResult, mle_mu2  # noqa: E402
from .config import ExperimentConfig  # noqa: E402
