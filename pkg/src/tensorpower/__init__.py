"""Power-iteration decomposition of fourth-order rank-one-sum tensors."""

from .decompose import (
    RecoveryReport,
    RestartPlan,
    TpmOutcome,
    default_iteration_count,
    deflation_residual_norm,
    is_good_initialization,
    match_components,
    plan_restarts,
    restart_conditions,
    tpm,
    tpmr,
)
from .errors import (
    DegenerateComponentsError,
    DegenerateIterateError,
    ExtractionFailureError,
    NoFeasibleRestartError,
    StalledDescentError,
)
from .geometry import (
    ConditioningReport,
    CorrelationProfile,
    conditioning_report,
    correlation_profile,
    measure_incoherence,
    measure_rip,
    noise_floor,
    objective,
    riemannian_gradient,
    riemannian_hessian,
)
from .landscape import (
    CriticalPointCertificate,
    ProximityResult,
    certify,
    correlation_ratio,
    finite_difference_gradient,
    gap_check,
    manifold_gradient_descent,
    proximity_check,
)
from .tensor_core import (
    ComponentSet,
    DenseTensor4,
    Rank1SumTensor,
    build_tensor,
    contract_full,
    contract_vector,
    deflate,
    to_dense,
)

__all__ = [
    "ComponentSet",
    "ConditioningReport",
    "CorrelationProfile",
    "CriticalPointCertificate",
    "DegenerateComponentsError",
    "DegenerateIterateError",
    "DenseTensor4",
    "ExtractionFailureError",
    "NoFeasibleRestartError",
    "ProximityResult",
    "Rank1SumTensor",
    "RecoveryReport",
    "RestartPlan",
    "StalledDescentError",
    "TpmOutcome",
    "build_tensor",
    "certify",
    "conditioning_report",
    "contract_full",
    "contract_vector",
    "correlation_profile",
    "correlation_ratio",
    "default_iteration_count",
    "deflate",
    "deflation_residual_norm",
    "finite_difference_gradient",
    "gap_check",
    "is_good_initialization",
    "manifold_gradient_descent",
    "match_components",
    "measure_incoherence",
    "measure_rip",
    "noise_floor",
    "objective",
    "plan_restarts",
    "proximity_check",
    "restart_conditions",
    "riemannian_gradient",
    "riemannian_hessian",
    "to_dense",
    "tpm",
    "tpmr",
]

__version__ = "0.1.0"
