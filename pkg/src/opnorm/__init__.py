"""Certified upper bounds on the worst-case L2 norm of Hilbert-ball functions
with a small operator-induced semi-norm, with exact small-instance oracles."""

__version__ = "0.1.0"

from .bound_engine import (
    BoundConfig,
    BoundReport,
    L_func,
    fourier_exact,
    minimax_width,
    packing_transfer,
    quad_inequality_check,
    strong_bound,
    translate_to_lower_T,
    weak_bound,
)
from .eigensystems import EigenSequence, EigenSystem, eval_psi, mercer_eval, sigma, sigma_l1, tail_sum
from .errors import (
    ConfigError,
    DomainError,
    InequalityNotGuaranteedError,
    NotSummableError,
    OpNormError,
    PreconditionError,
    ResourceError,
    UnsupportedOperationError,
)
from .oracle import QcqpInstance, dual_oracle, grid_oracle, q_set_boundary, two_by_two_F
from .psi_spectral import (
    PsiBlock,
    SparsePeriodicParams,
    TailBoundReport,
    assemble,
    lambda_max_weighted,
    lambda_min,
    sparse_periodic_linf_bound,
    tail_lambda_max_bound,
)
from .random_sampling import (
    RandomSamplingReport,
    complexity_G,
    corollary_bound,
    critical_radius,
    m_sigma,
    mc_psi_concentration,
    mu,
    nu,
)
from .sampling_ops import SamplingOperator, apply, phi_seminorm, psi_block, psi_entry

__all__ = [name for name in dir() if not name.startswith("_")]
