"""Gradient estimates, entropy decay and transport bounds for
trace-symmetric quantum Markov semigroups at desk scale."""

from .algebra import (
    Subalgebra,
    TracialAlgebra,
    commutative_algebra,
    conditional_expectation,
    full_matrix_algebra,
    tensor,
)
from .calculus import TangentModule
from .entfun import (
    entropy,
    entropy_fix,
    fisher_decay_check,
    fisher_information,
    mlsi_estimate,
    relative_entropy,
)
from .gradest import (
    GESampler,
    OptimalKSearch,
    cge_check,
    ge_check,
    ge_form,
    intertwine_check,
    optimal_k,
    optimal_k_global,
    tensor_ge_harness,
)
from .means import (
    BUILTIN_MEANS,
    OperatorMean,
    mean_axiom_audit,
    metric_norm_sq,
    rho_hat_apply,
    rho_hat_matrix,
)
from .qms import (
    LindbladGenerator,
    Semigroup,
    fixed_point_algebra,
    lindblad_apply,
    semigroup_apply,
    verify_qms,
)
from .transport import NotConnectableError, TransportPath, action, w_upper_bound

__version__ = "0.1.0"
