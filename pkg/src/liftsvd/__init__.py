"""SVD-like decompositions f(x) = U Sigma v(x) of bounded-input bounded-output functions."""

from .errors import (BoundViolationError, DomainError, EstimationError, ExprSyntaxError,
                     InadmissibleSigmaError, LiftSVDError, NotUnitaryError, SpecError)
from .expr import (FunctionSpec, builtin_mimo, builtin_siso, eval_f, eval_f_batch, evaluate,
                   evaluate_batch, parse, to_text)
from .factor import (KernelAnalysis, KFactorization, compose_K, kernel_analysis,
                     lost_information, nullspace_relaxation_sample, random_unitary,
                     riesz_representer, svd_small)
from .liftcore import (Decomposition, LiftedPoint, SigmaSpec, compute_S, decompose, delta,
                       delta_oracle, lift, lift_batch, reconstruct, select_sigma, unlift)
from .norms import (ComponentOrdering, NormEstimate, estimate_component_norm, estimate_norms,
                    order_components, validate_bounds)

__version__ = "0.1.0"
