"""Sparse remote control of LTI plants: Fourier-coefficient designs by l2 and l1-l2 optimization."""

from .exceptions import (CSRemoteError, DimensionError, DomainError, EnumerationGuardError,
                         NotApplicableError)
from .experiment import (ExperimentConfig, TrialRecord, emit_outputs, load_config,
                         run_monte_carlo, run_single)
from .lti import (OutputOperator, Plant, TransferEval, kernel_basis_inner_product,
                  kernel_matrix, matrix_exponential, output_operator, response_matrix,
                  simulate_output,
                  steady_state_output_coefs, transfer)
from .rip import (BoundReport, RipReport, bound_constants, compute_eta, evaluate_bounds,
                  rip_constant_exact, rip_constant_monte_carlo, synthetic_instance)
from .sensing import (SamplingPlan, SensingSystem, advise_sample_count, assemble, build_gram,
                      compress, draw_plan)
from .signals import (CoefVector, ReferenceSpec, SignalSpace, cardinality,
                      coefficients_from_samples, l1_bound, measure_sparsity, reference_to_coefs,
                      sample_reference, synthesize)
from .solvers import (SolveResult, SolverConfig, estimate_operator_norm_sq, objective_j0,
                      objective_j1, objective_j2, soft_threshold, solve_ideal, solve_l1l2_fista,
                      solve_l2, truncate_top_s)

__version__ = "0.1.0"
