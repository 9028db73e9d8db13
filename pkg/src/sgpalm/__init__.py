"""Sparse Sylvester-structured tensor graphical models, estimated matrix-free.

The package provides:

* tensor layout and Kronecker-sum operators (:mod:`sgpalm.tensors`),
* the penalized pseudolikelihood model (:mod:`sgpalm.model`),
* off-diagonal penalties and proximal maps (:mod:`sgpalm.penalties`),
* the SG-PALM blockwise proximal optimizer (:mod:`sgpalm.optimizer`),
* generative simulators incl. PDE-derived factors (:mod:`sgpalm.synth`),
* recovery/prediction metrics (:mod:`sgpalm.metrics`),
* a precision-based forward predictor (:mod:`sgpalm.predict`),
* file formats and manifests (:mod:`sgpalm.io`), and a CLI (``sgpalm``).
"""

__version__ = "0.1.0"

from .metrics import (
    SupportConfusion,
    mcc,
    nrmse,
    offdiag_error,
    sign_consistency,
    support_confusion,
)
from .model import (
    GramSet,
    cross_gram,
    full_objective,
    grad_k,
    gram_matrices,
    smooth_objective_H,
)
from .optimizer import (
    BacktrackingError,
    FitResult,
    IterationTrace,
    SGPalmConfig,
    bb_step,
    convergence_check,
    fit,
    lambda_schedule,
    line_search,
)
from .penalties import Penalty, penalty_value, prox_l1_offdiag, q_prime
from .predict import cg_solve, forward_predict, split_history
from .synth import (
    GeneratorSpec,
    PDESpec,
    convection_diffusion_factor,
    poisson_factor,
    random_factor_set,
    random_sparse_factor,
    sample_tensors,
    steady_state_precision,
)
from .tensors import (
    SingularOperatorError,
    fold,
    kmode_product,
    ks_apply,
    ks_dense,
    ks_solve,
    mode_fold,
    mode_unfold,
    precision_apply,
    symmetrize,
    vec,
)

__all__ = [
    "__version__",
    "SupportConfusion", "mcc", "nrmse", "offdiag_error", "sign_consistency",
    "support_confusion",
    "GramSet", "cross_gram", "full_objective", "grad_k", "gram_matrices",
    "smooth_objective_H",
    "BacktrackingError", "FitResult", "IterationTrace", "SGPalmConfig",
    "bb_step", "convergence_check", "fit", "lambda_schedule", "line_search",
    "Penalty", "penalty_value", "prox_l1_offdiag", "q_prime",
    "cg_solve", "forward_predict", "split_history",
    "GeneratorSpec", "PDESpec", "convection_diffusion_factor", "poisson_factor",
    "random_factor_set", "random_sparse_factor", "sample_tensors",
    "steady_state_precision",
    "SingularOperatorError", "fold", "kmode_product", "ks_apply", "ks_dense",
    "ks_solve", "mode_fold", "mode_unfold", "precision_apply", "symmetrize",
    "vec",
]
