"""Comparison-density false discovery rate estimation.

A skew-beta density (parametric beta times a short Legendre correction)
is fitted to p-values, the null proportion is found by minimum deviance,
and BH, Higher Criticism and local fdr rules are applied on top.
"""

__version__ = "0.1.0"

from .basis import LegendreBasis, legendre_eval, legendre_matrix, legendre_vector
from .estimator import CDfdr, FitReport, StageError, fit_pipeline
from .inference import (RejectionResult, cd_bh, efron_density_reject, hc_threshold, local_fdr,
                        local_fdr_reject)
from .io import IngestError, Sample, ingest, load_model, save_model
from .null_model import EmpiricalNull, NullModel, fit_empirical_null, pvalues_from_z, z_from_t
from .pi0 import Pi0Estimate, mdc_pi0, storey_pi0
from .skewbeta import (BetaParams, CDModel, SkewBetaDensity, cd_eval, cd_mass, fit_beta_mle,
                       lp_coefficients, select_coefficients, smooth_pvalues,
                       uniformity_diagnostic)
from .specfun import DomainError
from .validation import EstimationError

__all__ = [
    "BetaParams", "CDModel", "CDfdr", "DomainError", "EmpiricalNull", "EstimationError",
    "FitReport", "IngestError", "LegendreBasis", "NullModel", "Pi0Estimate", "RejectionResult",
    "Sample", "SkewBetaDensity", "StageError", "cd_bh", "cd_eval", "cd_mass",
    "efron_density_reject", "fit_beta_mle", "fit_empirical_null", "fit_pipeline",
    "hc_threshold", "ingest", "legendre_eval", "legendre_matrix", "legendre_vector",
    "load_model", "local_fdr", "local_fdr_reject", "lp_coefficients", "mdc_pi0",
    "pvalues_from_z", "save_model", "select_coefficients", "smooth_pvalues", "storey_pi0",
    "uniformity_diagnostic", "z_from_t",
]
