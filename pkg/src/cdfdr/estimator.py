"""End-to-end fitting: null, p-values, skew-beta density, null proportion."""

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .basis import DEFAULT_MAX_DEGREE
from .inference import (cd_bh, efron_density_reject, hc_threshold, local_fdr,
                        local_fdr_reject)
from .null_model import (SIDES, THEORETICAL_NULL, fit_empirical_null,
                         pvalues_from_z, z_from_t)
from .pi0 import Pi0Estimate, mdc_pi0
from .skewbeta import (CDModel, cd_eval, fit_beta_mle, lp_coefficients,
                       select_coefficients, smooth_pvalues)
from .validation import check_pvalues, check_vector, clamp_pvalues

__all__ = ["StageError", "FitReport", "KINDS", "NULLS", "to_scores", "fit_pipeline", "CDfdr"]

KINDS = ("z", "p", "t")
NULLS = ("empirical", "theoretical")


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class FitReport:
    """Everything :func:`fit_pipeline` produced.

    ``pvalues`` are clamped away from 0 and 1 for the density fit;
    ``raw_pvalues`` are the unclamped values the rejection rules use.
    """

    model: CDModel
    pi0_estimate: Pi0Estimate
    pvalues: np.ndarray
    raw_coefficients: np.ndarray
    diagnostic: tuple
    raw_pvalues: np.ndarray = None

    def summary(self):
        bp = self.model.beta_params
        null = self.model.null
        stat, pval = self.diagnostic
        return {
            "n": self.model.n,
            "alpha": bp.alpha,
            "beta": bp.beta,
            "coefficients": [{"degree": j, "value": c} for j, c in self.model.coefficients],
            "mu0": None if null is None else null.mu0,
            "sigma0": None if null is None else null.sigma0,
            "null_converged": None if null is None else null.converged,
            "pi0": self.pi0_estimate.pi0,
            "lambda_star": self.pi0_estimate.lambda_star,
            "diagnostic_statistic": stat,
            "diagnostic_p_value": pval,
        }


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except (ValueError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        raise StageError(name, exc) from exc


def to_scores(values, kind, df=None):
    """Validate raw input; t statistics are mapped to z-scores."""
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if kind == "p":
        return check_pvalues(values)
    arr = check_vector(values)
    if kind == "t":
        if df is None:
            raise ValueError("t statistics need df")
        arr = np.asarray(z_from_t(arr, df), dtype=float)
    return arr


def fit_pipeline(values, kind="z", null="empirical", sided="two_sided",
                 max_degree=DEFAULT_MAX_DEGREE, gamma=3.5, grid_step=0.01, M=DEFAULT_MAX_DEGREE,
                 df=None):
    """Fit the full comparison-density model.

    z (or t) input: empirical or theoretical null, p-values per ``sided``.
    p input is used as is after clamping. Then beta MLE, Legendre series
    with Schwarz selection, and the minimum deviance null proportion.
    """
    if null not in NULLS:
        raise ValueError(f"null must be one of {NULLS}")
    if sided not in SIDES:
        raise ValueError(f"sided must be one of {SIDES}")
    scores = _stage("ingest", to_scores, values, kind, df)
    n = scores.size
    if kind == "p":
        null_model, model_sided = None, None
        raw_u = scores
        u = clamp_pvalues(scores)
    else:
        if null == "empirical":
            null_model = _stage("null", fit_empirical_null, scores)
        else:
            null_model = THEORETICAL_NULL
        model_sided = sided
        raw_u = _stage("pvalues", pvalues_from_z, scores, null_model, sided, clamp=False)
        u = clamp_pvalues(raw_u)
    params = _stage("beta_mle", fit_beta_mle, u)
    v = _stage("smooth", smooth_pvalues, u, params)
    raw = _stage("lp_coefficients", lp_coefficients, v, max_degree)
    coefs = select_coefficients(raw, n, max_degree)
    model = CDModel(params, tuple(coefs), max_degree, null_model, None, n, model_sided)
    estimate = _stage("pi0", mdc_pi0, u, model, gamma, grid_step, M)
    model = model.with_pi0(estimate.pi0)
    stat = max(0.0, 2.0 * params.loglik)
    diagnostic = (stat, min(1.0, math.exp(-0.5 * stat)))
    return FitReport(model, estimate, u, raw, diagnostic, raw_u)


class CDfdr(BaseEstimator):
    """Comparison-density signal detector.

    ``fit`` learns the null, the skew-beta density and pi0 from one sample
    of z-scores, t statistics or p-values. ``predict_fdr`` gives local fdr
    values, ``predict`` flags non-nulls (fdr <= ``fdr_cutoff``) and
    ``reject`` runs any of the four rules on the training sample.

    Examples
    --------
    >>> import numpy as np
    >>> rng = np.random.default_rng(0)
    >>> z = np.r_[rng.normal(size=900), rng.normal(3, 1, size=100)]
    >>> est = CDfdr(null="theoretical", sided="right").fit(z)
    >>> 0.8 < est.pi0_ <= 1
    True
    """

    def __init__(self, kind="z", null="empirical", sided="two_sided",
                 max_degree=DEFAULT_MAX_DEGREE, gamma=3.5, grid_step=0.01, M=DEFAULT_MAX_DEGREE,
                 fdr_cutoff=0.2, df=None):
        self.kind = kind
        self.null = null
        self.sided = sided
        self.max_degree = max_degree
        self.gamma = gamma
        self.grid_step = grid_step
        self.M = M
        self.fdr_cutoff = fdr_cutoff
        self.df = df

    def fit(self, X, y=None):
        report = fit_pipeline(X, self.kind, self.null, self.sided, self.max_degree,
                              self.gamma, self.grid_step, self.M, self.df)
        self.report_ = report
        self.model_ = report.model
        self.pi0_ = report.pi0_estimate.pi0
        self.null_ = report.model.null
        self.pvalues_ = report.raw_pvalues
        self.coefficients_ = report.model.coefficients
        self.train_scores_ = to_scores(X, self.kind, self.df)
        return self

    def _scale_input(self, X):
        scores = to_scores(X, self.kind, self.df)
        return scores, ("p" if self.kind == "p" else "z")

    def predict_fdr(self, X):
        check_is_fitted(self, "model_")
        scores, scale = self._scale_input(X)
        return local_fdr(scores, self.model_, scale=scale)

    def predict(self, X):
        return (self.predict_fdr(X) <= self.fdr_cutoff).astype(int)

    def score_samples(self, X):
        """Fitted comparison density at the inputs."""
        check_is_fitted(self, "model_")
        scores, scale = self._scale_input(X)
        if scale == "p":
            return cd_eval(self.model_, clamp_pvalues(scores, self.model_.n))
        null = self.model_.null or THEORETICAL_NULL
        return cd_eval(self.model_, pvalues_from_z(scores, null, self.model_.sided, self.model_.n))

    def reject(self, method="cd_bh", alpha=0.05, alpha0=0.1, pi0=None):
        """Apply a rejection rule to the training sample."""
        check_is_fitted(self, "model_")
        pi0 = self.pi0_ if pi0 is None else pi0
        u = self.pvalues_
        if method == "cd_bh":
            return cd_bh(u, alpha, pi0)
        if method == "hc":
            return hc_threshold(u, alpha0)
        if method == "efron_density":
            return efron_density_reject(u, self.model_, alpha, pi0)
        if method == "local_fdr":
            if self.kind == "p":
                return local_fdr_reject(u, self.model_, self.fdr_cutoff, pi0, scale="p")
            return local_fdr_reject(self.train_scores_, self.model_, self.fdr_cutoff, pi0)
        raise ValueError(f"unknown method {method!r}")
