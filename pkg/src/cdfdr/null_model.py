"""Empirical null estimation by biweight regression on the normal QQ plot.

The sorted z-scores are regressed on standard normal plotting positions,
``z_(i) ~ mu0 + sigma0 * Phi^{-1}((i - 0.5) / N)``, with Tukey's biweight
so that the non-null tail does not drag the line.
"""

from dataclasses import asdict, dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .specfun import normal_cdf, normal_quantile, normal_sf, student_t_cdf
from .validation import EstimationError, check_vector, clamp_eps

__all__ = [
    "NullModel",
    "THEORETICAL_NULL",
    "SIDES",
    "biweight_psi",
    "biweight_rho",
    "biweight_weights",
    "irls_step",
    "fit_empirical_null",
    "z_from_t",
    "pvalues_from_z",
    "EmpiricalNull",
]

BIWEIGHT_K = 4.685
MAD_CONSTANT = 0.6745
SIDES = ("two_sided", "left", "right")


@dataclass(frozen=True)
class NullModel:
    """Location-scale normal null ``Phi((z - mu0) / sigma0)``."""

    mu0: float
    sigma0: float
    tuning_k: float = BIWEIGHT_K
    iterations: int = 0
    converged: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.sigma0) and self.sigma0 > 0):
            raise ValueError("sigma0 must be positive")

    def standardize(self, z):
        return (np.asarray(z, dtype=float) - self.mu0) / self.sigma0

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


THEORETICAL_NULL = NullModel(0.0, 1.0)


def biweight_psi(z, k=BIWEIGHT_K):
    """Tukey's biweight influence function z (1 - (z/k)^2)^2 on |z| <= k."""
    z = np.asarray(z, dtype=float)
    res = np.where(np.abs(z) <= k, z * (1.0 - (z / k) ** 2) ** 2, 0.0)
    return float(res) if res.ndim == 0 else res


def biweight_rho(z, k=BIWEIGHT_K):
    """Objective whose derivative is :func:`biweight_psi`."""
    z = np.asarray(z, dtype=float)
    inside = 1.0 - (1.0 - (z / k) ** 2) ** 3
    res = (k * k / 6.0) * np.where(np.abs(z) <= k, inside, 1.0)
    return float(res) if res.ndim == 0 else res


def biweight_weights(r, k=BIWEIGHT_K):
    """IRLS weights psi(r)/r, equal to 1 at r = 0."""
    r = np.asarray(r, dtype=float)
    return np.where(np.abs(r) < k, (1.0 - (r / k) ** 2) ** 2, 0.0)


def _mad_scale(r):
    return float(np.median(np.abs(r))) / MAD_CONSTANT


def irls_step(y, design, coef, scale, k=BIWEIGHT_K):
    """One weighted least-squares update at a fixed residual scale.

    Returns ``(new_coef, weights)``.
    """
    r = y - design @ coef
    w = biweight_weights(r / scale, k)
    if np.count_nonzero(w) < 4:
        raise EstimationError("fewer than 4 points keep positive biweight weight", last=coef)
    wx = design * w[:, None]
    new = np.linalg.solve(design.T @ wx, wx.T @ y)
    return new, w


def _plotting_positions(n):
    return normal_quantile((np.arange(1, n + 1) - 0.5) / n)


def fit_empirical_null(zscores, tuning_k=BIWEIGHT_K, tol=1e-8, max_iter=50):
    """Robust (mu0, sigma0) from the normal QQ relation.

    The residual scale is re-estimated as MAD/0.6745 of the current
    residuals at every iteration, which keeps the fit affine equivariant.
    Iteration starts from the median and MAD of the raw scores.
    """
    z = check_vector(zscores, "zscores", min_size=10)
    if tuning_k <= 0:
        raise ValueError("tuning_k must be positive")
    n = z.size
    y = np.sort(z)
    design = np.column_stack([np.ones(n), _plotting_positions(n)])

    center = float(np.median(z))
    spread = _mad_scale(z - center)
    if spread <= 0:
        spread = float(np.std(z))
    if spread <= 0:
        raise EstimationError("z-scores have zero spread")
    coef = np.array([center, spread])

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        scale = _mad_scale(y - design @ coef)
        if scale <= 1e-12 * abs(coef[1]):
            # exact fit: every point keeps unit weight
            scale = np.inf
        new, _ = irls_step(y, design, coef, scale, tuning_k)
        step = float(np.max(np.abs(new - coef)))
        coef = new
        if coef[1] <= 0:
            raise EstimationError("robust QQ slope is not positive", last=coef)
        if step <= tol * coef[1]:
            converged = True
            break
    if coef[1] <= 0:
        raise EstimationError("robust QQ slope is not positive", last=coef)
    return NullModel(float(coef[0]), float(coef[1]), float(tuning_k), it, converged)


def z_from_t(t, df, return_flags=False):
    """Map t statistics to the z scale, z = Phi^{-1}(T_df(t)).

    Positive t goes through the lower tail of -t so that large statistics
    keep their precision. CDF values are clamped to [1e-15, 1 - 1e-15];
    with ``return_flags`` a boolean mask of clamped entries is also returned.
    """
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("t statistics must be finite")
    lower = student_t_cdf(-np.abs(t), df)
    lower = np.asarray(lower, dtype=float)
    flags = lower < 1e-15
    lower = np.maximum(lower, 1e-15)
    z = normal_quantile(lower)
    z = np.where(t > 0, -z, z)
    z = np.where(t == 0, 0.0, z)
    if z.ndim == 0:
        z = float(z)
        flags = bool(flags)
    return (z, flags) if return_flags else z


def pvalues_from_z(zscores, null=THEORETICAL_NULL, sided="two_sided", n=None, clamp=True):
    """P-values of z-scores under a fitted null.

    ``left`` gives F0(z), ``right`` gives 1 - F0(z), ``two_sided`` twice the
    smaller tail. Output is clamped to [eps, 1 - eps] with eps = 1/(10 N);
    N is ``n`` when given, else the input size. A lone scalar without ``n``
    is only kept off 0 and 1. ``clamp=False`` returns the raw tail areas,
    which is what the rejection rules should see.
    """
    if sided not in SIDES:
        raise ValueError(f"sided must be one of {SIDES}, got {sided!r}")
    z = np.asarray(zscores, dtype=float)
    x = null.standardize(z)
    if sided == "left":
        p = normal_cdf(x)
    elif sided == "right":
        p = normal_sf(x)
    else:
        p = 2.0 * np.minimum(normal_cdf(x), normal_sf(x))
    if not clamp:
        return float(p) if np.ndim(p) == 0 else np.asarray(p, dtype=float)
    if n is not None:
        eps = clamp_eps(n)
    elif z.ndim == 0:
        eps = np.finfo(float).epsneg
    else:
        eps = clamp_eps(max(z.size, 1))
    p = np.clip(p, eps, 1.0 - eps)
    return float(p) if np.ndim(p) == 0 else p


class EmpiricalNull(TransformerMixin, BaseEstimator):
    """Biweight QQ-regression null as a transformer from z-scores to p-values.

    Parameters
    ----------
    tuning_k : float
        Biweight constant; 4.685 gives 95% efficiency at the normal.
    tol, max_iter :
        IRLS stopping rule.
    sided : {'two_sided', 'left', 'right'}
        How ``transform`` maps z-scores to p-values.
    """

    def __init__(self, tuning_k=BIWEIGHT_K, tol=1e-8, max_iter=50, sided="two_sided"):
        self.tuning_k = tuning_k
        self.tol = tol
        self.max_iter = max_iter
        self.sided = sided

    def fit(self, X, y=None):
        self.null_ = fit_empirical_null(X, self.tuning_k, self.tol, self.max_iter)
        self.mu0_ = self.null_.mu0
        self.sigma0_ = self.null_.sigma0
        self.n_samples_ = np.size(X)
        return self

    def transform(self, X):
        check_is_fitted(self, "null_")
        z = check_vector(X, "zscores")
        return pvalues_from_z(z, self.null_, self.sided)
