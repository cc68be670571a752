"""Skew-beta comparison density estimation.

A fitted beta density absorbs the sharp boundary behaviour of the p-value
distribution. What is left over, the density of the smooth p-values
``v = F_B(u)``, is close to flat and is expanded in a short Legendre
series::

    d(u) = f_B(u; a, b) * (1 + sum_j LP[j] * Leg_j(F_B(u; a, b)))
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .basis import DEFAULT_MAX_DEGREE, gauss_legendre, legendre_matrix
from .null_model import SIDES, NullModel, pvalues_from_z
from .specfun import DomainError, digamma, log_beta, reg_inc_beta, trigamma
from .validation import EstimationError, check_pvalues, clamp_pvalues

__all__ = [
    "BetaParams",
    "CDModel",
    "SCHEMA_VERSION",
    "beta_loglik",
    "fit_beta_mle",
    "smooth_pvalues",
    "lp_coefficients",
    "select_coefficients",
    "cd_eval",
    "cd_eval_clipped",
    "cd_mass",
    "null_adjusted_density",
    "deviance",
    "uniformity_diagnostic",
    "SkewBetaDensity",
]

SCHEMA_VERSION = 1
CLIP_FLOOR = 1e-3


@dataclass(frozen=True)
class BetaParams:
    alpha: float
    beta: float
    loglik: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be finite and positive, got {val}")

    def pdf(self, u):
        u = np.asarray(u, dtype=float)
        a, b = self.alpha, self.beta
        return np.exp((a - 1.0) * np.log(u) + (b - 1.0) * np.log1p(-u) - log_beta(a, b))

    def cdf(self, u):
        return reg_inc_beta(u, self.alpha, self.beta)


UNIFORM = BetaParams(1.0, 1.0, 0.0)


def beta_loglik(u, alpha, beta):
    """Total Beta(alpha, beta) log-likelihood of ``u``."""
    u = np.asarray(u, dtype=float)
    return float((alpha - 1.0) * np.log(u).sum() + (beta - 1.0) * np.log1p(-u).sum()
                 - u.size * log_beta(alpha, beta))


def _mean_loglik(s1, s2, a, b):
    return (a - 1.0) * s1 + (b - 1.0) * s2 - log_beta(a, b)


def _score(s1, s2, a, b):
    common = digamma(a + b)
    return np.array([s1 - digamma(a) + common, s2 - digamma(b) + common])


def _hessian(a, b):
    common = trigamma(a + b)
    return np.array([[common - trigamma(a), common], [common, common - trigamma(b)]])


def _moments_start(u):
    m = float(np.mean(u))
    v = float(np.var(u))
    if v <= 0:
        return 1.0, 1.0
    common = m * (1.0 - m) / v - 1.0
    if common <= 0:
        return 1.0, 1.0
    return m * common, (1.0 - m) * common


def _newton(s1, s2, a, b, tol, max_iter):
    ll = _mean_loglik(s1, s2, a, b)
    for _ in range(max_iter):
        g = _score(s1, s2, a, b)
        if np.linalg.norm(g) <= tol:
            return a, b, True
        step = -np.linalg.solve(_hessian(a, b), g)
        t = 1.0
        while t > 1e-10:
            na, nb = a + t * step[0], b + t * step[1]
            if na > 0 and nb > 0:
                nll = _mean_loglik(s1, s2, na, nb)
                if nll >= ll - 1e-15 * abs(ll):
                    break
            t *= 0.5
        else:
            return a, b, False
        a, b, ll = na, nb, nll
    return a, b, bool(np.linalg.norm(_score(s1, s2, a, b)) <= tol)


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_coordinate_search(s1, s2, a, b, steps=200):
    # Alternate golden-section searches on log(alpha) and log(beta).
    per_axis = 25
    for sweep in range(steps // per_axis):
        axis = sweep % 2

        def neg(logx):
            x = math.exp(logx)
            return -(_mean_loglik(s1, s2, x, b) if axis == 0 else _mean_loglik(s1, s2, a, x))

        lo, hi = -8.0, 8.0
        c = hi - _GOLDEN * (hi - lo)
        d = lo + _GOLDEN * (hi - lo)
        fc, fd = neg(c), neg(d)
        for _ in range(per_axis):
            if fc < fd:
                hi, d, fd = d, c, fc
                c = hi - _GOLDEN * (hi - lo)
                fc = neg(c)
            else:
                lo, c, fc = c, d, fd
                d = lo + _GOLDEN * (hi - lo)
                fd = neg(d)
        best = math.exp(0.5 * (lo + hi))
        if axis == 0:
            a = best
        else:
            b = best
    return a, b


def fit_beta_mle(pvalues, tol=1e-8, max_iter=100):
    """Maximum-likelihood Beta(alpha, beta) fit.

    Newton-Raphson on the two digamma score equations from a method of
    moments start; ``tol`` bounds the norm of the per-observation score.
    Falls back to a golden-section coordinate search when Newton stalls.
    """
    u = check_pvalues(pvalues, min_size=10, open_interval=True)
    if np.ptp(u) == 0:
        raise EstimationError("all p-values are equal")
    s1 = float(np.mean(np.log(u)))
    s2 = float(np.mean(np.log1p(-u)))
    a0, b0 = _moments_start(u)
    a, b, ok = _newton(s1, s2, a0, b0, tol, max_iter)
    if not ok:
        a, b = _golden_coordinate_search(s1, s2, a0, b0)
        a, b, ok = _newton(s1, s2, a, b, tol, max_iter)
    if not ok:
        raise EstimationError("beta MLE did not converge", last=(a, b))
    return BetaParams(float(a), float(b), beta_loglik(u, a, b))


def smooth_pvalues(pvalues, params):
    """Beta-CDF transform v = F_B(u; alpha, beta)."""
    return params.cdf(pvalues)


def lp_coefficients(smooth_values, max_degree=DEFAULT_MAX_DEGREE):
    """Sample means of Leg_1..Leg_M at the smooth p-values."""
    v = np.asarray(smooth_values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("need at least one value")
    return legendre_matrix(v, max_degree).mean(axis=0)


def select_coefficients(raw, n, max_degree=None):
    """Ledwina-style selection with the Schwarz penalty.

    Coefficients are ranked by squared size (ties go to the lower degree)
    and the top k are kept, with k in 0..M maximizing
    ``sum(top-k squares) - k log(n) / n``. ``raw`` is either a vector
    indexed by degree - 1 or a mapping ``{degree: value}``. Returns
    ``[(degree, value), ...]`` sorted by degree.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if isinstance(raw, dict):
        items = [(int(j), float(c)) for j, c in raw.items()]
    else:
        items = [(j + 1, float(c)) for j, c in enumerate(np.asarray(raw, dtype=float).ravel())]
    if max_degree is not None:
        items = [(j, c) for j, c in items if j <= max_degree]
    ranked = sorted(items, key=lambda jc: (-jc[1] * jc[1], jc[0]))
    penalty = math.log(n) / n
    best_k, best_score, running = 0, 0.0, 0.0
    for k, (_, c) in enumerate(ranked, start=1):
        running += c * c
        score = running - k * penalty
        if score > best_score:
            best_k, best_score = k, score
    return sorted(ranked[:best_k])


def deviance(coefficients):
    """Sum of squared LP coefficients, i.e. the L2 distance of the series from 1."""
    if isinstance(coefficients, dict):
        values = list(coefficients.values())
    else:
        values = [c[1] if isinstance(c, (tuple, list)) else c for c in coefficients]
    return float(sum(float(c) ** 2 for c in values))


@dataclass(frozen=True)
class CDModel:
    """Fitted comparison density.

    ``sided`` records how z-scores were turned into p-values when the model
    came from z input; :func:`null_adjusted_density` reuses it.
    """

    beta_params: BetaParams = UNIFORM
    coefficients: tuple = ()
    max_degree: int = DEFAULT_MAX_DEGREE
    null: NullModel = None
    pi0: float = None
    n: int = 0
    sided: str = None
    _degrees: np.ndarray = field(init=False, repr=False, compare=False)
    _values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        coefs = tuple(sorted((int(j), float(c)) for j, c in self.coefficients))
        degrees = [j for j, _ in coefs]
        if len(set(degrees)) != len(degrees):
            raise ValueError("coefficient degrees must be distinct")
        if any(j < 1 or j > self.max_degree for j in degrees):
            raise ValueError(f"degrees must lie in 1..{self.max_degree}")
        if self.pi0 is not None and not 0 < self.pi0 <= 1:
            raise ValueError("pi0 must lie in (0, 1]")
        if self.sided is not None and self.sided not in SIDES:
            raise ValueError(f"sided must be one of {SIDES}")
        object.__setattr__(self, "coefficients", coefs)
        object.__setattr__(self, "_degrees", np.array(degrees, dtype=int))
        object.__setattr__(self, "_values", np.array([c for _, c in coefs], dtype=float))

    def correction(self, v):
        """1 + sum LP[j] Leg_j(v) on the smooth scale."""
        v = np.asarray(v, dtype=float)
        if self._degrees.size == 0:
            return np.ones_like(v)
        basis = legendre_matrix(v, int(self._degrees.max()))
        return 1.0 + basis[..., self._degrees - 1] @ self._values

    def without_correction(self):
        return replace(self, coefficients=())

    def with_pi0(self, pi0):
        return replace(self, pi0=float(pi0))

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "beta_params": {"alpha": self.beta_params.alpha, "beta": self.beta_params.beta,
                            "loglik": self.beta_params.loglik},
            "coefficients": [{"degree": j, "value": c} for j, c in self.coefficients],
            "max_degree": self.max_degree,
            "null": None if self.null is None else self.null.to_dict(),
            "pi0": self.pi0,
            "n": self.n,
            "sided": self.sided,
        }

    @classmethod
    def from_dict(cls, data):
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported model schema_version {version!r}")
        null = data.get("null")
        return cls(
            beta_params=BetaParams(**data["beta_params"]),
            coefficients=tuple((c["degree"], c["value"]) for c in data["coefficients"]),
            max_degree=data["max_degree"],
            null=None if null is None else NullModel.from_dict(null),
            pi0=data.get("pi0"),
            n=data.get("n", 0),
            sided=data.get("sided"),
        )

    def to_json(self, **kwargs):
        # repr of floats round-trips exactly through json
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _open_unit(u):
    u = np.asarray(u, dtype=float)
    if np.any(np.isnan(u)) or np.any((u <= 0) | (u >= 1)):
        raise DomainError("comparison density is evaluated on the open interval (0, 1)")
    return u


def cd_eval(model, u):
    """Raw series value f_B(u) * (1 + sum LP[j] Leg_j(F_B(u))); may be negative."""
    u = _open_unit(u)
    bp = model.beta_params
    res = bp.pdf(u) * model.correction(bp.cdf(u))
    return float(res) if res.ndim == 0 else res


def cd_eval_clipped(model, u, floor=CLIP_FLOOR):
    res = np.maximum(cd_eval(model, u), floor)
    return float(res) if np.ndim(res) == 0 else res


def cd_mass(model, n_points=256, delta=1e-6):
    """Total mass of the fitted density.

    Gauss-Legendre on geometrically graded panels over [delta, 1 - delta]
    handles the beta endpoint singularities; the two end pieces are
    integrated exactly on the smooth scale, where the integrand is a
    polynomial.
    """
    edges = [delta]
    while edges[-1] * 10.0 < 0.5:
        edges.append(edges[-1] * 10.0)
    edges.append(0.5)
    edges = np.array(edges)
    edges = np.concatenate([edges, 1.0 - edges[-2::-1]])
    per_panel = max(2, n_points // (edges.size - 1))
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        nodes, weights = gauss_legendre(per_panel, lo, hi)
        total += float(np.dot(weights, cd_eval(model, nodes)))
    top = max(model.max_degree, 1)
    for lo, hi in ((0.0, model.beta_params.cdf(delta)), (model.beta_params.cdf(1.0 - delta), 1.0)):
        nodes, weights = gauss_legendre(top + 1, lo, hi)
        total += float(np.dot(weights, model.correction(nodes)))
    return total


def null_adjusted_density(model, z):
    """Comparison density at the null-scale position of z-scores.

    z is mapped to u with the model's null and sidedness (``left`` is the
    null CDF itself), clamped as at fit time, then fed to :func:`cd_eval`.
    """
    if model.null is None:
        raise ValueError("model carries no null distribution")
    sided = model.sided or "left"
    u = pvalues_from_z(z, model.null, sided, n=max(model.n, 1))
    return cd_eval(model, u)


def uniformity_diagnostic(pvalues):
    """Likelihood-ratio test of Beta(1, 1) against a fitted beta.

    Returns ``(statistic, p_value)`` with the statistic referred to a
    chi-square with 2 degrees of freedom.
    """
    params = fit_beta_mle(pvalues)
    stat = max(0.0, 2.0 * params.loglik)
    return stat, min(1.0, math.exp(-0.5 * stat))


class SkewBetaDensity(TransformerMixin, BaseEstimator):
    """Skew-beta comparison density of a p-value sample.

    ``fit`` takes p-values; ``transform`` returns smooth p-values and
    ``score_samples`` the fitted density.

    Parameters
    ----------
    max_degree : int
        Largest Legendre degree considered.
    selection : {'schwarz', 'none'}
        Keep the Schwarz-selected subset or every coefficient.
    """

    def __init__(self, max_degree=DEFAULT_MAX_DEGREE, selection="schwarz", tol=1e-8, max_iter=100):
        self.max_degree = max_degree
        self.selection = selection
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        u = clamp_pvalues(check_pvalues(X, min_size=10))
        self.beta_params_ = fit_beta_mle(u, self.tol, self.max_iter)
        self.smooth_ = smooth_pvalues(u, self.beta_params_)
        self.raw_coefficients_ = lp_coefficients(self.smooth_, self.max_degree)
        if self.selection == "schwarz":
            coefs = select_coefficients(self.raw_coefficients_, u.size, self.max_degree)
        elif self.selection == "none":
            coefs = [(j + 1, float(c)) for j, c in enumerate(self.raw_coefficients_)]
        else:
            raise ValueError(f"unknown selection {self.selection!r}")
        self.model_ = CDModel(self.beta_params_, tuple(coefs), self.max_degree, n=u.size)
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        return smooth_pvalues(clamp_pvalues(check_pvalues(X), self.model_.n), self.beta_params_)

    def score_samples(self, X):
        check_is_fitted(self, "model_")
        return cd_eval(self.model_, clamp_pvalues(check_pvalues(X), self.model_.n))
