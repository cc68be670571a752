"""Rejection rules written in comparison-distribution form.

* ``cd_bh``: reject where ECDF(u)/u clears pi0/alpha (adaptive BH).
* ``hc_threshold``: Higher Criticism cut over the smallest p-values.
* ``local_fdr``: pi0 / d(F0(z)), with Efron's density cut pi0/(2 alpha) as a
  companion rule.
"""

import csv
import json
import warnings
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

from .skewbeta import CLIP_FLOOR, cd_eval, null_adjusted_density
from .validation import check_pvalues, check_vector, clamp_pvalues

__all__ = [
    "RejectionResult",
    "METHODS",
    "ecdf_at",
    "bh_set_form",
    "bh_step_up",
    "cd_bh",
    "hc_statistics",
    "hc_argmax",
    "hc_threshold",
    "local_fdr",
    "local_fdr_reject",
    "efron_density_reject",
]

METHODS = ("cd_bh", "hc", "local_fdr", "efron_density")


@dataclass(frozen=True)
class RejectionResult:
    """Decisions of one rule.

    ``level`` is alpha for cd_bh and efron_density, alpha0 for hc and the
    fdr cutoff for local_fdr. ``values`` are the inputs the rule saw.
    """

    method: str
    level: float
    pi0_used: float
    rejected: tuple
    k: int
    scores: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    @property
    def mask(self):
        out = np.zeros(self.values.size, dtype=bool)
        out[list(self.rejected)] = True
        return out

    @property
    def n_rejected(self):
        return len(self.rejected)

    def summary(self):
        level_name = {"hc": "alpha0", "local_fdr": "fdr_cutoff"}.get(self.method, "alpha")
        return {
            "method": self.method,
            level_name: self.level,
            "pi0_used": self.pi0_used,
            "k": self.k,
            "n": int(self.values.size),
            "n_rejected": self.n_rejected,
        }

    def write_csv(self, fh, value_name="value"):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", value_name, "score", "rejected"])
        mask = self.mask
        for i, (v, s) in enumerate(zip(self.values, self.scores)):
            writer.writerow([i, repr(float(v)), repr(float(s)), int(mask[i])])

    def write_summary(self, fh):
        json.dump(self.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def ecdf_at(u):
    """ECDF of the sample at each of its own points (ties get the max rank)."""
    srt = np.sort(u)
    return np.searchsorted(srt, u, side="right") / u.size


def _bh_passes(u, count, n, alpha, pi0):
    """count * alpha >= n * pi0 * u, decided exactly for the given doubles.

    Both BH forms reduce to this inequality; entries within rounding
    distance of equality are settled in rational arithmetic so that the
    two forms can never disagree on a boundary case.
    """
    lhs = count * alpha
    rhs = n * pi0 * u
    out = lhs >= rhs
    near = np.abs(lhs - rhs) <= 8 * np.finfo(float).eps * np.maximum(lhs, rhs)
    if near.any():
        fa, fp = Fraction(alpha), Fraction(pi0)
        for i in np.nonzero(near)[0]:
            out[i] = int(count[i]) * fa >= n * fp * Fraction(float(u[i]))
    return out


def bh_step_up(u, alpha, pi0=1.0):
    """Indices rejected by k = max{i : u_(i) <= (i/N)(alpha/pi0)}."""
    n = u.size
    order = np.argsort(u, kind="stable")
    below = np.nonzero(_bh_passes(u[order], np.arange(1, n + 1), n, alpha, pi0))[0]
    k = int(below[-1]) + 1 if below.size else 0
    return order[:k], k


def bh_set_form(u, alpha, pi0=1.0):
    """Rejection set from the ECDF-to-uniform ratio.

    The cut is the largest p-value whose ratio ECDF(u)/u reaches pi0/alpha;
    everything at or below it is rejected. Returns ``(indices, ratios)``.
    """
    counts = np.searchsorted(np.sort(u), u, side="right")
    ratio = np.divide(counts / u.size, u, out=np.full(u.size, np.inf), where=u > 0)
    passing = _bh_passes(u, counts, u.size, alpha, pi0)
    if not passing.any():
        return np.array([], dtype=int), ratio
    cut = u[passing].max()
    return np.nonzero(u <= cut)[0], ratio


def cd_bh(pvalues, alpha=0.05, pi0=1.0):
    """Adaptive Benjamini-Hochberg in comparison-distribution form.

    Both the ratio form and the step-up form are computed; the step-up
    decision is returned.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if not 0 < pi0 <= 1:
        raise ValueError("pi0 must lie in (0, 1]")
    u = check_pvalues(pvalues)
    step, k = bh_step_up(u, alpha, pi0)
    via_set, ratio = bh_set_form(u, alpha, pi0)
    if not np.array_equal(np.sort(step), via_set):
        warnings.warn("BH set form and step-up form disagree; using step-up", RuntimeWarning)
    return RejectionResult("cd_bh", alpha, pi0, tuple(sorted(int(i) for i in step)), k, ratio, u)


def hc_statistics(sorted_u):
    """(i/N - u_(i)) / sqrt(u_(i)(1 - u_(i))) for sorted p-values."""
    n = sorted_u.size
    denom = np.sqrt(sorted_u * (1.0 - sorted_u))
    num = np.arange(1, n + 1) / n - sorted_u
    return np.divide(num, denom, out=np.full(n, -np.inf), where=denom > 0)


def hc_argmax(hc, sorted_u, alpha0):
    """Rank k maximizing ``hc`` over ranks 1..floor(alpha0 N) with u >= 1/N.

    Falls back to k = 1 when no rank is eligible.
    """
    n = sorted_u.size
    upper = max(1, int(np.floor(alpha0 * n)))
    eligible = np.zeros(n, dtype=bool)
    eligible[:upper] = True
    eligible &= sorted_u >= 1.0 / n
    if not eligible.any():
        return 1
    return int(np.argmax(np.where(eligible, hc, -np.inf))) + 1


def hc_threshold(pvalues, alpha0=0.1, scale_sqrt_n=False):
    """Higher Criticism cut.

    The argmax runs over ranks 1..floor(alpha0 N) whose p-value is at least
    1/N; when nothing qualifies rank 1 is used. ``scores`` hold each
    hypothesis's HC value at its rank, multiplied by sqrt(N) on request.
    """
    if not 0 < alpha0 < 1:
        raise ValueError("alpha0 must lie in (0, 1)")
    u = check_pvalues(pvalues, min_size=2)
    n = u.size
    order = np.argsort(u, kind="stable")
    srt = u[order]
    hc = hc_statistics(srt)
    k = hc_argmax(hc, srt, alpha0)
    if scale_sqrt_n:
        hc = hc * np.sqrt(n)
    scores = np.empty(n)
    scores[order] = hc
    rejected = tuple(sorted(int(i) for i in order[:k]))
    return RejectionResult("hc", alpha0, 1.0, rejected, k, scores, u)


def _model_pi0(model, pi0):
    if pi0 is None:
        pi0 = model.pi0
    if pi0 is None:
        raise ValueError("no pi0 given and the model carries none")
    return float(pi0)


def local_fdr(values, model, pi0=None, scale="z", floor=CLIP_FLOOR):
    """Local false discovery rate min(1, pi0 / d).

    With ``scale='z'`` the density is the null-adjusted one at each z-score;
    with ``scale='p'`` it is evaluated directly at the p-values. The density
    is floored at ``floor`` before dividing.
    """
    pi0 = _model_pi0(model, pi0)
    if scale == "z":
        dens = null_adjusted_density(model, check_vector(values, "zscores"))
    elif scale == "p":
        u = clamp_pvalues(check_pvalues(values), max(model.n, 1))
        dens = cd_eval(model, u)
    else:
        raise ValueError("scale must be 'z' or 'p'")
    return np.minimum(1.0, pi0 / np.maximum(dens, floor))


def local_fdr_reject(values, model, cutoff=0.2, pi0=None, scale="z"):
    """Reject where the estimated local fdr is at most ``cutoff``."""
    pi0 = _model_pi0(model, pi0)
    fdr = local_fdr(values, model, pi0, scale)
    rejected = tuple(int(i) for i in np.nonzero(fdr <= cutoff)[0])
    vals = np.asarray(values, dtype=float).ravel()
    return RejectionResult("local_fdr", cutoff, pi0, rejected, len(rejected), fdr, vals)


def efron_density_reject(pvalues, model, alpha=0.05, pi0=None):
    """Reject where the fitted density exceeds pi0 / (2 alpha)."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    pi0 = _model_pi0(model, pi0)
    u = check_pvalues(pvalues)
    dens = np.asarray(cd_eval(model, clamp_pvalues(u, max(model.n, u.size))), dtype=float)
    rejected = tuple(int(i) for i in np.nonzero(dens > pi0 / (2.0 * alpha))[0])
    return RejectionResult("efron_density", alpha, pi0, rejected, len(rejected), dens, u)
