"""Null-proportion estimation by minimum deviance, with Storey's estimator
as a baseline."""

import csv
from dataclasses import dataclass

import numpy as np

from .basis import DEFAULT_MAX_DEGREE, legendre_matrix
from .skewbeta import cd_eval
from .validation import EstimationError, check_pvalues

__all__ = ["Pi0Estimate", "lambda_grid", "mdc_pi0", "storey_pi0"]


@dataclass(frozen=True)
class Pi0Estimate:
    """Result of the minimum deviance search.

    ``path`` holds ``(lambda, deviance, subset_size)`` for every grid point
    with a non-empty subset.
    """

    pi0: float
    lambda_star: float
    path: tuple
    M: int
    n: int

    def to_dict(self):
        return {
            "pi0": self.pi0,
            "lambda_star": self.lambda_star,
            "M": self.M,
            "n": self.n,
            "path": [{"lambda": lam, "deviance": dev, "subset_size": size}
                     for lam, dev, size in self.path],
        }

    def write_path_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["lambda", "deviance", "subset_size"])
        for lam, dev, size in self.path:
            writer.writerow([repr(lam), repr(dev), size])


def lambda_grid(gamma=3.5, step=0.01):
    """Grid 1, 1 + step, ..., gamma built from integer multiples of ``step``."""
    if gamma < 1:
        raise ValueError("gamma must be at least 1")
    if step <= 0:
        raise ValueError("grid step must be positive")
    count = int(np.floor((gamma - 1.0) / step + 1e-9))
    return 1.0 + step * np.arange(count + 1)


def mdc_pi0(pvalues, model, gamma=3.5, grid_step=0.01, M=DEFAULT_MAX_DEGREE):
    """Minimum deviance estimate of the null proportion.

    For each threshold lambda the subset ``{u_i : d(u_i) < lambda}`` is
    scored by the squared norm of its Legendre means at the raw u_i,
    degrees 1..M. The lambda with the smallest deviance (the smallest such
    lambda on ties) gives ``pi0 = N_lambda / N``.
    """
    u = check_pvalues(pvalues, open_interval=True)
    n = u.size
    dens = np.asarray(cd_eval(model, u), dtype=float)
    order = np.argsort(dens, kind="stable")
    sorted_dens = dens[order]
    # cumulative sums over the subsets, which are nested in lambda
    cum = np.cumsum(legendre_matrix(u[order], M), axis=0)

    path = []
    best = None
    for lam in lambda_grid(gamma, grid_step):
        size = int(np.searchsorted(sorted_dens, lam, side="left"))
        if size == 0:
            continue
        means = cum[size - 1] / size
        dev = float(np.dot(means, means))
        lam = float(lam)
        path.append((lam, dev, size))
        if best is None or dev < best[1]:
            best = (lam, dev, size)
    if best is None:
        raise EstimationError("every lambda on the grid gives an empty subset")
    return Pi0Estimate(best[2] / n, best[0], tuple(path), M, n)


def storey_pi0(pvalues, lam):
    """(1 - ECDF(lam)) / (1 - lam), capped at 1."""
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")
    u = check_pvalues(pvalues)
    above = np.count_nonzero(u > lam) / u.size
    return float(min(1.0, above / (1.0 - lam)))
