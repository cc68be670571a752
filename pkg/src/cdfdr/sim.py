"""Simulation studies with analytic fdr oracles.

Two designs: a normal-means mixture on the z scale and a uniform mixture
``pi0 U[0,1] + (1 - pi0) U[0,a]`` on the p scale. Every replication draws
from its own seed substream, so any single replication can be rerun alone.
"""

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .estimator import fit_pipeline
from .inference import cd_bh, efron_density_reject, hc_threshold, local_fdr, local_fdr_reject

__all__ = [
    "MixtureNormalConfig",
    "MixtureUniformConfig",
    "PipelineOptions",
    "SimulationReport",
    "replication_rng",
    "nonnull_means",
    "gen_mixture_normal",
    "gen_mixture_uniform",
    "true_fdr_normal",
    "true_fdr_uniform",
    "tail_mise",
    "run_replication",
    "run_study",
    "uniform_grid_study",
]

METRICS = ("pi0_hat", "lambda_star", "mise", "tail_mise", "mise_naive", "tail_mise_naive",
           "fdr_mad", "n_reject_cd_bh", "n_reject_hc", "n_reject_local_fdr",
           "n_reject_efron_density")


@dataclass(frozen=True)
class MixtureNormalConfig:
    n: int = 5000
    pi0: float = 0.9
    mu: float = 2.0
    reps: int = 150
    seed: int = 0

    def __post_init__(self):
        if self.n < 10 or self.reps < 1:
            raise ValueError("need n >= 10 and reps >= 1")
        if not 0 < self.pi0 <= 1:
            raise ValueError("pi0 must lie in (0, 1]")

    @property
    def n_nonnull(self):
        return int(round(self.n * (1.0 - self.pi0)))

    scenario = "mixture_normal"


@dataclass(frozen=True)
class MixtureUniformConfig:
    n: int = 5000
    pi0: float = 0.9
    a: float = 0.02
    reps: int = 150
    seed: int = 0

    def __post_init__(self):
        if self.n < 10 or self.reps < 1:
            raise ValueError("need n >= 10 and reps >= 1")
        if not 0 < self.pi0 <= 1:
            raise ValueError("pi0 must lie in (0, 1]")
        if not 0 < self.a < 1:
            raise ValueError("a must lie in (0, 1)")

    @property
    def n_nonnull(self):
        return int(round(self.n * (1.0 - self.pi0)))

    scenario = "mixture_uniform"


@dataclass(frozen=True)
class PipelineOptions:
    """How each replication is analysed.

    The normal design uses the theoretical N(0, 1) null and upper-tail
    p-values by default, so the fitted density at 1 - Phi(z) is f(z)/f0(z).
    """

    null: str = "theoretical"
    sided: str = "right"
    alpha: float = 0.05
    alpha0: float = 0.1
    fdr_cutoff: float = 0.2
    max_degree: int = 10
    gamma: float = 3.5
    grid_step: float = 0.01
    M: int = 10
    z_grid: tuple = (-4.0, 6.0, 0.05)
    mad_range: tuple = (-3.0, 5.0)


def replication_rng(seed, *key):
    """Generator for substream ``key`` of the master seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def nonnull_means(config):
    """Alternative means, drawn once per study from substream 0."""
    return replication_rng(config.seed, 0).normal(config.mu, 1.0, config.n_nonnull)


def gen_mixture_normal(config, rep=0, means=None):
    """z-scores and non-null labels for replication ``rep``."""
    if means is None:
        means = nonnull_means(config)
    rng = replication_rng(config.seed, 1, rep)
    k = config.n_nonnull
    centers = np.concatenate([np.zeros(config.n - k), means])
    labels = np.concatenate([np.zeros(config.n - k, dtype=bool), np.ones(k, dtype=bool)])
    return centers + rng.standard_normal(config.n), labels


def gen_mixture_uniform(config, rep=0):
    """p-values and labels (True for draws from U[0, a])."""
    rng = replication_rng(config.seed, 1, rep)
    k = config.n_nonnull
    null = rng.uniform(0.0, 1.0, config.n - k)
    signal = rng.uniform(0.0, config.a, k)
    labels = np.concatenate([np.zeros(config.n - k, dtype=bool), np.ones(k, dtype=bool)])
    return np.concatenate([null, signal]), labels


def true_fdr_normal(z, pi0, mu):
    """pi0 phi(z) / (pi0 phi(z) + (1 - pi0) phi(z - mu))."""
    z = np.asarray(z, dtype=float)
    if pi0 >= 1:
        res = np.ones_like(z)
    else:
        # likelihood-ratio form avoids 0/0 far in the tails
        log_odds = np.log1p(-pi0) - np.log(pi0) + mu * z - 0.5 * mu * mu
        res = 1.0 / (1.0 + np.exp(log_odds))
    return float(res) if res.ndim == 0 else res


def true_fdr_uniform(u, pi0, a):
    """pi0 / (pi0 + (1 - pi0)/a) on [0, a], 1 above a."""
    u = np.asarray(u, dtype=float)
    res = np.where(u <= a, pi0 / (pi0 + (1.0 - pi0) / a), 1.0)
    return float(res) if res.ndim == 0 else res


def tail_mise(estimated, truth, labels):
    """Mean squared fdr error over the alternative-labelled points."""
    labels = np.asarray(labels, dtype=bool)
    if not labels.any():
        raise ValueError("no alternative points to average over")
    diff = np.asarray(estimated, dtype=float)[labels] - np.asarray(truth, dtype=float)[labels]
    return float(np.mean(diff * diff))


def _tail_or_nan(estimated, truth, labels):
    return tail_mise(estimated, truth, labels) if np.any(labels) else float("nan")


def _z_grid(options):
    lo, hi, step = options.z_grid
    return lo + step * np.arange(int(round((hi - lo) / step)) + 1)


U_GRID = np.geomspace(1e-4, 0.999, 201)


def _nan_record(rep, error):
    rec = {name: float("nan") for name in METRICS}
    rec.update(rep=rep, error=error)
    return rec


def run_replication(config, rep, options=None, means=None):
    """Generate and analyse one replication.

    Returns ``(record, curve, naive_curve)``; the curves are fdr estimates on
    the design's display grid.
    """
    options = options or PipelineOptions()
    normal = isinstance(config, MixtureNormalConfig)
    if normal:
        values, labels = gen_mixture_normal(config, rep, means)
        grid = _z_grid(options)
        truth = true_fdr_normal(values, config.pi0, config.mu)
        grid_truth = true_fdr_normal(grid, config.pi0, config.mu)
        kind, scale = "z", "z"
    else:
        values, labels = gen_mixture_uniform(config, rep)
        grid = U_GRID
        truth = true_fdr_uniform(values, config.pi0, config.a)
        grid_truth = true_fdr_uniform(grid, config.pi0, config.a)
        kind, scale = "p", "p"
    try:
        report = fit_pipeline(values, kind, options.null, options.sided, options.max_degree,
                              options.gamma, options.grid_step, options.M)
    except Exception as exc:  # recorded, the study carries on
        nan_curve = np.full(grid.size, np.nan)
        return _nan_record(rep, f"{type(exc).__name__}: {exc}"), nan_curve, nan_curve
    model = report.model
    naive = model.without_correction()
    pi0_hat = report.pi0_estimate.pi0

    est = local_fdr(values, model, scale=scale)
    est_naive = local_fdr(values, naive, scale=scale)
    curve = local_fdr(grid, model, scale=scale)
    curve_naive = local_fdr(grid, naive, scale=scale)
    everything = np.ones(values.size, dtype=bool)
    if normal:
        mise = float(np.mean((curve - grid_truth) ** 2))
        mise_naive = float(np.mean((curve_naive - grid_truth) ** 2))
        lo, hi = options.mad_range
        window = (grid >= lo - 1e-9) & (grid <= hi + 1e-9)
        fdr_mad = float(np.mean(np.abs(curve - grid_truth)[window]))
    else:
        mise = tail_mise(est, truth, everything)
        mise_naive = tail_mise(est_naive, truth, everything)
        fdr_mad = float(np.mean(np.abs(est - truth)))
    u = report.raw_pvalues
    record = {
        "rep": rep,
        "error": None,
        "pi0_hat": pi0_hat,
        "lambda_star": report.pi0_estimate.lambda_star,
        "mise": mise,
        "tail_mise": _tail_or_nan(est, truth, labels),
        "mise_naive": mise_naive,
        "tail_mise_naive": _tail_or_nan(est_naive, truth, labels),
        "fdr_mad": fdr_mad,
        "n_reject_cd_bh": cd_bh(u, options.alpha, pi0_hat).n_rejected,
        "n_reject_hc": hc_threshold(u, options.alpha0).n_rejected,
        "n_reject_local_fdr": local_fdr_reject(values, model, options.fdr_cutoff,
                                               scale=scale).n_rejected,
        "n_reject_efron_density": efron_density_reject(u, model, options.alpha).n_rejected,
    }
    return record, curve, curve_naive


def _summarize(values):
    arr = np.asarray(values, dtype=float)
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        return {"mean": None, "sd": None, "median": None, "q1": None, "q3": None}
    q1, med, q3 = np.percentile(arr, [25, 50, 75])
    return {
        "mean": float(arr.mean()),
        "sd": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
        "median": float(med),
        "q1": float(q1),
        "q3": float(q3),
    }


def _nan_stat(fn, arr):
    # all-NaN columns (every replication failed) summarize to NaN quietly
    finite = np.isfinite(arr)
    out = np.full(arr.shape[1], np.nan)
    for j in range(arr.shape[1]):
        col = arr[finite[:, j], j]
        if col.size:
            out[j] = fn(col)
    return out


@dataclass
class SimulationReport:
    config: object
    options: PipelineOptions
    records: list
    grid: np.ndarray = field(repr=False)
    curves: np.ndarray = field(repr=False)
    naive_curves: np.ndarray = field(repr=False)

    @property
    def scenario(self):
        return self.config.scenario

    @property
    def n_failed(self):
        return sum(1 for r in self.records if r["error"] is not None)

    def column(self, name):
        return np.array([r[name] for r in self.records], dtype=float)

    def aggregates(self):
        return {name: _summarize(self.column(name)) for name in METRICS}

    def to_dict(self):
        return {
            "scenario": self.scenario,
            "config": asdict(self.config),
            "options": asdict(self.options),
            "seed": self.config.seed,
            "n_failed": self.n_failed,
            "aggregates": self.aggregates(),
            "records": self.records,
        }

    def write_json(self, fh, extra=None):
        data = self.to_dict()
        if extra:
            data.update(extra)
        json.dump(data, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")

    def write_records_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        cols = ["rep", *METRICS, "error"]
        writer.writerow(cols)
        for r in self.records:
            writer.writerow([r["rep"], *(repr(r[m]) for m in METRICS), r["error"] or ""])

    def write_curves_csv(self, fh):
        """Pointwise mean and sd of the fdr curves against the oracle."""
        if isinstance(self.config, MixtureNormalConfig):
            truth = true_fdr_normal(self.grid, self.config.pi0, self.config.mu)
            x_name = "z"
        else:
            truth = true_fdr_uniform(self.grid, self.config.pi0, self.config.a)
            x_name = "u"
        cols = [self.grid, truth,
                _nan_stat(np.mean, self.curves), _nan_stat(np.std, self.curves),
                _nan_stat(np.mean, self.naive_curves), _nan_stat(np.std, self.naive_curves)]
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([x_name, "true_fdr", "cdfdr_mean", "cdfdr_sd", "naive_mean", "naive_sd"])
        for row in zip(*cols):
            writer.writerow([repr(float(v)) for v in row])


def _default_workers():
    raw = os.environ.get("CDFDR_THREADS")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"CDFDR_THREADS must be an integer, got {raw!r}") from None


def run_study(config, options=None, workers=None):
    """Run every replication of ``config`` and collect a report.

    Replications may run on ``workers`` threads (default from
    ``CDFDR_THREADS``); results are merged in replication order.
    """
    options = options or PipelineOptions()
    workers = _default_workers() if workers is None else max(1, int(workers))
    means = nonnull_means(config) if isinstance(config, MixtureNormalConfig) else None

    def one(rep):
        return run_replication(config, rep, options, means)

    if workers == 1:
        results = [one(r) for r in range(config.reps)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(config.reps)))
    grid = _z_grid(options) if isinstance(config, MixtureNormalConfig) else U_GRID
    records = [r[0] for r in results]
    curves = np.vstack([r[1] for r in results])
    naive = np.vstack([r[2] for r in results])
    return SimulationReport(config, options, records, grid, curves, naive)


def uniform_grid_study(pi0s=(0.9, 0.95, 0.99), widths=(0.02, 0.002), n=5000, reps=150, seed=0,
                       options=None, workers=None):
    """One report per (a, pi0) cell, rows ordered by a then pi0."""
    reports = []
    for cell, (a, pi0) in enumerate((a, p) for a in widths for p in pi0s):
        cfg = MixtureUniformConfig(n=n, pi0=pi0, a=a, reps=reps, seed=seed + cell)
        reports.append(run_study(cfg, options, workers))
    return reports
