"""Monte Carlo experiment runner: CLT replication, ECDF/KS, exports.

A run simulates n0 independent BAR trees (one replicate seed each),
evaluates the kernel density estimator at the query point over the
configured scope, turns each estimate into the fluctuation statistic
zeta, and compares the n0 zeta samples against the theoretical Gaussian
limit through the Kolmogorov-Smirnov distance.

Replicates are simulated in vectorized blocks. Every random draw is a
pure function of (master seed, replicate index, node address), so the
block size, execution order and any parallel partitioning cannot change
the output: the determinism contract is bit-identical results for a
given config.
"""

import json
import math
import os
import time
from dataclasses import asdict, dataclass
from typing import List, Optional, Union

import numpy as np
from scipy.special import ndtr

from . import tree_sim
from .bar_model import (
    BarModel,
    GaussianInitial,
    check_assumptions,
    invariant_density,
    stationary_initial,
)
from .fluctuations import FluctuationSample, GaussianLimit, theoretical_limit
from .smoothing import (
    BandwidthSchedule,
    RegimeReport,
    admissible_bandwidth,
    bandwidth,
    gaussian_kernel,
)
from .tree_sim import GENERATION_SCOPE, TREE_SCOPE, ReplicateSeed

KERNELS = {"gaussian": gaussian_kernel}

DEFAULT_CHUNK = 125


@dataclass(frozen=True)
class ExperimentConfig:
    a: float
    sigma: float
    n: int
    gamma: float
    x: float
    n0: int
    scope: str = GENERATION_SCOPE
    kernel_name: str = "gaussian"
    master_seed: int = 0
    initial: Union[str, GaussianInitial] = "stationary"
    record_previous_generation: bool = False


@dataclass(frozen=True)
class CltRunResult:
    samples: List[FluctuationSample]
    theoretical: GaussianLimit
    ks_distance: float
    sample_mean: float
    sample_variance: float
    admissibility: RegimeReport
    wall_time_seconds: float
    config: ExperimentConfig
    prev_samples: Optional[List[FluctuationSample]] = None


def _resolve_initial(config: ExperimentConfig, model: BarModel) -> GaussianInitial:
    if config.initial == "stationary":
        return stationary_initial(model)
    if isinstance(config.initial, GaussianInitial):
        return config.initial
    raise ValueError(f"initial must be 'stationary' or GaussianInitial, got {config.initial!r}")


def _validate(config: ExperimentConfig):
    model = BarModel(config.a, config.sigma)
    model._require_noise("CLT experiment")
    schedule = BandwidthSchedule(config.gamma, dim=1)
    if config.kernel_name not in KERNELS:
        raise ValueError(f"unknown kernel {config.kernel_name!r}")
    K = KERNELS[config.kernel_name]()
    if config.scope not in (GENERATION_SCOPE, TREE_SCOPE):
        raise ValueError(f"unknown scope {config.scope!r}")
    if config.n < 0 or config.n > tree_sim.MAX_GENERATION:
        raise ValueError(f"tree depth n={config.n} out of range")
    if config.n0 < 1:
        raise ValueError("n0 must be >= 1")
    if config.record_previous_generation and config.n < 1:
        raise ValueError("record_previous_generation needs n >= 1")
    initial = _resolve_initial(config, model)
    # surfaces invalid parameter combinations; the run itself proceeds
    # even when the report flags a condition (that is the point of the
    # super-critical contrast experiments)
    check_assumptions(model, initial)
    report = admissible_bandwidth(schedule, K.order, model.alpha)
    return model, schedule, K, initial, report


def run_clt_experiment(config: ExperimentConfig, chunk_size: int = DEFAULT_CHUNK) -> CltRunResult:
    """Run the full CLT experiment for `config`.

    `chunk_size` is the vectorization block (the parallel-partition
    analog); results are bit-identical for any value.
    """
    t0 = time.perf_counter()
    model, schedule, K, initial, report = _validate(config)
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")

    n, x = config.n, config.x
    h_n = bandwidth(n, schedule)
    mu_x = invariant_density(x, model)
    limit = theoretical_limit(x, K, model)
    record_prev = config.record_previous_generation
    h_prev = bandwidth(n - 1, schedule) if record_prev else None

    card_gen = 1 << n
    card_tree = (2 << n) - 1
    card_main = card_gen if config.scope == GENERATION_SCOPE else card_tree

    zetas = np.empty(config.n0)
    zetas_prev = np.empty(config.n0) if record_prev else None

    for start in range(0, config.n0, chunk_size):
        stop = min(start + chunk_size, config.n0)
        keys = np.array(
            [ReplicateSeed(config.master_seed, r).key() for r in range(start, stop)],
            dtype=np.uint64,
        )
        rows = stop - start

        z0, _ = tree_sim.stream_normal_pairs(tree_sim.initial_states(keys), 0)
        states = (initial.m0 + initial.rho0 * z0)[:, None]

        acc_main = np.zeros(rows)
        acc_prev = np.zeros(rows) if record_prev else None

        def tally(gen, states):
            if config.scope == TREE_SCOPE or gen == n:
                acc_main[:] += K.evaluate((x - states) / h_n).sum(axis=1)
            if record_prev and gen == n - 1:
                acc_prev[:] = K.evaluate((x - states) / h_prev).sum(axis=1)

        tally(0, states)
        for g in range(n):
            node_states = tree_sim.generation_states(keys, g)
            e0, e1 = tree_sim.stream_normal_pairs(node_states, 0)
            ax = model.a * states
            nxt = np.empty((rows, 2 << g))
            nxt[:, 0::2] = ax + model.sigma * e0
            nxt[:, 1::2] = ax + model.sigma * e1
            states = nxt
            tally(g + 1, states)

        mu_hat = acc_main / (card_main * h_n)
        zetas[start:stop] = np.sqrt(card_main) * np.sqrt(h_n) * (mu_hat - mu_x)
        if record_prev:
            mu_hat_prev = acc_prev / ((card_gen >> 1) * h_prev)
            zetas_prev[start:stop] = (
                np.sqrt(card_gen >> 1) * np.sqrt(h_prev) * (mu_hat_prev - mu_x)
            )

    samples = [
        FluctuationSample(
            zeta=float(z),
            scope=config.scope,
            n=n,
            gamma=config.gamma,
            x=x,
            replicate_index=r,
            seed=config.master_seed,
        )
        for r, z in enumerate(zetas)
    ]
    prev_samples = None
    if record_prev:
        prev_samples = [
            FluctuationSample(
                zeta=float(z),
                scope=GENERATION_SCOPE,
                n=n - 1,
                gamma=config.gamma,
                x=x,
                replicate_index=r,
                seed=config.master_seed,
            )
            for r, z in enumerate(zetas_prev)
        ]

    ks = ks_distance(zetas, limit.variance)
    mean = float(np.mean(zetas))
    var = float(np.var(zetas, ddof=1)) if config.n0 > 1 else 0.0

    return CltRunResult(
        samples=samples,
        theoretical=limit,
        ks_distance=ks,
        sample_mean=mean,
        sample_variance=var,
        admissibility=report,
        wall_time_seconds=time.perf_counter() - t0,
        config=config,
        prev_samples=prev_samples,
    )


@dataclass(frozen=True)
class Ecdf:
    """Right-continuous empirical CDF: values sorted, evaluate(t) = #{<= t}/n."""

    values: np.ndarray
    n: int

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        out = np.searchsorted(self.values, t, side="right") / self.n
        return float(out) if t.ndim == 0 else out


def ecdf(samples) -> Ecdf:
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("empty sample")
    return Ecdf(values=np.sort(samples), n=samples.size)


def ks_distance(samples, variance: float) -> float:
    """sup_t |ECDF(t) - Phi(t / sqrt(variance))|, evaluated at both
    one-sided limits of every jump."""
    if variance <= 0:
        raise ValueError("variance must be positive")
    z = np.sort(np.asarray(samples, dtype=float))
    if z.size == 0:
        raise ValueError("empty sample")
    F = ndtr(z / math.sqrt(variance))
    i = np.arange(1, z.size + 1)
    upper = np.max(i / z.size - F)
    lower = np.max(F - (i - 1) / z.size)
    return float(max(upper, lower))


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    densities: np.ndarray
    degenerate: bool


def histogram(samples, bin_count: int) -> Histogram:
    """Equal-width density-normalized histogram over [min, max]."""
    if bin_count < 1:
        raise ValueError("bin_count must be >= 1")
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("empty sample")
    lo, hi = float(np.min(samples)), float(np.max(samples))
    if lo == hi:
        return Histogram(
            edges=np.array([lo, hi]), densities=np.array([]), degenerate=True
        )
    dens, edges = np.histogram(samples, bins=bin_count, range=(lo, hi), density=True)
    return Histogram(edges=edges, densities=dens, degenerate=False)


@dataclass(frozen=True)
class IndependenceReport:
    correlation: float
    threshold: float
    passed: bool
    degenerate: bool


def independence_report(pairs, threshold: Optional[float] = None) -> IndependenceReport:
    """Pearson correlation of paired zeta samples with a 3/sqrt(n0) flag."""
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError("pairs must have shape (n, 2)")
    if pairs.shape[0] < 3:
        raise ValueError("need at least 3 pairs")
    if threshold is None:
        threshold = 3.0 / math.sqrt(pairs.shape[0])
    a = pairs[:, 0] - pairs[:, 0].mean()
    b = pairs[:, 1] - pairs[:, 1].mean()
    sa, sb = np.sqrt(np.sum(a * a)), np.sqrt(np.sum(b * b))
    if sa == 0.0 or sb == 0.0:
        return IndependenceReport(
            correlation=float("nan"), threshold=threshold, passed=False, degenerate=True
        )
    corr = float(np.sum(a * b) / (sa * sb))
    return IndependenceReport(
        correlation=corr,
        threshold=threshold,
        passed=abs(corr) < threshold,
        degenerate=False,
    )


def monte_carlo_generation_sums(
    f_by_gen: dict,
    n: int,
    x: float,
    model: BarModel,
    reps: int,
    master_seed: int = 0,
    chunk_size: int = 4096,
) -> dict:
    """Per-replicate M_{G_g}(f_g) = sum_{u in G_g} f_g(X_u) with the root
    fixed at x, for every g in f_by_gen (all from the same trees).

    This is the simulation side of the moment-oracle comparison: the
    root is deterministic because the oracle moments are conditional
    on X_root = x.
    """
    if not f_by_gen:
        raise ValueError("f_by_gen is empty")
    if min(f_by_gen) < 0 or max(f_by_gen) > n:
        raise ValueError("generations must lie in 0..n")
    model._require_noise("moment Monte Carlo")
    out = {g: np.empty(reps) for g in f_by_gen}
    for start in range(0, reps, chunk_size):
        stop = min(start + chunk_size, reps)
        keys = np.array(
            [ReplicateSeed(master_seed, r).key() for r in range(start, stop)],
            dtype=np.uint64,
        )
        states = np.full((stop - start, 1), float(x))
        if 0 in f_by_gen:
            out[0][start:stop] = f_by_gen[0](states).sum(axis=1)
        for g in range(n):
            node_states = tree_sim.generation_states(keys, g)
            e0, e1 = tree_sim.stream_normal_pairs(node_states, 0)
            ax = model.a * states
            nxt = np.empty((stop - start, 2 << g))
            nxt[:, 0::2] = ax + model.sigma * e0
            nxt[:, 1::2] = ax + model.sigma * e1
            states = nxt
            if g + 1 in f_by_gen:
                out[g + 1][start:stop] = f_by_gen[g + 1](states).sum(axis=1)
    return out


# -- exports -----------------------------------------------------------------

def config_to_dict(config: ExperimentConfig) -> dict:
    d = asdict(config)
    if isinstance(config.initial, GaussianInitial):
        d["initial"] = {"m0": config.initial.m0, "rho0": config.initial.rho0}
    return d


def config_from_dict(d: dict) -> ExperimentConfig:
    d = dict(d)
    init = d.get("initial", "stationary")
    if isinstance(init, dict):
        d["initial"] = GaussianInitial(m0=init["m0"], rho0=init["rho0"])
    return ExperimentConfig(**d)


def export(result: CltRunResult, format: str, path: str) -> str:
    """Write samples.csv (format='csv') or summary.json (format='json')
    into directory `path`; returns the file written.

    The CSV is byte-stable for a given config; the JSON is too except
    for wall_time_seconds, which is a measurement of the run, not of
    the configuration.
    """
    os.makedirs(path, exist_ok=True)
    if format == "csv":
        out = os.path.join(path, "samples.csv")
        with open(out, "w", newline="") as fh:
            fh.write("replicate,zeta,scope,n,gamma,x,seed\n")
            for s in result.samples:
                fh.write(
                    f"{s.replicate_index},{s.zeta!r},{s.scope},{s.n},"
                    f"{s.gamma!r},{s.x!r},{s.seed}\n"
                )
        return out
    if format == "json":
        out = os.path.join(path, "summary.json")
        summary = {
            "config": config_to_dict(result.config),
            "theoretical_variance": result.theoretical.variance,
            "ks_distance": result.ks_distance,
            "sample_mean": result.sample_mean,
            "sample_variance": result.sample_variance,
            "admissible": result.admissibility.admissible,
            "wall_time_seconds": result.wall_time_seconds,
        }
        with open(out, "w", newline="") as fh:
            fh.write(json.dumps(summary, indent=2, sort_keys=True))
            fh.write("\n")
        return out
    raise ValueError(f"unknown export format {format!r}")


def export_ecdf(result: CltRunResult, path: str) -> str:
    """value,ecdf CSV of the zeta samples (plot-ready)."""
    e = ecdf([s.zeta for s in result.samples])
    out = os.path.join(path, "ecdf.csv")
    with open(out, "w", newline="") as fh:
        fh.write("zeta,ecdf\n")
        for k, v in enumerate(e.values, start=1):
            fh.write(f"{float(v)!r},{k / e.n!r}\n")
    return out


def export_histogram(result: CltRunResult, path: str, bin_count: Optional[int] = None) -> str:
    """bin_left,bin_right,density CSV; default bin count ceil(sqrt(n0))."""
    if bin_count is None:
        bin_count = math.ceil(math.sqrt(len(result.samples)))
    hist = histogram([s.zeta for s in result.samples], bin_count)
    out = os.path.join(path, "histogram.csv")
    with open(out, "w", newline="") as fh:
        fh.write("bin_left,bin_right,density\n")
        if not hist.degenerate:
            for lo, hi, d in zip(hist.edges[:-1], hist.edges[1:], hist.densities):
                fh.write(f"{float(lo)!r},{float(hi)!r},{float(d)!r}\n")
    return out
