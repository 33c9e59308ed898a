"""Convergence and independence experiments on the finite network.

The central measurement couples each network neuron to its mean-field twin
(same Brownian path, same initial history) and tracks the mean-square
sup-distance as the network grows; the theory predicts a 1/N decay, i.e. a
log-log slope of -1, both for a frozen environment (quenched) and with the
environment resampled every trial (annealed).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from multiprocessing import get_context

import numpy as np

from .disorder import sample_realization
from .grid import SimConfig
from .meanfield import build_quadrature, simulate_moments
from .model import ConfigurationError
from .netsim import simulate_coupled, simulate_network

TAGGED_CAP = 16


@dataclass(frozen=True)
class ConvergenceReport:
    ns: tuple
    mse: np.ndarray
    stderr: np.ndarray
    slope: float
    slope_stderr: float
    mode: str  # "quenched" | "annealed"
    aborted: int = 0

    def to_csv(self, path):
        with open(path, "w") as f:
            f.write("N,mse,stderr,mode\n")
            for n, m, s in zip(self.ns, self.mse, self.stderr):
                f.write(f"{n},{float(m)!r},{float(s)!r},{self.mode}\n")

    def summary_json(self, slope_range=(-1.3, -0.7)):
        ok = bool(
            np.isfinite(self.slope) and slope_range[0] <= self.slope <= slope_range[1]
        )
        return json.dumps(
            {"slope": self.slope, "slope_stderr": self.slope_stderr, "pass": ok}
        )


def fit_loglog_slope(ns, values):
    """Least-squares slope of log(values) against log(ns), with its
    standard error. Returns (nan, nan) if any value is nonpositive."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0):
        return float("nan"), float("nan")
    x = np.log(ns)
    y = np.log(values)
    n = x.size
    xm = x - x.mean()
    slope = float(np.dot(xm, y) / np.dot(xm, xm))
    if n <= 2:
        return slope, float("nan")
    resid = y - y.mean() - slope * xm
    var = float(np.dot(resid, resid) / (n - 2))
    return slope, float(np.sqrt(var / np.dot(xm, xm)))


def _single_pop(model):
    if model.n_populations != 1:
        raise ConfigurationError("rate experiments use a single population")
    return model


def _sized_model(model, n):
    pop = dataclasses.replace(model.populations[0], count=int(n))
    return dataclasses.replace(model, populations=(pop,))


def _coupled_trial(args):
    """One coupled run; returns the tagged-neuron average of the squared
    sup-distance between the network and its mean-field twin."""
    law, model, n, disorder_seed, noise_seed, cfg, mf = args
    real = _realization_cached(law, n, disorder_seed)
    trial_cfg = dataclasses.replace(cfg, seed=int(noise_seed))
    net, twin = simulate_coupled(_sized_model(model, n), real, mf, trial_cfg)
    tagged = min(TAGGED_CAP, n)
    diff = net.states[:, :tagged] - twin.states[:, :tagged]
    return float(np.max(diff**2, axis=0).mean())


_REAL_CACHE = {}


def _realization_cached(law, n, seed):
    key = (law, n, seed)
    hit = _REAL_CACHE.get(key)
    if hit is None:
        _REAL_CACHE.clear()  # keep at most one graph per worker
        hit = sample_realization(law, n, seed)
        _REAL_CACHE[key] = hit
    return hit


def _run_trials(tasks, jobs):
    if jobs <= 1:
        return [_coupled_trial(t) for t in tasks]
    ctx = get_context("fork")
    with ctx.Pool(processes=jobs) as pool:
        return pool.map(_coupled_trial, tasks)


def _convergence(law, model, ns, trials, root_seed, cfg, mode, jobs):
    model = _single_pop(model)
    ns = tuple(int(n) for n in ns)
    if any(n2 <= n1 for n1, n2 in zip(ns, ns[1:])):
        raise ConfigurationError("network sizes must be strictly increasing")
    if trials < 1:
        raise ConfigurationError("need at least one trial")

    quad = build_quadrature(law)
    mf = simulate_moments(model, quad, cfg, init=cfg.initial.moments())
    mf = dataclasses.replace(mf, law=law)

    ss = np.random.SeedSequence(root_seed)
    per_n_seeds = ss.spawn(len(ns))
    tasks = []
    for n, seq in zip(ns, per_n_seeds):
        states = seq.generate_state(2 * trials + 1)
        quenched_disorder = int(states[0])
        for t in range(trials):
            disorder_seed = (
                quenched_disorder if mode == "quenched" else int(states[1 + 2 * t])
            )
            noise_seed = int(states[2 + 2 * t])
            tasks.append((law, model, n, disorder_seed, noise_seed, cfg, mf))

    results = _run_trials(tasks, jobs)
    mse = np.empty(len(ns))
    stderr = np.empty(len(ns))
    for i in range(len(ns)):
        vals = np.asarray(results[i * trials : (i + 1) * trials])
        mse[i] = vals.mean()
        stderr[i] = vals.std(ddof=1) / np.sqrt(trials) if trials > 1 else 0.0
    slope, slope_err = fit_loglog_slope(ns, mse)
    return ConvergenceReport(
        ns=ns, mse=mse, stderr=stderr, slope=slope, slope_stderr=slope_err, mode=mode
    )


def quenched_convergence(law, model, ns, trials, root_seed, cfg, jobs=1):
    """Coupled mean-square error vs N with one frozen environment per size
    (fresh noise every trial)."""
    return _convergence(law, model, ns, trials, root_seed, cfg, "quenched", jobs)


def annealed_convergence(law, model, ns, trials, root_seed, cfg, jobs=1):
    """Coupled mean-square error vs N with the environment resampled every
    trial, so the average runs over disorder as well as noise."""
    return _convergence(law, model, ns, trials, root_seed, cfg, "annealed", jobs)


def _pairs_trial(args):
    """Per-pair pooled second-moment sums for one network run."""
    law, model, n, disorder_seed, noise_seed, cfg, n_pairs = args
    real = _realization_cached(law, n, disorder_seed)
    trial_cfg = dataclasses.replace(cfg, seed=int(noise_seed))
    traj = simulate_network(_sized_model(model, n), real, trial_cfg)
    xs = traj.states[:, : 2 * n_pairs]
    a = xs[:, 0::2]
    b = xs[:, 1::2]
    return np.stack(
        [
            a.sum(axis=0), b.sum(axis=0), (a * b).sum(axis=0),
            (a**2).sum(axis=0), (b**2).sum(axis=0),
            np.full(n_pairs, float(a.shape[0])),
        ]
    )


@dataclass(frozen=True)
class ChaosReport:
    ns: tuple
    statistic: np.ndarray  # max over tagged pairs of |pooled correlation|
    n_pairs: int
    mode: str = "pairs"

    def to_csv(self, path):
        with open(path, "w") as f:
            f.write("N,max_abs_corr,pairs\n")
            for n, s in zip(self.ns, self.statistic):
                f.write(f"{n},{float(s)!r},{self.n_pairs}\n")


def chaos_pairs(law, model, ns, trials, root_seed, cfg, n_pairs=8, jobs=1):
    """Pairwise-independence diagnostic: for disjoint tagged pairs (2k, 2k+1),
    the empirical correlation of the two paths pooled over grid times and
    trials; reports the worst pair per network size. Under propagation of
    chaos the statistic decays towards the sampling floor as N grows."""
    model = _single_pop(model)
    ns = tuple(int(n) for n in ns)
    if min(ns) < 2 * n_pairs:
        raise ConfigurationError(f"need at least {2 * n_pairs} neurons")
    ss = np.random.SeedSequence(root_seed)
    per_n_seeds = ss.spawn(len(ns))
    tasks = []
    for n, seq in zip(ns, per_n_seeds):
        states = seq.generate_state(2 * trials)
        for t in range(trials):
            tasks.append(
                (law, model, n, int(states[2 * t]), int(states[2 * t + 1]), cfg, n_pairs)
            )
    if jobs <= 1:
        results = [_pairs_trial(t) for t in tasks]
    else:
        ctx = get_context("fork")
        with ctx.Pool(processes=jobs) as pool:
            results = pool.map(_pairs_trial, tasks)

    stat = np.empty(len(ns))
    for i in range(len(ns)):
        sums = np.sum(results[i * trials : (i + 1) * trials], axis=0)
        sa, sb, sab, saa, sbb, cnt = sums
        cov = sab / cnt - (sa / cnt) * (sb / cnt)
        va = saa / cnt - (sa / cnt) ** 2
        vb = sbb / cnt - (sb / cnt) ** 2
        corr = cov / np.sqrt(va * vb)
        stat[i] = float(np.max(np.abs(corr)))
    return ChaosReport(ns=ns, statistic=stat, n_pairs=n_pairs)


def stepsize_ratio(law, model, base_cfg, disorder_seed, n, levels=3):
    """Richardson ratio of the population-mean error under dt halving, with
    all levels driven by the same Brownian path (fine increments aggregated
    pairwise onto coarser grids). The error between consecutive levels is
    taken in L2 over the common grid, which averages out the lag-rounding
    jitter; a weak-order-1 scheme gives ratios near 2.
    """
    model = _single_pop(model)
    real = sample_realization(law, n, disorder_seed)
    dts = [base_cfg.dt / 2**k for k in range(levels)]
    n_fine = int(round(base_cfg.t_end / dts[-1]))
    rng = np.random.Generator(np.random.Philox(key=[int(base_cfg.seed), 0]))
    fine = rng.standard_normal((n_fine, n))
    means = []
    for k, dt in enumerate(dts):
        group = 2 ** (levels - 1 - k)
        incr = fine.reshape(-1, group, n).sum(axis=1) / np.sqrt(group)
        cfg = dataclasses.replace(base_cfg, dt=dt)
        traj = simulate_network(_sized_model(model, n), real, cfg, increments=incr)
        means.append(traj.population_mean()[:: 2**k])  # common (coarsest) grid
    num = float(np.sqrt(np.mean((means[0] - means[1]) ** 2)))
    den = float(np.sqrt(np.mean((means[1] - means[2]) ** 2)))
    return num / den if den > 0 else float("inf")
