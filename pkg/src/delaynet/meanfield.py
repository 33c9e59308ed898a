"""Gaussian moment reduction of the mean-field limit and a fixed-point
particle solver for the limiting law.

The mean-field equation closes exactly for the firing-rate model: the law of
the limit process is Gaussian with mean u and variance v obeying

    du/dt = -u/theta + I(t) + sum_k q_k w_k E[S(N(u(t - tau_k), v(t - tau_k)))]
    dv/dt = -2 v/theta + lam^2,

where (w_k, tau_k, q_k) discretize the joint weight/delay law.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .disorder import DiscreteLaw, ProductLaw, SmallWorldExp, kernel_transform
from .grid import delay_to_lag, window_for
from .model import (
    ConfigurationError,
    FiringRateModel,
    SimulationDiverged,
    gaussian_expectation_s,
    sigmoid_s,
)

MASS_TOL = 1e-12


@dataclass(frozen=True)
class LawQuadrature:
    """Discretization of a weight/delay law as nodes (w_k, tau_k, q_k).

    The masses q_k sum to 1; the drift integral uses the products q_k * w_k,
    so a zero-weight node carries the disconnected mass without contributing.
    """

    w: np.ndarray
    tau: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        for name in ("w", "tau", "q"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.w.shape == self.tau.shape == self.q.shape):
            raise ConfigurationError("quadrature arrays must align")
        if abs(self.q.sum() - 1.0) > 1e-9:
            raise ConfigurationError(f"masses sum to {self.q.sum()}, not 1")

    @property
    def tau_min(self):
        return float(self.tau.min())

    @property
    def tau_max(self):
        return float(self.tau.max())

    def j_weighted_mass(self):
        """Total of q_k * w_k: the effective mean coupling of the law."""
        return float(np.dot(self.q, self.w))

    def lag_masses(self, dt):
        """Group nodes by rounded lag: (lags, combined q*w mass per lag)."""
        lags = delay_to_lag(self.tau, dt)
        uniq, inv = np.unique(lags, return_inverse=True)
        masses = np.zeros(uniq.size)
        np.add.at(masses, inv, self.q * self.w)
        return uniq, masses


def build_quadrature(law, n_panels=64):
    """Discretize a disorder law for the mean-field drift integral.

    Discrete laws keep their atoms verbatim; product laws take the product of
    their marginals' atoms. The distance-exponential law uses an n_panels-node
    Gauss-Legendre rule on [0, a] against exp(-beta r) times the distance
    density, with weight value j_bar at delay tau_s + r; the thinned-out mass
    sits on a zero-weight node so the masses still sum to 1.
    """
    if n_panels < 1:
        raise ConfigurationError("n_panels must be at least 1")
    if isinstance(law, DiscreteLaw):
        w = np.array([a[0] for a in law.atoms])
        tau = np.array([a[1] for a in law.atoms])
        q = np.array([a[2] for a in law.atoms])
        return LawQuadrature(w=w, tau=tau, q=q)
    if isinstance(law, ProductLaw):
        w, wp = np.asarray(law.weights), np.asarray(law.weight_probs)
        d, dp = np.asarray(law.delays), np.asarray(law.delay_probs)
        ww, dd = np.meshgrid(w, d, indexing="ij")
        qq = np.outer(wp, dp)
        return LawQuadrature(w=ww.ravel(), tau=dd.ravel(), q=qq.ravel())
    if isinstance(law, SmallWorldExp):
        x, gw = np.polynomial.legendre.leggauss(n_panels)
        r = 0.5 * law.a * (x + 1.0)
        gw = 0.5 * law.a * gw
        q = gw * np.exp(-law.beta * r) * law.distance_density(r)
        w = np.full(n_panels, law.j_bar)
        tau = law.tau_s + r
        rest = 1.0 - q.sum()
        if abs(rest) > MASS_TOL:
            w = np.append(w, 0.0)
            tau = np.append(tau, law.tau_s)
            q = np.append(q, rest)
        return LawQuadrature(w=w, tau=tau, q=q)
    raise ConfigurationError(f"unknown disorder law {type(law).__name__}")


@dataclass(frozen=True)
class MomentTrajectory:
    """Mean/variance series of the Gaussian limit law on a uniform grid
    covering [-tau_max, t_end]. Index `n_history` is t = 0.
    """

    times: np.ndarray
    u: np.ndarray  # shape (P, len(times))
    v: np.ndarray
    n_history: int
    dt: float
    model: FiringRateModel = None
    law: object = None

    def __post_init__(self):
        for name in ("times", "u", "v"):
            getattr(self, name).setflags(write=False)

    @property
    def n_populations(self):
        return self.u.shape[0]

    def at_time_zero(self):
        return self.u[:, self.n_history], self.v[:, self.n_history]


def _as_quad_matrix(quad, n_pops):
    if isinstance(quad, LawQuadrature):
        if n_pops != 1:
            raise ConfigurationError("need a PxP grid of quadratures for P > 1")
        return [[quad]]
    quad = [list(row) for row in quad]
    if len(quad) != n_pops or any(len(row) != n_pops for row in quad):
        raise ConfigurationError(f"quadrature grid must be {n_pops}x{n_pops}")
    return quad


def simulate_moments(model, quad, cfg, init):
    """Integrate the moment system by explicit Euler on the cfg grid.

    quad: a LawQuadrature for one population, or a PxP nested sequence whose
    (alpha, gamma) entry discretizes the law of weights/delays from population
    gamma into alpha (node weights already carry the coupling values).
    init: (u0, v0) scalars or length-P arrays, held constant on the history
    window [-tau_max, 0].
    """
    n_pops = model.n_populations
    quads = _as_quad_matrix(quad, n_pops)
    tau_min = min(q.tau_min for row in quads for q in row)
    tau_max = max(q.tau_max for row in quads for q in row)
    cfg.check_resolves(tau_min)
    dt = cfg.dt
    n_steps = cfg.n_steps
    n_hist = int(np.rint(np.ceil(tau_max / dt - 1e-12)))

    u0, v0 = init
    u0 = np.broadcast_to(np.asarray(u0, dtype=float), (n_pops,)).copy()
    v0 = np.broadcast_to(np.asarray(v0, dtype=float), (n_pops,)).copy()
    if np.any(v0 < 0):
        raise ConfigurationError("initial variance must be nonnegative")

    total = n_hist + n_steps + 1
    u = np.empty((n_pops, total))
    v = np.empty((n_pops, total))
    u[:, : n_hist + 1] = u0[:, None]
    v[:, : n_hist + 1] = v0[:, None]

    # per (alpha, gamma): lags and combined q*w masses, grouped by rounded lag
    lag_tables = [
        [quads[a][g].lag_masses(dt) for g in range(n_pops)] for a in range(n_pops)
    ]
    thetas = np.array([p.theta for p in model.populations])
    lams = np.array([p.lam for p in model.populations])
    inputs = [p.input for p in model.populations]

    for k in range(n_steps):
        idx = n_hist + k
        t = k * dt
        for a in range(n_pops):
            drive = 0.0
            for g in range(n_pops):
                lags, masses = lag_tables[a][g]
                src = idx - lags
                src = np.maximum(src, 0)  # constant history before t = -tau
                drive += np.dot(
                    masses, gaussian_expectation_s(u[g, src], v[g, src])
                )
            u[a, idx + 1] = u[a, idx] + dt * (
                -u[a, idx] / thetas[a] + inputs[a](t) + drive
            )
            v[a, idx + 1] = v[a, idx] + dt * (-2.0 * v[a, idx] / thetas[a] + lams[a] ** 2)
        if not np.all(np.isfinite(u[:, idx + 1])):
            raise SimulationDiverged(f"moment mean diverged at step {k}", step=k)

    times = (np.arange(total) - n_hist) * dt
    return MomentTrajectory(
        times=times, u=u, v=v, n_history=n_hist, dt=dt, model=model, law=None
    )


def stationary_point(model):
    """Stationary moments (0, lam^2 theta / 2) per population; only valid
    with zero external input."""
    for pop in model.populations:
        if not pop.input.is_zero:
            raise ConfigurationError(
                "closed-form stationary point requires zero external input"
            )
    return [(0.0, pop.stationary_variance) for pop in model.populations]


def interaction_drive(traj, quad, dt, n_steps):
    """Mean-field drive G(t_k) = sum_k q w E[S] at the lag-rounded times,
    for k = 0..n_steps-1, read off a moment trajectory on the same grid."""
    if abs(traj.dt - dt) > 1e-15:
        raise ConfigurationError("moment trajectory grid does not match dt")
    if traj.n_populations != 1:
        raise ConfigurationError("drive evaluation implemented for one population")
    lags, masses = quad.lag_masses(dt)
    if np.any(lags > traj.n_history):
        raise ConfigurationError("moment trajectory history shorter than max delay")
    if traj.times.size - traj.n_history - 1 < n_steps:
        raise ConfigurationError("moment trajectory does not cover the horizon")
    ks = np.arange(n_steps)
    drive = np.zeros(n_steps)
    for lag, mass in zip(lags, masses):
        src = traj.n_history + ks - lag
        drive += mass * gaussian_expectation_s(traj.u[0, src], traj.v[0, src])
    return drive


@dataclass(frozen=True)
class PicardResult:
    times: np.ndarray
    u: np.ndarray  # empirical mean over sample paths
    v: np.ndarray  # empirical variance over sample paths
    n_history: int
    distances: np.ndarray  # d_k = max_t mean-square gap between iterates
    iterations: int


def picard_meanfield(model, law, m, iters, cfg, interaction=sigmoid_s, n_panels=64):
    """Solve the limiting law by fixed-point iteration on sample paths.

    Maintains m paths with frozen Brownian increments and initial conditions;
    each sweep re-integrates every path against the empirical law of the
    previous sweep (the lagged interaction term averages `interaction` over
    the previous paths). Returns the final empirical moments and the sequence
    of successive mean-square distances, which contract geometrically on
    short horizons.
    """
    if m < 100:
        raise ConfigurationError("need at least 100 sample paths")
    if iters < 2:
        raise ConfigurationError("need at least 2 sweeps")
    if model.n_populations != 1:
        raise ConfigurationError("fixed-point solver implemented for one population")
    quad = build_quadrature(law, n_panels=n_panels)
    cfg.check_resolves(quad.tau_min)
    dt = cfg.dt
    n_steps = cfg.n_steps
    pop = model.populations[0]
    theta, lam, inp = pop.theta, pop.lam, pop.input

    lags, masses = quad.lag_masses(dt)
    window = window_for(quad.tau_max, dt)
    if np.any(lags >= window):
        raise ConfigurationError("delay exceeds history window")

    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    x0 = cfg.initial.sample(m, rng)
    noise = rng.standard_normal((n_steps, m))
    sq = lam * np.sqrt(dt)

    n_hist = window - 1
    ks = np.arange(n_steps)

    def sweep(prev):
        """One application of the path map against the previous iterate.
        prev is (n_hist + n_steps + 1, m) with row n_hist at t = 0, or None
        for the zero-interaction start."""
        out = np.empty((n_hist + n_steps + 1, m))
        out[: n_hist + 1] = x0
        g = np.zeros(n_steps)
        if prev is not None:
            sbar = interaction(prev).mean(axis=1)  # empirical E[S] per grid row
            for lag, mass in zip(lags, masses):
                g += mass * sbar[n_hist + ks - lag]
        for k in range(n_steps):
            idx = n_hist + k
            x = out[idx]
            out[idx + 1] = x + dt * (-x / theta + inp(k * dt) + g[k]) + sq * noise[k]
        return out

    paths = sweep(None)
    distances = []
    rising = 0
    for _ in range(iters):
        new = sweep(paths)
        d = float(np.max(np.mean((new - paths) ** 2, axis=1)))
        if distances and d > distances[-1]:
            rising += 1
            if rising >= 3:
                raise SimulationDiverged(
                    f"fixed-point iteration diverging: distances {distances + [d]}"
                )
        else:
            rising = 0
        distances.append(d)
        paths = new
        if d == 0.0:
            break

    times = (np.arange(paths.shape[0]) - n_hist) * dt
    return PicardResult(
        times=times,
        u=paths.mean(axis=1),
        v=paths.var(axis=1, ddof=1),
        n_history=n_hist,
        distances=np.asarray(distances),
        iterations=len(distances),
    )


def moments_to_csv(traj, path):
    """CSV export `t,u_1..u_P,v_1..v_P` with round-trip float formatting."""
    p = traj.n_populations
    header = "t," + ",".join(f"u_{i+1}" for i in range(p)) + "," + ",".join(
        f"v_{i+1}" for i in range(p)
    )
    with open(path, "w") as f:
        f.write(header + "\n")
        for k, t in enumerate(traj.times):
            row = [repr(float(t))]
            row += [repr(float(traj.u[i, k])) for i in range(p)]
            row += [repr(float(traj.v[i, k])) for i in range(p)]
            f.write(",".join(row) + "\n")
