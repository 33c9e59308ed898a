"""Linear stability of the single-population stationary state.

The fixed point's characteristic exponents solve

    R(xi) = xi + 1/theta - g0 * exp(-xi tau_s) * K_a(beta + xi) = 0,

with g0 = j_bar / sqrt(2 pi (1 + v*)) the linearized sigmoid gain at the
stationary variance and K_a the distance-density transform. Purely imaginary
roots xi = i*omega mark oscillation onset; the tracers below sweep those loci
in the (a, tau_s) and (beta, tau_s) planes.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .disorder import kernel_transform, kernel_transform_dc
from .grid import InitialCondition, SimConfig
from .meanfield import build_quadrature, simulate_moments
from .model import ConfigurationError, single_population_model

ROOT_TOL = 1e-6  # Re(xi) above this counts as unstable
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class DispersionParams:
    """Parameters of the single-population stability problem."""

    theta: float
    j_bar: float
    lam: float
    a: float
    beta: float
    tau_s: float

    def __post_init__(self):
        if not self.theta > 0:
            raise ConfigurationError("theta must be positive")
        if not self.a > 0:
            raise ConfigurationError("field length a must be positive")
        if self.tau_s < 0:  # zero is allowed: instantaneous synapses
            raise ConfigurationError("tau_s must be nonnegative")
        if self.beta < 0:
            raise ConfigurationError("beta must be nonnegative")
        if self.lam < 0:
            raise ConfigurationError("lam must be nonnegative")

    @property
    def v_star(self):
        return 0.5 * self.lam**2 * self.theta

    @property
    def gain(self):
        """Linearized feedback gain g0 = j_bar / sqrt(2 pi (1 + v*))."""
        return self.j_bar / np.sqrt(2.0 * np.pi * (1.0 + self.v_star))

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)


@dataclass(frozen=True)
class HopfPoint:
    """One point of a traced oscillation-onset curve."""

    a: float
    beta: float
    tau_s: float
    omega: float
    k: int


@dataclass(frozen=True)
class HopfCurve:
    points: tuple
    subcritical: bool = False  # gain below loss at every frequency
    skipped: int = 0  # grid nodes dropped for non-convergence

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


def z_function(omega_cap, b_cap, params):
    """Rescaled feedback transfer Z(Omega, B) = g0 * K(B + i*Omega) on the
    unit-length field (Omega = a*omega, B = a*beta)."""
    c = np.asarray(b_cap, dtype=complex) + 1j * np.asarray(omega_cap)
    return params.gain * kernel_transform(c, 1.0)


def dispersion_residual(xi, params):
    """R(xi); its zeros are the characteristic exponents."""
    xi = np.asarray(xi, dtype=complex) if np.ndim(xi) else complex(xi)
    return (
        xi
        + 1.0 / params.theta
        - params.gain * np.exp(-xi * params.tau_s) * kernel_transform(params.beta + xi, params.a)
    )


def dispersion_residual_derivative(xi, params):
    """dR/dxi, used by the Newton polish of the root search."""
    xi = np.asarray(xi, dtype=complex) if np.ndim(xi) else complex(xi)
    e = np.exp(-xi * params.tau_s)
    c = params.beta + xi
    return 1.0 + params.gain * e * (
        params.tau_s * kernel_transform(c, params.a) - kernel_transform_dc(c, params.a)
    )


def residual_at_point(point, params):
    """|R(i*omega)| evaluated with the point's own (a, beta, tau_s)."""
    local = params.replace(a=point.a, beta=point.beta, tau_s=point.tau_s)
    return abs(dispersion_residual(1j * point.omega, local))


def _delay_from_phase(zval, omega, theta):
    """Smallest positive tau_s with i*omega + 1/theta = Z * exp(-i omega tau_s),
    and the winding index used."""
    phi = np.angle(zval) - np.angle(1.0 / theta + 1j * omega)
    k = 0 if phi > 0 else 1
    return (phi + 2.0 * np.pi * k) / omega, k


def _omega_cap_bound(params):
    """Upper bound on |B + i*Omega| compatible with |Z| >= 1/theta."""
    s = abs(params.gain) * params.theta
    return s * (1.0 + np.sqrt(1.0 + 4.0 / s)) + 1.0 if s > 0 else 1.0


def hopf_curve_fixed_beta(beta, params, omega_grid=None, extra_branches=0):
    """Trace oscillation onset in the (a, tau_s) plane at fixed decay beta.

    Sweeps the rescaled frequency Omega: at each node, B = beta * a is solved
    self-consistently with a^2 = Omega^2 / (|Z|^2 - 1/theta^2), then the
    delay follows from the phase condition. Nodes where the gain cannot match
    the loss are skipped; an entirely empty sweep is flagged subcritical.
    With extra_branches > 0, higher winding numbers are emitted as well.
    """
    if beta < 0:
        raise ConfigurationError("beta must be nonnegative")
    if omega_grid is None:
        omega_grid = np.linspace(1e-4, _omega_cap_bound(params), 600)
    else:
        omega_grid = np.asarray(omega_grid, dtype=float)
        if np.any(omega_grid <= 0) or np.any(np.diff(omega_grid) <= 0):
            raise ConfigurationError("omega grid must be positive and increasing")

    inv_theta2 = 1.0 / params.theta**2
    points = []
    skipped = 0
    any_supercritical = False
    for omega_cap in omega_grid:
        b = 0.0
        converged = False
        a = None
        for _ in range(200):
            margin = abs(z_function(omega_cap, b, params)) ** 2 - inv_theta2
            if margin <= 0:
                a = None
                break
            a = omega_cap / np.sqrt(margin)
            b_new = beta * a
            if abs(b_new - b) < 1e-10:
                converged = True
                b = b_new
                break
            b = b_new
        if a is None:
            continue
        any_supercritical = True
        if not converged:
            skipped += 1
            continue
        zval = z_function(omega_cap, b, params)
        omega = omega_cap / a
        tau0, k0 = _delay_from_phase(zval, omega, params.theta)
        for extra in range(extra_branches + 1):
            tau_s = tau0 + 2.0 * np.pi * extra / omega
            points.append(
                HopfPoint(a=float(a), beta=float(beta), tau_s=float(tau_s),
                          omega=float(omega), k=k0 + extra)
            )
    points.sort(key=lambda p: (p.k, p.a))
    return HopfCurve(
        points=tuple(points), subcritical=not any_supercritical, skipped=skipped
    )


def hopf_curve_fixed_a(a, params, beta_grid, extra_branches=0, n_scan=400):
    """Trace oscillation onset in the (beta, tau_s) plane at fixed length a.

    For each beta, brackets every root of omega^2 + 1/theta^2 - |Z|^2 on
    (0, omega_max] by sign scanning plus bisection; each root yields a point
    through the phase condition. Betas without any root are omitted.
    """
    if not a > 0:
        raise ConfigurationError("field length a must be positive")
    gain2 = params.gain**2
    inv_theta2 = 1.0 / params.theta**2
    points = []
    if gain2 <= inv_theta2:
        return HopfCurve(points=(), subcritical=True)
    omega_max = np.sqrt(gain2 - inv_theta2)
    for beta in np.asarray(beta_grid, dtype=float):
        if beta < 0:
            raise ConfigurationError("beta must be nonnegative")

        def f(omega):
            return omega**2 + inv_theta2 - abs(z_function(a * omega, a * beta, params)) ** 2

        grid = np.linspace(omega_max * 1e-6, omega_max * (1.0 + 1e-9), n_scan)
        vals = np.array([f(w) for w in grid])
        for lo, hi, flo, fhi in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
            if flo == 0.0:
                root = lo
            elif flo * fhi < 0:
                root = brentq(f, lo, hi, xtol=1e-14, rtol=1e-15)
            else:
                continue
            zval = z_function(a * root, a * beta, params)
            tau0, k0 = _delay_from_phase(zval, root, params.theta)
            for extra in range(extra_branches + 1):
                tau_s = tau0 + 2.0 * np.pi * extra / root
                points.append(
                    HopfPoint(a=float(a), beta=float(beta), tau_s=float(tau_s),
                              omega=float(root), k=k0 + extra)
                )
    points.sort(key=lambda p: (p.k, p.beta, p.omega))
    return HopfCurve(points=tuple(points), subcritical=False)


@dataclass(frozen=True)
class RegimeReport:
    oscillatory_roots: bool  # method A: a characteristic root crosses zero
    oscillatory_sim: bool  # method B: moment integration + spectral test
    agree: bool
    rightmost: complex  # rightmost characteristic root found
    root_search_failed: bool = False

    @property
    def regime(self):
        return "oscillatory" if self.oscillatory_roots else "stationary"


def rightmost_root(params, re_seeds=9, im_seeds=33, max_iter=80):
    """Newton search for the rightmost characteristic exponent.

    Seeds tile Re in [-3/theta, 2] and Im in [0, im_max], where im_max is the
    numerical bound |Im xi| <= |g0| e^{Re tau_s} K(beta + Re) valid for any
    root in the strip; conjugate roots make Im >= 0 sufficient.
    Returns (root, converged_any).
    """
    theta, tau_s = params.theta, params.tau_s
    re_lo = -3.0 / theta
    bound = abs(params.gain) * np.exp(-re_lo * tau_s) * abs(
        kernel_transform(params.beta + re_lo, params.a)
    )
    im_hi = float(bound) + 1.0
    if tau_s > 0:
        im_hi = max(im_hi, 4.0 * np.pi / tau_s)
    re0, im0 = np.meshgrid(
        np.linspace(re_lo, 2.0, re_seeds), np.linspace(0.0, im_hi, im_seeds)
    )
    xi = (re0 + 1j * im0).ravel()
    active = np.ones(xi.size, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in range(max_iter):
            r = dispersion_residual(xi[active], params)
            dr = dispersion_residual_derivative(xi[active], params)
            step = np.where(dr != 0, r / dr, 0.0)
            step = np.where(np.isfinite(step), step, 0.0)
            xi[active] -= step
            still = (np.abs(step) > 1e-13 * (1.0 + np.abs(xi[active]))) & np.isfinite(
                xi[active]
            )
            idx = np.flatnonzero(active)
            active[idx[~still]] = False
            if not active.any():
                break
        res = np.abs(dispersion_residual(xi, params))
    good = np.isfinite(xi) & (res < 1e-9 * (1.0 + np.abs(xi)))
    if not good.any():
        return None, False
    roots = xi[good]
    roots = roots[roots.real >= re_lo - 0.5]
    if roots.size == 0:
        return None, False
    best = roots[np.argmax(roots.real)]
    return (np.conj(best) if best.imag < 0 else best), True  # canonical pair rep


def default_moment_probe(params, u0=0.5):
    """Configuration for the simulation-based classification: start at the
    stationary variance with the mean kicked off zero.

    The horizon must outlast the slowest transients near onset (decay rates
    down to ~1e-2 in units of 1/time occur well inside the stationary
    region), so it is generously long; the moment system is cheap."""
    dt = params.tau_s / 20.0
    t_end = max(1600.0, 40.0 * params.theta, 20.0 * (params.tau_s + params.a))
    t_end = np.ceil(t_end / dt) * dt
    cfg = SimConfig(dt=dt, t_end=float(t_end),
                    initial=InitialCondition("constant", 0.0))
    return cfg, (u0, params.v_star)


def classify_regime(params, n_panels=64, root_tol=ROOT_TOL, probe=None):
    """Stationary-or-oscillatory verdict by two independent routes: the sign
    of the rightmost characteristic root, and oscillation detection on the
    integrated moment system. Reports both and whether they agree."""
    from .netsim import detect_oscillation  # local import to avoid a cycle

    root, ok = rightmost_root(params)
    by_roots = bool(ok and root is not None and root.real > root_tol)

    if probe is None:
        cfg, init = default_moment_probe(params)
    else:
        cfg, init = probe
    law = _law_of(params)
    model = single_population_model(params.theta, params.lam, params.j_bar)
    traj = simulate_moments(model, build_quadrature(law, n_panels), cfg, init)
    mean_series = traj.u[0, traj.n_history :]
    by_sim = detect_oscillation(mean_series, cfg.dt).oscillatory

    if not ok:
        return RegimeReport(
            oscillatory_roots=by_sim, oscillatory_sim=by_sim, agree=True,
            rightmost=complex(np.nan), root_search_failed=True,
        )
    return RegimeReport(
        oscillatory_roots=by_roots, oscillatory_sim=by_sim,
        agree=by_roots == by_sim, rightmost=complex(root),
    )


def _law_of(params):
    from .disorder import SmallWorldExp

    return SmallWorldExp(
        a=params.a, beta=params.beta, tau_s=params.tau_s, j_bar=params.j_bar
    )


def curve_to_csv(curve, path):
    """CSV export `a,beta,tau_s,omega,k`."""
    with open(path, "w") as f:
        f.write("a,beta,tau_s,omega,k\n")
        for p in curve:
            f.write(f"{p.a!r},{p.beta!r},{p.tau_s!r},{p.omega!r},{p.k}\n")
