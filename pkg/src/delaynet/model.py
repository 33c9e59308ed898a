"""Firing-rate model primitives: the erf sigmoid, its Gaussian expectation,
and parameter containers shared by the simulators and the stability analysis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

_SQRT2 = np.sqrt(2.0)
FRACTION_TOL = 1e-12


class ConfigurationError(ValueError):
    """Invalid parameters or inconsistent run configuration."""


class SimulationDiverged(RuntimeError):
    """Numerical blow-up; carries the first offending step index."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


def sigmoid_s(x):
    """Gaussian-integral sigmoid: the integral of the standard normal density
    from 0 to x. Odd, increasing, with range (-1/2, 1/2).

    Evaluated through the error function, S(x) = erf(x / sqrt(2)) / 2.
    Accepts scalars or arrays.
    """
    return 0.5 * erf(x / _SQRT2)


def gaussian_expectation_s(u, v):
    """Exact expectation of sigmoid_s under a Gaussian N(u, v).

    Collapses to S(u / sqrt(1 + v)); v must be nonnegative.
    """
    if np.any(np.asarray(v) < 0):
        raise ValueError("variance must be nonnegative")
    return sigmoid_s(u / np.sqrt(1.0 + v))


@dataclass(frozen=True)
class PiecewiseConstantInput:
    """External input as a right-continuous step function of time.

    ``breakpoints`` are increasing times; ``values[k]`` applies on
    [breakpoints[k], breakpoints[k+1]). Before the first breakpoint the
    input is 0. An empty spec is identically 0.
    """

    breakpoints: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        if len(bp) != len(vals):
            raise ConfigurationError("breakpoints and values must have equal length")
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise ConfigurationError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    def __call__(self, t):
        idx = np.searchsorted(self.breakpoints, t, side="right")
        if np.ndim(t):
            out = np.zeros_like(np.asarray(t, dtype=float))
            mask = idx > 0
            out[mask] = np.asarray(self.values)[idx[mask] - 1]
            return out
        return self.values[idx - 1] if idx > 0 else 0.0

    @property
    def is_zero(self):
        return all(v == 0.0 for v in self.values)


ZERO_INPUT = PiecewiseConstantInput()


@dataclass(frozen=True)
class PopulationParams:
    """Intrinsic parameters of one neuronal population.

    theta: relaxation time constant (> 0).
    lam: additive noise intensity (>= 0).
    input: external drive as a piecewise-constant function of time.
    count: number of neurons in a finite-size realization (>= 1).
    fraction: asymptotic population fraction, in (0, 1].
    """

    theta: float
    lam: float
    input: PiecewiseConstantInput = ZERO_INPUT
    count: int = 1
    fraction: float = 1.0

    def __post_init__(self):
        if not self.theta > 0:
            raise ConfigurationError("theta must be positive")
        if self.lam < 0:
            raise ConfigurationError("lam must be nonnegative")
        if self.count < 1:
            raise ConfigurationError("count must be at least 1")
        if not 0 < self.fraction <= 1:
            raise ConfigurationError("fraction must lie in (0, 1]")

    @property
    def stationary_variance(self):
        """Long-run variance of an isolated neuron, lam^2 * theta / 2."""
        return 0.5 * self.lam**2 * self.theta


@dataclass(frozen=True)
class FiringRateModel:
    """A multi-population firing-rate network: per-population intrinsic
    parameters plus the matrix of mean synaptic weights between populations.
    """

    populations: tuple
    coupling: np.ndarray = field(default=None)

    def __post_init__(self):
        pops = tuple(self.populations)
        object.__setattr__(self, "populations", pops)
        p = len(pops)
        if p == 0:
            raise ConfigurationError("at least one population required")
        coupling = self.coupling
        if coupling is None:
            coupling = np.zeros((p, p))
        coupling = np.atleast_2d(np.asarray(coupling, dtype=float))
        if coupling.shape != (p, p):
            raise ConfigurationError(f"coupling must be {p}x{p}, got {coupling.shape}")
        coupling.setflags(write=False)
        object.__setattr__(self, "coupling", coupling)
        total = sum(pop.fraction for pop in pops)
        if abs(total - 1.0) > FRACTION_TOL:
            raise ConfigurationError(f"population fractions sum to {total}, not 1")

    @property
    def n_populations(self):
        return len(self.populations)

    @property
    def total_count(self):
        return sum(pop.count for pop in self.populations)

    def population_index(self):
        """Per-neuron population labels, concatenated in population order."""
        return np.repeat(
            np.arange(self.n_populations), [p.count for p in self.populations]
        )


def single_population_model(theta, lam, j_bar, count=1, input=ZERO_INPUT):
    """Convenience constructor for the single-population network used
    throughout the bifurcation and convergence experiments.
    """
    pop = PopulationParams(theta=theta, lam=lam, input=input, count=count, fraction=1.0)
    return FiringRateModel(populations=(pop,), coupling=np.array([[float(j_bar)]]))
