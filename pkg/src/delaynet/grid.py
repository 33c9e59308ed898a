"""Shared time-grid plumbing: run configuration, initial-history
specifications, delay-to-lag rounding, and the per-neuron ring buffer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ConfigurationError

# a delay must span at least this many steps
MIN_STEPS_PER_DELAY = 10


@dataclass(frozen=True)
class InitialCondition:
    """Initial history held constant on [-tau, 0].

    kind "constant": every neuron starts at `mean` (variance ignored, 0).
    kind "gaussian": i.i.d. draws from N(mean, variance) per neuron, frozen
    over the history window.
    """

    kind: str = "constant"
    mean: float = 0.0
    variance: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "gaussian"):
            raise ConfigurationError(f"unknown initial kind {self.kind!r}")
        if self.variance < 0:
            raise ConfigurationError("initial variance must be nonnegative")
        if self.kind == "constant" and self.variance != 0:
            raise ConfigurationError("constant initial condition has zero variance")

    def moments(self):
        """(u0, v0) of the initial law."""
        return self.mean, self.variance

    def sample(self, n, rng):
        if self.kind == "constant":
            return np.full(n, self.mean)
        return self.mean + np.sqrt(self.variance) * rng.standard_normal(n)


@dataclass(frozen=True)
class SimConfig:
    """Euler grid and seeding for one simulation run."""

    dt: float
    t_end: float
    seed: int = 0
    initial: InitialCondition = InitialCondition()

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if self.t_end < self.dt:
            raise ConfigurationError("t_end must be at least dt")

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))

    def check_resolves(self, tau_min):
        if self.dt > tau_min / MIN_STEPS_PER_DELAY:
            raise ConfigurationError(
                f"dt={self.dt} too coarse: delays down to {tau_min} need "
                f"dt <= {tau_min / MIN_STEPS_PER_DELAY}"
            )


def delay_to_lag(tau, dt):
    """Round delays to the nearest whole number of steps (at least 1)."""
    lag = np.rint(np.asarray(tau) / dt).astype(np.int64)
    return np.maximum(lag, 1)


class HistoryBuffer:
    """Circular per-neuron buffer of the last `window` states.

    lookup(lag) returns the state pushed `lag` steps ago for
    0 <= lag <= window - 1; before enough pushes have happened, lookups fall
    back to the initial-history value the buffer was filled with.
    """

    def __init__(self, window, initial):
        if window < 1:
            raise ConfigurationError("window must be at least 1")
        initial = np.atleast_1d(np.asarray(initial, dtype=float))
        self.window = int(window)
        self._ring = np.tile(initial, (self.window, 1))
        self._head = 0

    @property
    def head(self):
        return self._head

    def push(self, state):
        self._head = (self._head + 1) % self.window
        self._ring[self._head] = state

    def lookup(self, lag):
        if not 0 <= lag < self.window:
            raise ConfigurationError(f"lag {lag} outside window {self.window}")
        return self._ring[(self._head - lag) % self.window]

    def current(self):
        return self._ring[self._head]


def window_for(tau_max, dt):
    """Buffer window covering every delay up to tau_max."""
    return int(np.ceil(tau_max / dt)) + 1
