"""Quenched random environments: neuron positions, Bernoulli connectivity with
exponential distance decay, weight/delay laws, and the Laplace-type transform
of the inter-neuron distance density.

A realization freezes one sample of (positions, weights w_ij, delays tau_ij)
drawn once at construction; the simulators treat it as immutable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ConfigurationError

PROB_TOL = 1e-12

# |a*c| at or below this, the closed form of the kernel loses too many digits
# to cancellation (relative error ~ 2*eps/|ac|^2); use the power series.
_KERNEL_SERIES_RADIUS = 0.5
_KERNEL_SERIES_MAX_TERMS = 40


@dataclass(frozen=True)
class SmallWorldExp:
    """Distance-correlated disorder on [0, a]: positions uniform, directed
    edges Bernoulli(exp(-beta * distance)), weight j_bar on every edge, and
    delay tau_s + distance.
    """

    a: float
    beta: float
    tau_s: float
    j_bar: float

    def __post_init__(self):
        if not self.a > 0:
            raise ConfigurationError("field length a must be positive")
        if self.beta < 0:
            raise ConfigurationError("decay beta must be nonnegative")
        if not self.tau_s > 0:
            raise ConfigurationError("synaptic delay tau_s must be positive")

    @property
    def tau_min(self):
        return self.tau_s

    @property
    def tau_max(self):
        return self.tau_s + self.a

    def distance_density(self, r):
        """Density of the distance between two uniform points on [0, a]."""
        r = np.asarray(r, dtype=float)
        return np.where((r >= 0) & (r <= self.a), 2.0 / self.a - 2.0 * r / self.a**2, 0.0)


@dataclass(frozen=True)
class DiscreteLaw:
    """Weight/delay pairs on finitely many atoms (w_k, tau_k, p_k)."""

    atoms: tuple  # of (weight, delay, probability)

    def __post_init__(self):
        atoms = tuple((float(w), float(t), float(p)) for w, t, p in self.atoms)
        if not atoms:
            raise ConfigurationError("at least one atom required")
        if any(t <= 0 for _, t, _ in atoms):
            raise ConfigurationError("all delays must be strictly positive")
        if any(p < 0 for _, _, p in atoms):
            raise ConfigurationError("atom probabilities must be nonnegative")
        total = sum(p for _, _, p in atoms)
        if abs(total - 1.0) > PROB_TOL:
            raise ConfigurationError(f"atom probabilities sum to {total}, not 1")
        object.__setattr__(self, "atoms", atoms)

    @property
    def tau_min(self):
        return min(t for _, t, _ in self.atoms)

    @property
    def tau_max(self):
        return max(t for _, t, _ in self.atoms)


@dataclass(frozen=True)
class ProductLaw:
    """Independent weight and delay marginals, each a discrete distribution."""

    weights: tuple
    weight_probs: tuple
    delays: tuple
    delay_probs: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        wp = tuple(float(x) for x in self.weight_probs)
        d = tuple(float(x) for x in self.delays)
        dp = tuple(float(x) for x in self.delay_probs)
        if len(w) != len(wp) or len(d) != len(dp):
            raise ConfigurationError("values and probabilities must align")
        if any(t <= 0 for t in d):
            raise ConfigurationError("all delays must be strictly positive")
        for probs, name in ((wp, "weight"), (dp, "delay")):
            if any(p < 0 for p in probs):
                raise ConfigurationError(f"{name} probabilities must be nonnegative")
            if abs(sum(probs) - 1.0) > PROB_TOL:
                raise ConfigurationError(f"{name} probabilities must sum to 1")
        for attr, val in (("weights", w), ("weight_probs", wp), ("delays", d), ("delay_probs", dp)):
            object.__setattr__(self, attr, val)

    @property
    def tau_min(self):
        return min(self.delays)

    @property
    def tau_max(self):
        return max(self.delays)


DisorderLaw = (SmallWorldExp, DiscreteLaw, ProductLaw)


@dataclass(frozen=True)
class DisorderRealization:
    """One frozen environment sample in compressed sparse row layout keyed by
    the postsynaptic neuron: edges into neuron i live at
    cols/weights/delays[indptr[i]:indptr[i+1]].
    """

    n: int
    positions: np.ndarray  # empty for non-spatial laws
    indptr: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    delays: np.ndarray
    tau_max: float
    seed: int
    a: float = 0.0  # spatial extent, 0 if non-spatial

    def __post_init__(self):
        for name in ("positions", "indptr", "cols", "weights", "delays"):
            getattr(self, name).setflags(write=False)

    @property
    def n_edges(self):
        return int(self.cols.size)

    def edges_of(self, i):
        """(sources, weights, delays) of the edges into neuron i."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.cols[lo:hi], self.weights[lo:hi], self.delays[lo:hi]


def sample_positions(n, a, rng):
    """n independent uniform positions on [0, a]."""
    if n < 1:
        raise ConfigurationError("need at least one neuron")
    if not a > 0:
        raise ConfigurationError("field length a must be positive")
    return rng.uniform(0.0, a, size=n)


def _cumulative(probs):
    c = np.cumsum(np.asarray(probs, dtype=float))
    c[-1] = 1.0  # guard searchsorted against rounding
    return c


def sample_realization(law, n, seed):
    """Draw one quenched environment of size n from the given law.

    The draw order is fixed: positions first (spatial laws), then the edge
    variables row by row (postsynaptic neuron i = 0..n-1), each row scanning
    presynaptic candidates j != i in increasing j, all from a single PCG64
    stream seeded with `seed`. Identical (law, n, seed) therefore reproduce
    the realization bit for bit. Self-edges are never drawn.
    """
    if n < 1:
        raise ConfigurationError("need at least one neuron")
    rng = np.random.Generator(np.random.PCG64(seed))

    rows_cols, rows_w, rows_tau = [], [], []
    counts = np.zeros(n + 1, dtype=np.int64)

    if isinstance(law, SmallWorldExp):
        positions = sample_positions(n, law.a, rng)
        a = law.a
        for i in range(n):
            others = np.concatenate((np.arange(i), np.arange(i + 1, n)))
            dist = np.abs(positions[others] - positions[i])
            u = rng.random(n - 1)
            keep = u < np.exp(-law.beta * dist)
            if law.j_bar == 0.0:
                keep &= False  # zero weights are never stored as edges
            cols = others[keep]
            rows_cols.append(cols.astype(np.int64))
            rows_w.append(np.full(cols.size, law.j_bar))
            rows_tau.append(law.tau_s + dist[keep])
            counts[i + 1] = cols.size
    elif isinstance(law, (DiscreteLaw, ProductLaw)):
        positions = np.empty(0)
        a = 0.0
        if isinstance(law, DiscreteLaw):
            aw = np.array([w for w, _, _ in law.atoms])
            at = np.array([t for _, t, _ in law.atoms])
            cum = _cumulative([p for _, _, p in law.atoms])
        else:
            cum_w = _cumulative(law.weight_probs)
            cum_t = _cumulative(law.delay_probs)
            vals_w = np.asarray(law.weights)
            vals_t = np.asarray(law.delays)
        for i in range(n):
            others = np.concatenate((np.arange(i), np.arange(i + 1, n)))
            if isinstance(law, DiscreteLaw):
                idx = np.searchsorted(cum, rng.random(n - 1), side="right")
                w = aw[idx]
                tau = at[idx]
            else:
                w = vals_w[np.searchsorted(cum_w, rng.random(n - 1), side="right")]
                tau = vals_t[np.searchsorted(cum_t, rng.random(n - 1), side="right")]
            keep = w != 0.0
            rows_cols.append(others[keep])
            rows_w.append(w[keep])
            rows_tau.append(tau[keep])
            counts[i + 1] = int(keep.sum())
    else:
        raise ConfigurationError(f"unknown disorder law {type(law).__name__}")

    indptr = np.cumsum(counts)
    cols = np.concatenate(rows_cols) if rows_cols else np.empty(0, dtype=np.int64)
    weights = np.concatenate(rows_w) if rows_w else np.empty(0)
    delays = np.concatenate(rows_tau) if rows_tau else np.empty(0)
    tau_max = float(delays.max()) if delays.size else float(law.tau_max)
    return DisorderRealization(
        n=n,
        positions=positions,
        indptr=indptr,
        cols=cols,
        weights=weights,
        delays=delays,
        tau_max=tau_max,
        seed=int(seed),
        a=a,
    )


def kernel_transform(c, a):
    """Laplace-type transform of the distance density on [0, a]:

    K(c) = integral_0^a exp(-c r) (2/a - 2r/a^2) dr = 2 (z - 1 + e^-z) / z^2

    with z = a*c, valid for any complex c. Near z = 0 the closed form cancels
    catastrophically, so |z| <= 0.5 switches to the power series
    1 - z/3 + z^2/12 - z^3/60 + ... summed to machine precision. K(0) = 1.
    """
    if not a > 0:
        raise ValueError("field length a must be positive")
    z = np.asarray(c, dtype=complex) * a
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    small = np.abs(z) <= _KERNEL_SERIES_RADIUS
    if np.any(small):
        zs = z[small]
        term = np.ones_like(zs)
        total = term.copy()
        for k in range(_KERNEL_SERIES_MAX_TERMS):
            term = term * (-zs) / (k + 3.0)
            total += term
            if np.all(np.abs(term) <= np.finfo(float).eps * np.abs(total)):
                break
        out[small] = total
    if np.any(~small):
        zb = z[~small]
        out[~small] = 2.0 * (zb - 1.0 + np.exp(-zb)) / zb**2
    return out[0] if scalar else out


def kernel_transform_dc(c, a):
    """Derivative of kernel_transform with respect to c (at fixed a):

    dK/dc = -integral_0^a r exp(-c r) (2/a - 2r/a^2) dr
          = a * 2 (2 - z - (z + 2) e^-z) / z^3,  z = a*c,

    with the matching series branch -1/3 + z/6 - z^2/20 + ... for small |z|.
    """
    if not a > 0:
        raise ValueError("field length a must be positive")
    z = np.asarray(c, dtype=complex) * a
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    small = np.abs(z) <= _KERNEL_SERIES_RADIUS
    if np.any(small):
        zs = z[small]
        # term_k = d/dz of the kernel series term: 2 (-1)^k k z^{k-1} / (k!(k+1)(k+2))
        term = np.full_like(zs, -1.0 / 3.0)  # k = 1
        total = term.copy()
        k = 1.0
        for _ in range(_KERNEL_SERIES_MAX_TERMS):
            term = term * (-zs) * (k + 1.0) / (k * (k + 3.0))
            total += term
            k += 1.0
            if np.all(np.abs(term) <= np.finfo(float).eps * np.abs(total)):
                break
        out[small] = total
    if np.any(~small):
        zb = z[~small]
        out[~small] = 2.0 * (2.0 - zb - (zb + 2.0) * np.exp(-zb)) / zb**3
    out = a * out
    return out[0] if scalar else out


def save_edges_csv(real, path):
    """Write a realization as a CSV edge list with a `# n= a= seed=` header.

    Floats use shortest round-trip decimals, so load_edges_csv restores the
    realization exactly.
    """
    with open(path, "w") as f:
        f.write(f"# n={real.n} a={float(real.a)!r} seed={real.seed}\n")
        f.write("i,j,w,tau\n")
        for i in range(real.n):
            lo, hi = real.indptr[i], real.indptr[i + 1]
            for j, w, tau in zip(real.cols[lo:hi], real.weights[lo:hi], real.delays[lo:hi]):
                f.write(f"{i},{int(j)},{float(w)!r},{float(tau)!r}\n")


def load_edges_csv(path):
    """Inverse of save_edges_csv (positions are not serialized)."""
    with open(path) as f:
        header = f.readline().strip()
        if not header.startswith("# "):
            raise ConfigurationError("missing realization header")
        meta = dict(item.split("=", 1) for item in header[2:].split())
        n = int(meta["n"])
        a = float(meta["a"])
        seed = int(meta["seed"])
        colnames = f.readline().strip()
        if colnames != "i,j,w,tau":
            raise ConfigurationError(f"unexpected columns {colnames!r}")
        rows, cols, ws, taus = [], [], [], []
        for line in f:
            line = line.strip()
            if not line:
                continue
            i, j, w, tau = line.split(",")
            rows.append(int(i))
            cols.append(int(j))
            ws.append(float(w))
            taus.append(float(tau))
    rows = np.asarray(rows, dtype=np.int64)
    order = np.argsort(rows, kind="stable")
    rows = rows[order]
    cols = np.asarray(cols, dtype=np.int64)[order]
    ws = np.asarray(ws)[order]
    taus = np.asarray(taus)[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    tau_max = float(taus.max()) if taus.size else 0.0
    return DisorderRealization(
        n=n, positions=np.empty(0), indptr=indptr, cols=cols,
        weights=ws, delays=taus, tau_max=tau_max, seed=seed, a=a,
    )
