"""Trace the oscillation-onset (Hopf) curves of the stationary state.

The fixed point loses stability when a conjugate pair of characteristic
exponents crosses the imaginary axis. At fixed connectivity decay beta the
onset curve in the (a, tau_s) plane is parabola-like with an interior
minimum: there is an optimal field size for synchronization. At fixed a the
onset delay grows with beta until the thinned gain cannot sustain any
oscillation at all.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from delaynet import (
    DispersionParams,
    classify_regime,
    curve_to_csv,
    hopf_curve_fixed_a,
    hopf_curve_fixed_beta,
    rightmost_root,
)

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

# ------------------------------------------ fixed beta: the (a, tau_s) plane
p1 = DispersionParams(theta=3.0, j_bar=-5.0, lam=1.0, a=1.0, beta=0.1, tau_s=1.3)
curve = hopf_curve_fixed_beta(0.1, p1)
pts = sorted(curve, key=lambda q: q.a)
a_vals = np.array([q.a for q in pts])
t_vals = np.array([q.tau_s for q in pts])
k = int(np.argmin(t_vals))
print(f"fixed-beta curve: {len(pts)} points, minimum at "
      f"(a, tau_s) = ({a_vals[k]:.3f}, {t_vals[k]:.4f}), "
      f"onset at a->0: tau_s = {t_vals[np.argmin(a_vals)]:.4f}")
curve_to_csv(curve, os.path.join(OUT, "hopf_fixed_beta.csv"))

fig, ax = plt.subplots(figsize=(7, 5))
mask = a_vals <= 8
ax.plot(a_vals[mask], t_vals[mask], "k")
ax.axhline(1.3, color="C3", lw=0.8, ls="--")
for a, marker in ((0.5, "s"), (2.5, "o"), (4.5, "s")):
    rep = classify_regime(p1.replace(a=a))
    ax.plot([a], [1.3], marker, color="C0" if rep.regime == "stationary" else "C1")
    print(f"  a={a}: {rep.regime} (rightmost root {rep.rightmost:.4f})")
ax.fill_between(a_vals[mask], t_vals[mask], 5.0, alpha=0.15, color="C1",
                label="oscillatory side")
ax.set_ylim(1.0, 4.0)
ax.set_xlabel("a")
ax.set_ylabel("tau_s")
ax.legend()
fig.savefig(os.path.join(OUT, "hopf_fixed_beta.png"), dpi=120)

# ----------------------------------------- fixed a: the (beta, tau_s) plane
p2 = DispersionParams(theta=1.0, j_bar=-3.5, lam=0.5, a=3.0, beta=0.2, tau_s=2.0)
curve2 = hopf_curve_fixed_a(3.0, p2, np.linspace(0.0, 0.3, 31))
pts2 = sorted(curve2, key=lambda q: q.beta)
print(f"fixed-a curve: {len(pts2)} points, onset delay rises from "
      f"{pts2[0].tau_s:.3f} at beta=0 to {pts2[-1].tau_s:.3f} at beta={pts2[-1].beta:.2f}; "
      "beyond that the gain is subcritical at every delay")
curve_to_csv(curve2, os.path.join(OUT, "hopf_fixed_a.csv"))

fig2, ax2 = plt.subplots(figsize=(7, 5))
ax2.plot([q.beta for q in pts2], [q.tau_s for q in pts2], "k")
ax2.set_xlabel("beta")
ax2.set_ylabel("tau_s at onset")
fig2.savefig(os.path.join(OUT, "hopf_fixed_a.png"), dpi=120)

# ------------------------------------------------ rightmost-root diagnostics
root, ok = rightmost_root(p1.replace(a=2.5))
print(f"rightmost characteristic root at a=2.5: {root:.5f} "
      f"(positive real part -> oscillatory)")
print(f"wrote {OUT}/hopf_fixed_beta.[csv,png] and hopf_fixed_a.[csv,png]")
