"""Map the strong-coupling condition and watch the transfer die across it.

Coherent transfer needs xi^2 >= Gamma_C * Gamma_E, with Gamma_C =
g1 g2 kappa / Delta^2 the cavity-induced loss and Gamma_E the emitter-
induced one. The first panel sweeps (kappa, gamma) and colors the verdict;
the second inflates all rates together and tracks the post-gate transfer
fidelity across the boundary.

Run:  python demos/04_strong_coupling_map.py
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from nvwgm import SystemParams, regime_map
from nvwgm.scenarios import rate_sweep

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

BASE = SystemParams(
    omega1=0.005, omega2=0.005, kappa=5e-4,
    gamma_e0=1e-4, gamma_e1=1e-4, gamma_10=1e-6,
)

# ---------------------------------------------------------------------------
# 1. (kappa, gamma_e) regime map
# ---------------------------------------------------------------------------
kappas = np.logspace(-5, 1, 41)
gammas = np.logspace(-5, 0, 41)
points = regime_map(BASE, {"kappa": kappas, "gamma_e0": gammas})
verdict = np.array([rates.strong_coupling for _, rates in points])
verdict = verdict.reshape(len(kappas), len(gammas))

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
ax1.pcolormesh(gammas, kappas, verdict, cmap="RdYlGn", shading="auto")
ax1.set_xscale("log")
ax1.set_yscale("log")
ax1.set_xlabel(r"$\gamma_{e0}$ (units of g)")
ax1.set_ylabel(r"$\kappa$ (units of g)")
ax1.set_title(r"strong coupling: $\xi^2 \geq \Gamma_C\Gamma_E$ (green)")

# ---------------------------------------------------------------------------
# 2. fidelity across the boundary (all rates scaled together)
# ---------------------------------------------------------------------------
scales = [1.0, 10.0, 100.0, 300.0, 1000.0, 3000.0, 10000.0]
rows = rate_sweep(BASE, scales, n_samples=101)
for row in rows:
    flag = "strong" if row["strong_coupling"] else "weak  "
    print(f"rate scale {row['rate_scale']:8.0f}  [{flag}]"
          f"  post-gate F = {row['post_gate_fidelity']:.4f}")

fids = [row["post_gate_fidelity"] for row in rows]
margins = [row["xi_squared"] / row["gamma_c_gamma_e"] for row in rows]
ax2.semilogx(margins, fids, "o-")
ax2.axvline(1.0, color="k", ls=":", lw=1)
ax2.annotate("boundary", (1.2, 0.55))
ax2.set_xlabel(r"$\xi^2 / (\Gamma_C\Gamma_E)$")
ax2.set_ylabel("post-gate transfer fidelity")
ax2.set_title("transfer quality across the strong-coupling boundary")
ax2.invert_xaxis()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "strong_coupling_map.png"), dpi=150)
print(f"wrote {OUT}/strong_coupling_map.png")
