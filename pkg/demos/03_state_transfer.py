"""Transfer an unknown qubit between the emitters, two solvers side by side.

The protocol: encode alpha|0> + beta|1> on emitter 1, let the Raman
flip-flop run to xi*t_f = pi/2, switch the couplings off, and apply the
diag(1, i) phase correction to emitter 2. The |00> component is exactly
dark, so only the beta component rides the transfer.

This script runs the dissipative nine-level model twice, by direct master-
equation integration and by averaging 1000 quantum-jump trajectories, and
overlays the two (the MCWF curve carries its standard-error band). Rates
are chosen inside the strong-coupling regime so the post-gate fidelity
clears 0.99; swap in NOMINAL_RATES to see the published-rate behavior
(fidelity 0.506, ruined by ground-state relaxation over the long window).

Run:  python demos/03_state_transfer.py
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from nvwgm import ModelKind, SystemParams, effective_rates
from nvwgm.scenarios import SolverSpec, run_transfer

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

STRONG_RATES = SystemParams(
    omega1=0.005, omega2=0.005, kappa=5e-4,
    gamma_e0=1e-4, gamma_e1=1e-4, gamma_10=1e-6,
)
NOMINAL_RATES = SystemParams(
    kappa=5e-4, gamma_e0=0.013, gamma_e1=0.013, gamma_10=0.0026,
)

p = STRONG_RATES
alpha = beta = 1 / np.sqrt(2)

master = run_transfer(p, ModelKind.NINE_LEVEL, SolverSpec(kind="master"),
                      alpha=alpha, beta=beta)
mcwf = run_transfer(p, ModelKind.NINE_LEVEL,
                    SolverSpec(kind="mcwf", n_traj=1000, seed0=7),
                    alpha=alpha, beta=beta)

rates = effective_rates(p)
print(f"xi = {rates.xi:.2e} g, t_f = {rates.t_transfer:.0f} / g,"
      f" strong coupling: {rates.strong_coupling}")
print(f"master: pre-gate F = {master.pre_gate_fidelity:.4f},"
      f" post-gate F = {master.post_gate_fidelity:.4f}")
print(f"mcwf:   pre-gate F = {mcwf.pre_gate_fidelity:.4f},"
      f" post-gate F = {mcwf.post_gate_fidelity:.4f}")

t = master.series.times
fig, ax = plt.subplots(figsize=(7, 4))
ax.plot(t, master.series.column("pop_10"), "C0", label=r"$P_{10}$ master")
ax.plot(t, master.series.column("pop_01"), "C1", label=r"$P_{01}$ master")
for name, color in (("pop_10", "C0"), ("pop_01", "C1")):
    mean = mcwf.series.column(name)
    se = mcwf.series.ensemble.stderr[name]
    ax.plot(t, mean, color + "--", lw=1, label=name.replace("pop_", r"$P_{") + r"}$ mcwf")
    ax.fill_between(t, mean - 2 * se, mean + 2 * se, color=color, alpha=0.25)
ax.set_xlabel("t (units of 1/g)")
ax.set_ylabel("population")
ax.set_title("state transfer: master equation vs 1000 quantum trajectories")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "state_transfer.png"), dpi=150)
print(f"wrote {OUT}/state_transfer.png")
