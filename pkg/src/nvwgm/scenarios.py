"""Protocol runners: entanglement, state transfer, decay checks, sweeps.

These chain the model builders and solvers into the named experiments.
Protocol steps are piecewise-constant: the transfer run evolves under the
full drive Hamiltonian to t_f = pi/(2 xi), the couplings are switched off
(segment ends), and the diag(1, i) correction gate is applied to the
receiving emitter. Fidelities are also tracked as Hermitian projector
observables along the way, which lets the MCWF ensemble estimate them
with standard errors.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import pi, sqrt

import numpy as np

from . import analysis, model
from .dynamics import (
    TimeGrid,
    TimeSeries,
    evolve_master,
    evolve_unitary,
    master_state_at,
    mcwf_ensemble,
    unitary_state_at,
)
from .hilbert import DensityMatrix, Operator, StateVector, basis_state
from .model import EffectiveRates, ModelKind, SystemParams


@dataclass(frozen=True)
class SolverSpec:
    """Solver selection: 'unitary', 'master', or 'mcwf'."""

    kind: str
    n_traj: int = 1
    seed0: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.kind not in ("unitary", "master", "mcwf"):
            raise ValueError(f"unknown solver kind {self.kind!r}")
        if self.kind == "mcwf" and self.n_traj < 1:
            raise ValueError("mcwf requires n_traj >= 1")


def max_frequency(p: SystemParams, kind: ModelKind) -> float:
    """Largest frequency or rate present in the chosen tier."""
    rates = (p.kappa, p.gamma_e0, p.gamma_e1, p.gamma_10)
    if kind is ModelKind.FULL_CAVITY:
        vals = (abs(p.delta), abs(p.omega1), abs(p.omega2), *rates)
    elif kind in (ModelKind.NINE_LEVEL, ModelKind.DRESSED_LAMBDA):
        vals = (abs(model.theta(p)), abs(p.omega1), abs(p.omega2), *rates)
    else:
        er = model.effective_rates(p)
        vals = (abs(er.xi), er.gamma_c, er.gamma_e)
    top = max(vals)
    return top if top > 0 else 1.0


def grid_for(
    p: SystemParams,
    kind: ModelKind,
    t_end: float,
    n_samples: int = 401,
    t_start: float = 0.0,
    dt_max: float | None = None,
) -> TimeGrid:
    """Grid with the step ceiling dt_max = 0.02 / (largest model frequency)."""
    if dt_max is None:
        dt_max = 0.02 / max_frequency(p, kind)
    return TimeGrid(t_end=t_end, n_samples=n_samples, dt_max=dt_max, t_start=t_start)


def _require_lossless(p: SystemParams):
    if any(r > 0 for r in (p.kappa, p.gamma_e0, p.gamma_e1, p.gamma_10)):
        raise ValueError("the unitary solver requires all rates to be zero")


def _superposition_initial(
    kind: ModelKind, p: SystemParams, alpha: complex, beta: complex
) -> StateVector:
    """alpha|00> + beta|10> (qubit on emitter 1, emitter 2 in |0>)."""
    s00 = analysis.initial_state_for(kind, p, "00")
    s10 = analysis.initial_state_for(kind, p, "10")
    return StateVector(s00.space, alpha * s00.amplitudes + beta * s10.amplitudes)


def _projector_observable(target: StateVector) -> Operator:
    t = target.amplitudes
    return Operator(target.space, np.outer(t, t.conj()))


def _embed_two_nv_projector(kind: ModelKind, p: SystemParams, op9: np.ndarray) -> Operator:
    """Lift a two-NV projector to the tier's run space (cavity: identity)."""
    if kind is ModelKind.NINE_LEVEL:
        return Operator(model.two_nv_space(), op9)
    if kind is ModelKind.FULL_CAVITY:
        return Operator(
            model.full_space(p.n_fock), np.kron(op9, np.eye(p.n_fock))
        )
    if kind is ModelKind.DRESSED_LAMBDA:
        iso = model.expansion_to_bare(model.dressed_open_space())
    elif kind is ModelKind.EFFECTIVE_RAMAN:
        iso = model.expansion_to_bare(model.raman_open_space())
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    space = (
        model.dressed_open_space()
        if kind is ModelKind.DRESSED_LAMBDA
        else model.raman_open_space()
    )
    return Operator(space, iso.conj().T @ op9 @ iso)


def _evolve(
    h: Operator,
    channels,
    psi0: StateVector,
    grid: TimeGrid,
    observables,
    solver: SolverSpec,
):
    """Dispatch one segment to the chosen solver; returns (series, final).

    ``final`` is the end-of-segment state (StateVector or DensityMatrix),
    or None for MCWF ensembles, whose endpoint statistics live in the
    fidelity/population columns instead.
    """
    if solver.kind == "unitary":
        series = evolve_unitary(h, psi0, grid, observables)
        return series, unitary_state_at(h, psi0, grid.t_end - grid.t_start)
    if solver.kind == "master":
        series = evolve_master(h, channels, psi0, grid, observables)
        return series, master_state_at(h, channels, psi0, grid)
    series = mcwf_ensemble(
        h, channels, psi0, grid, solver.n_traj, solver.seed0, observables,
        threads=solver.threads,
    )
    return series, None


@dataclass(frozen=True)
class TransferResult:
    series: TimeSeries
    rates: EffectiveRates
    pre_gate_fidelity: float
    post_gate_fidelity: float
    final_state: DensityMatrix | StateVector | None


def run_transfer(
    p: SystemParams,
    kind: ModelKind,
    solver: SolverSpec,
    alpha: complex = 1 / sqrt(2),
    beta: complex = 1 / sqrt(2),
    grid: TimeGrid | None = None,
) -> TransferResult:
    """Transfer alpha|0>+beta|1> from emitter 1 to emitter 2.

    Evolves to t_f = pi/(2 xi), switches the couplings off, applies the
    diag(1, i) correction gate on emitter 2, and scores the transfer
    fidelity of the reduced receiving qubit. The fidelity is also tracked
    in time as the columns fid_pre / fid_post (expectations of the
    projector onto the target, without and with the gate conjugation).
    """
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-9:
        raise ValueError("(alpha, beta) must be normalized")
    rates = model.effective_rates(p)
    if grid is None:
        grid = grid_for(p, kind, rates.t_transfer)
    if solver.kind == "unitary":
        _require_lossless(p)

    h = model.build_open_hamiltonian(p, kind)
    channels = model.build_collapse_ops(p, kind)
    psi0 = _superposition_initial(kind, p, alpha, beta)

    # reduced-qubit fidelity as an observable: I_1 (x) |t><t|_2, so the
    # MCWF ensemble can estimate it with standard errors
    t2 = np.array([alpha, beta, 0.0], dtype=complex)
    op9 = np.kron(np.eye(3, dtype=complex), np.outer(t2, t2.conj()))
    fid_pre = _embed_two_nv_projector(kind, p, op9)
    u9 = analysis._phase_gate_matrix(model.two_nv_space(), 2)
    fid_post = _embed_two_nv_projector(kind, p, u9.conj().T @ op9 @ u9)

    observables = dict(analysis.transfer_observables(kind, p))
    observables["fid_pre"] = fid_pre
    observables["fid_post"] = fid_post

    series, final = _evolve(h, channels, psi0, grid, observables, solver)

    if final is None:
        pre = float(series.column("fid_pre")[-1])
        post = float(series.column("fid_post")[-1])
        gated = None
    else:
        pre = analysis.transfer_fidelity(alpha, beta, final)
        gated = analysis.apply_phase_gate(final, target_nv=2)
        post = analysis.transfer_fidelity(alpha, beta, gated)
    return TransferResult(
        series=series,
        rates=rates,
        pre_gate_fidelity=pre,
        post_gate_fidelity=post,
        final_state=gated,
    )


@dataclass(frozen=True)
class EntangleResult:
    series: TimeSeries
    rates: EffectiveRates
    epr_fidelity: float
    final_state: DensityMatrix | StateVector | None


def run_entangle(
    p: SystemParams,
    kind: ModelKind,
    solver: SolverSpec,
    grid: TimeGrid | None = None,
) -> EntangleResult:
    """Evolve |10> to the EPR state (|10> - i|01>)/sqrt(2) at xi*tau = pi/4."""
    rates = model.effective_rates(p)
    if grid is None:
        grid = grid_for(p, kind, rates.t_entangle)
    if solver.kind == "unitary":
        _require_lossless(p)

    h = model.build_open_hamiltonian(p, kind)
    channels = model.build_collapse_ops(p, kind)
    psi0 = analysis.initial_state_for(kind, p, "10")

    epr = model.epr_target()
    proj9 = np.outer(epr.amplitudes, epr.amplitudes.conj())
    observables = dict(analysis.transfer_observables(kind, p))
    observables["fid_epr"] = _embed_two_nv_projector(kind, p, proj9)

    series, final = _evolve(h, channels, psi0, grid, observables, solver)
    if final is None:
        fid = float(series.column("fid_epr")[-1])
    else:
        fid = float(
            np.real(
                np.trace(
                    observables["fid_epr"].matrix
                    @ (
                        final.to_density() if isinstance(final, StateVector) else final
                    ).matrix
                )
            )
        )
    return EntangleResult(
        series=series, rates=rates, epr_fidelity=fid, final_state=final
    )


@dataclass(frozen=True)
class DecayResult:
    series: TimeSeries
    grid: TimeGrid
    max_err_pop_e: float
    max_err_n_photon: float


def run_decay_check(
    p: SystemParams, grid: TimeGrid | None = None, n_samples: int = 201
) -> DecayResult:
    """Analytic-oracle check of the master solver's rate convention.

    A single emitter prepared in |e> decays as P_e(t) = exp(-2(ge0+ge1)t)
    and a single cavity photon as <n>(t) = exp(-2 kappa t) under the
    doubled Lindblad convention; both are integrated and tabulated next
    to the closed forms.
    """
    gbar = p.gamma_e0 + p.gamma_e1
    if gbar <= 0 and p.kappa <= 0:
        raise ValueError("decay check needs at least one positive rate")
    if grid is None:
        slowest = min(r for r in (gbar, p.kappa) if r > 0)
        fastest = max(gbar, p.kappa)
        grid = TimeGrid(
            t_end=2.5 / slowest, n_samples=n_samples, dt_max=0.02 / (2 * fastest)
        )
    times = grid.times
    columns: dict[str, np.ndarray] = {}
    max_err_e = 0.0
    max_err_n = 0.0

    if gbar > 0:
        nv = model.nv_space()
        h = Operator(nv, np.zeros((3, 3)))
        channels = []
        if p.gamma_e0 > 0:
            channels.append((p.gamma_e0, model._nv_op("0", "e")))
        if p.gamma_e1 > 0:
            channels.append((p.gamma_e1, model._nv_op("1", "e")))
        obs = analysis.population_observables(nv, ["e"])
        series = evolve_master(h, channels, basis_state(nv, "e"), grid, obs)
        columns["pop_e"] = series.column("pop_e")
        columns["analytic_pop_e"] = np.exp(-2 * gbar * times)
        max_err_e = float(
            np.abs(columns["pop_e"] - columns["analytic_pop_e"]).max()
        )

    if p.kappa > 0:
        if p.n_fock < 2:
            raise ValueError("photon decay check needs n_fock >= 2")
        cav = model.cavity_space(p.n_fock)
        h = Operator(cav, np.zeros((p.n_fock, p.n_fock)))
        a = model.cavity_annihilation(p.n_fock)
        number = a.dagger() @ a
        series = evolve_master(
            h, [(p.kappa, a)], basis_state(cav, "1"), grid, {"n_photon": number}
        )
        columns["n_photon"] = series.column("n_photon")
        columns["analytic_n_photon"] = np.exp(-2 * p.kappa * times)
        max_err_n = float(
            np.abs(columns["n_photon"] - columns["analytic_n_photon"]).max()
        )

    return DecayResult(
        series=TimeSeries(times=times, columns=columns),
        grid=grid,
        max_err_pop_e=max_err_e,
        max_err_n_photon=max_err_n,
    )


def rate_sweep(
    p: SystemParams,
    rate_scales,
    kind: ModelKind = ModelKind.NINE_LEVEL,
    solver: SolverSpec | None = None,
    alpha: complex = 1 / sqrt(2),
    beta: complex = 1 / sqrt(2),
    n_samples: int = 201,
) -> list[dict]:
    """Transfer fidelity while scaling (kappa, gamma_e0, gamma_e1, gamma_10).

    One row per scale factor, crossing the strong-coupling boundary
    xi^2 = gamma_c * gamma_e as the rates inflate.
    """
    solver = solver or SolverSpec(kind="master")
    rows = []
    for scale in rate_scales:
        ps = p.replace(
            kappa=p.kappa * scale,
            gamma_e0=p.gamma_e0 * scale,
            gamma_e1=p.gamma_e1 * scale,
            gamma_10=p.gamma_10 * scale,
        )
        rates = model.effective_rates(ps)
        grid = grid_for(ps, kind, rates.t_transfer, n_samples=n_samples)
        res = run_transfer(ps, kind, solver, alpha=alpha, beta=beta, grid=grid)
        rows.append(
            {
                "rate_scale": float(scale),
                "kappa": ps.kappa,
                "gamma_e0": ps.gamma_e0,
                "gamma_e1": ps.gamma_e1,
                "gamma_10": ps.gamma_10,
                "xi_squared": rates.xi**2,
                "gamma_c_gamma_e": rates.gamma_c * rates.gamma_e,
                "strong_coupling": rates.strong_coupling,
                "pre_gate_fidelity": res.pre_gate_fidelity,
                "post_gate_fidelity": res.post_gate_fidelity,
            }
        )
    return rows


def regime_rows(base: SystemParams, axes: dict) -> list[dict]:
    """Flat rows for a regime-map sweep (static, no dynamics)."""
    rows = []
    for point, rates in analysis.regime_map(base, axes):
        row = dict(point)
        row.update(
            {
                "theta": rates.theta,
                "xi": rates.xi,
                "gamma_c": rates.gamma_c,
                "gamma_e": rates.gamma_e,
                "excited_occupation": rates.excited_occupation,
                "xi_squared": rates.xi**2,
                "gamma_c_gamma_e": rates.gamma_c * rates.gamma_e,
                "strong_coupling": rates.strong_coupling,
                "t_transfer": rates.t_transfer,
            }
        )
        rows.append(row)
    return rows
