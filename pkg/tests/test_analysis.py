import numpy as np
import pytest

from nvwgm import analysis, model
from nvwgm.analysis import (
    apply_phase_gate,
    compare_tiers,
    fidelity,
    population,
    regime_map,
    transfer_fidelity,
)
from nvwgm.dynamics import unitary_state_at
from nvwgm.hilbert import StateVector, basis_state, superpose
from nvwgm.model import ModelKind, SystemParams, effective_rates, xi
from nvwgm.scenarios import grid_for

TWO_NV = model.two_nv_space()
NOMINAL = SystemParams(kappa=5e-4, gamma_e0=0.013, gamma_e1=0.013, gamma_10=0.0026)


class TestPopulation:
    def test_initial_transfer_state(self):
        psi = basis_state(TWO_NV, ("1", "0"))
        assert population(psi, ("1", "0")) == 1.0
        assert population(psi, ("0", "1")) == 0.0

    def test_full_transfer_at_half_period(self):
        p = SystemParams()
        h = model.build_effective_raman_h(p)
        psi0 = basis_state(model.raman_space(), "10")
        psi_tf = unitary_state_at(h, psi0, np.pi / (2 * xi(p)))
        assert population(psi_tf, "01") == pytest.approx(1.0, abs=1e-12)

    def test_completeness_on_density_matrix(self):
        rng = np.random.default_rng(8)
        v = rng.normal(size=9) + 1j * rng.normal(size=9)
        rho = StateVector(TWO_NV, v / np.linalg.norm(v)).to_density()
        total = sum(population(rho, l) for l in TWO_NV.basis_labels())
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_unknown_label_rejected(self):
        with pytest.raises(ValueError):
            population(basis_state(TWO_NV, ("1", "0")), ("1", "x"))


class TestFidelity:
    def test_self_fidelity(self):
        psi = superpose(
            [basis_state(TWO_NV, ("1", "0")), basis_state(TWO_NV, ("0", "1"))],
            [1.0, 1.0j],
        )
        assert fidelity(psi, psi) == pytest.approx(1.0, abs=1e-12)

    def test_lossless_epr_fidelity_at_quarter_period(self):
        p = SystemParams()
        h = model.build_effective_raman_h(p)
        psi0 = basis_state(model.raman_space(), "10")
        psi_tau = unitary_state_at(h, psi0, np.pi / (4 * xi(p)))
        target = superpose(
            [basis_state(model.raman_space(), "10"),
             basis_state(model.raman_space(), "01")],
            [1.0, -1.0j],
        )
        assert fidelity(psi_tau, target) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_states(self):
        a = basis_state(TWO_NV, ("1", "0"))
        b = basis_state(TWO_NV, ("0", "1"))
        assert fidelity(a, b) == 0.0

    def test_bounded_and_mixed_state_form(self):
        rng = np.random.default_rng(9)
        v = rng.normal(size=9) + 1j * rng.normal(size=9)
        rho = StateVector(TWO_NV, v / np.linalg.norm(v)).to_density()
        t = basis_state(TWO_NV, ("0", "1"))
        f = fidelity(rho, t)
        assert -1e-9 <= f <= 1 + 1e-9

    def test_space_mismatch_rejected(self):
        with pytest.raises(ValueError):
            fidelity(
                basis_state(TWO_NV, ("1", "0")),
                basis_state(model.raman_space(), "10"),
            )


class TestPhaseGate:
    def test_corrects_transfer_phase(self):
        alpha, beta = 0.6, 0.8
        state = StateVector(
            TWO_NV,
            alpha * basis_state(TWO_NV, ("0", "0")).amplitudes
            - 1j * beta * basis_state(TWO_NV, ("0", "1")).amplitudes,
        )
        out = apply_phase_gate(state, target_nv=2)
        expected = (
            alpha * basis_state(TWO_NV, ("0", "0")).amplitudes
            + beta * basis_state(TWO_NV, ("0", "1")).amplitudes
        )
        assert np.abs(out.amplitudes - expected).max() < 1e-14

    def test_twice_is_z_gate(self):
        nv1 = basis_state(TWO_NV, ("0", "0"))
        nv1_plus = superpose(
            [basis_state(TWO_NV, ("0", "0")), basis_state(TWO_NV, ("1", "0"))],
            [1.0, 1.0],
        )
        out = apply_phase_gate(apply_phase_gate(nv1_plus, 1), 1)
        minus = superpose(
            [basis_state(TWO_NV, ("0", "0")), basis_state(TWO_NV, ("1", "0"))],
            [1.0, -1.0],
        )
        assert abs(minus.overlap(out)) ** 2 == pytest.approx(1.0, abs=1e-12)
        assert abs(nv1.overlap(out)) ** 2 == pytest.approx(0.5, abs=1e-12)

    def test_leaves_zero_component_unchanged(self):
        psi = basis_state(TWO_NV, ("0", "0"))
        out = apply_phase_gate(psi, 2)
        assert np.array_equal(out.amplitudes, psi.amplitudes)

    def test_unitary_on_density_matrix(self):
        rng = np.random.default_rng(10)
        v = rng.normal(size=9) + 1j * rng.normal(size=9)
        rho = StateVector(TWO_NV, v / np.linalg.norm(v)).to_density()
        out = apply_phase_gate(rho, 2)
        assert out.trace() == pytest.approx(1.0, abs=1e-12)
        assert np.abs(np.sort(np.linalg.eigvalsh(out.matrix))
                      - np.sort(np.linalg.eigvalsh(rho.matrix))).max() < 1e-12

    def test_acts_as_identity_on_excited_level(self):
        psi = basis_state(TWO_NV, ("e", "0"))
        out = apply_phase_gate(psi, 1)
        assert np.array_equal(out.amplitudes, psi.amplitudes)

    def test_reduced_space_gate_matches_bare(self):
        # gate on the dressed 5-state space equals the projected bare gate
        # (up to ulp noise from the 1/sqrt(2) isometry entries)
        space = model.dressed_open_space()
        psi = basis_state(space, "01")
        out = apply_phase_gate(psi, 2)
        assert out.amplitudes[space.index_of("01")] == pytest.approx(1.0j, abs=1e-14)
        plus = basis_state(space, "+")
        assert np.abs(apply_phase_gate(plus, 2).amplitudes - plus.amplitudes).max() < 1e-14


class TestTransferFidelity:
    def test_dark_input_is_perfectly_transferred(self):
        psi = basis_state(TWO_NV, ("0", "0"))
        assert transfer_fidelity(1.0, 0.0, psi) == pytest.approx(1.0, abs=1e-12)

    def test_lossless_transfer_any_qubit(self):
        p = SystemParams()
        h3 = model.build_open_hamiltonian(p, ModelKind.EFFECTIVE_RAMAN)
        space = model.raman_open_space()
        tf = np.pi / (2 * xi(p))
        rng = np.random.default_rng(11)
        for _ in range(4):
            a = rng.normal() + 1j * rng.normal()
            b = rng.normal() + 1j * rng.normal()
            n = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
            a, b = a / n, b / n
            psi0 = StateVector(
                space,
                a * basis_state(space, "00").amplitudes
                + b * basis_state(space, "10").amplitudes,
            )
            out = apply_phase_gate(unitary_state_at(h3, psi0, tf), 2)
            assert transfer_fidelity(a, b, out) == pytest.approx(1.0, abs=1e-4)

    def test_global_phase_invariance(self):
        alpha, beta = 1 / np.sqrt(2), 1 / np.sqrt(2)
        psi = StateVector(
            TWO_NV,
            alpha * basis_state(TWO_NV, ("0", "0")).amplitudes
            + beta * basis_state(TWO_NV, ("0", "1")).amplitudes,
        )
        f1 = transfer_fidelity(alpha, beta, psi)
        phase = np.exp(1.3j)
        f2 = transfer_fidelity(alpha * phase, beta * phase, psi)
        assert f1 == pytest.approx(f2, rel=1e-12)

    def test_full_cavity_space_reduction(self):
        space = model.full_space(2)
        psi = basis_state(space, ("0", "1", "0"))
        assert transfer_fidelity(0.0, 1.0, psi) == pytest.approx(1.0, abs=1e-12)

    def test_unnormalized_input_rejected(self):
        with pytest.raises(ValueError):
            transfer_fidelity(1.0, 1.0, basis_state(TWO_NV, ("0", "0")))


class TestCompareTiers:
    def test_nine_vs_dressed_is_exact_block(self):
        p = SystemParams()
        grid = grid_for(p, ModelKind.NINE_LEVEL, effective_rates(p).t_transfer, 401)
        rep = compare_tiers(p, (ModelKind.NINE_LEVEL, ModelKind.DRESSED_LAMBDA), grid)
        assert rep.max_pop_deviation < 1e-10

    def test_nine_vs_raman_at_ratio_10(self):
        # frozen from the spectral oracle: leakage beats plus the
        # second-order Rabi shift give 0.043 over the transfer window
        p = SystemParams()
        grid = grid_for(p, ModelKind.NINE_LEVEL, effective_rates(p).t_transfer, 801)
        rep = compare_tiers(p, (ModelKind.NINE_LEVEL, ModelKind.EFFECTIVE_RAMAN), grid)
        assert rep.max_pop_deviation == pytest.approx(0.0428, abs=0.004)
        assert rep.theta_omega_ratio == pytest.approx(10.0)

    def test_nine_vs_raman_deviation_shrinks_with_ratio(self):
        devs = []
        for om in (0.02, 0.01, 0.002, 0.001):
            p = SystemParams(omega1=om, omega2=om)
            grid = grid_for(
                p, ModelKind.NINE_LEVEL, effective_rates(p).t_transfer, 401
            )
            rep = compare_tiers(
                p, (ModelKind.NINE_LEVEL, ModelKind.EFFECTIVE_RAMAN), grid
            )
            devs.append(rep.max_pop_deviation)
        assert all(b < a for a, b in zip(devs, devs[1:]))
        assert devs[-1] < 0.02

    def test_full_vs_nine_dispersive(self):
        p = SystemParams()
        grid = grid_for(p, ModelKind.FULL_CAVITY, effective_rates(p).t_transfer, 801)
        rep = compare_tiers(p, (ModelKind.FULL_CAVITY, ModelKind.NINE_LEVEL), grid)
        assert rep.max_pop_deviation < 0.05
        assert rep.max_pop_deviation == pytest.approx(0.0196, abs=0.005)
        assert rep.delta_g_ratio == pytest.approx(10.0)


class TestRegimeMap:
    def test_nominal_experimental_point_is_strong(self):
        # g/2pi = 1 GHz, kappa/2pi = 0.5 MHz, gamma/2pi = 13 MHz
        out = regime_map(NOMINAL, {"kappa": [5e-4]})
        (_, rates), = out
        assert rates.strong_coupling

    def test_overdamped_cavity_is_weak(self):
        out = regime_map(NOMINAL, {"kappa": [1e9]})
        (_, rates), = out
        assert not rates.strong_coupling

    def test_exact_boundary_is_inclusive(self):
        p = SystemParams(
            g1=1.0, g2=1.0, delta=4.0, omega1=0.25, omega2=0.25,
            kappa=1.0, gamma_e0=0.5, gamma_e1=0.5,
        )
        out = regime_map(p, {"kappa": [1.0]})
        (_, rates), = out
        assert rates.xi**2 == rates.gamma_c * rates.gamma_e
        assert rates.strong_coupling

    def test_scale_invariance_of_the_verdict(self):
        base = NOMINAL
        scaled = base.replace(
            g1=7.0, g2=7.0, delta=70.0, omega1=0.07, omega2=0.07,
            kappa=7 * base.kappa, gamma_e0=7 * base.gamma_e0,
            gamma_e1=7 * base.gamma_e1, gamma_10=7 * base.gamma_10,
        )
        r1 = effective_rates(base)
        r2 = effective_rates(scaled)
        assert r1.strong_coupling == r2.strong_coupling
        assert r2.xi == pytest.approx(7 * r1.xi, rel=1e-12)

    def test_grid_covers_cartesian_product(self):
        out = regime_map(NOMINAL, {"kappa": [1e-4, 1e-3], "gamma_e0": [0.01, 0.02, 0.03]})
        assert len(out) == 6
        points = {(p["kappa"], p["gamma_e0"]) for p, _ in out}
        assert len(points) == 6

    def test_invalid_axis_rejected(self):
        with pytest.raises(ValueError):
            regime_map(NOMINAL, {"not_a_field": [1.0]})
