import numpy as np
import pytest

from nvwgm import model
from nvwgm.model import (
    CounterTerm,
    ExactCompensation,
    ModelKind,
    SystemParams,
    build_collapse_ops,
    build_dressed_lambda_h,
    build_effective_raman_h,
    build_full_cavity_h,
    build_nine_level_h,
    build_nine_level_h_dressed,
    build_open_hamiltonian,
    effective_rates,
    theta,
    xi,
)

NOMINAL = SystemParams(kappa=5e-4, gamma_e0=0.013, gamma_e1=0.013, gamma_10=0.0026)
LOSSLESS = SystemParams()
S2NV = model.two_nv_space()


class TestParams:
    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError):
            SystemParams(kappa=-1.0)

    def test_n_fock_validated(self):
        with pytest.raises(ValueError):
            SystemParams(n_fock=0)

    def test_dispersive_advisory_warning(self):
        with pytest.warns(UserWarning):
            SystemParams(delta=3.0)

    def test_counter_term_needs_detuning(self):
        with pytest.raises(ValueError):
            CounterTerm(omega_prime=0.1, delta_prime=0.0)


class TestDerivedRates:
    def test_theta_nominal_point(self):
        assert theta(LOSSLESS) == pytest.approx(0.1, rel=1e-14)

    def test_theta_decoupled_center(self):
        assert theta(SystemParams(g1=0.0)) == 0.0

    def test_theta_direct_arithmetic(self):
        assert theta(SystemParams(g1=2.0, g2=3.0, delta=12.0)) == pytest.approx(0.5)

    def test_theta_rejects_zero_detuning(self):
        with pytest.raises(ValueError):
            theta(SystemParams(delta=0.0))

    def test_xi_nominal_point(self):
        assert xi(LOSSLESS) == pytest.approx(1e-3, rel=1e-13)

    def test_xi_zero_drive(self):
        assert xi(SystemParams(omega1=0.0)) == 0.0

    def test_xi_asymmetric_drives(self):
        p = SystemParams(omega1=0.02, omega2=0.01)
        assert xi(p) == pytest.approx(2e-3, rel=1e-13)

    def test_xi_rejects_zero_theta(self):
        with pytest.raises(ValueError):
            xi(SystemParams(g1=0.0))

    def test_effective_rates_nominal_point(self):
        r = effective_rates(NOMINAL)
        gbar = NOMINAL.gamma_e0 + NOMINAL.gamma_e1
        assert r.gamma_c == pytest.approx(1e-2 * NOMINAL.kappa, rel=1e-14)
        assert r.gamma_e == pytest.approx(1e-2 * gbar, rel=1e-14)
        assert r.excited_occupation == pytest.approx(1e-2, rel=1e-14)
        assert r.xi == pytest.approx(1e-3, rel=1e-13)
        assert r.t_transfer == pytest.approx(np.pi / (2 * r.xi), rel=1e-14)
        assert r.t_transfer == pytest.approx(1570.8, abs=0.01)
        assert r.t_entangle == pytest.approx(r.t_transfer / 2, rel=1e-14)
        assert r.strong_coupling

    def test_strong_coupling_boundary_inclusive(self):
        # binary-exact parameters with xi^2 == gamma_c * gamma_e exactly
        p = SystemParams(
            g1=1.0, g2=1.0, delta=4.0, omega1=0.25, omega2=0.25,
            kappa=1.0, gamma_e0=0.5, gamma_e1=0.5,
        )
        r = effective_rates(p)
        assert r.xi**2 == r.gamma_c * r.gamma_e
        assert r.strong_coupling

    def test_rates_reject_zero_raman(self):
        with pytest.raises(ValueError):
            effective_rates(SystemParams(omega1=0.0))


class TestNineLevel:
    def test_hermitian(self):
        assert build_nine_level_h(NOMINAL).is_hermitian()

    def test_drive_off_leaves_only_dressed_splitting(self):
        p = SystemParams(omega1=0.0, omega2=0.0)
        hd = build_nine_level_h_dressed(p).matrix
        expected = np.zeros((9, 9), dtype=complex)
        expected[1, 1] = -0.1
        expected[2, 2] = +0.1
        assert np.abs(hd - expected).max() < 1e-14
        # bare form: -Theta flip-flop between |e0> and |0e>
        hb = build_nine_level_h(p).matrix
        i_e0, i_0e = S2NV.index_of(("e", "0")), S2NV.index_of(("0", "e"))
        assert hb[i_e0, i_0e] == pytest.approx(-0.1)
        vals = np.linalg.eigvalsh(hb)
        assert np.abs(np.sort(vals) - np.sort([0] * 7 + [-0.1, 0.1])).max() < 1e-14

    def test_dark_row_identically_zero(self):
        hd = build_nine_level_h_dressed(NOMINAL).matrix
        assert np.abs(hd[5]).max() == 0.0
        assert np.abs(hd[:, 5]).max() == 0.0

    def test_drive_coupling_entry(self):
        hd = build_nine_level_h_dressed(NOMINAL).matrix
        assert hd[0, 1] == pytest.approx(NOMINAL.omega1 / np.sqrt(2), rel=1e-13)
        assert hd[0, 2] == pytest.approx(NOMINAL.omega1 / np.sqrt(2), rel=1e-13)

    def test_bare_and_dressed_forms_conjugate(self):
        w = model.nine_level_basis_transform().matrix
        assert np.abs(w @ w.conj().T - np.eye(9)).max() < 1e-14
        hb = build_nine_level_h(NOMINAL).matrix
        hd = build_nine_level_h_dressed(NOMINAL).matrix
        assert np.abs(w @ hb @ w.conj().T - hd).max() < 1e-14

    def test_transfer_manifold_is_exact_block(self):
        w = model.nine_level_basis_transform().matrix
        proj = w[:4].conj().T @ w[:4]
        h = build_nine_level_h(NOMINAL).matrix
        assert np.abs(h @ proj - proj @ h).max() < 1e-14

    def test_swap_symmetry_exact(self):
        p = SystemParams(g1=1.3, g2=0.7, omega1=0.013, omega2=0.025, delta=11.0)
        ps = p.replace(g1=0.7, g2=1.3, omega1=0.025, omega2=0.013)
        perm = np.zeros((9, 9))
        for i in range(9):
            l1, l2 = S2NV.labels_of(i)
            perm[S2NV.index_of((l2, l1)), i] = 1.0
        h, hs = build_nine_level_h(p).matrix, build_nine_level_h(ps).matrix
        assert np.array_equal(perm @ h @ perm.T, hs)


class TestDressedLambda:
    def test_equals_nine_level_block_entry_for_entry(self):
        h4 = build_dressed_lambda_h(NOMINAL).matrix
        hd = build_nine_level_h_dressed(NOMINAL).matrix
        assert np.abs(h4 - hd[:4, :4]).max() < 1e-14

    def test_second_drive_off_decouples_target(self):
        h4 = build_dressed_lambda_h(SystemParams(omega2=0.0)).matrix
        assert np.abs(h4[3, :]).max() == 0.0
        assert np.abs(h4[:, 3]).max() == 0.0

    def test_drive_off_eigenvalues(self):
        h4 = build_dressed_lambda_h(SystemParams(omega1=0.0, omega2=0.0)).matrix
        vals = np.sort(np.linalg.eigvalsh(h4))
        assert np.abs(vals - np.array([-0.1, 0.0, 0.0, 0.1])).max() < 1e-14


class TestEffectiveRaman:
    def test_eigenvalues(self):
        h = build_effective_raman_h(NOMINAL)
        vals = np.sort(np.linalg.eigvalsh(h.matrix))
        x = xi(NOMINAL)
        assert np.abs(vals - np.array([-x, x])).max() < 1e-15

    def test_nominal_coupling_value(self):
        assert build_effective_raman_h(LOSSLESS).matrix[0, 1] == pytest.approx(1e-3)

    def test_quarter_period_reaches_epr_phase(self):
        h = build_effective_raman_h(LOSSLESS).matrix
        x = xi(LOSSLESS)
        t = np.pi / (4 * x)
        w, v = np.linalg.eigh(h)
        psi = v @ (np.exp(-1j * w * t) * (v.conj().T @ np.array([1.0, 0.0])))
        target = np.array([1.0, -1.0j]) / np.sqrt(2)
        assert abs(np.vdot(target, psi)) ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_marginal_validity_warns(self):
        with pytest.warns(UserWarning):
            build_effective_raman_h(SystemParams(omega1=0.05, omega2=0.05))


class TestFullCavity:
    def test_bare_cavity_limit(self):
        p = SystemParams(g1=0.0, g2=0.0, omega1=0.0, omega2=0.0, n_fock=3)
        h = build_full_cavity_h(p)
        space = model.full_space(3)
        a = model.cavity_annihilation(3)
        expected = np.kron(np.eye(9), p.delta * (a.dagger() @ a).matrix)
        assert np.abs(h.matrix - expected).max() < 1e-14

    def test_single_excitation_block_uncompensated(self):
        # counter-term off: diagonal (0, Delta, 0), off-diagonals g1, g2
        p = SystemParams(
            g1=1.0, g2=0.8, omega1=0.0, omega2=0.0, n_fock=2,
            stark_compensation=CounterTerm(omega_prime=0.0, delta_prime=1.0),
        )
        h = build_full_cavity_h(p).matrix
        space = model.full_space(2)
        ix = [
            space.index_of(("e", "0", "0")),
            space.index_of(("0", "0", "1")),
            space.index_of(("0", "e", "0")),
        ]
        block = h[np.ix_(ix, ix)]
        expected = np.array(
            [[0.0, 1.0, 0.0], [1.0, 10.0, 0.8], [0.0, 0.8, 0.0]], dtype=complex
        )
        assert np.abs(block - expected).max() < 1e-14

    def test_single_excitation_block_exact_compensation(self):
        p = SystemParams(omega1=0.0, omega2=0.0, n_fock=2)
        h = build_full_cavity_h(p).matrix
        space = model.full_space(2)
        ix = [
            space.index_of(("e", "0", "0")),
            space.index_of(("0", "0", "1")),
            space.index_of(("0", "e", "0")),
        ]
        block = h[np.ix_(ix, ix)]
        assert block[0, 0] == pytest.approx(0.1, rel=1e-14)
        assert block[2, 2] == pytest.approx(0.1, rel=1e-14)
        assert block[1, 1] == pytest.approx(10.0, rel=1e-14)

    def test_vacuum_sector_dressed_gap_matches_2theta(self):
        # exact diagonalization of the compensated one-excitation block vs
        # the dipole-dipole formula, to O((g/Delta)^2)
        p = SystemParams(omega1=0.0, omega2=0.0, n_fock=2)
        h = build_full_cavity_h(p).matrix
        space = model.full_space(2)
        ix = [
            space.index_of(("e", "0", "0")),
            space.index_of(("0", "0", "1")),
            space.index_of(("0", "e", "0")),
        ]
        vals = np.sort(np.linalg.eigvalsh(h[np.ix_(ix, ix)]))
        gap = vals[1] - vals[0]
        assert gap == pytest.approx(0.19806, abs=1e-4)
        assert abs(gap - 2 * theta(p)) < 0.003

    def test_counter_term_shift_applied(self):
        p = SystemParams(
            omega1=0.0, omega2=0.0, n_fock=2,
            stark_compensation=CounterTerm(omega_prime=0.2, delta_prime=2.0),
        )
        h = build_full_cavity_h(p).matrix
        space = model.full_space(2)
        k = space.index_of(("e", "1", "0"))
        assert h[k, k] == pytest.approx(0.02, rel=1e-12)

    def test_hermitian(self):
        assert build_full_cavity_h(NOMINAL).is_hermitian()


class TestCollapseOps:
    def test_full_cavity_channel_count(self):
        assert len(build_collapse_ops(NOMINAL, ModelKind.FULL_CAVITY)) == 7

    def test_nine_level_channel_count(self):
        assert len(build_collapse_ops(NOMINAL, ModelKind.NINE_LEVEL)) == 6

    def test_all_rates_zero_gives_empty_dissipation(self):
        assert build_collapse_ops(LOSSLESS, ModelKind.FULL_CAVITY) == []
        assert build_collapse_ops(LOSSLESS, ModelKind.NINE_LEVEL) == []

    def test_nine_level_jump_operators(self):
        eye3 = np.eye(3)
        low = np.zeros((3, 3)); low[0, 1] = 1  # |0><1|
        e0 = np.zeros((3, 3)); e0[0, 2] = 1    # |0><e|
        e1 = np.zeros((3, 3)); e1[1, 2] = 1    # |1><e|
        expected = [
            (NOMINAL.gamma_10, np.kron(low, eye3)),
            (NOMINAL.gamma_e0, np.kron(e0, eye3)),
            (NOMINAL.gamma_e1, np.kron(e1, eye3)),
            (NOMINAL.gamma_10, np.kron(eye3, low)),
            (NOMINAL.gamma_e0, np.kron(eye3, e0)),
            (NOMINAL.gamma_e1, np.kron(eye3, e1)),
        ]
        got = build_collapse_ops(NOMINAL, ModelKind.NINE_LEVEL)
        assert len(got) == len(expected)
        for (rate, c), (er, em) in zip(got, expected):
            assert rate == er
            assert np.array_equal(c.matrix, em.astype(complex))

    def test_dressed_projected_channels_match_hand_projection(self):
        s = 1 / np.sqrt(2)
        expected = {}
        for j, (rate, mat) in enumerate(
            (r, c.matrix) for r, c in build_collapse_ops(NOMINAL, ModelKind.DRESSED_LAMBDA)
        ):
            expected[j] = (rate, mat)
        # order follows the emitter channel listing: nv1 (g10, ge0, ge1), nv2 (...)
        m = np.zeros((5, 5)); m[4, 0] = 1
        assert np.abs(expected[0][1] - m).max() < 1e-14  # gamma10 nv1: |00><10|
        m = np.zeros((5, 5)); m[4, 1] = s; m[4, 2] = s
        assert np.abs(expected[1][1] - m).max() < 1e-14  # ge0 nv1
        m = np.zeros((5, 5)); m[0, 1] = s; m[0, 2] = s
        assert np.abs(expected[2][1] - m).max() < 1e-14  # ge1 nv1
        m = np.zeros((5, 5)); m[4, 3] = 1
        assert np.abs(expected[3][1] - m).max() < 1e-14  # gamma10 nv2: |00><01|
        m = np.zeros((5, 5)); m[4, 1] = s; m[4, 2] = -s
        assert np.abs(expected[4][1] - m).max() < 1e-14  # ge0 nv2
        m = np.zeros((5, 5)); m[3, 1] = s; m[3, 2] = -s
        assert np.abs(expected[5][1] - m).max() < 1e-14  # ge1 nv2

    def test_effective_raman_phenomenological_channels(self):
        chans = build_collapse_ops(NOMINAL, ModelKind.EFFECTIVE_RAMAN)
        rates = effective_rates(NOMINAL)
        assert [r for r, _ in chans] == [rates.gamma_c, rates.gamma_e]
        for _, c in chans:
            m = c.matrix
            assert m[2, 0] == pytest.approx(1 / np.sqrt(2))
            assert m[2, 1] == pytest.approx(1 / np.sqrt(2))
            assert np.count_nonzero(m) == 2

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            build_collapse_ops(NOMINAL, "nope")


class TestOpenHamiltonians:
    def test_dressed_open_pads_dark_state(self):
        h5 = build_open_hamiltonian(NOMINAL, ModelKind.DRESSED_LAMBDA).matrix
        assert h5.shape == (5, 5)
        assert np.abs(h5[4, :]).max() == 0.0
        assert np.abs(h5[:4, :4] - build_dressed_lambda_h(NOMINAL).matrix).max() == 0.0

    def test_raman_open_pads_dark_state(self):
        h3 = build_open_hamiltonian(NOMINAL, ModelKind.EFFECTIVE_RAMAN).matrix
        assert h3.shape == (3, 3)
        assert np.abs(h3[2, :]).max() == 0.0


class TestStates:
    def test_dressed_states(self):
        plus = model.dressed_state(+1)
        minus = model.dressed_state(-1)
        i_e0 = S2NV.index_of(("e", "0"))
        i_0e = S2NV.index_of(("0", "e"))
        s = 1 / np.sqrt(2)
        assert plus.amplitudes[i_e0] == pytest.approx(s)
        assert plus.amplitudes[i_0e] == pytest.approx(s)
        assert minus.amplitudes[i_0e] == pytest.approx(-s)

    def test_epr_target(self):
        epr = model.epr_target()
        assert epr.amplitudes[S2NV.index_of(("1", "0"))] == pytest.approx(1 / np.sqrt(2))
        assert epr.amplitudes[S2NV.index_of(("0", "1"))] == pytest.approx(-1j / np.sqrt(2))
