"""Model tiers for two driven three-level emitters sharing a cavity bus.

Physical setting
----------------
Two NV centers sit near the equator of a high-Q whispering-gallery
microresonator. Each center is an effective Lambda system with ground spin
states |0>, |1> and excited state |e>. The cavity mode couples |0><->|e>
dispersively (coupling g_j, detuning Delta), and a resonant laser drives
|1><->|e| with Rabi frequency Omega_j. Virtual photon exchange produces a
dipole-dipole interaction of magnitude Theta = g1*g2/Delta between the
centers, and the drives then open a two-photon Raman channel of rate
xi = Omega1*Omega2/Theta between |10> and |01>.

Model tiers
-----------
FULL_CAVITY
    NV1 x NV2 x cavity, H = Delta*ad*a + sum_j g_j (a sigma^j_e0 + h.c.)
    + sum_j Omega_j (sigma^j_e1 + h.c.) + Stark counter-term. In this
    rotating frame the one-photon states sit Delta above the vacuum ones,
    so eliminating the cavity yields the flip-flop -Theta(|e0><0e| + h.c.)
    and a -g_j^2/Delta vacuum shift on each |e>_j, which the counter-term
    cancels (see ``StarkCompensation``).
NINE_LEVEL
    The two-NV space after cavity elimination:
    H = sum_j Omega_j (sigma^j_e1 + h.c.) - Theta(|e0><0e| + h.c.).
    It block-decomposes over span{|10>,|+>,|->,|01>} (the transfer
    manifold) and its five-state complement; |00> is exactly dark.
DRESSED_LAMBDA
    The transfer manifold written in the dressed basis
    |+-> = (|e0> +- |0e>)/sqrt(2): an effective Lambda system with
    intermediate levels at -Theta (|+>) and +Theta (|->), legs
    Lambda_i = Omega_i/sqrt(2).
EFFECTIVE_RAMAN
    After eliminating |+->: H = xi (|10><01| + |01><10|). Starting from
    |10> this gives cos(xi t)|10> - i sin(xi t)|01>, the EPR state at
    xi*tau = pi/4 and full transfer at xi*t_f = pi/2.

Sign convention
---------------
The dressed intermediate at -Theta is the symmetric state |+>: with the
cavity above the vacuum sector, the collective dispersive shift pushes the
(coupled) symmetric combination down and leaves the antisymmetric one up.
Both Raman paths then interfere to give the +xi effective coupling that
the -i transfer phase (and the diag(1, i) correction gate) assumes.

Dissipation
-----------
``build_collapse_ops`` returns (rate, operator) channels for the master
equation written with the doubled Lindblad form
rate*(2 C rho Cd - Cd C rho - rho Cd C), so a single channel of rate r
decays population at 2r. Channels per tier: cavity loss kappa (full model
only), ground relaxation gamma_10 (|0><1| each NV), and excited decay
gamma_e0, gamma_e1 (|0><e|, |1><e| each NV). Reduced tiers get the same
channels projected onto their simulation spaces.

All frequencies and rates are dimensionless (units of a reference
coupling g, typically g1 = g2 = 1); physical-unit conversion lives in
the CLI layer.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum
from math import pi, sqrt

import numpy as np

from .hilbert import (
    HilbertSpace,
    Operator,
    StateVector,
    Subsystem,
    basis_state,
    embed,
    identity,
    superpose,
    tensor,
    transition,
)

NV_LEVELS = ("0", "1", "e")

# Transfer-manifold basis order used throughout (matrix rows/columns of the
# dressed builders, and the five-state dissipative space adds "00").
DRESSED_LABELS = ("10", "+", "-", "01")
DRESSED_OPEN_LABELS = ("10", "+", "-", "01", "00")
RAMAN_LABELS = ("10", "01")
RAMAN_OPEN_LABELS = ("10", "01", "00")


class ModelKind(Enum):
    FULL_CAVITY = "full_cavity"
    NINE_LEVEL = "nine_level"
    DRESSED_LAMBDA = "dressed_lambda"
    EFFECTIVE_RAMAN = "effective_raman"


class ExactCompensation:
    """Counter-term +sum_j (g_j^2/Delta) sigma^j_ee, cancelling the
    vacuum-induced dispersive shift of each |e>_j exactly at photon
    number zero."""

    def __repr__(self):
        return "ExactCompensation()"

    def __eq__(self, other):
        return isinstance(other, ExactCompensation)

    def __hash__(self):
        return hash("ExactCompensation")


@dataclass(frozen=True)
class CounterTerm:
    """Drive-derived counter-term +sum_j (omega_prime^2/delta_prime)
    sigma^j_ee for compensation sensitivity studies; omega_prime = 0
    disables compensation entirely."""

    omega_prime: float
    delta_prime: float

    def __post_init__(self):
        if self.delta_prime == 0.0:
            raise ValueError("counter-term detuning delta_prime must be nonzero")

    @property
    def shift(self) -> float:
        return self.omega_prime**2 / self.delta_prime


StarkCompensation = ExactCompensation | CounterTerm


@dataclass(frozen=True)
class SystemParams:
    """All model-level couplings and rates, in units of a reference g.

    Parameters
    ----------
    g1, g2 : float
        NV-cavity couplings.
    delta : float
        Cavity detuning Delta from the |0>-|e> transition.
    omega1, omega2 : float
        Resonant drive Rabi frequencies on |1>-|e>.
    kappa : float
        Cavity field decay rate.
    gamma_e0, gamma_e1 : float
        Excited-state decay rates into |0> and |1|.
    gamma_10 : float
        Ground-manifold relaxation |1> -> |0>.
    stark_compensation : ExactCompensation or CounterTerm
    n_fock : int
        Number of cavity Fock levels kept (2 = vacuum plus one photon).
    """

    g1: float = 1.0
    g2: float = 1.0
    delta: float = 10.0
    omega1: float = 0.01
    omega2: float = 0.01
    kappa: float = 0.0
    gamma_e0: float = 0.0
    gamma_e1: float = 0.0
    gamma_10: float = 0.0
    stark_compensation: StarkCompensation = field(default_factory=ExactCompensation)
    n_fock: int = 2

    def __post_init__(self):
        for name in ("kappa", "gamma_e0", "gamma_e1", "gamma_10"):
            if getattr(self, name) < 0:
                raise ValueError(f"rate {name} must be non-negative")
        if self.n_fock < 1:
            raise ValueError("n_fock must be at least 1")
        gmax = max(abs(self.g1), abs(self.g2))
        if gmax > 0 and abs(self.delta) < 5 * gmax:
            warnings.warn(
                "dispersive validity is marginal: |delta| < 5*max(g1, g2)",
                stacklevel=2,
            )

    def replace(self, **changes) -> "SystemParams":
        from dataclasses import replace as _replace

        return _replace(self, **changes)


@dataclass(frozen=True)
class EffectiveRates:
    """Derived protocol rates and the strong-coupling verdict.

    gamma_c = g1*g2*kappa/Delta^2 is the cavity-induced loss rate,
    gamma_e = (Omega1*Omega2/Theta^2)*(gamma_e0 + gamma_e1) the
    emitter-induced one (excited_occupation = Omega1*Omega2/Theta^2 is the
    transient |e> population during transfer). Coherent transfer requires
    xi^2 >= gamma_c*gamma_e.
    """

    theta: float
    xi: float
    gamma_c: float
    gamma_e: float
    excited_occupation: float
    t_entangle: float
    t_transfer: float
    strong_coupling: bool


def theta(p: SystemParams) -> float:
    """Cavity-mediated dipole-dipole magnitude g1*g2/Delta."""
    if p.delta == 0.0:
        raise ValueError("theta is undefined at zero detuning")
    return p.g1 * p.g2 / p.delta


def xi(p: SystemParams) -> float:
    """Two-photon Raman rate Omega1*Omega2/Theta."""
    th = theta(p)
    if th == 0.0:
        raise ValueError("xi is undefined at zero dipole-dipole coupling")
    return p.omega1 * p.omega2 / th


def effective_rates(p: SystemParams) -> EffectiveRates:
    th = theta(p)
    x = xi(p)
    if x == 0.0:
        raise ValueError("effective rates are undefined at zero Raman rate")
    occ = p.omega1 * p.omega2 / th**2
    gamma_c = p.g1 * p.g2 * p.kappa / p.delta**2
    gamma_e = occ * (p.gamma_e0 + p.gamma_e1)
    return EffectiveRates(
        theta=th,
        xi=x,
        gamma_c=gamma_c,
        gamma_e=gamma_e,
        excited_occupation=occ,
        t_entangle=pi / (4 * x),
        t_transfer=pi / (2 * x),
        strong_coupling=x**2 >= gamma_c * gamma_e,
    )


# ---------------------------------------------------------------------------
# Spaces
# ---------------------------------------------------------------------------

def nv_subsystem(name: str) -> Subsystem:
    return Subsystem(name, NV_LEVELS)


def nv_space() -> HilbertSpace:
    """Single three-level emitter."""
    return HilbertSpace((nv_subsystem("nv"),))


def two_nv_space() -> HilbertSpace:
    """Bare product space NV1 x NV2 (dimension 9)."""
    return HilbertSpace((nv_subsystem("nv1"), nv_subsystem("nv2")))


def cavity_subsystem(n_fock: int) -> Subsystem:
    return Subsystem("cavity", tuple(str(n) for n in range(n_fock)))


def cavity_space(n_fock: int) -> HilbertSpace:
    return HilbertSpace((cavity_subsystem(n_fock),))


def full_space(n_fock: int) -> HilbertSpace:
    """NV1 x NV2 x cavity."""
    return HilbertSpace(
        (nv_subsystem("nv1"), nv_subsystem("nv2"), cavity_subsystem(n_fock))
    )


def dressed_space() -> HilbertSpace:
    """Transfer manifold in the dressed basis {|10>,|+>,|->,|01>}."""
    return HilbertSpace((Subsystem("transfer", DRESSED_LABELS),))


def dressed_open_space() -> HilbertSpace:
    """Dressed transfer manifold plus the dark sink |00> (dissipative runs)."""
    return HilbertSpace((Subsystem("transfer", DRESSED_OPEN_LABELS),))


def raman_space() -> HilbertSpace:
    """Two-state Raman space {|10>,|01>}."""
    return HilbertSpace((Subsystem("raman", RAMAN_LABELS),))


def raman_open_space() -> HilbertSpace:
    """Raman space plus the dark component |00>."""
    return HilbertSpace((Subsystem("raman", RAMAN_OPEN_LABELS),))


def nine_level_dressed_space() -> HilbertSpace:
    """The full two-NV space in the ordered dressed basis."""
    labels = ("10", "+", "-", "01", "11", "00", "ee", "1e", "e1")
    return HilbertSpace((Subsystem("two_nv_dressed", labels),))


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------

def dressed_state(sign: int) -> StateVector:
    """|+-> = (|e0> +- |0e>)/sqrt(2) on the bare two-NV space."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    space = two_nv_space()
    return superpose(
        [basis_state(space, ("e", "0")), basis_state(space, ("0", "e"))],
        [1.0, float(sign)],
    )


def epr_target() -> StateVector:
    """(|10> - i|01>)/sqrt(2) on the bare two-NV space."""
    space = two_nv_space()
    return superpose(
        [basis_state(space, ("1", "0")), basis_state(space, ("0", "1"))],
        [1.0, -1.0j],
    )


# ---------------------------------------------------------------------------
# Hamiltonian builders
# ---------------------------------------------------------------------------

def _nv_op(a: str, b: str) -> Operator:
    """|a><b| on a single emitter."""
    return transition(nv_space(), a, b)


def _drive_matrix(om: float) -> np.ndarray:
    m = _nv_op("e", "1").matrix + _nv_op("1", "e").matrix
    return om * m


def build_nine_level_h(p: SystemParams) -> Operator:
    """Two-NV Hamiltonian after cavity elimination, bare product basis.

    H = Omega1 (sigma^1_e1 + h.c.) + Omega2 (sigma^2_e1 + h.c.)
        - Theta (|e0><0e| + |0e><e0|).
    """
    space = two_nv_space()
    th = theta(p)
    h = embed(Operator(nv_space(), _drive_matrix(p.omega1)), 0, space)
    h = h + embed(Operator(nv_space(), _drive_matrix(p.omega2)), 1, space)
    flip = transition(space, ("e", "0"), ("0", "e"))
    h = h + (-th) * (flip + flip.dagger())
    return h.assert_hermitian()


def nine_level_basis_transform() -> Operator:
    """Isometry from the bare two-NV basis to the ordered dressed basis.

    Rows follow {|10>,|+>,|->,|01>,|11>,|00>,|ee>,|1e>,|e1>}; the matrix W
    satisfies H_dressed = W H_bare W^dagger. It is returned on the bare
    space (it maps bare coordinates to dressed coordinates).
    """
    bare = two_nv_space()
    s = 1 / sqrt(2)
    rows = []
    def bare_vec(l1, l2):
        v = np.zeros(9, dtype=complex)
        v[bare.index_of((l1, l2))] = 1.0
        return v

    rows.append(bare_vec("1", "0"))
    rows.append(s * (bare_vec("e", "0") + bare_vec("0", "e")))
    rows.append(s * (bare_vec("e", "0") - bare_vec("0", "e")))
    rows.append(bare_vec("0", "1"))
    rows.append(bare_vec("1", "1"))
    rows.append(bare_vec("0", "0"))
    rows.append(bare_vec("e", "e"))
    rows.append(bare_vec("1", "e"))
    rows.append(bare_vec("e", "1"))
    return Operator(bare, np.array(rows))


def build_nine_level_h_dressed(p: SystemParams) -> Operator:
    """Nine-level Hamiltonian in the ordered dressed basis.

    Explicit matrix (Lambda_i = Omega_i/sqrt(2)):

        [[ 0   L1   L1   0    0   0   0   0   0 ]
         [ L1  -Th  0    L2   0   0   0   0   0 ]
         [ L1  0    +Th  -L2  0   0   0   0   0 ]
         [ 0   L2   -L2  0    0   0   0   0   0 ]
         [ 0   0    0    0    0   0   0   O2  O1]
         [ 0   0    0    0    0   0   0   0   0 ]
         [ 0   0    0    0    0   0   0   O1  O2]
         [ 0   0    0    0    O2  0   O1  0   0 ]
         [ 0   0    0    0    O1  0   O2  0   0 ]]

    The |00> row is identically zero (dark state). The dressed diagonal
    carries -Theta on |+> and +Theta on |->; see the module docstring for
    why this assignment (rather than the opposite) is the one consistent
    with the -i Raman transfer phase and with the full-cavity tier.
    """
    w = nine_level_basis_transform().matrix
    h_bare = build_nine_level_h(p).matrix
    return Operator(nine_level_dressed_space(), w @ h_bare @ w.conj().T)


def build_dressed_lambda_h(p: SystemParams) -> Operator:
    """Effective Lambda system on {|10>,|+>,|->,|01>}.

    Equals the transfer-manifold block of the nine-level Hamiltonian
    entry for entry: intermediate energies -Theta (|+>) and +Theta (|->),
    legs Lambda_1 from |10> to both, and Lambda_2 / -Lambda_2 from |01>.
    """
    th = theta(p)
    l1 = p.omega1 / sqrt(2)
    l2 = p.omega2 / sqrt(2)
    m = np.array(
        [
            [0.0, l1, l1, 0.0],
            [l1, -th, 0.0, l2],
            [l1, 0.0, +th, -l2],
            [0.0, l2, -l2, 0.0],
        ],
        dtype=complex,
    )
    return Operator(dressed_space(), m).assert_hermitian()


def build_effective_raman_h(p: SystemParams) -> Operator:
    """Two-state Raman Hamiltonian xi (|10><01| + |01><10|).

    Valid for Theta >> Omega_1, Omega_2; a warning is raised when the
    ratio is below 5.
    """
    x = xi(p)
    th = abs(theta(p))
    if th < 5 * max(abs(p.omega1), abs(p.omega2)):
        warnings.warn(
            "effective Raman validity is marginal: Theta < 5*max(Omega1, Omega2)",
            stacklevel=2,
        )
    m = np.array([[0.0, x], [x, 0.0]], dtype=complex)
    return Operator(raman_space(), m)


def cavity_annihilation(n_fock: int) -> Operator:
    a = np.diag(np.sqrt(np.arange(1, n_fock, dtype=float)), k=1)
    return Operator(cavity_space(n_fock), a)


def build_full_cavity_h(p: SystemParams) -> Operator:
    """Dispersive two-NV-plus-cavity Hamiltonian.

    H = Delta ad a
        + sum_j g_j (a sigma^j_e0 + ad sigma^j_0e)
        + sum_j Omega_j (sigma^j_e1 + sigma^j_1e)
        + counter-term per ``stark_compensation``.

    With ExactCompensation the counter-term is +sum_j (g_j^2/Delta)
    sigma^j_ee, which exactly cancels the vacuum-induced dispersive shift
    of the |e> levels, leaving the dressed pair split at -+Theta around
    the ground manifold. Second-order elimination of the (vacuum) cavity
    then reproduces the nine-level tier, which is verified numerically by
    the tier-agreement checks rather than asserted.
    """
    space = full_space(p.n_fock)
    nf = p.n_fock
    a = cavity_annihilation(nf)
    h = embed(p.delta * (a.dagger() @ a), 2, space)
    for j, g in ((0, p.g1), (1, p.g2)):
        low = embed(_nv_op("0", "e"), j, space)  # sigma_0e
        a_full = embed(a, 2, space)
        term = g * (a_full.dagger() @ low)
        h = h + term + term.dagger()
    for j, om in ((0, p.omega1), (1, p.omega2)):
        h = h + embed(Operator(nv_space(), _drive_matrix(om)), j, space)
    comp = p.stark_compensation
    if isinstance(comp, ExactCompensation):
        shifts = (p.g1**2 / p.delta, p.g2**2 / p.delta)
    else:
        shifts = (comp.shift, comp.shift)
    for j, s in ((0, shifts[0]), (1, shifts[1])):
        if s != 0.0:
            h = h + s * embed(_nv_op("e", "e"), j, space)
    return h.assert_hermitian()


def build_hamiltonian(p: SystemParams, kind: ModelKind) -> Operator:
    """Tier dispatch; reduced dissipative tiers use their open spaces."""
    if kind is ModelKind.FULL_CAVITY:
        return build_full_cavity_h(p)
    if kind is ModelKind.NINE_LEVEL:
        return build_nine_level_h(p)
    if kind is ModelKind.DRESSED_LAMBDA:
        return build_dressed_lambda_h(p)
    if kind is ModelKind.EFFECTIVE_RAMAN:
        return build_effective_raman_h(p)
    raise ValueError(f"unknown model kind {kind!r}")


# ---------------------------------------------------------------------------
# Collapse operators
# ---------------------------------------------------------------------------

def _nv_channels(p: SystemParams) -> list[tuple[float, str, str, int]]:
    """(rate, to_level, from_level, nv_index) for both emitters."""
    out = []
    for j in (0, 1):
        out.append((p.gamma_10, "0", "1", j))
        out.append((p.gamma_e0, "0", "e", j))
        out.append((p.gamma_e1, "1", "e", j))
    return out


def transfer_manifold_projector() -> np.ndarray:
    """Isometry (5 x 9) from the bare two-NV basis onto
    {|10>,|+>,|->,|01>,|00>}."""
    w = nine_level_basis_transform().matrix
    return w[[0, 1, 2, 3, 5], :]


def raman_manifold_projector() -> np.ndarray:
    """Isometry (3 x 9) from the bare two-NV basis onto {|10>,|01>,|00>}."""
    bare = two_nv_space()
    rows = np.zeros((3, 9), dtype=complex)
    rows[0, bare.index_of(("1", "0"))] = 1.0
    rows[1, bare.index_of(("0", "1"))] = 1.0
    rows[2, bare.index_of(("0", "0"))] = 1.0
    return rows


def build_collapse_ops(p: SystemParams, kind: ModelKind) -> list[tuple[float, Operator]]:
    """Dissipation channels for the chosen tier.

    Rates pair with jump operators under the doubled Lindblad convention;
    zero-rate channels are omitted. FULL_CAVITY carries the cavity loss
    channel plus six emitter channels; NINE_LEVEL the six emitter channels;
    DRESSED_LAMBDA the emitter channels projected onto the five-state
    space (jumps out of |+-> land in |00>, |10> or |01>, which that space
    contains, so the projection is exact); EFFECTIVE_RAMAN two
    phenomenological channels draining the delocalized excitation into
    |00> at the derived rates gamma_c and gamma_e.
    """
    if kind is ModelKind.FULL_CAVITY:
        space = full_space(p.n_fock)
        out = []
        if p.kappa > 0:
            out.append((p.kappa, embed(cavity_annihilation(p.n_fock), 2, space)))
        for rate, to_l, from_l, j in _nv_channels(p):
            if rate > 0:
                out.append((rate, embed(_nv_op(to_l, from_l), j, space)))
        return out
    if kind is ModelKind.NINE_LEVEL:
        space = two_nv_space()
        return [
            (rate, embed(_nv_op(to_l, from_l), j, space))
            for rate, to_l, from_l, j in _nv_channels(p)
            if rate > 0
        ]
    if kind is ModelKind.DRESSED_LAMBDA:
        space = two_nv_space()
        proj = transfer_manifold_projector()
        out = []
        for rate, to_l, from_l, j in _nv_channels(p):
            if rate > 0:
                c9 = embed(_nv_op(to_l, from_l), j, space).matrix
                out.append((rate, Operator(dressed_open_space(), proj @ c9 @ proj.conj().T)))
        return out
    if kind is ModelKind.EFFECTIVE_RAMAN:
        rates = effective_rates(p)
        space = raman_open_space()
        c = np.zeros((3, 3), dtype=complex)
        c[2, 0] = 1 / sqrt(2)
        c[2, 1] = 1 / sqrt(2)
        sink = Operator(space, c)
        out = []
        if rates.gamma_c > 0:
            out.append((rates.gamma_c, sink))
        if rates.gamma_e > 0:
            out.append((rates.gamma_e, sink))
        return out
    raise ValueError(f"unknown model kind {kind!r}")


def build_open_hamiltonian(p: SystemParams, kind: ModelKind) -> Operator:
    """Hamiltonian on the same space as ``build_collapse_ops(p, kind)``.

    For the reduced tiers this pads the coherent block with the dark |00>
    state so dissipative runs have somewhere to decay to.
    """
    if kind in (ModelKind.FULL_CAVITY, ModelKind.NINE_LEVEL):
        return build_hamiltonian(p, kind)
    if kind is ModelKind.DRESSED_LAMBDA:
        m = np.zeros((5, 5), dtype=complex)
        m[:4, :4] = build_dressed_lambda_h(p).matrix
        return Operator(dressed_open_space(), m)
    if kind is ModelKind.EFFECTIVE_RAMAN:
        m = np.zeros((3, 3), dtype=complex)
        m[:2, :2] = build_effective_raman_h(p).matrix
        return Operator(raman_open_space(), m)
    raise ValueError(f"unknown model kind {kind!r}")


def expansion_to_bare(space: HilbertSpace) -> np.ndarray | None:
    """Isometry embedding a reduced-tier space into the bare two-NV space.

    Returns a (9 x d) matrix V with V^dagger V = I, or None when the space
    already is the bare two-NV space (or is not a known reduced space).
    """
    if space == two_nv_space():
        return None
    if space == dressed_open_space():
        return transfer_manifold_projector().conj().T
    if space == dressed_space():
        return transfer_manifold_projector()[:4].conj().T
    if space == raman_open_space():
        return raman_manifold_projector().conj().T
    if space == raman_space():
        return raman_manifold_projector()[:2].conj().T
    return None
