"""Raman-mediated entanglement and state transfer between two NV-center
spin qubits coupled to a whispering-gallery cavity mode.

Library layout: ``hilbert`` (labeled tensor-product spaces, dense complex
algebra), ``model`` (the four Hamiltonian tiers, collapse operators,
derived rates), ``dynamics`` (unitary, master-equation and MCWF solvers),
``analysis`` (populations, fidelities, the correction gate, tier
comparison, regime maps), ``scenarios`` (protocol runners), ``cli``
(JSON-config command line producing CSV and meta artifacts).
"""

__version__ = "0.1.0"

from .hilbert import (
    DensityMatrix,
    HilbertSpace,
    Operator,
    StateVector,
    Subsystem,
    basis_state,
    embed,
    expect,
    identity,
    superpose,
    tensor,
    tensor_states,
    transition,
)
from .model import (
    CounterTerm,
    EffectiveRates,
    ExactCompensation,
    ModelKind,
    SystemParams,
    build_collapse_ops,
    build_dressed_lambda_h,
    build_effective_raman_h,
    build_full_cavity_h,
    build_hamiltonian,
    build_nine_level_h,
    build_nine_level_h_dressed,
    build_open_hamiltonian,
    dressed_state,
    effective_rates,
    epr_target,
    theta,
    xi,
)
from .dynamics import (
    EnsembleStats,
    NumericalIntegrityError,
    TimeGrid,
    TimeSeries,
    TrajectoryRecord,
    evolve_master,
    evolve_unitary,
    mcwf_ensemble,
    mcwf_trajectory,
)
from .analysis import (
    ComparisonReport,
    apply_phase_gate,
    compare_tiers,
    fidelity,
    population,
    population_observables,
    regime_map,
    transfer_fidelity,
)
from .scenarios import (
    SolverSpec,
    rate_sweep,
    grid_for,
    run_decay_check,
    run_entangle,
    run_transfer,
)
