"""Heat transport through a qubit coupled to a phonon mode, at arbitrary coupling.

The qubit-phonon Hamiltonian is diagonalized exactly in a displaced-Fock
("dressed") basis; weak system-bath coupling then reduces the dressed master
equation to classical rate equations between dressed eigenstates, whose
stationary solution gives the bath-resolved heat currents.
"""
from .analysis import (
    InsufficientGrid,
    NDTCReport,
    Setup,
    SweepResult,
    SweepSpec,
    TransistorSetup,
    amplification_factor,
    bias_temperatures,
    detect_ndtc,
    evaluate_point,
    rectification_factor,
    sweep_coupling,
    sweep_detuning,
    sweep_gate,
    sweep_rectification,
    sweep_temperature_bias,
)
from .baths import BathLabel, BathSpec, bose_occupation, ohmic_spectral, sequential_rates
from .hilbert import (
    DressedBasis,
    DressedState,
    HybridSystem,
    TwoQubitSystem,
    a_dagger_element,
    build_dressed_basis,
    build_two_qubit_basis,
    displacement_coefficient,
    displacement_table,
    sigma_x_element,
)
from .liouvillian import (
    RateMatrixSet,
    build_rate_matrices,
    build_rates_for,
    build_two_qubit_rate_matrices,
    transition_rate,
    weak_coupling_generators,
)
from .observables import (
    CurrentReport,
    bath_currents,
    current_report,
    heat_current,
    qubit_polarization,
    strong_coupling_current,
    thermal_branch_current,
    weak_limit_current,
)
from .steadystate import (
    NoConvergence,
    NonErgodic,
    SingularReducedOperator,
    SolverFailure,
    SteadyStateError,
    SteadyStateResult,
    StepTooLarge,
    TruncationPolicy,
    certify,
    certify_truncation,
    decoupled_populations,
    evolve_to_stationarity,
    solve_steady_state,
    solve_weak_coupling_perturbative,
    strong_coupling_populations,
)

__version__ = "0.1.0"
