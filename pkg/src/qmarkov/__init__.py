"""Finite-dimensional Markovian open quantum systems and their entropy statistics.

The package simulates Lindblad dynamics, tests quantum detailed balance,
computes Lebowitz-Spohn entropy production and two-time measurement
statistics of entropic observables, extracts the equivalent classical Markov
chain when detailed balance holds, and provides reset-model closed forms as
analytic cross-checks.
"""

from .operators import (
    DimensionMismatch,
    HypothesisViolation,
    SpectralDecomposition,
    bracket,
    check_density_matrix,
    commutator,
    dagger,
    is_faithful,
    pinch,
    random_density,
    random_hermitian,
    rho_s_inner,
    spectral_decompose,
    state_log,
    state_power,
    trace_norm,
)
from .lindblad import (
    Lindbladian,
    Reservoir,
    ReservoirDecomposition,
    apply_dual,
    apply_generator,
    cp_map,
    deformed_matrix,
    dual_matrix,
    generator_matrix,
    is_relaxing,
    propagate,
    propagator,
    spectral_gap,
    steady_states,
    to_superoperator,
    unvectorize,
    vectorize,
)
from .detailed_balance import (
    DbReport,
    FagnolaFixture,
    check_db,
    check_pinch_commutation,
    commutation_identities,
    dissipator_selfadjoint_residual,
    fagnola_fixture,
    kms_state,
    pinch_commutation_defect,
)
from .entropy import (
    EntropyFlux,
    FinitenessScan,
    entropy_balance_residual,
    entropy_derivative,
    entropy_flux,
    entropy_observable,
    entropy_production,
    ep_component,
    finiteness_scan,
    relative_entropy,
    von_neumann_entropy,
)
from .two_time import (
    DeltaDistribution,
    ExpFluxReport,
    JointLaw,
    ReservoirStatistics,
    delta_distribution,
    ep_estimator,
    expected_delta,
    expflu,
    first_law,
    integrate_along_trajectory,
    joint_law,
    mgf,
    multi_reservoir_2tmp,
)
from .chain import (
    CTMC,
    chain_delta_distribution,
    chain_vs_quantum,
    classical_db_check,
    classical_mgf,
    extract_chain,
    invariant_vector,
    time_reversal_residual,
    transition_matrix,
)
from .reset import (
    QrmSpec,
    apply_reset,
    build_multi_reservoir,
    build_qrm,
    check_bohr,
    qrm_chain_closed,
    qrm_delta_closed,
    qrm_ep_closed,
    qrm_expected_delta_closed,
    qrm_mgf_closed,
    qrm_propagate_closed,
    qrm_spectrum,
    qrm_steady_state,
)
from .scenario import (
    Scenario,
    ScenarioError,
    ScenarioParseError,
    ScenarioValidationError,
    Tolerances,
    load_scenario,
    parse_scenario,
)
from .verify import CheckResult, run_verify

__version__ = "0.1.0"
