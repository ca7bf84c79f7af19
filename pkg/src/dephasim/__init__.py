"""dephasim: thermal-photon dephasing of a dispersively coupled qubit.

Device math (dispersive shifts, occupations, cavity modes), a dense
Lindblad master-equation engine, closed-form dephasing rates, simulated
relaxation/Ramsey protocols with least-squares extraction, and a CLI.
"""

from .analytics import (
    BathChannel,
    DephasingInput,
    DephasingPrediction,
    classify_regime,
    gamma_thermal_exact,
    gamma_thermal_saturation,
    gamma_thermal_small_chi,
    make_prediction,
    predict_t2,
)
from .device import (
    CavityGeometry,
    CoherenceRecord,
    DeviceParams,
    DissipationSource,
    charging_energy,
    coupling_efficiency,
    derived_chi_over_2pi,
    dispersive_chi,
    effective_chi_over_2pi,
    kappa_from_q,
    modes_coupled_at_center,
    pure_dephasing_rate,
    purcell_t1,
    quality_factors,
    rectangular_mode_freq,
    temperature_for_occupation,
    thermal_occupation,
    transmon_f01,
)
from .engine import (
    EvolveOptions,
    HilbertConfig,
    LindbladTerm,
    SystemOperators,
    build_dissipators,
    build_hamiltonian,
    build_operators,
    default_fock_cutoff,
    effective_bath_occupation,
    evolve,
    evolve_states,
    expectation,
    lindblad_rhs,
    liouvillian_matrix,
    steady_state,
    thermal_cavity_state,
)
from .errors import (
    AliasingWarning,
    ChiDiscrepancyWarning,
    CoherenceRatioWarning,
    ConfigError,
    DephasimError,
    FitFailureError,
    InvalidParameterError,
    NumericalFailureError,
    RegimeValidityWarning,
    SingularParameterError,
    SteadyStateAmbiguityError,
)
from .experiments import (
    COSINE_PARAMS,
    EXPONENTIAL_PARAMS,
    FitResult,
    add_noise,
    decaying_cosine_model,
    exponential_model,
    extract_coherence,
    fit_coherence_series,
    fit_decaying_cosine,
    fit_exponential,
    simulate_ramsey,
    simulate_t1,
)
from .series import TimeSeries

__version__ = "0.1.0"

__all__ = [
    "AliasingWarning",
    "BathChannel",
    "CavityGeometry",
    "COSINE_PARAMS",
    "ChiDiscrepancyWarning",
    "CoherenceRatioWarning",
    "CoherenceRecord",
    "ConfigError",
    "DephasimError",
    "DephasingInput",
    "DephasingPrediction",
    "DeviceParams",
    "DissipationSource",
    "EvolveOptions",
    "EXPONENTIAL_PARAMS",
    "FitFailureError",
    "FitResult",
    "HilbertConfig",
    "InvalidParameterError",
    "LindbladTerm",
    "NumericalFailureError",
    "RegimeValidityWarning",
    "SingularParameterError",
    "SteadyStateAmbiguityError",
    "SystemOperators",
    "TimeSeries",
    "add_noise",
    "build_dissipators",
    "build_hamiltonian",
    "build_operators",
    "charging_energy",
    "classify_regime",
    "coupling_efficiency",
    "decaying_cosine_model",
    "default_fock_cutoff",
    "derived_chi_over_2pi",
    "dispersive_chi",
    "effective_bath_occupation",
    "effective_chi_over_2pi",
    "evolve",
    "evolve_states",
    "expectation",
    "exponential_model",
    "extract_coherence",
    "fit_coherence_series",
    "fit_decaying_cosine",
    "fit_exponential",
    "gamma_thermal_exact",
    "gamma_thermal_saturation",
    "gamma_thermal_small_chi",
    "kappa_from_q",
    "lindblad_rhs",
    "liouvillian_matrix",
    "make_prediction",
    "modes_coupled_at_center",
    "predict_t2",
    "pure_dephasing_rate",
    "purcell_t1",
    "quality_factors",
    "rectangular_mode_freq",
    "simulate_ramsey",
    "simulate_t1",
    "steady_state",
    "temperature_for_occupation",
    "thermal_cavity_state",
    "thermal_occupation",
    "transmon_f01",
]
