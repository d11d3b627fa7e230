"""Steady-state energy loss of a periodically driven transmon."""

__version__ = "0.1.0"

from .charge import (
    ChargeOperator,
    DriveParams,
    OperatorKind,
    TransmonParams,
    build_coupling_operator,
    build_static_hamiltonian,
    hamiltonian_at_time,
    static_eigensystem,
)
from .dissipation import (
    AliasingWarning,
    LossReport,
    RateMatrix,
    RateTensor,
    TransitionTensor,
    compute_loss,
    fourier_components,
    loss_rate,
    parity_averaged_loss,
    run_pipeline,
    steady_state,
    total_rate_matrix,
    transition_rates,
)
from .floquet import (
    ChaoticClassification,
    FloquetBasis,
    ModeTable,
    NumericalConfig,
    averaged_energy,
    chaotic_threshold_scan,
    classify_chaotic,
    compute_floquet_basis,
    floquet_basis,
    ground_connected_mode,
    mode_table,
    one_period_propagator,
)
from .spectra import DielectricBath, Mechanism, QpgBath, RadiativeBath
from .resonator import (
    ResonatorParams,
    kappa_from_s21,
    omega_q_from_photons,
    photons_from_power,
    predicted_kappa,
    vjj_amplitude,
)
from .config import SweepConfig, load_config, resolve_config
from .sweep import compare, run_sweep
from .diagnostics import dump_diagnostics
