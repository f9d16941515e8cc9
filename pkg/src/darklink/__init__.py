"""Adiabatic dark-state transfer between fiber-linked microwave cavities.

Deterministic moment-propagation simulator for a seven-mode chain of two
optomechanical transducers joined by a single fiber mode, with Gaussian and
qubit-average transfer fidelities and a sweep CLI.
"""

from .matops import as_complex_matrix, expm, ordered_propagator
from .network import (
    ADIABATIC_THRESHOLD,
    MECHANICAL_MODES,
    N_MODES,
    SPEED_OF_LIGHT,
    CouplingSchedule,
    EnhancedCoupling,
    Mode,
    NetworkParams,
    PhysicalParams,
    adiabaticity_metric,
    build_dynamics_matrix,
    dark_eigenvalue_perturbative,
    dark_state,
    enhanced_coupling,
    linear_ramp_schedule,
    short_fiber_mode_count,
)
from .engine import (
    DEFAULT_STEPS,
    STEP_NORM_FLOOR,
    STEP_NORM_TARGET,
    NoiseMoments,
    OracleMoments,
    Propagator,
    TransferChannel,
    characterize_channel,
    default_step_count,
    moment_ode_oracle,
    noise_second_moments,
    propagate,
    sum_rule_residuals,
)
from .fidelity import (
    INPUT_KINDS,
    GaussianState,
    InputSpec,
    apply_channel,
    channel_fidelity,
    gaussian_fidelity,
    qubit_avg_fidelity,
    squeezed_coherent_state,
    transfer_fidelity,
    transfer_fidelities,
    vacuum_state,
)

__version__ = "0.1.0"
