"""Transfer runs: time-ordered propagation of the 7-mode chain, bath-noise
second moments, and characterization of the microwave-to-microwave channel.

The one-sided moment conventions used throughout: decay enters the dynamics
as -i kappa/2 on the generator diagonal, and a bath of occupation N feeds
the symmetrized covariance at strength kappa (N + 1/2). Both constants are
pinned by the stationarity anchors (a static lossy cavity holds a vacuum at
variance 1/2 and thermalizes to N + 1/2), which the test suite checks for
the propagator-integral path and the ODE oracle independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import matops
from .network import (
    Mode,
    N_MODES,
    CouplingSchedule,
    NetworkParams,
    build_dynamics_matrix,
)

__all__ = [
    "STEP_NORM_TARGET",
    "STEP_NORM_FLOOR",
    "DEFAULT_STEPS",
    "Propagator",
    "NoiseMoments",
    "TransferChannel",
    "OracleMoments",
    "default_step_count",
    "propagate",
    "noise_second_moments",
    "sum_rule_residuals",
    "characterize_channel",
    "moment_ode_oracle",
]

#: Default per-step generator norm target, max_t |M(t)|_inf * dt <= this.
STEP_NORM_TARGET = 0.05

#: Hard resolution floor; propagate() refuses to run coarser than this.
STEP_NORM_FLOOR = 0.5

#: Step count used by the CLI and the acceptance suite at gT/2 = 25 scale.
DEFAULT_STEPS = 20_000


@dataclass(frozen=True)
class Propagator:
    """Accumulated evolution matrix P(T, 0) with step metadata.

    ``per_step`` holds the single-step factors (earliest first) so interior
    propagators P(T, t') can be assembled as suffix products without
    inverting lossy (non-unitary) matrices.
    """

    matrix: np.ndarray
    t: float
    steps: int
    midpoint: bool = True
    per_step: np.ndarray | None = None

    @property
    def dt(self) -> float:
        return self.t / self.steps


def _max_generator_norm(sched: CouplingSchedule, params: NetworkParams,
                        samples: int = 201) -> float:
    """max over a time grid of the infinity norm of M(t)."""
    ts = np.linspace(0.0, sched.T, samples)
    worst = 0.0
    for t in ts:
        m = build_dynamics_matrix(t, sched, params)
        worst = max(worst, float(np.abs(m).sum(axis=1).max()))
    return worst


def default_step_count(sched: CouplingSchedule, params: NetworkParams,
                       target: float = STEP_NORM_TARGET,
                       minimum: int = 100) -> int:
    """Step count that keeps max_t |M(t)| * dt at or below ``target``."""
    norm = _max_generator_norm(sched, params)
    if norm == 0.0:
        return minimum
    return max(minimum, math.ceil(norm * sched.T / target))


def propagate(sched: CouplingSchedule, params: NetworkParams, steps: int,
              *, midpoint: bool = True, keep_factors: bool = True) -> Propagator:
    """Accumulate the full transfer propagator P(T, 0).

    Raises if the requested resolution violates the hard step floor
    max|M| dt <= 0.5; the default target for production runs is 0.05.
    """
    steps = int(steps)
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    norm = _max_generator_norm(sched, params)
    dt = sched.T / steps
    if norm * dt > STEP_NORM_FLOOR:
        raise ValueError(
            f"step count {steps} too coarse: max|M| dt = {norm * dt:.3g} "
            f"exceeds the floor {STEP_NORM_FLOOR}; increase steps")

    def m_of_t(t: float) -> np.ndarray:
        return build_dynamics_matrix(t, sched, params)

    prod, factors = matops.ordered_propagator(
        m_of_t, 0.0, sched.T, steps, midpoint=midpoint, return_factors=True)
    return Propagator(matrix=prod, t=sched.T, steps=steps, midpoint=midpoint,
                      per_step=factors if keep_factors else None)


def _interior_row_weights(prop: Propagator, out_mode: int) -> np.ndarray:
    """|P(T, t_k)[out, ch]|^2 on the step grid t_k = k dt, shape (steps+1, 7).

    Row k is the out_mode row of the suffix product of the stored per-step
    factors from step k onward; row ``steps`` is the identity row and row 0
    reproduces the full propagator row.
    """
    if prop.per_step is None:
        raise ValueError("propagator was built without per-step factors; "
                         "rerun propagate() with keep_factors=True")
    factors = prop.per_step
    n = prop.steps
    weights = np.empty((n + 1, factors.shape[1]))
    row = np.zeros(factors.shape[1], dtype=complex)
    row[out_mode] = 1.0
    weights[n] = np.abs(row) ** 2
    for k in range(n - 1, -1, -1):
        row = row @ factors[k]
        weights[k] = np.abs(row) ** 2
    return weights


_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class NoiseMoments:
    """Second-moment bookkeeping for one output mode.

    added_noise_var    total bath contribution sum_ch kappa_ch (N_ch + 1/2) I_ch,
                       where I_ch = integral over [0,T] of |P(T,t')[out,ch]|^2
    channel_vars       the per-channel terms of that sum
    bath_integrals     kappa_ch * I_ch without the occupation factor
    thermal_excess     sum_ch kappa_ch N_ch I_ch (mechanical channels only)
    transmitted_weights |P(T,0)[out, j]|^2 per initial mode j
    sum_rule           transmitted weight plus integrated bath weight; equals 1
                       for the exact dynamics (commutator preservation)
    """

    added_noise_var: float
    channel_vars: np.ndarray
    bath_integrals: np.ndarray
    thermal_excess: float
    transmitted_weights: np.ndarray
    sum_rule: float
    sum_rule_residual: float


def noise_second_moments(prop: Propagator, params: NetworkParams,
                         out_mode: int = Mode.A_MW2) -> NoiseMoments:
    """Bath-driven second moments at ``out_mode`` via the trapezoidal rule
    on the stored step grid."""
    weights = _interior_row_weights(prop, out_mode)
    integrals = _trapezoid(weights, dx=prop.dt, axis=0)
    kappa = params.rate_vector()
    occ = params.bath_occupations()

    channel_vars = kappa * (occ + 0.5) * integrals
    bath_integrals = kappa * integrals
    transmitted = np.abs(prop.matrix[out_mode]) ** 2
    total = float(transmitted.sum() + bath_integrals.sum())
    return NoiseMoments(
        added_noise_var=float(channel_vars.sum()),
        channel_vars=channel_vars,
        bath_integrals=bath_integrals,
        thermal_excess=float((kappa * occ * integrals).sum()),
        transmitted_weights=transmitted,
        sum_rule=total,
        sum_rule_residual=abs(total - 1.0),
    )


def sum_rule_residuals(prop: Propagator, params: NetworkParams) -> np.ndarray:
    """|S - 1| of the commutator sum rule for every output row."""
    return np.array([
        noise_second_moments(prop, params, out_mode=o).sum_rule_residual
        for o in range(N_MODES)
    ])


@dataclass(frozen=True)
class TransferChannel:
    """Gaussian channel from microwave cavity 1 to microwave cavity 2.

    The channel acts on quadrature means and covariances (variance convention
    where vacuum is 1/2 per quadrature) as

        mean -> b @ mean,   cov -> b @ cov @ b.T + added_noise_var * I

    with b the rotation-scaling matrix of the complex transmitted amplitude
    c = P(T,0)[mw2, mw1]. All noise sources here are phase insensitive, so a
    single scalar variance describes the added noise.
    """

    transmitted_amp: complex
    added_noise_var: float
    sum_rule_residual: float = 0.0
    b: np.ndarray | None = None

    def __post_init__(self):
        c = complex(self.transmitted_amp)
        derived = np.array([[c.real, -c.imag], [c.imag, c.real]])
        if self.b is None:
            object.__setattr__(self, "b", derived)
        else:
            given = np.asarray(self.b, dtype=float)
            if given.shape != (2, 2) or not np.allclose(given, derived, atol=1e-9):
                raise ValueError("b must be the rotation-scaling matrix of "
                                 "transmitted_amp")
            object.__setattr__(self, "b", given)
        if not self.added_noise_var >= 0.0:
            raise ValueError(f"added_noise_var must be >= 0, got "
                             f"{self.added_noise_var}")
        if abs(c) ** 2 > 1.0 + 1e-4:
            raise ValueError(f"|c|^2 = {abs(c)**2} exceeds unity beyond "
                             f"tolerance; propagation is unphysical")

    def vacuum_output_covariance(self) -> np.ndarray:
        """2x2 output quadrature covariance for a vacuum input (vacuum = I/2)."""
        return 0.5 * (self.b @ self.b.T) + self.added_noise_var * np.eye(2)


def characterize_channel(sched: CouplingSchedule, params: NetworkParams,
                         steps: int, *, midpoint: bool = True) -> TransferChannel:
    """Propagate a full transfer and package the output-mode channel.

    The added noise collects the transmitted vacuum of every non-input
    initial mode plus all integrated bath contributions:

        sigma_env = 1/2 sum_{j != mw1} |P(T,0)[mw2,j]|^2
                    + 1/2 sum_ch kappa_ch I_ch + thermal excess

    which equals 1/2 (S - |c|^2) + thermal excess with S the sum rule.
    """
    prop = propagate(sched, params, steps, midpoint=midpoint)
    moments = noise_second_moments(prop, params, out_mode=Mode.A_MW2)
    c = complex(prop.matrix[Mode.A_MW2, Mode.A_MW1])
    vacuum_leak = moments.transmitted_weights.sum() \
        - moments.transmitted_weights[Mode.A_MW1]
    env = 0.5 * (vacuum_leak + moments.bath_integrals.sum()) \
        + moments.thermal_excess
    return TransferChannel(
        transmitted_amp=c,
        added_noise_var=float(env),
        sum_rule_residual=moments.sum_rule_residual,
    )


@dataclass(frozen=True)
class OracleMoments:
    """Independent moment solution: RK4 mean map and symmetrized covariance."""

    mean_map: np.ndarray        # solves dP/dt = -i M(t) P, P(0) = I
    second_moments: np.ndarray  # C(T) with dC/dt = -i M C + i C M^dag + Q


def moment_ode_oracle(sched: CouplingSchedule, params: NetworkParams,
                      steps: int, c0: np.ndarray | None = None) -> OracleMoments:
    """Classical RK4 integration of the first and second moment equations.

    C is the symmetrized covariance <{dv, dv^dag}>/2 and Q = diag(kappa_ch
    (N_ch + 1/2)). The default initial covariance is vacuum in every mode,
    C(0) = I/2. This route shares no code with the time-ordered product and
    serves as its cross-check.
    """
    steps = int(steps)
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    dt = sched.T / steps
    q = np.diag(params.rate_vector() * (params.bath_occupations() + 0.5)) \
        .astype(complex)
    mean_map = np.eye(N_MODES, dtype=complex)
    cov = 0.5 * np.eye(N_MODES, dtype=complex) if c0 is None \
        else np.array(c0, dtype=complex)

    def mean_rate(m, p):
        return -1j * (m @ p)

    def cov_rate(m, c):
        return -1j * (m @ c) + 1j * (c @ m.conj().T) + q

    for k in range(steps):
        t = k * dt
        m0 = build_dynamics_matrix(t, sched, params)
        m1 = build_dynamics_matrix(t + 0.5 * dt, sched, params)
        m2 = build_dynamics_matrix(min(t + dt, sched.T), sched, params)

        k1p = mean_rate(m0, mean_map)
        k1c = cov_rate(m0, cov)
        k2p = mean_rate(m1, mean_map + 0.5 * dt * k1p)
        k2c = cov_rate(m1, cov + 0.5 * dt * k1c)
        k3p = mean_rate(m1, mean_map + 0.5 * dt * k2p)
        k3c = cov_rate(m1, cov + 0.5 * dt * k2c)
        k4p = mean_rate(m2, mean_map + dt * k3p)
        k4c = cov_rate(m2, cov + dt * k3c)

        mean_map = mean_map + (dt / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p)
        cov = cov + (dt / 6.0) * (k1c + 2 * k2c + 2 * k3c + k4c)

    return OracleMoments(mean_map=mean_map, second_moments=cov)
