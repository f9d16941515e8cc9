"""Physical description of the fiber-linked transducer chain.

Seven bosonic modes form the transfer path: optical cavity 1, mechanical
oscillator 1, microwave cavity 1, the fiber mode, and the mirrored trio on
side 2. This module owns the mode ordering, the loss/coupling parameter
set, the pulse schedules, the 7x7 dynamics generator, and the dark-state
analysis used to reason about the adiabatic transfer. All simulation
quantities are dimensionless (rates in units of the peak coupling g, or of
1/T); the only SI entry point is :func:`enhanced_coupling`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, NamedTuple

import numpy as np
from scipy.constants import hbar as _HBAR

__all__ = [
    "N_MODES",
    "Mode",
    "MECHANICAL_MODES",
    "ADIABATIC_THRESHOLD",
    "SPEED_OF_LIGHT",
    "NetworkParams",
    "CouplingSchedule",
    "PhysicalParams",
    "EnhancedCoupling",
    "linear_ramp_schedule",
    "build_dynamics_matrix",
    "dark_state",
    "dark_eigenvalue_perturbative",
    "adiabaticity_metric",
    "enhanced_coupling",
    "short_fiber_mode_count",
]

N_MODES = 7

#: Speed of light used by the fiber mode-count estimate, m/s.
SPEED_OF_LIGHT = 2.998e8

#: Rule-of-thumb lower bound on the adiabaticity metric for a clean transfer.
ADIABATIC_THRESHOLD = 10.0


class Mode(IntEnum):
    """Fixed ordering of the seven chain modes; every vector and matrix in
    the package uses this ordering."""

    A_O1 = 0    # optical cavity 1
    B_M1 = 1    # mechanical oscillator 1
    A_MW1 = 2   # microwave cavity 1 (transfer input)
    FIBER = 3   # single fiber mode
    A_O2 = 4    # optical cavity 2
    B_M2 = 5    # mechanical oscillator 2
    A_MW2 = 6   # microwave cavity 2 (transfer output)


MECHANICAL_MODES = (Mode.B_M1, Mode.B_M2)


@dataclass(frozen=True)
class NetworkParams:
    """Loss rates, fiber coupling, and bath occupation.

    The two transducer subsystems are identical, so a single rate set covers
    both sides. ``n_th`` is the thermal occupation of the mechanical baths;
    optical, microwave, and fiber baths are taken as vacuum.
    """

    kappa_o: float = 0.0
    kappa_m: float = 0.0
    kappa_mw: float = 0.0
    kappa_f: float = 0.0
    g_f: float = 0.0
    n_th: float = 0.0

    def __post_init__(self):
        for name in ("kappa_o", "kappa_m", "kappa_mw", "kappa_f", "g_f", "n_th"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value}")

    def rate_vector(self) -> np.ndarray:
        """Per-mode decay rates in chain order."""
        k = (self.kappa_o, self.kappa_m, self.kappa_mw, self.kappa_f,
             self.kappa_o, self.kappa_m, self.kappa_mw)
        return np.array(k, dtype=float)

    def bath_occupations(self) -> np.ndarray:
        """Per-mode bath occupation: n_th on the mechanical channels, 0 elsewhere."""
        occ = np.zeros(N_MODES)
        occ[Mode.B_M1] = self.n_th
        occ[Mode.B_M2] = self.n_th
        return occ


@dataclass(frozen=True)
class CouplingSchedule:
    """Four time-dependent pump-enhanced couplings on [0, T].

    ``g`` is the peak coupling scale and ``T`` the transfer duration. The
    four callables give the signed coupling rates g_o1, g_mw1, g_o2, g_mw2
    as functions of t in [0, T]. ``kind`` tags built-in shapes so analysis
    helpers can use closed forms where they exist.
    """

    g: float
    T: float
    g_o1: Callable[[float], float]
    g_mw1: Callable[[float], float]
    g_o2: Callable[[float], float]
    g_mw2: Callable[[float], float]
    kind: str = "custom"

    def __post_init__(self):
        if not (math.isfinite(self.g) and self.g > 0):
            raise ValueError(f"peak coupling g must be finite and > 0, got {self.g}")
        if not (math.isfinite(self.T) and self.T > 0):
            raise ValueError(f"duration T must be finite and > 0, got {self.T}")

    def couplings(self, t: float):
        """(g_o1, g_mw1, g_o2, g_mw2) evaluated at time t."""
        return (self.g_o1(t), self.g_mw1(t), self.g_o2(t), self.g_mw2(t))


def linear_ramp_schedule(g: float, T: float) -> CouplingSchedule:
    """Counter-intuitive linear ramp: the output-side couplings start at
    full strength and ramp down while the input-side couplings ramp up.

        -g_o1(t) = g_mw2(t) = g (1 - t/T)
         g_mw1(t) = -g_o2(t) = g t/T
    """
    if not (math.isfinite(g) and g > 0):
        raise ValueError(f"g must be finite and > 0, got {g}")
    if not (math.isfinite(T) and T > 0):
        raise ValueError(f"T must be finite and > 0, got {T}")

    def g_o1(t):
        return -g * (1.0 - t / T)

    def g_mw1(t):
        return g * (t / T)

    def g_o2(t):
        return -g * (t / T)

    def g_mw2(t):
        return g * (1.0 - t / T)

    return CouplingSchedule(g=g, T=T, g_o1=g_o1, g_mw1=g_mw1, g_o2=g_o2,
                            g_mw2=g_mw2, kind="linear_ramp")


def build_dynamics_matrix(t: float, sched: CouplingSchedule,
                          params: NetworkParams) -> np.ndarray:
    """7x7 dynamics generator M(t) of the chain.

    Off-diagonal entries are the real symmetric couplings (the fiber couples
    with +g_f to optical cavity 1 and -g_f to optical cavity 2); the diagonal
    carries -i kappa/2 for every mode, both subsystems treated identically.
    """
    if not (0.0 <= t <= sched.T):
        raise ValueError(f"t={t} outside schedule domain [0, {sched.T}]")
    g_o1, g_mw1, g_o2, g_mw2 = sched.couplings(t)
    g_f = params.g_f

    m = np.zeros((N_MODES, N_MODES), dtype=complex)
    m[Mode.A_O1, Mode.B_M1] = m[Mode.B_M1, Mode.A_O1] = g_o1
    m[Mode.B_M1, Mode.A_MW1] = m[Mode.A_MW1, Mode.B_M1] = g_mw1
    m[Mode.A_O1, Mode.FIBER] = m[Mode.FIBER, Mode.A_O1] = g_f
    m[Mode.FIBER, Mode.A_O2] = m[Mode.A_O2, Mode.FIBER] = -g_f
    m[Mode.A_O2, Mode.B_M2] = m[Mode.B_M2, Mode.A_O2] = g_o2
    m[Mode.B_M2, Mode.A_MW2] = m[Mode.A_MW2, Mode.B_M2] = g_mw2
    m[np.diag_indices(N_MODES)] = -0.5j * params.rate_vector()
    return m


def _coupling_weights(sched: CouplingSchedule, t: float):
    """Products entering the dark state and its normalization."""
    g_o1, g_mw1, g_o2, g_mw2 = sched.couplings(t)
    w_mw = g_mw1 * g_mw2
    w_in = g_o1 * g_mw2
    w_out = g_mw1 * g_o2
    norm4 = w_out * w_out + 2.0 * w_mw * w_mw + w_in * w_in
    return w_mw, w_in, w_out, norm4


def dark_state(t: float, sched: CouplingSchedule) -> np.ndarray:
    """Unit-norm zero mode of the lossless coupling matrix at time t.

    The vector carries no weight on the mechanical or fiber modes, which is
    what shields the transfer from loss in those channels. Components are
    evaluated directly from the signed couplings; the overall sign therefore
    follows the schedule's sign convention (for the built-in ramp the
    microwave components come out negative at the endpoints).
    """
    w_mw, w_in, w_out, norm4 = _coupling_weights(sched, t)
    if norm4 <= 0.0:
        raise ValueError(
            f"degenerate schedule at t={t}: both pulse products vanish")
    vec = np.array([-w_mw, 0.0, w_in, 0.0, -w_mw, 0.0, w_out], dtype=complex)
    return vec / math.sqrt(norm4)


def dark_eigenvalue_perturbative(t: float, sched: CouplingSchedule,
                                 params: NetworkParams) -> complex:
    """First-order shift of the dark-state eigenvalue due to loss.

    Purely imaginary with non-positive imaginary part; only the optical and
    microwave cavity rates enter, because the dark state has no amplitude on
    the mechanical or fiber modes.
    """
    w_mw, w_in, w_out, norm4 = _coupling_weights(sched, t)
    if norm4 <= 0.0:
        raise ValueError(
            f"degenerate schedule at t={t}: both pulse products vanish")
    bracket = (2.0 * params.kappa_o * w_mw * w_mw
               + params.kappa_mw * w_in * w_in
               + params.kappa_mw * w_out * w_out)
    return -0.5j * bracket / norm4


def adiabaticity_metric(sched: CouplingSchedule, *, grid_points: int = 1001) -> float:
    """Dimensionless slowness measure of a schedule; larger is more adiabatic.

    For the built-in linear ramp this is g T / 2 in closed form. For general
    schedules it is the minimum over time and over the four couplings of
    g0_j(t)^2 / |dg/dt|, where g0_j^2 sums the squared couplings of the
    subsystem the coupling belongs to; derivatives are centered finite
    differences with step T/1e4. A transfer is comfortably adiabatic when
    the metric exceeds ADIABATIC_THRESHOLD.
    """
    if sched.kind == "linear_ramp":
        return 0.5 * sched.g * sched.T

    h = sched.T / 1.0e4
    ts = np.linspace(h, sched.T - h, grid_points)
    scale = max(abs(sched.g), 1.0)
    best = math.inf
    for t in ts:
        plus = sched.couplings(t + h)
        minus = sched.couplings(t - h)
        now = sched.couplings(t)
        g0sq = (now[0] ** 2 + now[1] ** 2, now[2] ** 2 + now[3] ** 2)
        subsystem = (0, 0, 1, 1)
        for i in range(4):
            rate = abs(plus[i] - minus[i]) / (2.0 * h)
            if rate <= 1e-12 * scale * scale:
                continue
            best = min(best, g0sq[subsystem[i]] / rate)
    return best


@dataclass(frozen=True)
class PhysicalParams:
    """SI-unit device parameters for the pump-enhanced coupling calculator."""

    omega_c: float        # cavity resonance, rad/s
    omega_m: float        # mechanical resonance, rad/s
    x_zpf: float          # mechanical zero-point fluctuation, m
    cavity_length: float  # cavity length, m
    drive_power: float    # drive power, W
    gamma_c: float        # cavity decay rate seen by the drive, rad/s
    n_photons: float      # mean intracavity photon number

    def __post_init__(self):
        for name in ("omega_c", "omega_m", "x_zpf", "cavity_length",
                     "drive_power", "gamma_c", "n_photons"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be finite and > 0, got {value}")


class EnhancedCoupling(NamedTuple):
    g: float                # pump-enhanced coupling g0 * sqrt(n), rad/s
    g0: float               # bare single-photon coupling magnitude, rad/s
    drive_amplitude: float  # drive amplitude sqrt(P gamma_c / (hbar omega_c))


def enhanced_coupling(p: PhysicalParams) -> EnhancedCoupling:
    """Pump-enhanced coupling rate from SI device parameters.

    Returns the magnitude convention for g0 = omega_c * x_zpf / L; only g^2
    and the relative pulse signs matter to the dynamics.
    """
    g0 = abs(p.omega_c * p.x_zpf / p.cavity_length)
    g = g0 * math.sqrt(p.n_photons)
    drive = math.sqrt(p.drive_power * p.gamma_c / (_HBAR * p.omega_c))
    return EnhancedCoupling(g=g, g0=g0, drive_amplitude=drive)


def short_fiber_mode_count(gamma: float, length_m: float) -> float:
    """Number of fiber modes that interact appreciably with the cavities,
    N = Gamma * l / (2 pi c).

    The single-mode fiber treatment is valid for N <~ 1; callers should warn
    when the returned value exceeds 1.
    """
    return gamma * length_m / (2.0 * math.pi * SPEED_OF_LIGHT)
