"""Input states, channel application, and transfer-fidelity measures.

Gaussian states carry their covariance in the doubled convention where the
vacuum covariance is the 2x2 identity (entries are twice the quadrature
variances). The fidelity convention used throughout is the transition
probability: for pure states it reduces to |<psi1|psi2>|^2, so identical
squeezed states score 1 and vacuum against a unit coherent state scores
exp(-1). Qubit transfer quality is the Bloch-sphere average fidelity of the
channel, which needs no Gaussian input state.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .engine import TransferChannel, characterize_channel
from .network import CouplingSchedule, NetworkParams

__all__ = [
    "INPUT_KINDS",
    "GaussianState",
    "InputSpec",
    "vacuum_state",
    "squeezed_coherent_state",
    "apply_channel",
    "gaussian_fidelity",
    "qubit_avg_fidelity",
    "channel_fidelity",
    "transfer_fidelity",
    "transfer_fidelities",
]

INPUT_KINDS = ("coherent", "squeezed_coherent", "qubit")

# Slack on the purity bound det(cov) >= 1; channel output built at default
# resolution carries a sum-rule residual of order 1e-6.
_DET_SLACK = 1e-5


@dataclass(frozen=True)
class GaussianState:
    """Single-mode Gaussian state: quadrature means and doubled covariance.

    ``mean`` is (<q>, <p>); ``cov`` is symmetric positive definite with
    det >= 1 (vacuum is the identity).
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if mean.shape != (2,):
            raise ValueError(f"mean must have 2 entries, got shape {mean.shape}")
        if cov.shape != (2, 2):
            raise ValueError(f"cov must be 2x2, got shape {cov.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("state moments contain non-finite entries")
        scale = 1.0 + float(np.abs(cov).max())
        if abs(cov[0, 1] - cov[1, 0]) > 1e-9 * scale:
            raise ValueError("cov must be symmetric")
        cov = 0.5 * (cov + cov.T)
        eigs = np.linalg.eigvalsh(cov)
        if eigs[0] <= 0.0:
            raise ValueError(f"cov must be positive definite, eigenvalues {eigs}")
        det = float(np.linalg.det(cov))
        if det < 1.0 - _DET_SLACK:
            raise ValueError(
                f"cov violates the uncertainty bound: det = {det} < 1")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


def vacuum_state() -> GaussianState:
    return GaussianState(mean=np.zeros(2), cov=np.eye(2))


def squeezed_coherent_state(alpha: complex, r: float) -> GaussianState:
    """Displaced squeezed vacuum with displacement alpha and squeeze r.

    Means are sqrt(2) (Re alpha, Im alpha); positive r squeezes the q
    quadrature, cov = diag(e^{-2r}, e^{2r}).
    """
    alpha = complex(alpha)
    if not (cmath.isfinite(alpha) and math.isfinite(r)):
        raise ValueError("alpha and r must be finite")
    mean = math.sqrt(2.0) * np.array([alpha.real, alpha.imag])
    cov = np.diag([math.exp(-2.0 * r), math.exp(2.0 * r)])
    return GaussianState(mean=mean, cov=cov)


def apply_channel(state: GaussianState, ch: TransferChannel) -> GaussianState:
    """Push a Gaussian state through the transfer channel.

    The channel's added noise is a per-quadrature variance; the factor of 2
    converts it to this module's doubled covariance convention.
    """
    b = ch.b
    mean = b @ state.mean
    cov = b @ state.cov @ b.T + 2.0 * ch.added_noise_var * np.eye(2)
    return GaussianState(mean=mean, cov=cov)


def gaussian_fidelity(s1: GaussianState, s2: GaussianState) -> float:
    """Fidelity of two single-mode Gaussian states (transition-probability
    convention):

        F = exp(-d^T (A1 + A2)^{-1} d) / sqrt(det[(A1 + A2)/2])

    with d the difference of the mean vectors.
    """
    d = s2.mean - s1.mean
    total = s1.cov + s2.cov
    det = float(np.linalg.det(0.5 * total))
    solve = np.linalg.solve(total, d)
    return float(math.exp(-float(d @ solve)) / math.sqrt(det))


def _principal_variances(out_cov: np.ndarray):
    """Mean variance, anisotropy, and principal angle of a 2x2 covariance."""
    out_cov = np.asarray(out_cov, dtype=float)
    if out_cov.shape != (2, 2):
        raise ValueError(f"out_cov must be 2x2, got shape {out_cov.shape}")
    var_q = out_cov[0, 0]
    var_p = out_cov[1, 1]
    cross = out_cov[0, 1] + out_cov[1, 0]
    mean_var = 0.5 * (var_q + var_p)
    split = math.sqrt(0.25 * (var_q - var_p) ** 2 + 0.25 * cross ** 2)
    if split <= 1e-14 * max(mean_var, 1.0):
        theta = 0.0
        split = 0.0
    else:
        theta = 0.5 * math.atan2(cross, var_q - var_p)
    return mean_var, split, theta


def qubit_avg_fidelity(ch: TransferChannel, out_cov: np.ndarray) -> float:
    """Bloch-sphere average transfer fidelity of the channel.

    ``out_cov`` is the output quadrature covariance for a vacuum input in
    the plain variance convention (vacuum = I/2), normally
    ``ch.vacuum_output_covariance()``. The ideal channel scores exactly 1;
    full vacuum replacement scores 1/2.
    """
    mean_var, split, theta = _principal_variances(out_cov)
    s1 = mean_var + split
    s2 = mean_var - split

    b = ch.b
    c_term = 0.5 * (b[0, 0] - 1j * b[0, 1] + 1j * b[1, 0] + b[1, 1])
    d_term = 0.5 * (b[0, 0] + 1j * b[0, 1] + 1j * b[1, 0] - b[1, 1]) \
        * cmath.exp(-2j * theta)

    plus = c_term + d_term.conjugate()
    minus = c_term - d_term.conjugate()
    p1 = s1 + 0.5
    p2 = s2 + 0.5

    total = (
        3.0
        + 3.0 * (s1 * s2 - 0.25) / (p1 * p2)
        + plus.real / p1
        + minus.real / p2
        - abs(plus) ** 2 * (s1 - 1.0) / p1 ** 2
        - abs(minus) ** 2 * (s2 - 1.0) / p2 ** 2
        - (abs(plus) ** 2 * (s2 - 0.5) + abs(minus) ** 2 * (s1 - 0.5))
        / (2.0 * p1 * p2)
    )
    return float(total / (6.0 * math.sqrt(p1 * p2)))


@dataclass(frozen=True)
class InputSpec:
    """What to send through the channel.

    ``qubit`` inputs carry no amplitudes: the figure of merit is the
    average fidelity over the Bloch sphere, which is amplitude independent,
    so alpha and r are ignored for that kind.
    """

    kind: str
    alpha: complex = 1.0 + 0.0j
    r: float = 0.0

    def __post_init__(self):
        if self.kind not in INPUT_KINDS:
            raise ValueError(f"kind must be one of {INPUT_KINDS}, got "
                             f"{self.kind!r}")
        alpha = complex(self.alpha)
        if not (cmath.isfinite(alpha) and math.isfinite(self.r)):
            raise ValueError("alpha and r must be finite")
        object.__setattr__(self, "alpha", alpha)

    def state(self) -> GaussianState:
        if self.kind == "coherent":
            return squeezed_coherent_state(self.alpha, 0.0)
        if self.kind == "squeezed_coherent":
            return squeezed_coherent_state(self.alpha, self.r)
        raise ValueError("qubit inputs have no Gaussian state; use "
                         "qubit_avg_fidelity")


def channel_fidelity(ch: TransferChannel, spec: InputSpec) -> float:
    """Transfer fidelity of one input kind through an already characterized
    channel."""
    if spec.kind == "qubit":
        return qubit_avg_fidelity(ch, ch.vacuum_output_covariance())
    state = spec.state()
    return gaussian_fidelity(state, apply_channel(state, ch))


def transfer_fidelity(spec: InputSpec, sched: CouplingSchedule,
                      params: NetworkParams, steps: int) -> float:
    """Characterize the transfer and score one input kind."""
    ch = characterize_channel(sched, params, steps)
    return channel_fidelity(ch, spec)


def transfer_fidelities(specs, sched: CouplingSchedule, params: NetworkParams,
                        steps: int) -> dict:
    """Score several input kinds against a single characterization run."""
    ch = characterize_channel(sched, params, steps)
    return {spec: channel_fidelity(ch, spec) for spec in specs}
