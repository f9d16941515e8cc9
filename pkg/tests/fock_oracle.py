"""Truncated Fock-space oracle used by the tests.

Independent cross-checks for the Gaussian-state constructors and the
qubit average-fidelity formula: states and channels are realized as
operators on a photon-number-truncated Hilbert space (dimension <= 21,
i.e. at most 20 photons) and fidelities are evaluated by direct matrix
algebra plus Monte-Carlo averaging over the Bloch sphere. Nothing here
shares code with the moment-based production path.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)


def displacement(alpha: complex, dim: int) -> np.ndarray:
    a = annihilation(dim)
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


def squeeze(r: float, dim: int) -> np.ndarray:
    a = annihilation(dim)
    return expm(0.5 * (np.conj(r) * (a @ a) - r * (a.conj().T @ a.conj().T)))


def squeezed_coherent_vector(alpha: complex, r: float, dim: int) -> np.ndarray:
    vac = np.zeros(dim, dtype=complex)
    vac[0] = 1.0
    return displacement(alpha, dim) @ (squeeze(r, dim) @ vac)


def quadrature_moments(rho: np.ndarray):
    """Means and (co)variances of q = (a + a^dag)/sqrt2, p = -i(a - a^dag)/sqrt2."""
    dim = rho.shape[0]
    a = annihilation(dim)
    q = (a + a.conj().T) / np.sqrt(2.0)
    p = -1j * (a - a.conj().T) / np.sqrt(2.0)
    mean_q = np.trace(rho @ q).real
    mean_p = np.trace(rho @ p).real
    var_q = np.trace(rho @ q @ q).real - mean_q**2
    var_p = np.trace(rho @ p @ p).real - mean_p**2
    sym_qp = 0.5 * np.trace(rho @ (q @ p + p @ q)).real - mean_q * mean_p
    return (mean_q, mean_p), (var_q, var_p, sym_qp)


def loss_kraus(eta: float, dim: int):
    """Kraus operators of the pure-loss channel with transmissivity eta."""
    a = annihilation(dim)
    n_op = np.diag(np.arange(dim)).astype(complex)
    eta_half_n = np.diag(eta ** (0.5 * np.arange(dim))).astype(complex)
    ops = []
    a_pow = np.eye(dim, dtype=complex)
    fact = 1.0
    for k in range(dim):
        if k > 0:
            a_pow = a_pow @ a
            fact *= k
        coeff = np.sqrt((1.0 - eta) ** k / fact) if eta < 1.0 else (1.0 if k == 0 else 0.0)
        op = coeff * (eta_half_n @ a_pow)
        if np.abs(op).max() > 1e-300:
            ops.append(op)
    return ops


def phase_insensitive_channel(rho: np.ndarray, c: complex, sigma_env: float,
                              gh_nodes: int = 21) -> np.ndarray:
    """Apply the Gaussian channel mean -> c * mean, per-quadrature added
    variance sigma_env, to a Fock-basis density matrix.

    Decomposition: phase rotation by arg(c), pure loss at eta = |c|^2, then
    classical Gaussian displacement noise carrying whatever variance exceeds
    the loss channel's own vacuum replacement (1 - eta)/2. The displacement
    integral is evaluated by Gauss-Hermite quadrature, so the whole map is
    deterministic.
    """
    dim = rho.shape[0]
    eta = abs(c) ** 2
    if eta > 1.0 + 1e-12:
        raise ValueError("amplifying channels not supported")
    excess = sigma_env - 0.5 * (1.0 - eta)
    if excess < -1e-12:
        raise ValueError("sigma_env below the loss channel's vacuum noise")

    theta = np.angle(c)
    rot = np.diag(np.exp(1j * theta * np.arange(dim)))
    out = rot @ rho @ rot.conj().T

    out = sum(k @ out @ k.conj().T for k in loss_kraus(min(eta, 1.0), dim))

    if excess > 1e-14:
        # displacement beta shifts q by sqrt(2) Re beta, so matching the
        # added per-quadrature variance needs Var(Re beta) = excess / 2
        nodes, weights = np.polynomial.hermite.hermgauss(gh_nodes)
        scale = np.sqrt(excess)  # sqrt(2) * std(Re beta)
        noisy = np.zeros_like(out)
        for xi, wi in zip(nodes, weights):
            for yj, wj in zip(nodes, weights):
                d = displacement(scale * (xi + 1j * yj), dim)
                noisy += (wi * wj / np.pi) * (d @ out @ d.conj().T)
        out = noisy
    return out


def average_qubit_fidelity(c: complex, sigma_env: float, dim: int = 21,
                           samples: int = 200_000, seed: int = 20240917) -> float:
    """Monte-Carlo Bloch-sphere average of <psi| Phi(|psi><psi|) |psi> for
    qubit states a|0> + b|1> sent through the phase-insensitive channel."""
    basis_out = {}
    for i in range(2):
        for j in range(2):
            op = np.zeros((dim, dim), dtype=complex)
            op[i, j] = 1.0
            basis_out[(i, j)] = phase_insensitive_channel(op, c, sigma_env)
    # only the two-dimensional qubit block of each output matters
    block = np.empty((2, 2, 2, 2), dtype=complex)
    for (i, j), op in basis_out.items():
        block[i, j] = op[:2, :2]

    rng = np.random.default_rng(seed)
    cos_t = rng.uniform(-1.0, 1.0, samples)
    phi = rng.uniform(0.0, 2.0 * np.pi, samples)
    w0 = np.sqrt(0.5 * (1.0 + cos_t))
    w1 = np.sqrt(0.5 * (1.0 - cos_t)) * np.exp(1j * phi)
    w = np.stack([w0, w1], axis=1)  # (samples, 2)

    # F(psi) = sum_{ijkl} w_i conj(w_j) conj(w_k) w_l block[i, j, k, l]
    vals = np.einsum("si,sj,sk,sl,ijkl->s", w, w.conj(), w.conj(), w,
                     block, optimize=True)
    return float(vals.real.mean())
