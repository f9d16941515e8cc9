"""Small dense complex matrix operations: validated exponentials and
time-ordered propagator products.

Matrices are plain numpy arrays; every public operation validates shapes
and rejects non-finite entries. The system simulated upstream is 7x7, so
nothing here tries to be clever about size.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
import scipy.linalg

__all__ = ["as_complex_matrix", "expm", "ordered_propagator"]


def as_complex_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce input to a 2-D complex array with finite entries."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def _require_square(m: np.ndarray, name: str = "matrix") -> None:
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")


def expm(a) -> np.ndarray:
    """Matrix exponential e^a of a square complex matrix.

    Uses scaling-and-squaring with a high-order Pade approximant (scipy),
    accurate to better than 1e-12 relative error for norms up to ~10.
    """
    m = as_complex_matrix(a)
    _require_square(m)
    out = scipy.linalg.expm(m)
    if not np.all(np.isfinite(out)):
        raise ValueError("matrix exponential overflowed; input norm too large")
    return out


def ordered_propagator(
    m_of_t: Callable[[float], np.ndarray],
    t0: float,
    t1: float,
    steps: int,
    *,
    midpoint: bool = True,
    return_factors: bool = False,
):
    """Time-ordered product of step exponentials for a generator m_of_t.

    Returns the right-to-left product

        e^{-i M(t_{N-1}) dt} ... e^{-i M(t_1) dt} e^{-i M(t_0) dt}

    with dt = (t1 - t0)/steps and the later factors applied on the left.
    By default M is sampled at the midpoint of each step, which makes the
    product second-order accurate in dt; ``midpoint=False`` samples the
    left endpoint instead (first-order, kept for comparison runs).

    With ``return_factors=True`` also returns the (steps, d, d) stack of
    single-step factors, ordered earliest first, so callers can assemble
    interior propagators without re-exponentiating.
    """
    if t1 < t0:
        raise ValueError(f"time interval is reversed: t1={t1} < t0={t0}")
    steps = int(steps)
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")

    dt = (t1 - t0) / steps
    shift = 0.5 * dt if midpoint else 0.0

    first = as_complex_matrix(m_of_t(t0 + shift), name="m_of_t(t)")
    _require_square(first, name="m_of_t(t)")
    dim = first.shape[0]

    factors = np.empty((steps, dim, dim), dtype=complex)
    prod = np.eye(dim, dtype=complex)
    for j in range(steps):
        if j == 0:
            gen = first
        else:
            gen = as_complex_matrix(m_of_t(t0 + j * dt + shift), name="m_of_t(t)")
            if gen.shape != (dim, dim):
                raise ValueError("m_of_t returned matrices of inconsistent shape")
        factor = scipy.linalg.expm(-1j * dt * gen)
        factors[j] = factor
        prod = factor @ prod

    if not np.all(np.isfinite(prod)):
        raise ValueError("ordered propagator overflowed; reduce dt or check M(t)")
    if return_factors:
        return prod, factors
    return prod
