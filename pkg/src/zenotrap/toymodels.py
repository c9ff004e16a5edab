"""Closed-form pedagogical models for population trapping baselines.

Three minimal scenarios: coherent two- and three-level Rabi dynamics,
where a strong lower coupling traps population in the upper state; a fixed
incoherent decay, which no coherent drive can slow down; and a chain of
projective measurements on that decay, which likewise changes nothing.
A direct unitary integration serves as the oracle for the closed forms.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp


def two_level_survival(omega_pe: float, t) -> np.ndarray:
    """Probability to remain in the initial state under resonant Rabi coupling."""
    return np.cos(0.5 * omega_pe * np.asarray(t, dtype=float)) ** 2


def three_level_survival(omega_pe: float, omega_eg: float, t) -> np.ndarray:
    """Survival in the top state of a resonantly coupled three-level chain.

    [(omega_eg^2 + omega_pe^2 cos(omega_R t / 2)) / omega_R^2]^2 with
    omega_R^2 = omega_pe^2 + omega_eg^2.  For omega_eg >> omega_pe the
    population stays trapped near the initial state.
    """
    omega_r_sq = omega_pe**2 + omega_eg**2
    if not omega_r_sq > 0:
        raise ValueError("at least one coupling must be nonzero")
    omega_r = math.sqrt(omega_r_sq)
    t = np.asarray(t, dtype=float)
    return ((omega_eg**2 + omega_pe**2 * np.cos(0.5 * omega_r * t)) / omega_r_sq) ** 2


def incoherent_survival(gamma: float, t) -> np.ndarray:
    """Survival under a fixed incoherent decay; independent of any drive."""
    return np.exp(-gamma * np.asarray(t, dtype=float))


def zeno_measurement_chain(gamma: float, t: float, n: int) -> float:
    """Survival after n projective measurements spaced t / n apart.

    Computed by explicit repeated multiplication of the per-interval
    survival; for exponential decay the result is independent of n.
    """
    if n < 1:
        raise ValueError(f"need at least one measurement, got n = {n}")
    step = math.exp(-gamma * t / n)
    out = 1.0
    for _ in range(n):
        out *= step
    return out


def schrodinger_oracle(omega_pe: float, omega_eg: float, t_grid) -> np.ndarray:
    """Brute-force unitary integration of the three-level chain.

    Integrates the Schroedinger equation for the tridiagonal coupling
    Hamiltonian at tight tolerance and returns the survival probability of
    the initial (top) state on the given grid.
    """
    h = np.array(
        [
            [0.0, 0.5 * omega_pe, 0.0],
            [0.5 * omega_pe, 0.0, 0.5 * omega_eg],
            [0.0, 0.5 * omega_eg, 0.0],
        ],
        dtype=complex,
    )
    t_grid = np.asarray(t_grid, dtype=float)
    psi0 = np.array([1.0, 0.0, 0.0], dtype=complex)
    result = solve_ivp(
        lambda _t, psi: -1j * (h @ psi),
        (t_grid[0], t_grid[-1]),
        psi0,
        t_eval=t_grid,
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
    )
    if not result.success:
        raise RuntimeError(f"oracle integration failed: {result.message}")
    return np.abs(result.y[0]) ** 2
