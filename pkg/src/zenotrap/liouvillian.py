"""Master-equation generator assembly and propagation.

The generator acts on column-stacked density matrices: ``vec`` stacks the
columns of the (g, e, p)-ordered matrix, so a left/right operator product
A X B maps to (B^T kron A) vec(X).  The dissipators keep the parent
transition operator on the outer commutators and the frequency-resolved
jump components inside, which is not manifest Lindblad form; state
positivity is therefore monitored rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .core import (
    SystemParams,
    TimeGrid,
    dephasing_rate,
    lower_eg,
    lower_pe,
    projector,
    validate,
    E,
)
from .dressing import JumpComponent, frequency_components, system_hamiltonian
from .spectral_density import SpectralDensityParams, pe_decay_rate, total_rate

EIGEN_CONDITION_LIMIT = 1e8
ODE_RTOL = 1e-10
ODE_ATOL = 1e-12


class NumericalError(RuntimeError):
    """Propagation produced non-finite or otherwise unusable results."""


class IllConditionedEigenbasis(RuntimeError):
    """The cached eigen-decomposition is too ill-conditioned to use."""


def vec(matrix: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    return np.asarray(matrix, dtype=complex).reshape(-1, order="F")


def unvec(vector: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vec` for 3x3 matrices."""
    return np.asarray(vector, dtype=complex).reshape(3, 3, order="F")


def hamiltonian_superop(h: np.ndarray) -> np.ndarray:
    """Superoperator for the coherent part -i [H, rho]."""
    eye = np.eye(h.shape[0], dtype=complex)
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def lindblad_superop(op: np.ndarray, rate: float) -> np.ndarray:
    """Standard single-operator Lindblad dissipator as a superoperator."""
    eye = np.eye(op.shape[0], dtype=complex)
    opdop = op.conj().T @ op
    return rate * (
        np.kron(op.conj(), op)
        - 0.5 * np.kron(eye, opdop)
        - 0.5 * np.kron(opdop.T, eye)
    )


def dissipator_superop(sigma: np.ndarray, components: list[JumpComponent]) -> np.ndarray:
    """Frequency-resolved dissipator for one transition operator.

    Implements sum_eta rate(eta) * ([sigma, rho A^dag(eta)] - [sigma^dag, A(eta) rho])
    with the components' rates already attached.  For equal rates this
    collapses to the standard Lindblad form with operator ``sigma`` because
    the components sum to ``sigma``.
    """
    if sigma.shape != (3, 3):
        raise ValueError(f"transition operator must be 3x3, got {sigma.shape}")
    eye = np.eye(3, dtype=complex)
    sigma_dag = sigma.conj().T
    out = np.zeros((9, 9), dtype=complex)
    for comp in components:
        a_op = comp.operator
        if a_op.shape != (3, 3):
            raise ValueError(f"jump component must be 3x3, got {a_op.shape}")
        rate = comp.rate
        if not np.isfinite(rate) or rate < 0:
            raise ValueError(f"jump component at {comp.frequency} ps^-1 has invalid rate {rate}")
        out += rate * (
            np.kron(a_op.conj(), sigma)
            - np.kron((a_op.conj().T @ sigma).T, eye)
            - np.kron(eye, sigma_dag @ a_op)
            + np.kron(sigma.conj(), a_op)
        )
    return out


@dataclass(frozen=True, eq=False)
class EigenCache:
    """Spectral decomposition L = R diag(values) R^-1 with quality metrics."""

    values: np.ndarray        # (9,)
    right: np.ndarray         # (9, 9), columns are right eigenvectors
    right_inv: np.ndarray     # rows give the matching left functionals
    condition: float
    biorth_residual: float

    @property
    def usable(self) -> bool:
        return np.isfinite(self.condition) and self.condition <= EIGEN_CONDITION_LIMIT


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """Full 9x9 generator with cached eigen-system and rate bookkeeping."""

    matrix: np.ndarray
    eigen: Optional[EigenCache]
    pe_components: tuple[JumpComponent, ...]
    eg_components: tuple[JumpComponent, ...]
    dephasing_rate: float
    pe_rate_total: float
    trace_residual: float
    max_real_eigenvalue: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Propagated states with per-step sanity diagnostics."""

    grid: TimeGrid
    states: np.ndarray     # (n, 3, 3)
    trace_err: np.ndarray
    herm_err: np.ndarray
    min_eig: np.ndarray
    method: str

    @property
    def populations(self) -> np.ndarray:
        """Real diagonal occupations, shape (n, 3)."""
        return np.real(np.einsum("nii->ni", self.states))


def _eigen_cache(matrix: np.ndarray) -> Optional[EigenCache]:
    try:
        values, right = np.linalg.eig(matrix)
        condition = float(np.linalg.cond(right))
        right_inv = np.linalg.inv(right)
    except np.linalg.LinAlgError:
        return None
    residual = float(np.abs(right_inv @ right - np.eye(matrix.shape[0])).max())
    return EigenCache(
        values=values,
        right=right,
        right_inv=right_inv,
        condition=condition,
        biorth_residual=residual,
    )


def attach_rates(components: list[JumpComponent], rate_fn) -> tuple[JumpComponent, ...]:
    """Return components with the reservoir rate evaluated at each frequency."""
    return tuple(
        JumpComponent(frequency=c.frequency, operator=c.operator, rate=float(rate_fn(c.frequency)))
        for c in components
    )


def build_liouvillian(
    params: SystemParams,
    sd: SpectralDensityParams,
    rate_fn: Optional[Callable[[float], float]] = None,
) -> Liouvillian:
    """Assemble the generator: coherent part, both dissipators, dephasing.

    ``rate_fn`` overrides the reservoir rate as a function of relative
    frequency (used e.g. for flat-density null tests); by default the
    structured spectral density supplies the rates.
    """
    problems = validate(params, sd)
    if problems:
        raise ValueError("invalid parameters: " + "; ".join(problems))
    if rate_fn is None:
        rate_fn = lambda omega: total_rate(sd, omega)

    hs = system_hamiltonian(params.delta_ang, params.omega_ang)
    pe_components = attach_rates(frequency_components(lower_pe(), hs), rate_fn)
    eg_components = attach_rates(frequency_components(lower_eg(), hs), rate_fn)

    matrix = hamiltonian_superop(hs.matrix)
    matrix = matrix + dissipator_superop(lower_pe(), list(pe_components))
    matrix = matrix + dissipator_superop(lower_eg(), list(eg_components))
    gamma_deph = dephasing_rate(params.dephasing, params.omega_uev)
    if gamma_deph > 0:
        matrix = matrix + lindblad_superop(projector(E), 2.0 * gamma_deph)

    trace_residual = float(np.abs(vec(np.eye(3)).conj() @ matrix).max())
    if trace_residual > 1e-12:
        raise NumericalError(f"generator is not trace preserving: residual {trace_residual:.3e}")

    eigen = _eigen_cache(matrix)
    max_real = float(eigen.values.real.max()) if eigen is not None else float("nan")
    # Both dressed decay paths, also correct when they merge at zero drive.
    pe_total = float(
        rate_fn(params.delta_ang + 0.5 * params.omega_ang)
        + rate_fn(params.delta_ang - 0.5 * params.omega_ang)
    )
    return Liouvillian(
        matrix=matrix,
        eigen=eigen,
        pe_components=pe_components,
        eg_components=eg_components,
        dephasing_rate=gamma_deph,
        pe_rate_total=pe_total,
        trace_residual=trace_residual,
        max_real_eigenvalue=max_real,
    )


def _propagate_eigen(liouv: Liouvillian, rho0: np.ndarray, times: np.ndarray) -> np.ndarray:
    cache = liouv.eigen
    coeffs = cache.right_inv @ vec(rho0)
    phases = np.exp(np.outer(cache.values, times))  # (9, n)
    return cache.right @ (phases * coeffs[:, None])


def _propagate_ode(liouv: Liouvillian, rho0: np.ndarray, times: np.ndarray) -> np.ndarray:
    matrix = liouv.matrix
    result = solve_ivp(
        lambda _t, y: matrix @ y,
        (times[0], times[-1]),
        vec(rho0),
        t_eval=times,
        method="DOP853",
        rtol=ODE_RTOL,
        atol=ODE_ATOL,
    )
    if not result.success:
        raise NumericalError(f"ODE propagation failed: {result.message}")
    return result.y


def propagate(liouv: Liouvillian, rho0: np.ndarray, grid: TimeGrid, method: str = "auto") -> Trajectory:
    """Propagate a state over a time grid.

    The default path expands the initial state in the cached eigenbasis;
    when the basis is missing or ill-conditioned (condition > 1e8) an
    adaptive Runge-Kutta integration of the vectorised state takes over.
    """
    times = grid.values
    if method == "auto":
        method = "eigen" if (liouv.eigen is not None and liouv.eigen.usable) else "ode"
    if method == "eigen":
        if liouv.eigen is None or not liouv.eigen.usable:
            cond = liouv.eigen.condition if liouv.eigen is not None else float("nan")
            raise IllConditionedEigenbasis(
                f"eigenbasis condition {cond:.3e} exceeds {EIGEN_CONDITION_LIMIT:.0e}; use the ODE path"
            )
        stacked = _propagate_eigen(liouv, rho0, times)
    elif method == "ode":
        stacked = _propagate_ode(liouv, rho0, times)
    else:
        raise ValueError(f"unknown propagation method {method!r}")

    if not np.all(np.isfinite(stacked)):
        bad = int(np.argmax(~np.all(np.isfinite(stacked), axis=0)))
        cond = liouv.eigen.condition if liouv.eigen is not None else float("nan")
        raise NumericalError(
            f"non-finite state at step {bad} (t = {times[bad]:.6g} ps, eigen condition {cond:.3e})"
        )

    states = stacked.T.reshape(-1, 3, 3).transpose(0, 2, 1)  # undo column stacking
    trace_err = np.abs(np.einsum("nii->n", states) - 1.0)
    herm = states - states.conj().transpose(0, 2, 1)
    herm_err = np.linalg.norm(herm, axis=(1, 2))
    min_eig = np.linalg.eigvalsh(0.5 * (states + states.conj().transpose(0, 2, 1)))[:, 0].real
    return Trajectory(
        grid=grid,
        states=states,
        trace_err=trace_err,
        herm_err=herm_err,
        min_eig=min_eig,
        method=method,
    )


def analytic_population(sd: SpectralDensityParams, params: SystemParams, t) -> np.ndarray:
    """Closed-form upper-level population for an initially excited emitter."""
    rate = pe_decay_rate(sd, params.delta_ang, params.omega_ang)
    return np.exp(-rate * np.asarray(t, dtype=float))
