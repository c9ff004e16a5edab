"""Two-time correlations and spectrometer-filtered emission spectra.

The first-order correlation is evaluated with the raising field component
at the later time, g1(s, tau) = <E^-(s + tau) E^+(s)>, so a transition
oscillating at frequency w above the laser contributes modes rotating as
exp(+i w tau) and its spectral weight appears at positive detuning.  At
tau = 0 the correlator reduces to the detected intensity
|alpha|^2 rho_ee + |beta|^2 rho_pp.

The time-dependent spectrum filters g1 through a Lorentzian spectrometer
of half-width ``nu``:

    R(dw, t) = Re int_0^t ds int_0^{t-s} dtau g1(s, tau)
               * exp((nu - i dw) tau) * exp(-2 nu (t - s))

The tau integral is always evaluated in closed form per eigenmode.  For
kernels built from a generator the weight functions are themselves exact
sums of generator eigenmodes, so the s integral is closed form as well and
R is positive to machine precision; synthetic kernels known only on the
grid fall back to a trapezoid s integral.  The time-integrated spectrum
S(dw) is a trapezoid over t of R(dw, t) on the kernel grid.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp, trapezoid

from .core import SystemParams, TimeGrid, lower_eg, lower_pe
from .liouvillian import (
    IllConditionedEigenbasis,
    Liouvillian,
    NumericalError,
    ODE_ATOL,
    ODE_RTOL,
    Trajectory,
    build_liouvillian,
    propagate,
    unvec,
    vec,
)
from .spectral_density import SpectralDensityParams, pe_decay_rate

# Largest exponent allowed inside the grid-kernel engine before the run is
# aborted as numerically unrepresentable.
MAX_EXPONENT = 650.0
OMEGA_CHUNK = 256
# |denominator * t_max| below this switches the exponential-pair integral
# to its series form (guards cancellation and the removable singularity).
PAIR_SERIES_CUT = 1e-3
Z_SINGULAR = 1e-10


class SpectrumError(NumericalError):
    """Spectrum evaluation failed or was requested outside the kernel span."""


@dataclass(frozen=True, eq=False)
class DetectionOperator:
    """Collected-field operators built from the two emission channels."""

    lowering: np.ndarray
    raising: np.ndarray

    @classmethod
    def from_weights(cls, alpha: complex, beta: complex) -> "DetectionOperator":
        low = alpha * lower_eg() + beta * lower_pe()
        return cls(lowering=low, raising=low.conj().T)


@dataclass(frozen=True, eq=False)
class CorrelationKernel:
    """Eigenmode expansion g1(s, tau) = sum_k weights[k, s] exp(lambda_k tau).

    ``weights`` samples one complex weight function per generator
    eigenvalue on ``s_grid``; the expansion is exact in tau.  When the
    kernel comes from a generator, ``mode_matrix`` additionally resolves
    each weight function into generator eigenmodes,
    w_k(s) = sum_j mode_matrix[k, j] exp(lambda_j s), making the source-time
    integral exact as well.
    """

    s_grid: TimeGrid
    lambdas: np.ndarray             # (9,)
    weights: np.ndarray             # (9, n_s)
    intensity: np.ndarray           # |alpha|^2 rho_ee + |beta|^2 rho_pp on s_grid
    sum_residual: float             # max | sum_k weights - intensity |
    mode_matrix: Optional[np.ndarray] = None  # (9, 9) or None for grid-only kernels


@dataclass(frozen=True, eq=False)
class SpectrumGrid:
    """Spectrum values on explicit frequency (and optionally time) grids."""

    domega: np.ndarray            # ps^-1, relative to the laser
    values: np.ndarray            # 1D (slice / integrated) or 2D (n_t, n_w)
    nu: float                     # spectrometer half-width, ps^-1
    kind: str                     # "td-slice" | "td-series" | "integrated"
    window: str = ""
    t: Optional[float] = None            # td-slice observation time
    t_grid: Optional[np.ndarray] = None  # td-series times
    T: Optional[float] = None            # integrated upper time
    metadata: dict = field(default_factory=dict)


def build_g1_kernel(
    liouv: Liouvillian, traj: Trajectory, det: DetectionOperator
) -> CorrelationKernel:
    """Expand the two-time correlation in the generator eigenbasis.

    For each eigenpair (lambda_k, r_k, l_k) the weight function is
    Tr[E^- unvec(r_k)] <l_k, vec(E^+ rho(s))>; summed over k at tau = 0
    this reproduces the detected intensity, which is verified here and
    reported as ``sum_residual``.
    """
    cache = liouv.eigen
    if cache is None or not cache.usable:
        cond = cache.condition if cache is not None else float("nan")
        raise IllConditionedEigenbasis(
            f"eigenbasis condition {cond:.3e} is unusable for the kernel; fall back to g1_direct"
        )
    mode_traces = np.array([np.trace(det.raising @ unvec(cache.right[:, k])) for k in range(9)])
    initial_coeffs = cache.right_inv @ vec(traj.states[0])
    lift = cache.right_inv @ (np.kron(np.eye(3), det.lowering) @ cache.right)
    mode_matrix = mode_traces[:, None] * lift * initial_coeffs[None, :]

    s = traj.grid.values
    weights = mode_matrix @ np.exp(np.outer(cache.values, s))

    populations = traj.populations
    intensity = (
        np.abs(det.lowering[0, 1]) ** 2 * populations[:, 1]
        + np.abs(det.lowering[1, 2]) ** 2 * populations[:, 2]
    )
    sum_residual = float(np.abs(weights.sum(axis=0).real - intensity).max())
    scale = max(1.0, float(np.abs(intensity).max()))
    if sum_residual > 1e-8 * scale:
        raise IllConditionedEigenbasis(
            f"kernel weights miss the detected intensity by {sum_residual:.3e}; fall back to g1_direct"
        )
    return CorrelationKernel(
        s_grid=traj.grid,
        lambdas=cache.values.copy(),
        weights=weights,
        intensity=intensity,
        sum_residual=sum_residual,
        mode_matrix=mode_matrix,
    )


def g1_from_kernel(kernel: CorrelationKernel, s_index: int, tau) -> np.ndarray:
    """Evaluate g1(s_grid[s_index], tau) from the mode expansion (exact in tau)."""
    tau = np.asarray(tau, dtype=float)
    phases = np.exp(np.outer(kernel.lambdas, tau))
    return kernel.weights[:, s_index] @ phases


def g1_direct(
    liouv: Liouvillian,
    traj: Trajectory,
    det: DetectionOperator,
    s: float,
    tau_grid: np.ndarray,
) -> np.ndarray:
    """Correlation by direct integration of the conditional operator.

    Propagates vec(E^+ rho(s)) with an adaptive Runge-Kutta scheme over the
    requested tau values and traces against E^-; serves as the oracle path
    for :func:`build_g1_kernel`.
    """
    times = traj.grid.values
    index = int(np.argmin(np.abs(times - s)))
    if abs(times[index] - s) > 0.5 * traj.grid.spacing + 1e-12:
        raise ValueError(f"s = {s} ps is not on the trajectory grid")
    y0 = vec(det.lowering @ traj.states[index])
    tau_grid = np.asarray(tau_grid, dtype=float)
    matrix = liouv.matrix
    result = solve_ivp(
        lambda _t, y: matrix @ y,
        (tau_grid[0], tau_grid[-1]),
        y0,
        t_eval=tau_grid,
        method="DOP853",
        rtol=ODE_RTOL,
        atol=ODE_ATOL,
    )
    if not result.success:
        raise NumericalError(f"conditional propagation failed: {result.message}")
    trace_vec = vec(det.raising.T)  # Tr[E^- X] as a dot product with vec(X)
    return trace_vec @ result.y


# ---------------------------------------------------------------------------
# closed-form engine (kernels with a mode matrix)


def _pair_series(x: np.ndarray) -> np.ndarray:
    """(1 - exp(-x)) / x for small |x|, via its Taylor series."""
    return 1.0 - x / 2.0 + x**2 / 6.0 - x**3 / 24.0 + x**4 / 120.0


def _closed_block(kernel: CorrelationKernel, nu: float, domega: np.ndarray, t: np.ndarray) -> np.ndarray:
    """R(dw, t) with both nested integrals in closed form; shape (n_t, n_w).

    Per eigenvalue pair the source integral is
    E(a, c; t) = (exp(a t) - exp(c t)) / (a - c); near-degenerate pairs and
    the removable tau-resonance are evaluated through series limits.
    """
    lam = kernel.lambdas
    w_modes = kernel.mode_matrix
    t = np.asarray(t, dtype=float)
    tmax = max(float(t[-1]), 1e-30)
    n_t, n_w = t.size, domega.size
    values = np.zeros((n_t, n_w))

    emu = np.exp(np.outer(lam, t))            # (9, n_t), decaying
    damp = np.exp(-2.0 * nu * t)
    g = lam + 2.0 * nu

    # omega-independent piece sum_j W_kj E(lambda_j, -2 nu; t)
    e2 = np.empty((9, n_t), dtype=complex)
    for j in range(9):
        if abs(g[j]) * tmax < PAIR_SERIES_CUT:
            e2[j] = emu[j] * t * _pair_series(g[j] * t)
        else:
            e2[j] = (emu[j] - damp) / g[j]
    scale = float(np.abs(w_modes).max())
    active = [k for k in range(9) if scale > 0 and np.abs(w_modes[k]).max() > 1e-30 * scale]

    for start in range(0, n_w, OMEGA_CHUNK):
        dw = domega[start : start + OMEGA_CHUNK]
        phase = np.exp(-1j * np.outer(t, dw))                     # (n_t, nc)
        for k in active:
            z = lam[k] + nu - 1j * dw                             # (nc,)
            singular = np.abs(z) < Z_SINGULAR
            zsafe = np.where(singular, 1.0, z)
            ek = np.exp((lam[k] - nu) * t)[:, None] * phase       # exp((lam_k - nu - i dw) t)
            acc = np.zeros((n_t, dw.size), dtype=complex)
            f_k = np.zeros(dw.size, dtype=complex)
            e2_k = np.zeros(n_t, dtype=complex)
            for j in range(9):
                wkj = w_modes[k, j]
                if wkj == 0.0:
                    continue
                e2_k += wkj * e2[j]
                denom = (lam[j] - lam[k]) + nu + 1j * dw          # (nc,)
                small = np.abs(denom) * tmax < PAIR_SERIES_CUT
                inv = np.where(small, 0.0, 1.0 / np.where(small, 1.0, denom))
                acc += np.outer(wkj * emu[j], inv)
                f_k += wkj * inv
                if np.any(small):
                    cols = np.nonzero(small)[0]
                    x = np.outer(t, denom[cols])
                    acc[:, cols] += (wkj * emu[j] * t)[:, None] * _pair_series(x)
            contrib = (acc - ek * f_k[None, :] - e2_k[:, None]) / zsafe[None, :]
            if np.any(singular):
                for col in np.nonzero(singular)[0]:
                    limit = np.zeros(n_t, dtype=complex)
                    for j in range(9):
                        wkj = w_modes[k, j]
                        if wkj == 0.0:
                            continue
                        x = g[j] * t
                        if abs(g[j]) * tmax < PAIR_SERIES_CUT:
                            inner = 0.5 * t**2 * (1.0 + x / 3.0 + x**2 / 12.0)
                        else:
                            inner = (np.exp(x) - 1.0 - x) / g[j] ** 2
                        limit += wkj * damp * inner
                    contrib[:, col] = limit
            values[:, start : start + OMEGA_CHUNK] += contrib.real
    return values


# ---------------------------------------------------------------------------
# grid engine (synthetic kernels sampled on the grid only)


def _trapezoid_weights(n: int, spacing: float) -> np.ndarray:
    w = np.full(n, spacing)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def _active_grid_modes(kernel: CorrelationKernel):
    scale = float(np.abs(kernel.weights).max())
    if scale == 0.0:
        return []
    return [k for k in range(kernel.lambdas.size) if np.abs(kernel.weights[k]).max() > 1e-30 * scale]


def _guard_exponents(kernel: CorrelationKernel, nu: float):
    span = kernel.s_grid.t_end - kernel.s_grid.t_start
    grow = (nu + float(np.maximum(0.0, -kernel.lambdas.real).max())) * span
    if max(grow, 2.0 * nu * span) > MAX_EXPONENT:
        raise SpectrumError(
            f"spectrometer width nu={nu} over a {span} ps window exceeds the representable range"
        )


def _grid_series(kernel: CorrelationKernel, nu: float, domega: np.ndarray) -> np.ndarray:
    """R on the kernel grid with a cumulative trapezoid source integral."""
    _guard_exponents(kernel, nu)
    s = kernel.s_grid.values
    h = kernel.s_grid.spacing
    n_s = s.size
    values = np.zeros((n_s, domega.size))
    damp = np.exp(-2.0 * nu * s)
    singular = np.zeros(domega.size, dtype=bool)

    for k in _active_grid_modes(kernel):
        lam = kernel.lambdas[k]
        w = kernel.weights[k]
        b = lam - nu
        u2 = w * np.exp(2.0 * nu * s)
        cum2 = np.cumsum(u2)
        t2 = h * (cum2 - 0.5 * u2[0] - 0.5 * u2)
        p2 = damp * t2
        for start in range(0, domega.size, OMEGA_CHUNK):
            dw = domega[start : start + OMEGA_CHUNK]
            z = (lam + nu) - 1j * dw
            small = np.abs(z) < Z_SINGULAR
            if np.any(small):
                singular[start : start + OMEGA_CHUNK] |= small
                z = np.where(small, 1.0, z)
            u1 = w[None, :] * np.exp((1j * dw[:, None] - b) * s[None, :])
            cum1 = np.cumsum(u1, axis=1)
            t1 = h * (cum1 - 0.5 * u1[:, :1] - 0.5 * u1)
            pref = np.exp((b - 1j * dw[:, None]) * s[None, :])
            contrib = (pref * t1 - p2[None, :]) / z[:, None]
            values[:, start : start + OMEGA_CHUNK] += contrib.real.T

    if np.any(singular):
        for j in np.nonzero(singular)[0]:
            for i in range(n_s):
                values[i, j] = _grid_slice(kernel, nu, np.array([domega[j]]), i)[0]
    return values


def _grid_slice(kernel: CorrelationKernel, nu: float, domega: np.ndarray, index: int) -> np.ndarray:
    """R(dw, t_index) by direct trapezoid over s <= t."""
    s = kernel.s_grid.values[: index + 1]
    if s.size < 2:
        return np.zeros(domega.size)
    t = kernel.s_grid.values[index]
    u = t - s
    tw = _trapezoid_weights(s.size, kernel.s_grid.spacing)
    out = np.zeros(domega.size)
    for k in _active_grid_modes(kernel):
        lam = kernel.lambdas[k]
        w = kernel.weights[k][: index + 1] * tw
        z = (lam + nu) - 1j * domega
        small = np.abs(z) < Z_SINGULAR
        zsafe = np.where(small, 1.0, z)
        grow = np.exp(np.outer(lam - nu - 1j * domega, u))
        decay = np.exp(-2.0 * nu * u)
        kernel_vals = (grow - decay[None, :]) / zsafe[:, None]
        if np.any(small):
            kernel_vals[small, :] = (u * decay)[None, :]
        out += (kernel_vals @ w).real
    return out


# ---------------------------------------------------------------------------
# public spectrum operations


def spectrum_time_series(
    kernel: CorrelationKernel, nu: float, domega: np.ndarray
) -> SpectrumGrid:
    """Time-dependent spectrum R(dw, t) at every kernel grid time."""
    if not nu > 0:
        raise ValueError(f"spectrometer half-width must be positive, got {nu}")
    domega = np.asarray(domega, dtype=float)
    s = kernel.s_grid.values
    if kernel.mode_matrix is not None:
        values = _closed_block(kernel, nu, domega, s)
    else:
        values = _grid_series(kernel, nu, domega)
    return SpectrumGrid(
        domega=domega,
        values=values,
        nu=nu,
        kind="td-series",
        t_grid=s.copy(),
    )


def time_dependent_spectrum(
    kernel: CorrelationKernel, nu: float, domega: np.ndarray, t: float
) -> SpectrumGrid:
    """Single time slice R(dw, t).

    Grid-only kernels snap t to the nearest kernel grid point; kernels with
    a mode matrix accept any t within the grid span.
    """
    if not nu > 0:
        raise ValueError(f"spectrometer half-width must be positive, got {nu}")
    if t < 0:
        raise ValueError(f"observation time must be >= 0, got {t}")
    times = kernel.s_grid.values
    if t > times[-1] + 1e-9:
        raise SpectrumError(f"t = {t} ps lies outside the kernel grid span")
    domega = np.asarray(domega, dtype=float)
    if kernel.mode_matrix is not None:
        values = _closed_block(kernel, nu, domega, np.array([float(t)]))[0]
        used_t = float(t)
    else:
        _guard_exponents(kernel, nu)
        index = int(np.argmin(np.abs(times - t)))
        if abs(times[index] - t) > 0.5 * kernel.s_grid.spacing + 1e-12:
            raise SpectrumError(f"t = {t} ps does not snap to the kernel grid")
        values = _grid_slice(kernel, nu, domega, index)
        used_t = float(times[index])
    return SpectrumGrid(
        domega=domega,
        values=values,
        nu=nu,
        kind="td-slice",
        t=used_t,
    )


def time_integrated_spectrum(
    kernel: CorrelationKernel, nu: float, domega: np.ndarray, T: float
) -> SpectrumGrid:
    """Integrated spectrum S(dw) = int_0^T R(dw, t) dt.

    The t grid coincides with the kernel grid, whose spacing must stay
    below (10 nu)^-1 so the filter response is resolved; a warning is
    emitted when the integration window is not long compared to the
    spectrometer response time (T * nu < 10).
    """
    times = kernel.s_grid.values
    if T > times[-1] + 1e-9:
        raise SpectrumError(
            f"integration time T = {T} ps exceeds the kernel grid span {times[-1]} ps"
        )
    if kernel.s_grid.spacing > 1.0 / (10.0 * nu):
        raise SpectrumError(
            f"kernel grid spacing {kernel.s_grid.spacing:.4g} ps is too coarse for nu = {nu:.4g} ps^-1;"
            " rebuild the kernel on a finer grid"
        )
    if T * nu < 10.0:
        warnings.warn(
            f"integration window T*nu = {T * nu:.3g} < 10: spectrometer response is truncated",
            stacklevel=2,
        )
    series = spectrum_time_series(kernel, nu, domega)
    keep = times <= T + 1e-9
    values = trapezoid(series.values[keep], times[keep], axis=0)
    return SpectrumGrid(
        domega=np.asarray(domega, dtype=float),
        values=values,
        nu=nu,
        kind="integrated",
        T=float(T),
    )


def default_windows(
    params: SystemParams,
    sd: SpectralDensityParams,
    nu: float,
    n_points: int = 2001,
) -> dict[str, np.ndarray]:
    """Default detuning windows around the two emission regions.

    The low-frequency window spans the drive-split features around zero
    detuning; the high-frequency window brackets the upper-transition
    doublet around ``delta`` and is widened by the undriven linewidth scale
    so half-maximum crossings stay inside it even for weak driving.
    """
    omega = params.omega_ang
    delta = params.delta_ang
    undriven = pe_decay_rate(sd, delta, 0.0)
    eg_half = 3.0 * omega + 20.0 * nu
    pe_half = max(omega + 20.0 * nu, 0.5 * omega + 2.0 * (undriven + 2.0 * nu))
    return {
        "eg": np.linspace(-eg_half, eg_half, n_points),
        "pe": np.linspace(delta - pe_half, delta + pe_half, n_points),
    }


def detection_from_params(params: SystemParams) -> DetectionOperator:
    return DetectionOperator.from_weights(params.alpha_col, params.beta_col)


def integration_grid(params: SystemParams, T: float, max_spacing: float = 1.5) -> TimeGrid:
    """Kernel grid for integrated spectra: resolves the drive oscillation."""
    h = max_spacing
    if params.omega_ang > 0:
        h = min(h, (2.0 * np.pi / params.omega_ang) / 24.0)
    n = int(np.ceil(T / h)) + 1
    return TimeGrid(0.0, T, n)


def build_pipeline(
    params: SystemParams,
    sd: SpectralDensityParams,
    grid: TimeGrid,
    rate_fn=None,
):
    """Generator -> trajectory -> correlation kernel for one parameter set."""
    liouv = build_liouvillian(params, sd, rate_fn=rate_fn)
    traj = propagate(liouv, params.initial_state, grid)
    kernel = build_g1_kernel(liouv, traj, detection_from_params(params))
    return liouv, traj, kernel
