"""Units, physical constants, parameter records and density-matrix helpers.

Internal convention: every frequency-like quantity is an angular frequency
in ps^-1 and every time is in ps.  Energies (ueV / meV) appear only at the
I/O boundary and are converted on the way in.  All reservoir frequencies
are measured relative to the lower (e -> g) transition, which coincides
with the drive laser; on that axis the upper (p -> e) transition sits at
the level-spacing asymmetry ``delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# CODATA-derived constants, fixed by definition of the internal unit system.
HBAR_MEV_PS = 0.6582119569      # meV * ps
HBAR_UEV_PS = 658.2119569       # ueV * ps
KB_MEV_PER_K = 0.08617333262    # meV / K

# Basis ordering used for every 3x3 matrix in the package.
G, E, P = 0, 1, 2
BASIS_LABELS = ("g", "e", "p")


def energy_to_angular(e_uev):
    """Convert an energy in ueV to an angular frequency in ps^-1."""
    return e_uev / HBAR_UEV_PS


def angular_to_energy(omega):
    """Convert an angular frequency in ps^-1 to an energy in ueV."""
    return omega * HBAR_UEV_PS


def lower_eg() -> np.ndarray:
    """Lowering operator |g><e| of the driven transition."""
    op = np.zeros((3, 3), dtype=complex)
    op[G, E] = 1.0
    return op


def lower_pe() -> np.ndarray:
    """Lowering operator |e><p| of the upper transition."""
    op = np.zeros((3, 3), dtype=complex)
    op[E, P] = 1.0
    return op


def projector(index: int) -> np.ndarray:
    """Projector |i><i| onto a bare basis state."""
    op = np.zeros((3, 3), dtype=complex)
    op[index, index] = 1.0
    return op


def pure_state(index: int) -> np.ndarray:
    """Density matrix of a bare basis state."""
    return projector(index)


@dataclass(frozen=True)
class DephasingModel:
    """Pure-dephasing channel acting on |e>.

    ``mode`` selects between no dephasing, a fixed rate given as an energy
    in ueV, and an excitation-induced rate that grows quadratically with
    the drive strength (exciton-phonon form, coupling in ps^2).
    """

    mode: str = "none"
    gamma_uev: float = 0.0
    alpha_ph_ps2: float = 0.0
    temperature_k: float = 4.0

    MODES = ("none", "fixed", "phonon")

    def __post_init__(self):
        if self.mode not in self.MODES:
            raise ValueError(f"unknown dephasing mode {self.mode!r}; expected one of {self.MODES}")

    @classmethod
    def none(cls) -> "DephasingModel":
        return cls(mode="none")

    @classmethod
    def fixed(cls, gamma_uev: float) -> "DephasingModel":
        return cls(mode="fixed", gamma_uev=gamma_uev)

    @classmethod
    def phonon(cls, alpha_ph_ps2: float, temperature_k: float) -> "DephasingModel":
        return cls(mode="phonon", alpha_ph_ps2=alpha_ph_ps2, temperature_k=temperature_k)

    def violations(self) -> list[str]:
        out = []
        if self.gamma_uev < 0:
            out.append(f"dephasing gamma_uev must be >= 0, got {self.gamma_uev}")
        if self.alpha_ph_ps2 < 0:
            out.append(f"dephasing alpha_ph_ps2 must be >= 0, got {self.alpha_ph_ps2}")
        if self.temperature_k <= 0:
            out.append(f"dephasing temperature_k must be > 0, got {self.temperature_k}")
        return out


def dephasing_rate(model: DephasingModel, omega_drive_uev: float) -> float:
    """Pure-dephasing rate in ps^-1 for a given drive strength in ueV.

    The phonon variant evaluates pi * alpha * (k_B T / hbar) * (Omega / hbar)^2
    with every factor expressed as an angular frequency.
    """
    if model.mode == "none":
        return 0.0
    if model.mode == "fixed":
        return energy_to_angular(model.gamma_uev)
    kt_ang = model.temperature_k * KB_MEV_PER_K / HBAR_MEV_PS
    omega_ang = energy_to_angular(omega_drive_uev)
    return math.pi * model.alpha_ph_ps2 * kt_ang * omega_ang**2


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid in ps."""

    t_start: float
    t_end: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError(f"TimeGrid needs n_points >= 2, got {self.n_points}")
        if not self.t_end > self.t_start:
            raise ValueError(f"TimeGrid needs t_end > t_start, got [{self.t_start}, {self.t_end}]")

    @property
    def spacing(self) -> float:
        return (self.t_end - self.t_start) / (self.n_points - 1)

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_points)


def _default_initial_state() -> np.ndarray:
    return pure_state(P)


@dataclass(frozen=True, eq=False)
class SystemParams:
    """User-facing emitter and drive parameters (energies in ueV)."""

    delta_uev: float = 10000.0
    omega_uev: float = 100.0
    dephasing: DephasingModel = field(default_factory=DephasingModel.none)
    alpha_col: complex = 1.0 + 0.0j
    beta_col: complex = 1.0 + 0.0j
    initial_state: np.ndarray = field(default_factory=_default_initial_state)

    @property
    def delta_ang(self) -> float:
        """Level-spacing asymmetry as an angular frequency, ps^-1."""
        return energy_to_angular(self.delta_uev)

    @property
    def omega_ang(self) -> float:
        """Rabi frequency as an angular frequency, ps^-1."""
        return energy_to_angular(self.omega_uev)


def state_diagnostics(rho: np.ndarray) -> tuple[float, float, float]:
    """Return (trace error, Hermiticity error, minimum eigenvalue) of a state."""
    trace_err = abs(np.trace(rho) - 1.0)
    herm_err = float(np.linalg.norm(rho - rho.conj().T))
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    return float(trace_err), herm_err, min_eig


def check_density_matrix(rho: np.ndarray, trace_tol=1e-10, herm_tol=1e-12, eig_tol=-1e-8) -> list[str]:
    """List of violated density-matrix invariants (empty when valid)."""
    out = []
    if rho.shape != (3, 3):
        return [f"state must be 3x3, got shape {rho.shape}"]
    trace_err, herm_err, min_eig = state_diagnostics(rho)
    if herm_err > herm_tol:
        out.append(f"state not Hermitian: |rho - rho^dag| = {herm_err:.3e}")
    if trace_err > trace_tol:
        out.append(f"state trace differs from 1 by {trace_err:.3e}")
    if min_eig < eig_tol:
        out.append(f"state has negative eigenvalue {min_eig:.3e}")
    return out


def validate(params: SystemParams, sd) -> list[str]:
    """Collect every parameter violation for a simulation setup.

    Beyond the per-field bounds this enforces the two regime conditions the
    model relies on: the drive must keep the dressed upper-transition
    frequencies inside the band gap (Omega < xi), and the lower transition
    must sit far enough from the gap that its dissipator samples only the
    flat background (Delta > xi / 2).
    """
    out = []
    if params.omega_uev < 0:
        out.append(f"omega_uev must be >= 0, got {params.omega_uev}")
    if params.delta_uev <= 0:
        out.append(f"delta_uev must be > 0, got {params.delta_uev}")
    weight = abs(params.alpha_col) ** 2 + abs(params.beta_col) ** 2
    if not weight > 0:
        out.append("collection weights alpha_col, beta_col must not both vanish")
    out.extend(params.dephasing.violations())
    out.extend(check_density_matrix(params.initial_state))

    for name in ("g", "kappa", "omega_c_rel", "gamma_B", "xi"):
        value = getattr(sd, name)
        if not value > 0:
            out.append(f"spectral density {name} must be > 0, got {value}")
    if sd.kappa >= sd.xi:
        out.append(f"cavity width kappa={sd.kappa} must be below the gap width xi={sd.xi}")
    if params.omega_ang >= sd.xi:
        out.append(
            f"drive exceeds gap: omega={params.omega_ang:.6g} ps^-1 must stay below xi={sd.xi:.6g} ps^-1"
        )
    if params.delta_ang <= 0.5 * sd.xi:
        out.append(
            "subsystems spectrally overlap: delta="
            f"{params.delta_ang:.6g} ps^-1 must exceed xi/2={0.5 * sd.xi:.6g} ps^-1"
        )
    return out
