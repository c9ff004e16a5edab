"""Structured emission rate of the photonic reservoir.

The frequency-resolved decay rate is a Lorentzian cavity resonance sitting
inside a photonic band gap, with a flat background rate outside the gap
window.  Frequencies are relative to the e -> g transition, so with the
cavity resonant on the bare p -> e transition its centre sits at ``delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import energy_to_angular


@dataclass(frozen=True)
class SpectralDensityParams:
    """Reservoir parameters, all angular frequencies / rates in ps^-1."""

    g: float             # emitter-cavity coupling
    kappa: float         # cavity linewidth (FWHM)
    omega_c_rel: float   # cavity centre relative to the e->g transition
    gamma_B: float       # flat background rate outside the gap
    xi: float            # band-gap width

    @classmethod
    def from_lab_units(
        cls,
        kappa_mev: float = 0.1,
        gamma_b_inv_ps: float = 500.0,
        cavity_peak_inv_ps: float = 20.0,
        xi_mev: float = 2.0,
        omega_c_rel_uev: float = 10000.0,
    ) -> "SpectralDensityParams":
        """Build from the experiment-style parameter set.

        ``cavity_peak_inv_ps`` is the inverse of 4 g^2 / kappa in ps, i.e.
        half the inverse peak rate; the peak of the Lorentzian is then
        2 g^2 / kappa = 1 / (2 * cavity_peak_inv_ps).
        """
        kappa = energy_to_angular(kappa_mev * 1000.0)
        g = math.sqrt(kappa / (4.0 * cavity_peak_inv_ps))
        return cls(
            g=g,
            kappa=kappa,
            omega_c_rel=energy_to_angular(omega_c_rel_uev),
            gamma_B=1.0 / gamma_b_inv_ps,
            xi=energy_to_angular(xi_mev * 1000.0),
        )


def cavity_rate(sd: SpectralDensityParams, omega_rel):
    """Lorentzian cavity contribution at a relative frequency (ps^-1).

    Peaks at 2 g^2 / kappa on resonance with half width kappa / 2.
    """
    half_kappa = 0.5 * sd.kappa
    return sd.g**2 * half_kappa / ((omega_rel - sd.omega_c_rel) ** 2 + half_kappa**2)


def total_rate(sd: SpectralDensityParams, omega_rel):
    """Composite emission rate: cavity inside the gap window, background outside.

    The boundary |omega - omega_c| = xi / 2 belongs to the cavity branch.
    Accepts scalars or arrays.
    """
    inside = np.abs(np.asarray(omega_rel) - sd.omega_c_rel) <= 0.5 * sd.xi
    value = np.where(inside, cavity_rate(sd, omega_rel), sd.gamma_B)
    if np.isscalar(omega_rel):
        return float(value)
    return value


def pe_decay_rate(sd: SpectralDensityParams, delta: float, omega_drive: float) -> float:
    """Total decay rate of the upper level under driving (ps^-1).

    The drive splits the decay into two paths sampling the reservoir at
    delta +/- omega_drive / 2; the rate is the sum of both samples.
    """
    return total_rate(sd, delta + 0.5 * omega_drive) + total_rate(sd, delta - 0.5 * omega_drive)
