"""Simulator for a driven three-level emitter in a structured photonic reservoir.

Strong resonant driving of the lower transition dresses the emitter and
moves its upper-level decay paths off the cavity resonance, suppressing
spontaneous emission; the package computes the resulting population
dynamics, filtered emission spectra and linewidth narrowing.
"""

__version__ = "0.1.0"

from .core import (
    DephasingModel,
    SystemParams,
    TimeGrid,
    angular_to_energy,
    dephasing_rate,
    energy_to_angular,
    validate,
)
from .spectral_density import SpectralDensityParams, cavity_rate, pe_decay_rate, total_rate
from .dressing import JumpComponent, SystemHamiltonian, frequency_components, system_hamiltonian
from .liouvillian import (
    Liouvillian,
    Trajectory,
    analytic_population,
    build_liouvillian,
    propagate,
)
from .spectra import (
    CorrelationKernel,
    DetectionOperator,
    SpectrumGrid,
    build_g1_kernel,
    build_pipeline,
    default_windows,
    g1_direct,
    g1_from_kernel,
    spectrum_time_series,
    time_dependent_spectrum,
    time_integrated_spectrum,
)
from .analysis import (
    Peak,
    SweepResult,
    delay_metric,
    find_spectrum_peaks,
    linewidth_sweep,
    peak_fwhm,
)
from .toymodels import (
    incoherent_survival,
    schrodinger_oracle,
    three_level_survival,
    two_level_survival,
    zeno_measurement_chain,
)
from .config import ConfigError, ResolvedConfig, load, parse_config_file, resolve_config

__all__ = [
    "__version__",
    "DephasingModel",
    "SystemParams",
    "TimeGrid",
    "angular_to_energy",
    "dephasing_rate",
    "energy_to_angular",
    "validate",
    "SpectralDensityParams",
    "cavity_rate",
    "pe_decay_rate",
    "total_rate",
    "JumpComponent",
    "SystemHamiltonian",
    "frequency_components",
    "system_hamiltonian",
    "Liouvillian",
    "Trajectory",
    "analytic_population",
    "build_liouvillian",
    "propagate",
    "CorrelationKernel",
    "DetectionOperator",
    "SpectrumGrid",
    "build_g1_kernel",
    "build_pipeline",
    "default_windows",
    "g1_direct",
    "g1_from_kernel",
    "spectrum_time_series",
    "time_dependent_spectrum",
    "time_integrated_spectrum",
    "Peak",
    "SweepResult",
    "delay_metric",
    "find_spectrum_peaks",
    "linewidth_sweep",
    "peak_fwhm",
    "incoherent_survival",
    "schrodinger_oracle",
    "three_level_survival",
    "two_level_survival",
    "zeno_measurement_chain",
    "ConfigError",
    "ResolvedConfig",
    "load",
    "parse_config_file",
    "resolve_config",
]
