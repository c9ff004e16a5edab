"""Flat key/value configuration with defaults and full resolution.

The file format is one ``key = value`` assignment per line; blank lines and
``#`` comments are ignored.  Every key is optional and unknown keys are a
hard error.  Resolution converts the lab-unit values into the internal
parameter records and keeps the fully resolved mapping for run manifests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .core import DephasingModel, SystemParams, TimeGrid, energy_to_angular, validate
from .spectral_density import SpectralDensityParams


class ConfigError(ValueError):
    """Unusable configuration: unknown key, bad value or violated bound."""


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError as exc:
        raise ConfigError(f"cannot parse complex value {text!r}") from exc


_SCHEMA = {
    "delta_mev": float,
    "omega_uev": float,
    "kappa_mev": float,
    "gamma_b_inv_ps": float,
    "cavity_peak_inv_ps": float,
    "xi_mev": float,
    "dephasing_mode": str,
    "gamma_uev": float,
    "alpha_ph_ps2": float,
    "temperature_k": float,
    "alpha_col": _parse_complex,
    "beta_col": _parse_complex,
    "t_end_ps": float,
    "n_time": int,
    "spectrometer_nu_uev": float,
    "integration_T_ps": float,
    # Cavity centre relative to the laser; defaults to the level asymmetry
    # (resonant cavity) when omitted, so detuned-cavity runs stay possible.
    "omega_c_rel_uev": float,
}

DEFAULTS = {
    "delta_mev": 10.0,
    "omega_uev": 100.0,
    "kappa_mev": 0.1,
    "gamma_b_inv_ps": 500.0,
    "cavity_peak_inv_ps": 20.0,
    "xi_mev": 2.0,
    "dephasing_mode": "none",
    "gamma_uev": 0.0,
    "alpha_ph_ps2": 0.03,
    "temperature_k": 4.0,
    "alpha_col": 1.0 + 0.0j,
    "beta_col": 1.0 + 0.0j,
    "t_end_ps": 60.0,
    "n_time": 601,
    "spectrometer_nu_uev": 0.3,
    "integration_T_ps": 3000.0,
    "omega_c_rel_uev": None,
}


def parse_config_file(path) -> dict:
    """Read a config file into a typed mapping; unknown keys raise."""
    values: dict = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        converter = _SCHEMA[key]
        try:
            values[key] = converter(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r} ({exc})") from exc
    return values


@dataclass(frozen=True, eq=False)
class ResolvedConfig:
    """All simulation inputs in internal units plus the manifest record."""

    params: SystemParams
    sd: SpectralDensityParams
    time_grid: TimeGrid
    nu: float                 # spectrometer half-width, ps^-1
    integration_T_ps: float
    resolved: dict = field(default_factory=dict)


def resolve_config(file_values: dict | None = None, overrides: dict | None = None) -> ResolvedConfig:
    """Merge defaults, file values and programmatic overrides, then validate."""
    merged = dict(DEFAULTS)
    for source in (file_values or {}), (overrides or {}):
        for key, value in source.items():
            if key not in _SCHEMA:
                raise ConfigError(f"unknown key {key!r}")
            merged[key] = value

    mode = merged["dephasing_mode"]
    if mode == "none":
        dephasing = DephasingModel.none()
    elif mode == "fixed":
        dephasing = DephasingModel.fixed(float(merged["gamma_uev"]))
    elif mode == "phonon":
        dephasing = DephasingModel.phonon(
            float(merged["alpha_ph_ps2"]), float(merged["temperature_k"])
        )
    else:
        raise ConfigError(f"dephasing_mode must be none, fixed or phonon, got {mode!r}")

    delta_uev = float(merged["delta_mev"]) * 1000.0
    omega_c_rel_uev = merged["omega_c_rel_uev"]
    if omega_c_rel_uev is None:
        omega_c_rel_uev = delta_uev

    params = SystemParams(
        delta_uev=delta_uev,
        omega_uev=float(merged["omega_uev"]),
        dephasing=dephasing,
        alpha_col=complex(merged["alpha_col"]),
        beta_col=complex(merged["beta_col"]),
    )
    sd = SpectralDensityParams.from_lab_units(
        kappa_mev=float(merged["kappa_mev"]),
        gamma_b_inv_ps=float(merged["gamma_b_inv_ps"]),
        cavity_peak_inv_ps=float(merged["cavity_peak_inv_ps"]),
        xi_mev=float(merged["xi_mev"]),
        omega_c_rel_uev=float(omega_c_rel_uev),
    )
    problems = validate(params, sd)
    if problems:
        raise ConfigError("; ".join(problems))

    time_grid = TimeGrid(0.0, float(merged["t_end_ps"]), int(merged["n_time"]))
    nu = energy_to_angular(float(merged["spectrometer_nu_uev"]))
    if not nu > 0:
        raise ConfigError(f"spectrometer_nu_uev must be > 0, got {merged['spectrometer_nu_uev']}")
    integration_T = float(merged["integration_T_ps"])
    if not integration_T > 0:
        raise ConfigError(f"integration_T_ps must be > 0, got {integration_T}")

    record = dict(merged)
    record["omega_c_rel_uev"] = float(omega_c_rel_uev)
    record["alpha_col"] = str(complex(merged["alpha_col"]))
    record["beta_col"] = str(complex(merged["beta_col"]))
    return ResolvedConfig(
        params=params,
        sd=sd,
        time_grid=time_grid,
        nu=nu,
        integration_T_ps=integration_T,
        resolved=record,
    )


def load(path=None, overrides: dict | None = None) -> ResolvedConfig:
    """Resolve a config file (or pure defaults) with optional overrides."""
    file_values = parse_config_file(path) if path else None
    return resolve_config(file_values, overrides)
