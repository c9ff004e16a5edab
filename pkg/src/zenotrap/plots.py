"""Figure rendering from previously written CSV outputs.

Each function consumes the delimited files produced by the CLI commands
and writes one PNG per figure panel group into the same directory; the
CSV data remains the primary deliverable.
"""

from __future__ import annotations

import re
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 150


def _read(path: Path):
    return np.genfromtxt(path, delimiter=",", names=True, dtype=None, encoding="utf-8")


def _omega_from_name(path: Path) -> float:
    match = re.search(r"omega_([0-9pm]+)", path.stem)
    if not match:
        return float("nan")
    return float(match.group(1).replace("p", ".").replace("m", "-"))


def _sorted_by_omega(paths):
    return sorted(paths, key=_omega_from_name)


def render_rates_and_dynamics(out_dir: Path):
    """Time-dependent spectra maps, rate curves and population decay."""
    td_files = _sorted_by_omega(out_dir.glob("spectrum_td_omega_*.csv"))
    dyn_files = _sorted_by_omega(out_dir.glob("dynamics_omega_*.csv"))
    density = out_dir / "rates_spectral_density.csv"
    pe_rates = out_dir / "rates_pe_vs_drive.csv"
    if not (td_files or dyn_files or density.exists() or pe_rates.exists()):
        return None

    n_cols = max(len(td_files), 1)
    fig, axes = plt.subplots(3, n_cols, figsize=(5.0 * n_cols, 10.0), squeeze=False)

    for col, path in enumerate(td_files):
        data = _read(path)
        ax = axes[0][col]
        t = np.unique(data["t_ps"])
        w = np.unique(data["domega_uev"])
        grid = np.full((t.size, w.size), np.nan)
        t_idx = np.searchsorted(t, data["t_ps"])
        w_idx = np.searchsorted(w, data["domega_uev"])
        grid[t_idx, w_idx] = data["R"]
        mesh = ax.pcolormesh(w / 1000.0, t, grid, shading="nearest", cmap="inferno")
        fig.colorbar(mesh, ax=ax, label="R (arb.)")
        ax.set_xlabel(r"$\Delta\omega$ (meV)")
        ax.set_ylabel("t (ps)")
        ax.set_title(f"time-dependent spectrum, $\\Omega$ = {_omega_from_name(path):g} µeV")
    if not td_files:
        axes[0][0].set_axis_off()

    ax = axes[1][0]
    plotted = False
    if density.exists():
        data = _read(density)
        ax.semilogy(data["omega_rel_uev"] / 1000.0, data["gamma_per_ps"], label=r"$\Gamma(\omega)$")
        ax.set_xlabel(r"$\omega - \omega_{eg}$ (meV)")
        ax.set_ylabel(r"rate (ps$^{-1}$)")
        plotted = True
    if pe_rates.exists():
        data = _read(pe_rates)
        twin = ax.twiny() if plotted else ax
        twin.plot(data["omega_uev"], data["gamma_pe_per_ps"], "r-", label="upper-level decay")
        twin.set_xlabel(r"$\Omega$ (µeV)")
        if not plotted:
            twin.set_ylabel(r"rate (ps$^{-1}$)")
        plotted = True
    if not plotted:
        ax.set_axis_off()
    ax.legend(loc="upper left")
    for col in range(1, n_cols):
        axes[1][col].set_axis_off()

    ax = axes[2][0]
    if dyn_files:
        for path in dyn_files:
            data = _read(path)
            ax.plot(data["t_ps"], data["rho_pp"], label=f"$\\Omega$ = {_omega_from_name(path):g} µeV")
        ax.set_xlabel("t (ps)")
        ax.set_ylabel(r"$\rho_{pp}$")
        ax.legend()
    else:
        ax.set_axis_off()
    for col in range(1, n_cols):
        axes[2][col].set_axis_off()

    fig.tight_layout()
    path = out_dir / "fig2.png"
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def render_integrated_panels(out_dir: Path):
    """Integrated spectra: one column per drive strength, one row per window."""
    files = _sorted_by_omega(out_dir.glob("spectrum_integrated_omega_*.csv"))
    if not files:
        return None
    fig, axes = plt.subplots(2, len(files), figsize=(4.5 * len(files), 7.0), squeeze=False)
    for col, path in enumerate(files):
        data = _read(path)
        omega = _omega_from_name(path)
        for row, label in enumerate(("eg", "pe")):
            ax = axes[row][col]
            mask = data["window"] == label
            if not np.any(mask):
                ax.set_axis_off()
                continue
            x = data["domega_uev"][mask]
            offset = 0.0
            if label == "pe":
                offset = np.round(np.mean(x) / 1000.0) * 1000.0
                ax.set_xlabel(rf"$\Delta\omega - {offset / 1000.0:g}$ meV (µeV)")
            else:
                ax.set_xlabel(r"$\Delta\omega$ (µeV)")
            ax.plot(x - offset, data["S"][mask])
            ax.set_ylabel("S (arb.)")
            ax.set_title(f"{label} window, $\\Omega$ = {omega:g} µeV")
    fig.tight_layout()
    path = out_dir / "fig3abc.png"
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def render_linewidths(out_dir: Path):
    """Doublet linewidths and decay rate versus drive strength."""
    sweep = out_dir / "sweep.csv"
    if not sweep.exists():
        return None
    data = _read(sweep)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ok = np.array([str(s) == "ok" for s in np.atleast_1d(data["status"])])
    omega = np.atleast_1d(data["omega_uev"])
    lower = np.atleast_1d(data["fwhm_lower_uev"])
    upper = np.atleast_1d(data["fwhm_upper_uev"])
    ax.plot(omega[ok], lower[ok], "o-", label="lower doublet peak")
    ax.plot(omega[ok], upper[ok], "s--", label="upper doublet peak")
    ax.set_xlabel(r"$\Omega$ (µeV)")
    ax.set_ylabel(r"$\delta\omega$ (µeV)")
    twin = ax.twinx()
    gamma = np.atleast_1d(data["gamma_pe_per_ps"])
    twin.plot(omega, gamma, "r:", label="upper-level decay rate")
    twin.set_ylabel(r"$\Gamma$ (ps$^{-1}$)", color="r")
    ax.legend(loc="upper right")
    fig.tight_layout()
    path = out_dir / "fig3e.png"
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def render_all(out_dir: Path) -> list[Path]:
    """Render every figure whose CSV inputs exist; returns written paths."""
    out = []
    for renderer in (render_rates_and_dynamics, render_integrated_panels, render_linewidths):
        path = renderer(Path(out_dir))
        if path is not None:
            out.append(path)
    return out
