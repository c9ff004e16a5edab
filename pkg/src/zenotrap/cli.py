"""Command-line entry point: simulation pipelines to CSV files plus a manifest.

Every command resolves the configuration, writes delimited output into the
chosen directory and updates a single ``manifest.json`` there that records
the fully resolved parameters, grid definitions, per-file digests and
numerical diagnostics.  Floats are written with round-trip ``repr`` so
identical runs produce byte-identical files.

Exit codes: 0 success, 2 configuration/validation/usage error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import linewidth_sweep
from .config import ConfigError, load
from .core import TimeGrid, angular_to_energy, energy_to_angular
from .liouvillian import NumericalError, build_liouvillian, propagate
from .spectral_density import pe_decay_rate, total_rate
from .spectra import (
    SpectrumError,
    build_pipeline,
    default_windows,
    integration_grid,
    spectrum_time_series,
    time_integrated_spectrum,
)
from .toymodels import schrodinger_oracle, three_level_survival

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

TOY_OMEGA_PE = 0.01   # ps^-1, three-level chain upper coupling
TOY_OMEGA_EG = 0.1    # ps^-1, lower coupling (strong-trapping regime)
TOY_T_END = 1000.0
TOY_POINTS = 1001

MAX_TD_SLICES = 201   # cap on emitted time rows per time-dependent spectrum

log = logging.getLogger("zenotrap")


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _omega_tag(omega_uev: float) -> str:
    return f"{omega_uev:g}".replace(".", "p").replace("-", "m")


def write_csv(path: Path, header: list[str], rows) -> None:
    """Write rows atomically with deterministic formatting."""
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
    data = ("\n".join(lines) + "\n").encode("utf-8")
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    digest.update(path.read_bytes())
    return digest.hexdigest()


def update_manifest(out_dir: Path, command: str, resolved: dict, grids: dict, files: list[Path], diagnostics: dict) -> None:
    """Append a run record to the directory manifest (atomic rewrite)."""
    manifest_path = out_dir / "manifest.json"
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    else:
        manifest = {"tool": "zenotrap", "version": __version__, "runs": [], "files": {}}
    manifest["version"] = __version__
    run = {
        "command": command,
        "timestamp_utc": datetime.now(timezone.utc).isoformat(),
        "parameters": resolved,
        "grids": grids,
        "files": [],
        "diagnostics": diagnostics,
    }
    for path in files:
        entry = {"name": path.name, "sha256": _sha256(path), "bytes": path.stat().st_size}
        run["files"].append(entry)
        manifest["files"][path.name] = entry["sha256"]
    manifest["runs"].append(run)
    tmp = manifest_path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, manifest_path)


def _parse_omega_flags(raw: list[str] | None) -> list[float] | None:
    """Flatten repeatable --omega-uev flags; comma lists allowed."""
    if raw is None:
        return None
    values: list[float] = []
    for item in raw:
        for piece in item.split(","):
            piece = piece.strip()
            if not piece:
                continue
            values.append(float(piece))
    if not values:
        raise ConfigError("--omega-uev produced an empty drive grid")
    return values


def _resolve_workers(args) -> int:
    if getattr(args, "workers", None):
        return max(1, int(args.workers))
    env = os.environ.get("ZENO_TRAP_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"ZENO_TRAP_WORKERS must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _grid_record(grid: TimeGrid) -> dict:
    return {"t_start_ps": grid.t_start, "t_end_ps": grid.t_end, "n_points": grid.n_points}


def _window_record(domega: np.ndarray) -> dict:
    return {
        "domega_min_uev": float(angular_to_energy(domega[0])),
        "domega_max_uev": float(angular_to_energy(domega[-1])),
        "n_points": int(domega.size),
    }


def cmd_rates(args) -> int:
    cfg = load(args.config)
    out = _out_dir(args)
    sd, params = cfg.sd, cfg.params

    span = 0.75 * sd.xi
    omega_axis = np.linspace(params.delta_ang - span, params.delta_ang + span, 1201)
    density_rows = [
        (angular_to_energy(w), total_rate(sd, float(w))) for w in omega_axis
    ]
    density_path = out / "rates_spectral_density.csv"
    write_csv(density_path, ["omega_rel_uev", "gamma_per_ps"], density_rows)

    omegas = _parse_omega_flags(args.omega_uev)
    if omegas is None:
        omegas = list(np.linspace(0.0, 170.0, 341))
    pe_rows = [
        (om, pe_decay_rate(sd, params.delta_ang, energy_to_angular(om))) for om in omegas
    ]
    pe_path = out / "rates_pe_vs_drive.csv"
    write_csv(pe_path, ["omega_uev", "gamma_pe_per_ps"], pe_rows)

    log.info("rates: %d density points, %d drive points -> %s", len(density_rows), len(pe_rows), out)
    update_manifest(
        out,
        "rates",
        cfg.resolved,
        {"density_window": _window_record(omega_axis - params.delta_ang), "omega_uev": omegas},
        [density_path, pe_path],
        {},
    )
    return EXIT_OK


def _dynamics_rows(traj):
    for i, t in enumerate(traj.grid.values):
        rho = traj.states[i]
        yield (
            t,
            rho[0, 0].real,
            rho[1, 1].real,
            rho[2, 2].real,
            rho[1, 0].real,
            rho[1, 0].imag,
            rho[2, 1].real,
            rho[2, 1].imag,
            rho[2, 0].real,
            rho[2, 0].imag,
            traj.trace_err[i],
            traj.min_eig[i],
        )


DYNAMICS_HEADER = [
    "t_ps",
    "rho_gg",
    "rho_ee",
    "rho_pp",
    "re_rho_eg",
    "im_rho_eg",
    "re_rho_pe",
    "im_rho_pe",
    "re_rho_pg",
    "im_rho_pg",
    "trace_err",
    "min_eig",
]


def cmd_dynamics(args) -> int:
    cfg = load(args.config)
    out = _out_dir(args)
    omegas = _parse_omega_flags(args.omega_uev) or [cfg.params.omega_uev]

    files = []
    diagnostics = {"max_trace_err": 0.0, "min_state_eig": 0.0, "eigen_condition": 0.0}
    for om in omegas:
        params = dataclasses.replace(cfg.params, omega_uev=float(om))
        liouv = build_liouvillian(params, cfg.sd)
        traj = propagate(liouv, params.initial_state, cfg.time_grid)
        path = out / f"dynamics_omega_{_omega_tag(om)}.csv"
        write_csv(path, DYNAMICS_HEADER, _dynamics_rows(traj))
        files.append(path)
        diagnostics["max_trace_err"] = max(diagnostics["max_trace_err"], float(traj.trace_err.max()))
        diagnostics["min_state_eig"] = min(diagnostics["min_state_eig"], float(traj.min_eig.min()))
        if liouv.eigen is not None:
            diagnostics["eigen_condition"] = max(diagnostics["eigen_condition"], liouv.eigen.condition)
        log.info("dynamics: omega = %g ueV -> %s", om, path.name)

    update_manifest(out, "dynamics", cfg.resolved, {"time": _grid_record(cfg.time_grid), "omega_uev": omegas}, files, diagnostics)
    return EXIT_OK


def _selected_windows(args, params, sd, nu) -> dict[str, np.ndarray]:
    windows = default_windows(params, sd, nu)
    if args.window != "both":
        windows = {args.window: windows[args.window]}
    return windows


def cmd_spectrum(args) -> int:
    cfg = load(args.config)
    out = _out_dir(args)
    omegas = _parse_omega_flags(args.omega_uev) or [cfg.params.omega_uev]

    files = []
    diagnostics = {"max_trace_err": 0.0, "min_state_eig": 0.0, "eigen_condition": 0.0}
    grids: dict = {"mode": args.mode, "omega_uev": omegas}
    for om in omegas:
        params = dataclasses.replace(cfg.params, omega_uev=float(om))
        if args.mode == "integrated":
            grid = integration_grid(params, cfg.integration_T_ps)
        else:
            grid = cfg.time_grid
        liouv, traj, kernel = build_pipeline(params, cfg.sd, grid)
        diagnostics["max_trace_err"] = max(diagnostics["max_trace_err"], float(traj.trace_err.max()))
        diagnostics["min_state_eig"] = min(diagnostics["min_state_eig"], float(traj.min_eig.min()))
        if liouv.eigen is not None:
            diagnostics["eigen_condition"] = max(diagnostics["eigen_condition"], liouv.eigen.condition)
        windows = _selected_windows(args, params, cfg.sd, cfg.nu)
        grids[f"kernel_grid_omega_{_omega_tag(om)}"] = _grid_record(grid)
        for label, domega in windows.items():
            grids[f"window_{label}_omega_{_omega_tag(om)}"] = _window_record(domega)

        if args.mode == "integrated":
            rows = []
            for label, domega in windows.items():
                spec = time_integrated_spectrum(kernel, cfg.nu, domega, cfg.integration_T_ps)
                rows.extend(
                    (angular_to_energy(w), v, label)
                    for w, v in zip(spec.domega, spec.values)
                )
            path = out / f"spectrum_integrated_omega_{_omega_tag(om)}.csv"
            write_csv(path, ["domega_uev", "S", "window"], rows)
        else:
            rows = []
            for label, domega in windows.items():
                series = spectrum_time_series(kernel, cfg.nu, domega)
                stride = max(1, (series.t_grid.size - 1) // (MAX_TD_SLICES - 1))
                for i in range(0, series.t_grid.size, stride):
                    t = series.t_grid[i]
                    rows.extend(
                        (t, angular_to_energy(w), v, label)
                        for w, v in zip(series.domega, series.values[i])
                    )
            path = out / f"spectrum_td_omega_{_omega_tag(om)}.csv"
            write_csv(path, ["t_ps", "domega_uev", "R", "window"], rows)
        files.append(path)
        log.info("spectrum (%s): omega = %g ueV -> %s", args.mode, om, path.name)

    update_manifest(out, f"spectrum-{args.mode}", cfg.resolved, grids, files, diagnostics)
    return EXIT_OK


SWEEP_HEADER = [
    "omega_uev",
    "gamma_pe_per_ps",
    "fwhm_lower_uev",
    "fwhm_upper_uev",
    "separation_uev",
    "delay_ps",
    "status",
]


def cmd_sweep(args) -> int:
    cfg = load(args.config)
    out = _out_dir(args)
    omegas = _parse_omega_flags(args.omega_uev)
    if omegas is None:
        omegas = [float(x) for x in np.linspace(10.0, 170.0, 17)]
    workers = _resolve_workers(args)

    log.info("sweep: %d drive points on %d workers", len(omegas), workers)
    result = linewidth_sweep(
        omegas,
        cfg.params,
        cfg.sd,
        cfg.nu,
        cfg.integration_T_ps,
        t_end_ps=cfg.time_grid.t_end,
        n_time=cfg.time_grid.n_points,
        workers=workers,
    )
    for row in result.rows:
        log.info("sweep point omega = %g ueV: %s", row.omega_uev, row.status)
    path = out / "sweep.csv"
    write_csv(
        path,
        SWEEP_HEADER,
        (
            (
                row.omega_uev,
                row.gamma_pe_per_ps,
                row.fwhm_lower_uev,
                row.fwhm_upper_uev,
                row.separation_uev,
                row.delay_ps,
                row.status,
            )
            for row in result.rows
        ),
    )
    update_manifest(
        out,
        "sweep",
        cfg.resolved,
        {"omega_uev": omegas, "workers": workers, "time": _grid_record(cfg.time_grid)},
        [path],
        {"n_failed": sum(1 for r in result.rows if r.status.startswith("error"))},
    )
    if all(row.status.startswith("error") for row in result.rows):
        log.error("sweep: every point failed")
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_toy(args) -> int:
    cfg = load(args.config)  # validates the config even though toys ignore it
    out = _out_dir(args)
    t = np.linspace(0.0, TOY_T_END, TOY_POINTS)
    closed = three_level_survival(TOY_OMEGA_PE, TOY_OMEGA_EG, t)
    oracle = schrodinger_oracle(TOY_OMEGA_PE, TOY_OMEGA_EG, t)
    rows = [
        (t[i], closed[i], oracle[i], abs(closed[i] - oracle[i])) for i in range(t.size)
    ]
    path = out / "toy_three_level.csv"
    write_csv(path, ["t_ps", "survival_closed_form", "survival_oracle", "abs_diff"], rows)
    log.info("toy: max |closed - oracle| = %.3e", max(r[3] for r in rows))
    update_manifest(
        out,
        "toy",
        cfg.resolved,
        {"omega_pe_per_ps": TOY_OMEGA_PE, "omega_eg_per_ps": TOY_OMEGA_EG, "t_end_ps": TOY_T_END, "n_points": TOY_POINTS},
        [path],
        {},
    )
    return EXIT_OK


def cmd_plot(args) -> int:
    from . import plots

    cfg = load(args.config)
    out = _out_dir(args)
    rendered = plots.render_all(out)
    if not rendered:
        log.error("plot: no renderable CSV inputs found in %s", out)
        return EXIT_CONFIG
    for path in rendered:
        log.info("plot: wrote %s", path.name)
    update_manifest(out, "plot", cfg.resolved, {}, rendered, {})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zenotrap",
        description="Driven three-level emitter in a structured photonic reservoir",
    )
    parser.add_argument("--version", action="version", version=f"zenotrap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", metavar="PATH", default=None, help="flat key = value config file")
        p.add_argument("--out-dir", metavar="PATH", default="zenotrap-out", help="output directory")

    p_rates = sub.add_parser("rates", help="reservoir rate curve and drive-dependent decay rate")
    add_common(p_rates)
    p_rates.add_argument("--omega-uev", action="append", metavar="X", help="drive grid point(s), repeatable")
    p_rates.set_defaults(func=cmd_rates)

    p_dyn = sub.add_parser("dynamics", help="density-matrix trajectory CSV")
    add_common(p_dyn)
    p_dyn.add_argument("--omega-uev", action="append", metavar="X", help="drive strength(s), repeatable")
    p_dyn.set_defaults(func=cmd_dynamics)

    p_spec = sub.add_parser("spectrum", help="time-dependent or time-integrated emission spectra")
    add_common(p_spec)
    p_spec.add_argument("--omega-uev", action="append", metavar="X", help="drive strength(s), repeatable")
    p_spec.add_argument("--mode", choices=("td", "integrated"), default="integrated")
    p_spec.add_argument("--window", choices=("eg", "pe", "both"), default="both")
    p_spec.set_defaults(func=cmd_spectrum)

    p_sweep = sub.add_parser("sweep", help="linewidth and delay versus drive strength")
    add_common(p_sweep)
    p_sweep.add_argument("--omega-uev", action="append", metavar="X", help="drive strength(s), repeatable")
    p_sweep.add_argument("--workers", type=int, default=None, help="worker processes (env ZENO_TRAP_WORKERS)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_toy = sub.add_parser("toy", help="closed-form trapping baselines with oracle comparison")
    add_common(p_toy)
    p_toy.set_defaults(func=cmd_toy)

    p_plot = sub.add_parser("plot", help="render figures from previously written CSVs")
    add_common(p_plot)
    p_plot.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except ValueError as exc:
        log.error("invalid input: %s", exc)
        return EXIT_CONFIG
    except (NumericalError, SpectrumError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
