"""``bsv-tpa`` command-line front end.

Configuration is INI-style (see ``DEFAULTS``) with user-facing units;
``--set section.key=value`` overrides win over ``--config`` files, which win
over ``--preset`` bundles.  Output is CSV with a ``#`` provenance block that
can itself be passed back as ``--config``.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np
from scipy import constants

from . import __version__
from . import dispersion as disp
from . import oracles, tpa
from .numerics import DetuningGrid
from .pdc import (CrystalParams, GatedPulseParams, ValidityWarning, gain_at, gain_for_photon_number,
                  gain_functions, mode_rate, photon_rate, photons_per_mode,
                  photons_per_mode_estimate, regime, width_high, width_low)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ORACLE = 0, 1, 2, 3

DEFAULTS = {
    "crystal": {
        "wavelength_nm": "532",          # centre of the down-converted light
        "gvd_fs2_per_mm": "50",          # k''; kappa = k''/2 = 2.5e-26 s^2/m
        "length_mm": "10",
        "gamma_z": "1e-4",
        "xi": "1",
    },
    "gate": {"duration_ps": "10"},
    "molecule": {
        "sigma2_gm": "9",
        "linewidth_rad_per_s": "1e12",
        "detuning_rad_per_s": "0",       # omega_fg - 2 omega0
    },
    "sample": {
        "beam_radius_um": "10",
        "path_length_cm": "1",
        "concentration_mmol_per_l": "10",
    },
    "sweep": {
        "axis": "N",
        "start": "1",
        "stop": "1e6",
        "points": "25",
        "scale": "log",
        "n_photons": "",                 # pins N on non-N axes
    },
    "compensation": {"mode": "none", "d2_fs2": "0"},
    "incoherent": {"mode": "narrow-line"},
    "spectrum": {"gamma_z_list": "1e-4, 10", "span": "3", "points": "601"},
    "linewidth": {"n_photons_list": "1, 1e6"},
    "dispersion": {"gamma_z_list": "1e-4, 10", "start_kz": "-4", "stop_kz": "1", "points": "101"},
    "validate": {"tw_list": "100, 200", "mc_samples": "100000", "oracle_gamma_fg_w": "0.5",
                 "mc_tw": "50"},
    "numerics": {"grid_points": "20001", "workers": "1"},
    "run": {"seed": "12345"},
}

ASSUMPTIONS = (
    "centre wavelength 532 nm and k'' = 50 fs^2/mm are not given for the figures; "
    "they set the absolute frequency scale only",
)

PRESETS = {
    "fig3": {"spectrum": {"gamma_z_list": "1e-4, 10"}},
    "fig4": {"gate": {"duration_ps": "4.67"},
             "sweep": {"axis": "N", "start": "1e-2", "stop": "1e6", "points": "41", "scale": "log"},
             "incoherent": {"mode": "narrow-line"}, "compensation": {"mode": "none"}},
    "fig5": {"gate": {"duration_ps": "4.67"},
             "sweep": {"axis": "N", "start": "1e-1", "stop": "1e7", "points": "41", "scale": "log"},
             "incoherent": {"mode": "narrow-line"}, "compensation": {"mode": "none"}},
    "fig6": {"gate": {"duration_ps": "10"},
             "sweep": {"axis": "N", "start": "1e-1", "stop": "1e6", "points": "36", "scale": "log"},
             "compensation": {"mode": "optimal"}},
    "fig7": {"gate": {"duration_ps": "4.67"},
             "sweep": {"axis": "gamma_fg", "start": "1e10", "stop": "1e17", "points": "29",
                       "scale": "log"},
             "linewidth": {"n_photons_list": "1, 1e6"},
             "incoherent": {"mode": "full"}, "compensation": {"mode": "none"}},
    "fig8": {"dispersion": {"gamma_z_list": "1e-4, 10", "start_kz": "-4", "stop_kz": "1",
                            "points": "101"}},
    "fig9": {"gate": {"duration_ps": "4.67"},
             "sweep": {"axis": "N", "start": "1e-1", "stop": "1e7", "points": "41", "scale": "log"},
             "incoherent": {"mode": "narrow-line"}, "compensation": {"mode": "optimal"}},
}
PRESET_NOTES = {
    "fig4": "T = 4.67 ps chosen so that (3/4pi) w T = 125 with the default crystal",
    "fig7": "N = 1 and 1e6 taken as the lower and upper ends of the photon-number range",
}

# user-facing unit -> SI factor
UNIT_TABLE = {
    "nm": 1e-9, "mm": 1e-3, "cm": 1e-2, "um": 1e-6, "ps": 1e-12,
    "fs2": 1e-30, "fs2_per_mm": 1e-30 / 1e-3, "gm": tpa.GM, "mmol_per_l": 1e-3,
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config

def _parser() -> configparser.ConfigParser:
    cfg = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    cfg.read_dict(DEFAULTS)
    return cfg


def _provenance_block(text: str) -> str | None:
    lines, inside = [], False
    for line in text.splitlines():
        if line.startswith("# --- config ---"):
            inside = True
        elif line.startswith("# --- end config ---"):
            return "\n".join(lines)
        elif inside:
            lines.append(line[2:] if line.startswith("# ") else line.lstrip("#"))
    return None


def load_config(path: str | None = None, overrides=(), preset: str | None = None
                ) -> configparser.ConfigParser:
    """Defaults, then preset, then file (INI or a previous CSV output), then overrides."""
    cfg = _parser()
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        cfg.read_dict(PRESETS[preset])
    if path:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        block = _provenance_block(text)
        try:
            cfg.read_string(block if block is not None else text, source=path)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, option = key.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        if section not in DEFAULTS or option not in DEFAULTS[section]:
            raise ConfigError(f"unknown config key {key.strip()!r}")
        cfg.set(section, option, value.strip())
    for section in cfg.sections():
        for option in cfg[section]:
            if section not in DEFAULTS or option not in DEFAULTS[section]:
                raise ConfigError(f"unknown config key {section}.{option}")
    return cfg


def _num(cfg, section, key, positive=False, allow_zero=False) -> float:
    raw = cfg.get(section, key)
    try:
        v = float(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: expected a number, got {raw!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"{section}.{key}: must be finite, got {raw!r}")
    if positive and not (v > 0 or (allow_zero and v == 0)):
        raise ConfigError(f"{section}.{key}: must be positive, got {raw!r}")
    return v


def _num_list(cfg, section, key, positive=True) -> list[float]:
    raw = cfg.get(section, key)
    try:
        vals = [float(x) for x in raw.replace(";", ",").split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{section}.{key}: expected comma-separated numbers, got {raw!r}") from None
    if not vals or (positive and any(not v > 0 for v in vals)):
        raise ConfigError(f"{section}.{key}: expected positive numbers, got {raw!r}")
    return vals


def _choice(cfg, section, key, options) -> str:
    v = cfg.get(section, key).strip()
    if v not in options:
        raise ConfigError(f"{section}.{key}: expected one of {list(options)}, got {v!r}")
    return v


@dataclass
class RunConfig:
    """Resolved run configuration in SI units."""

    crystal: CrystalParams
    gate: GatedPulseParams
    molecule: tpa.MoleculeParams
    beam_radius: float
    path_length: float
    concentration: float      # mol/L
    sweep_axis: str
    sweep_values: np.ndarray
    n_photons: float | None
    compensation: object
    incoherent_mode: str
    seed: int
    grid_points: int
    workers: int
    raw: configparser.ConfigParser

    @property
    def n_molecules(self) -> float:
        return tpa.molecule_count(self.concentration, self.beam_radius, self.path_length)


def resolve(cfg: configparser.ConfigParser) -> RunConfig:
    lam = _num(cfg, "crystal", "wavelength_nm", True) * UNIT_TABLE["nm"]
    omega0 = 2 * math.pi * constants.c / lam
    kpp = _num(cfg, "crystal", "gvd_fs2_per_mm", True) * UNIT_TABLE["fs2_per_mm"]
    z = _num(cfg, "crystal", "length_mm", True) * UNIT_TABLE["mm"]
    gz = _num(cfg, "crystal", "gamma_z", True, allow_zero=True)
    xi = _choice(cfg, "crystal", "xi", ("0", "1"))
    crystal = CrystalParams(omega0, gz / z, z, kpp / 2, int(xi))
    gate = GatedPulseParams(_num(cfg, "gate", "duration_ps", True) * UNIT_TABLE["ps"])

    radius = _num(cfg, "sample", "beam_radius_um", True) * UNIT_TABLE["um"]
    molecule = tpa.MoleculeParams(
        sigma2=_num(cfg, "molecule", "sigma2_gm", True) * UNIT_TABLE["gm"],
        gamma_fg=_num(cfg, "molecule", "linewidth_rad_per_s", True),
        omega_fg=2 * omega0 + _num(cfg, "molecule", "detuning_rad_per_s"),
        A0=math.pi * radius ** 2)

    axis = _choice(cfg, "sweep", "axis", tpa.SWEEP_AXES)
    start = _num(cfg, "sweep", "start", True)
    stop = _num(cfg, "sweep", "stop", True)
    points = int(_num(cfg, "sweep", "points", True))
    scale = _choice(cfg, "sweep", "scale", ("log", "linear"))
    values = np.geomspace(start, stop, points) if scale == "log" else np.linspace(start, stop, points)
    if axis == "T":
        values = values * UNIT_TABLE["ps"]
    raw_n = cfg.get("sweep", "n_photons").strip()
    n_photons = _num(cfg, "sweep", "n_photons", True) if raw_n else None

    mode = _choice(cfg, "compensation", "mode", ("none", "fixed", "optimal"))
    compensation = (_num(cfg, "compensation", "d2_fs2") * UNIT_TABLE["fs2"]
                    if mode == "fixed" else mode)
    try:
        seed = int(cfg.get("run", "seed"))
    except ValueError:
        raise ConfigError(f"run.seed: expected an integer, got {cfg.get('run', 'seed')!r}") from None
    return RunConfig(
        crystal=crystal, gate=gate, molecule=molecule, beam_radius=radius,
        path_length=_num(cfg, "sample", "path_length_cm", True) * UNIT_TABLE["cm"],
        concentration=_num(cfg, "sample", "concentration_mmol_per_l", True) * UNIT_TABLE["mmol_per_l"],
        sweep_axis=axis, sweep_values=values, n_photons=n_photons, compensation=compensation,
        incoherent_mode=_choice(cfg, "incoherent", "mode", tpa.INCOHERENT_MODES),
        seed=seed, grid_points=int(_num(cfg, "numerics", "grid_points", True)),
        workers=int(_num(cfg, "numerics", "workers", True)), raw=cfg)


# ---------------------------------------------------------------- output

@dataclass
class OutputTable:
    columns: list[str]
    rows: list[list]
    notes: list[str]
    failed: bool = False
    oracle_failed: bool = False


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def render_csv(table: OutputTable, cfg, command: str, timestamp: str) -> str:
    out = io.StringIO()
    out.write(f"# bsv-tpa {__version__} {command}\n")
    out.write(f"# generated {timestamp}\n")
    for note in table.notes:
        out.write(f"# assumption: {note}\n")
    out.write("# --- config ---\n")
    for section in cfg.sections():
        out.write(f"# [{section}]\n")
        for key, value in cfg[section].items():
            out.write(f"# {key} = {value}\n")
    out.write("# --- end config ---\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_fmt(v) for v in row])
    return out.getvalue()


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        return None if not math.isfinite(v) else float(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v


def render_json(table: OutputTable, cfg, command: str, timestamp: str) -> str:
    doc = {
        "provenance": {
            "tool": "bsv-tpa", "version": __version__, "command": command,
            "generated": timestamp, "assumptions": table.notes,
            "config": {s: dict(cfg[s]) for s in cfg.sections()},
        },
        "columns": table.columns,
        "rows": [[_json_value(v) for v in row] for row in table.rows],
    }
    return json.dumps(doc, indent=1)


# ---------------------------------------------------------------- commands

def _notes(rc: RunConfig, preset: str | None) -> list[str]:
    notes = list(ASSUMPTIONS)
    if preset in PRESET_NOTES:
        notes.append(PRESET_NOTES[preset])
    return notes


def _b_or_nan(p):
    return width_high(p) if p.gamma > 0 else math.nan


def cmd_spectrum(rc: RunConfig) -> OutputTable:
    cfg = rc.raw
    span = _num(cfg, "spectrum", "span", True)
    points = int(_num(cfg, "spectrum", "points", True))
    if points % 2 == 0:
        points += 1
    columns = ["gamma_z [1]", "nu [rad/s]", "nu_over_w [1]",
               "S [photons/s per (rad/s)/2pi]", "S_normalized [1]", "w [rad/s]", "b [rad/s]",
               "F [photons/s]"]
    rows = []
    for gz in _num_list(cfg, "spectrum", "gamma_z_list", positive=False):
        if gz < 0:
            raise ConfigError(f"spectrum.gamma_z_list: gains must be >= 0, got {gz}")
        p = rc.crystal.with_gain(gz)
        w, b = width_low(p), _b_or_nan(p)
        scale = max(w, b) if p.gamma > 0 else w
        nu = DetuningGrid(min(span * scale, 0.5 * p.omega0), points, p.omega0).nodes
        s = np.abs(gain_at(p, nu)[1]).astype(float) ** 2
        peak = s.max()
        flux = photon_rate(gain_functions(p)) if p.gamma > 0 else 0.0
        for x, sv in zip(nu, s):
            rows.append([gz, x, x / w, sv, sv / peak if peak > 0 else 0.0, w, b, flux])
    return OutputTable(columns, rows, [])


AXIS_UNITS = {"N": "photons", "gamma_z": "1", "gamma_fg": "rad/s", "w": "rad/s", "T": "s"}


def _axis_column(axis: str) -> str:
    return f"sweep_{axis} [{AXIS_UNITS[axis]}]"


_TPA_COLUMNS = [
    "N [photons]", "gamma_z [1]", "T [s]", "gamma_fg [rad/s]",
    "w [rad/s]", "d2 [s^2]", "p_coh [1]", "p_incoh [1]", "p_classical [1]", "p_analytic [1]",
    "analytic_over_coh [1]", "mu [1]", "beta [1]", "r [1]", "g2 [1]", "N_cross [photons]",
    "excited_coh [molecules]", "excited_incoh [molecules]", "excited_classical [molecules]",
    "excited_analytic [molecules]", "regime [tag]", "error [text]",
]


def _tpa_row(res: tpa.TpaResult, n_mol: float) -> list:
    ncross = tpa.crossover_photon_number(res.w, res.T) if math.isfinite(res.w) else math.nan
    ratio = res.p_analytic / res.p_coh if res.p_coh > 0 else math.nan
    return [res.axis_value, res.n_photons, res.gamma_z, res.T, res.gamma_fg, res.w, res.d2,
            res.p_coh, res.p_incoh, res.p_classical, res.p_analytic, ratio, res.mu, res.beta,
            res.r, res.g2, ncross, res.p_coh * n_mol, res.p_incoh * n_mol,
            res.p_classical * n_mol, res.p_analytic * n_mol, res.regime, res.error]


def _setup(rc: RunConfig, **kw) -> tpa.TpaSetup:
    args = dict(crystal=rc.crystal, gate=rc.gate, molecule=rc.molecule, n_photons=rc.n_photons,
                incoherent_mode=rc.incoherent_mode, compensation=rc.compensation,
                min_grid_points=rc.grid_points)
    args.update(kw)
    return tpa.TpaSetup(**args)


def cmd_tpa_sweep(rc: RunConfig) -> OutputTable:
    if rc.sweep_axis != "N" and rc.n_photons is None and rc.sweep_axis != "gamma_z":
        raise ConfigError("sweep.n_photons must be set for sweeps over gamma_fg, w or T")
    results = tpa.sweep(_setup(rc), rc.sweep_axis, rc.sweep_values, rc.workers)
    rows = [_tpa_row(r, rc.n_molecules) for r in results]
    return OutputTable([_axis_column(rc.sweep_axis)] + _TPA_COLUMNS, rows, [], failed=any(r.error for r in results))


def cmd_linewidth_sweep(rc: RunConfig) -> OutputTable:
    if rc.sweep_axis != "gamma_fg":
        raise ConfigError("linewidth-sweep requires sweep.axis = gamma_fg")
    columns = ["N_target [photons]", _axis_column("gamma_fg")] + _TPA_COLUMNS + ["total_over_classical [1]",
                                                       "incoh_over_coh [1]"]
    rows, failed = [], False
    for n in _num_list(rc.raw, "linewidth", "n_photons_list"):
        results = tpa.sweep(_setup(rc, n_photons=n), "gamma_fg", rc.sweep_values, rc.workers)
        for r in results:
            failed |= bool(r.error)
            rows.append([n] + _tpa_row(r, rc.n_molecules)
                        + [r.p_total / r.p_classical, r.p_incoh / r.p_coh])
    return OutputTable(columns, rows, [], failed=failed)


def cmd_g2(rc: RunConfig) -> OutputTable:
    if rc.sweep_axis not in ("N", "gamma_z"):
        raise ConfigError("g2 requires sweep.axis = N or gamma_z")
    grid = disp.coherent_grid(rc.crystal, min_points=rc.grid_points)
    d = (disp.DispersionParams(rc.compensation) if isinstance(rc.compensation, float)
         else "optimal")
    columns = [_axis_column(rc.sweep_axis), "N [photons]", "gamma_z [1]", "nbar [photons/mode]",
               "g2_uncompensated [1]", "g2_compensated [1]", "g2_analytic [1]",
               "d2_opt [s^2]", "plateau [flag]", "error [text]"]
    rows, failed = [], False
    for v in rc.sweep_values:
        try:
            if rc.sweep_axis == "N":
                p = gain_for_photon_number(rc.crystal, rc.gate, float(v), grid)
            else:
                p = rc.crystal.with_gain(float(v))
            res = disp.g2_zero(gain_functions(p, grid), rc.gate, d)
        except (ValueError, ArithmeticError) as exc:
            nan = math.nan
            res = disp.G2Result(nan, nan, nan, nan, nan, error=f"{type(exc).__name__}: {exc}")
            failed = True
        rows.append([v, res.n_photons, res.gamma_z, res.nbar, res.g2_uncompensated,
                     res.g2_compensated, res.g2_analytic, res.d2_opt, res.plateau, res.error])
    return OutputTable(columns, rows, [], failed=failed)


def cmd_dispersion_scan(rc: RunConfig) -> OutputTable:
    cfg = rc.raw
    start = _num(cfg, "dispersion", "start_kz")
    stop = _num(cfg, "dispersion", "stop_kz")
    points = int(_num(cfg, "dispersion", "points", True))
    if not start < stop:
        raise ConfigError("dispersion.start_kz must be below dispersion.stop_kz")
    kz = rc.crystal.kappa_z
    grid = disp.coherent_grid(rc.crystal, (start, stop), rc.grid_points)
    columns = ["gamma_z [1]", "d2_over_kappa_z [1]", "d2_pair [s^2]",
               "d2_if_full_phase_per_field [s^2]", "r [1]", "d2_opt [s^2]", "r_max [1]"]
    rows = []
    for gz in _num_list(cfg, "dispersion", "gamma_z_list"):
        sg = gain_functions(rc.crystal.with_gain(gz), grid)
        opt = disp.optimal_d2(sg, (start, stop))
        for x in np.linspace(start, stop, points):
            r = disp.reduction_factor(sg, disp.DispersionParams(x * kz))
            rows.append([gz, x, x * kz, 0.5 * x * kz, r, opt.d2, opt.r_max])
    return OutputTable(columns, rows, [])


def cmd_rates(rc: RunConfig) -> OutputTable:
    columns = ["gamma_z [1]", "F [photons/s]", "N [photons]", "nbar [photons/mode]",
               "nbar_est [photons/mode]", "M [modes]", "N_cross [photons]", "w [rad/s]",
               "b [rad/s]", "regime [tag]"]
    values = rc.sweep_values if rc.sweep_axis == "gamma_z" else [rc.crystal.gain]
    rows = []
    T = rc.gate.T
    for gz in values:
        p = rc.crystal.with_gain(float(gz))
        sg = gain_functions(p)
        F = photon_rate(sg)
        w = width_low(p)
        rows.append([float(gz), F, F * T, photons_per_mode(sg), photons_per_mode_estimate(sg),
                     mode_rate(p) * T, tpa.crossover_photon_number(w, T), w, _b_or_nan(p),
                     regime(float(gz))])
    return OutputTable(columns, rows, [])


def validation_reports(rc: RunConfig) -> list[oracles.OracleReport]:
    """Oracle suite used by ``validate``."""
    cfg = rc.raw
    reports = list(oracles.asymptotic_constants_check())
    p = rc.crystal.with_gain(1e-4)
    w, kz = width_low(p), p.kappa_z
    grid = disp.coherent_grid(p, min_points=rc.grid_points)
    sg = gain_functions(p, grid)
    gfg = _num(cfg, "validate", "oracle_gamma_fg_w", True) * w
    sigma2, A0 = rc.molecule.sigma2, rc.molecule.A0
    mol = tpa.MoleculeParams(sigma2, gfg, 2 * p.omega0, A0)
    for wT in _num_list(cfg, "validate", "tw_list"):
        gate = GatedPulseParams(wT / w)
        coh = tpa.p_coherent(sg, gate, mol, d2=-kz)
        inc = tpa.p_incoherent(sg, gate, mol, "full")
        reports += oracles.oracle_equivalence(p, gate.T, sigma2, A0, gfg, coh, inc, d2=-kz)
    wT = max(_num_list(cfg, "validate", "tw_list"))
    gate = GatedPulseParams(wT / w)
    p0 = CrystalParams(p.omega0, p.gamma, p.z, p.kappa, 0)
    sg0 = gain_functions(p0, grid)
    main0 = tpa.p_coherent(sg0, gate, mol, d2=-kz) + tpa.p_incoherent(sg0, gate, mol, "full")
    reports.append(oracles.distinguishable_case_check(p0, gate.T, sigma2, A0, gfg, main0, d2=-kz))

    pre = oracles.pregate_g2(p, grid)
    post = disp.g2_zero(sg, gate, disp.DispersionParams(0.0)).g2_uncompensated
    reports.append(oracles.OracleReport.compare("pre-gate vs gated g2(0)", post, pre, 1e-6))

    mc_T = _num(cfg, "validate", "mc_tw", True) / w
    spectrum = lambda nu: np.abs(gain_at(p, nu)[1]).astype(float) ** 2
    n_mc = int(_num(cfg, "validate", "mc_samples", True))
    reports.append(oracles.thermal_mc_check(spectrum, 4 * w, mc_T, n_mc, rc.seed))
    reports.append(oracles.thermal_c4_check(spectrum, 4 * w, mc_T, n_mc, rc.seed))
    return reports


def cmd_validate(rc: RunConfig) -> OutputTable:
    reports = validation_reports(rc)
    columns = ["name [text]", "main_value [1]", "oracle_value [1]", "rel_diff [1]",
               "tolerance [1]", "passed [flag]", "informational [flag]", "seed [1]"]
    rows = [[r.name, r.main_value, r.oracle_value, r.rel_diff, r.tolerance, r.passed,
             r.informational, "" if r.seed is None else r.seed] for r in reports]
    bad = any(not r.passed and not r.informational for r in reports)
    return OutputTable(columns, rows, [], oracle_failed=bad)


COMMANDS = {
    "spectrum": cmd_spectrum,
    "tpa-sweep": cmd_tpa_sweep,
    "linewidth-sweep": cmd_linewidth_sweep,
    "g2": cmd_g2,
    "dispersion-scan": cmd_dispersion_scan,
    "rates": cmd_rates,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bsv-tpa", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="INI file or a previous CSV output")
    ap.add_argument("--preset", choices=sorted(PRESETS))
    ap.add_argument("--set", dest="overrides", action="append", default=[],
                    metavar="SECTION.KEY=VALUE")
    ap.add_argument("--out", help="output path (default: stdout)")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--sidecar", action="store_true",
                    help="with csv output to a file, also write PATH.json")
    ap.add_argument("--seed", type=int)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    try:
        cfg = load_config(args.config, overrides, args.preset)
        rc = resolve(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            table = COMMANDS[args.command](rc)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    table.notes = _notes(rc, args.preset)

    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    render = render_json if args.format == "json" else render_csv
    text = render(table, cfg, args.command, stamp)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        if args.sidecar and args.format == "csv":
            with open(args.out + ".json", "w") as fh:
                fh.write(render_json(table, cfg, args.command, stamp))
    else:
        sys.stdout.write(text)

    if table.oracle_failed:
        return EXIT_ORACLE
    if table.failed:
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
