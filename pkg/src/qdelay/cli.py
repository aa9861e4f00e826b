"""
Command-line front end.

Units on this boundary are cyclic MHz, dBm and ns. Powers are line powers;
``--attenuation-db`` (default 0, i.e. chip level) converts them to the chip.

Exit codes: 0 ok, 2 configuration error, 3 domain error (e.g. every output
cell singular), 4 extraction or fit failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from typing import List, Optional

import numpy as np

from . import io as qio
from .errors import (ConfigError, DegenerateError, DomainError, FitDivergedError,
                     InsufficientSamplesError, NoSolutionError, NotConvergedError,
                     QDelayError, SingularError, UnderdeterminedError, ValidationError,
                     BadGridError)
from .estimation import (circle_fit, fit_power_dependence, fit_two_tone,
                         fit_weak_spectrum)
from .params import (MHZ, AtomParams, DriveSpec, ats_threshold_rabi, control_coupling,
                     dbm_to_rabi, dbm_to_watts, effective_rates, rabi_to_dbm,
                     singular_control_rabi, singular_probe_rabi)
from .spectrum import (ComplexSpectrum, default_workers, group_delay_analytic,
                       group_delay_numeric, reflection_powered, reflection_two_tone,
                       sweep_map, zero_delay_boundary)
from .timedomain import extract_delay, gaussian_probe, simulate_output

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_EXTRACTION = 0, 2, 3, 4

DEFAULT_PROBE_DBM = -162.3


class CommandFailed(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


@contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _finite_or_none(obj):
    if isinstance(obj, dict):
        return {k: _finite_or_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_none(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _dump_json(obj, stream=None):
    json.dump(_finite_or_none(obj), stream or sys.stdout, indent=2, allow_nan=False)
    (stream or sys.stdout).write("\n")


def _detuning_grid(span_mhz, step_mhz):
    if not (span_mhz > 0 and step_mhz > 0):
        raise ConfigError("--span-mhz and --step-mhz must be positive")
    n = int(round(span_mhz / step_mhz))
    return np.linspace(-span_mhz, span_mhz, 2 * n + 1) * MHZ


def _power_line(p_dbm, k, att):
    return {"line_dbm": p_dbm, "chip_watts": float(dbm_to_watts(p_dbm, att)),
            "rabi_rad_s": dbm_to_rabi(p_dbm, k, att) if k else None}


def _resolved(atom: AtomParams, **extra):
    out = {
        "omega_10_rad_s": atom.omega_10,
        "gamma_r_10_rad_s": atom.gamma_r_10,
        "gamma_10_rad_s": atom.gamma_10,
        "gamma_n_10_rad_s": atom.gamma_n_10,
        "k_10": atom.k_10,
        "gamma_r_21_rad_s": atom.gamma_r_21,
        "gamma_20_rad_s": atom.gamma_20,
        "gamma_n_20_rad_s": atom.gamma_n_20,
        "gamma_21_rad_s": atom.gamma_21,
    }
    out.update(extra)
    return out


def _control_rabi(atom, pc_dbm, att):
    if pc_dbm is None or math.isinf(pc_dbm) and pc_dbm < 0:
        return 0.0
    return dbm_to_rabi(pc_dbm, control_coupling(atom), att)


def _probe_rabi(atom, args):
    if args.probe_rabi_mhz is not None:
        return args.probe_rabi_mhz * MHZ
    if math.isinf(args.pp_dbm) and args.pp_dbm < 0:
        return 0.0
    if atom.k_10 is None:
        raise ConfigError("device has no k_10; use --probe-rabi-mhz")
    return dbm_to_rabi(args.pp_dbm, atom.k_10, args.attenuation_db)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_spectrum(args, atom):
    d = _detuning_grid(args.span_mhz, args.step_mhz)
    omega_c = _control_rabi(atom, args.pc_dbm, args.attenuation_db)
    omega_p = None
    if args.pp_dbm is not None:
        if omega_c:
            raise ConfigError("--pp-dbm (saturating probe) and --pc-dbm cannot be combined")
        omega_p = dbm_to_rabi(args.pp_dbm, atom.k_10, args.attenuation_db)
    if args.dry_run:
        extra = {"control_rabi_rad_s": omega_c, "detuning_points": int(d.size)}
        if args.pc_dbm is not None:
            extra["control"] = _power_line(args.pc_dbm, control_coupling(atom),
                                           args.attenuation_db)
        if omega_p is not None:
            extra["probe"] = _power_line(args.pp_dbm, atom.k_10, args.attenuation_db)
        _dump_json(_resolved(atom, **extra))
        return EXIT_OK
    if omega_p is not None:
        r = reflection_powered(atom, d, omega_p)
    else:
        r = reflection_two_tone(atom, d, omega_c, args.delta_c_mhz * MHZ)
    prof = group_delay_numeric(ComplexSpectrum(d, r), allow_coarse=True)
    axis = -math.inf if args.pc_dbm is None else args.pc_dbm
    header = qio.header_block(atom, [("command", "spectrum"), ("pc_dbm", axis),
                                     ("attenuation_db", args.attenuation_db)])
    with _output(args.out) as fh:
        qio.write_rows(fh, header, qio.GRID_COLUMNS,
                       qio.grid_rows([axis], d, r[None, :], prof.tau_d[None, :],
                                     prof.singular_mask[None, :]))
    if np.all(prof.singular_mask):
        raise CommandFailed(EXIT_DOMAIN, "every spectrum point is singular")
    return EXIT_OK


def cmd_delay_map(args, atom):
    d = _detuning_grid(args.span_mhz, args.step_mhz)
    workers = args.threads or default_workers()
    features = []
    if args.atom_table:
        atoms = qio.load_atom_table(args.atom_table, atom)
        if args.dry_run:
            _dump_json({"rows": [_resolved(a) for a in atoms], "detuning_points": int(d.size)})
            return EXIT_OK
        sweep = sweep_map(None, d, atoms=atoms, workers=workers)
        axis = sweep.axis1 / MHZ
        header = qio.header_block(atom, [("command", "delay-map"), ("axis1", "omega_10_mhz")])
    else:
        if args.pc_points < 1:
            raise ConfigError("--pc-points must be >= 1")
        pcs = np.linspace(args.pc_min_dbm, args.pc_max_dbm, args.pc_points)
        k21 = control_coupling(atom)
        if atom.gamma_20 is not None:
            try:
                features.append(("singular_pc_dbm",
                                 rabi_to_dbm(singular_control_rabi(atom), k21, args.attenuation_db)))
            except NoSolutionError:
                pass
            features.append(("ats_threshold_pc_dbm",
                             rabi_to_dbm(ats_threshold_rabi(atom), k21, args.attenuation_db)))
        if args.dry_run:
            _dump_json(_resolved(atom, control_rabi_rad_s=list(
                np.atleast_1d(dbm_to_rabi(pcs, k21, args.attenuation_db))),
                detuning_points=int(d.size), **dict(features)))
            return EXIT_OK
        sweep = sweep_map(atom, d, control_dbm=pcs, delta_c=args.delta_c_mhz * MHZ,
                          attenuation_db=args.attenuation_db, workers=workers)
        axis = sweep.axis1
        header = qio.header_block(atom, [("command", "delay-map"), ("axis1", "pc_dbm"),
                                         ("attenuation_db", args.attenuation_db)] + features)
    with _output(args.out) as fh:
        qio.write_rows(fh, header, qio.GRID_COLUMNS,
                       qio.grid_rows(axis, d, sweep.r, sweep.tau_d, sweep.singular_mask))
    if np.all(sweep.singular_mask):
        raise CommandFailed(EXIT_DOMAIN, "every grid cell is singular")
    return EXIT_OK


def _pulse_config(args, atom):
    sigma = args.sigma_ns * 1e-9
    t0 = (args.t0_ns if args.t0_ns is not None else 6.0 * args.sigma_ns) * 1e-9
    span = (args.span_ns if args.span_ns is not None else 12.0 * args.sigma_ns + 2000.0) * 1e-9
    dt = args.dt_ns * 1e-9
    return dict(amplitude=_probe_rabi(atom, args), sigma=sigma, t0=t0, span=span, dt=dt,
                delta_p=args.delta_p_mhz * MHZ, delta_c=args.delta_c_mhz * MHZ,
                omega_c=_control_rabi(atom, args.pc_dbm, args.attenuation_db),
                tol=args.tol, model=args.model)


def simulate_pulse(atom: AtomParams, cfg: dict):
    """Simulate one Gaussian pulse; returns (probe, output) traces."""
    probe = gaussian_probe(cfg["amplitude"], cfg["sigma"], cfg["t0"], cfg["span"], cfg["dt"],
                           cfg["delta_p"])
    control = DriveSpec(cfg["omega_c"], cfg["delta_c"]) if cfg["omega_c"] else None
    out = simulate_output(atom, probe, control, delta_c=cfg["delta_c"], tol=cfg["tol"],
                          model=cfg["model"])
    return probe, out


def cmd_pulse(args, atom):
    cfg = _pulse_config(args, atom)
    if args.dry_run:
        _dump_json(_resolved(atom, probe_rabi_rad_s=cfg["amplitude"],
                             control_rabi_rad_s=cfg["omega_c"], sigma_s=cfg["sigma"],
                             t0_s=cfg["t0"], span_s=cfg["span"], dt_s=cfg["dt"],
                             delta_p_rad_s=cfg["delta_p"], delta_c_rad_s=cfg["delta_c"],
                             tol=cfg["tol"], model=cfg["model"]))
        return EXIT_OK
    probe, out = simulate_pulse(atom, cfg)
    est = None
    failure = None
    try:
        est = extract_delay(probe, out)
    except FitDivergedError as exc:
        failure = str(exc)
    header = qio.header_block(atom, [("command", "pulse")])
    if est is not None:
        header += [f"# tau_d_ns = {qio.fmt(est.tau_d * 1e9)}",
                   f"# confidence = {est.confidence}",
                   f"# residual_ratio = {qio.fmt(est.residual_ratio)}"]
    t_ns = probe.times * 1e9
    rows = zip(t_ns, probe.samples.real, probe.samples.imag, out.samples.real,
               out.samples.imag, np.abs(probe.samples), np.abs(out.samples))
    with _output(args.out) as fh:
        qio.write_rows(fh, header, qio.TRACE_COLUMNS, rows)
    if failure is not None:
        raise CommandFailed(EXIT_EXTRACTION, f"delay extraction failed: {failure}")
    summary = {"tau_d_ns": est.tau_d * 1e9, "confidence": est.confidence,
               "residual_ratio": est.residual_ratio,
               "fit_shift_ns": est.fit_shift * 1e9, "peak_shift_ns": est.peak_shift * 1e9}
    _dump_json(summary, sys.stderr if args.out in (None, "-") else sys.stdout)
    return EXIT_OK


SWEEP_PARAMS = ("sigma-ns", "delta-p-mhz", "pc-dbm", "pp-dbm")


def _sweep_point(job):
    atom, cfg = job
    try:
        est = extract_delay(*simulate_pulse(atom, cfg))
        return est.tau_d * 1e9, est.confidence, est.residual_ratio
    except (FitDivergedError, BadGridError):
        return math.nan, "failed", math.nan


def cmd_pulse_sweep(args, atom):
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--values must be comma-separated numbers: {args.values!r}") from None
    if not values:
        raise ConfigError("--values is empty")
    jobs = []
    for v in values:
        sub = argparse.Namespace(**vars(args))
        setattr(sub, args.param.replace("-", "_"), v)
        if args.param == "pp-dbm":
            sub.probe_rabi_mhz = None
        if args.param == "sigma-ns":
            sub.t0_ns = args.t0_ns
            sub.span_ns = args.span_ns
        jobs.append((atom, _pulse_config(sub, atom)))
    if args.dry_run:
        _dump_json(_resolved(atom, param=args.param, values=values,
                             points=[{k: v for k, v in cfg.items()} for _, cfg in jobs]))
        return EXIT_OK
    workers = args.threads or default_workers()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    header = qio.header_block(atom, [("command", "pulse-sweep"), ("param", args.param)])
    with _output(args.out) as fh:
        qio.write_rows(fh, header, qio.SUMMARY_COLUMNS,
                       ((v, *res) for v, res in zip(values, results)))
    if all(res[1] == "failed" for res in results):
        raise CommandFailed(EXIT_EXTRACTION, "delay extraction failed for every point")
    return EXIT_OK


def _report(fit, scale: dict, extra: Optional[dict] = None):
    rep = fit.as_dict()
    for item in rep["params"]:
        name = item["parameter"]
        s, new = scale.get(name, (1.0, name))
        item["parameter"] = new
        item["value"] = item["value"] / s
        if item["stderr"] is not None:
            item["stderr"] = item["stderr"] / s
    if extra:
        rep.update(extra)
    return rep


def cmd_fit_circle(args, atom):
    axis_name, f, r = qio.read_spectrum_csv(args.input)
    if args.dry_run:
        _dump_json({"input": args.input, "points": int(r.size), "axis": axis_name})
        return EXIT_OK
    fit = circle_fit(r)
    _dump_json(_report(fit, {}))
    return EXIT_OK


def cmd_fit_spectrum(args, atom):
    axis_name, f, r = qio.read_spectrum_csv(args.input)
    f_ref = float(np.median(f))
    if args.dry_run:
        _dump_json({"input": args.input, "points": int(r.size), "axis": axis_name,
                    "reference_mhz": f_ref})
        return EXIT_OK
    spec = ComplexSpectrum((f - f_ref) * MHZ, r)
    fit = fit_weak_spectrum(spec, omega_ref=f_ref * MHZ,
                            remove_phase_slope=args.remove_phase_slope)
    center = "omega_10_mhz" if axis_name == "freq_mhz" else "delta_center_mhz"
    scale = {"omega_10": (MHZ, center), "gamma_r_10": (MHZ, "gamma_r_10_mhz"),
             "gamma_10": (MHZ, "gamma_10_mhz"), "gamma_n_10": (MHZ, "gamma_n_10_mhz")}
    G, g = fit["gamma_r_10"], fit["gamma_10"]
    extra = {"diameter": G / g}
    try:
        extra["tau_d_resonant_ns"] = group_delay_analytic(
            effective_rates(AtomParams(1.0, G, g), 0.0), 0.0) * 1e9
    except SingularError:
        extra["tau_d_resonant_ns"] = None
    _dump_json(_report(fit, scale, extra))
    return EXIT_OK


def cmd_fit_power(args, atom):
    p, r = qio.read_power_csv(args.input)
    if (args.k10 is None) == (args.attenuation_db is None):
        raise CommandFailed(EXIT_CONFIG, "pin exactly one of --attenuation-db or --k10")
    if args.dry_run:
        _dump_json(_resolved(atom, input=args.input, points=int(p.size),
                             pinned_attenuation_db=args.attenuation_db, pinned_k10=args.k10))
        return EXIT_OK
    fit = fit_power_dependence(p, r, atom.gamma_r_10, atom.gamma_10,
                               attenuation_db=args.attenuation_db, k_10=args.k10)
    extra = {}
    try:
        extra["singular_pp_dbm"] = rabi_to_dbm(singular_probe_rabi(atom), fit["k_10"],
                                               fit["attenuation_db"])
    except NoSolutionError:
        extra["singular_pp_dbm"] = None
    _dump_json(_report(fit, {}, extra))
    return EXIT_OK


def cmd_fit_two_tone(args, atom):
    pcs, dps, grid = qio.read_map_csv(args.input)
    if args.dry_run:
        _dump_json(_resolved(atom, input=args.input, powers=int(pcs.size),
                             detunings=int(dps.size)))
        return EXIT_OK
    fit = fit_two_tone(pcs, dps * MHZ, grid, atom, attenuation_db=args.attenuation_db,
                       delta_c=args.delta_c_mhz * MHZ)
    g20 = fit["gamma_20"]
    extra = {"ats_threshold_pc_dbm": rabi_to_dbm(2 * g20, control_coupling(atom),
                                                 args.attenuation_db)}
    excess = atom.gamma_r_10 - atom.gamma_10
    if excess >= 0:
        extra["singular_pc_dbm"] = rabi_to_dbm(2 * math.sqrt(g20 * excess),
                                               control_coupling(atom), args.attenuation_db)
    _dump_json(_report(fit, {"gamma_20": (MHZ, "gamma_20_mhz")}, extra))
    return EXIT_OK


def cmd_features(args, atom):
    att = args.attenuation_db
    out = {}
    omega_c = _control_rabi(atom, args.pc_dbm, att)
    if args.dry_run:
        _dump_json(_resolved(atom, control_rabi_rad_s=omega_c))
        return EXIT_OK
    rates = effective_rates(atom, omega_c)
    try:
        out["tau_d_resonant_ns"] = group_delay_analytic(rates, 0.0) * 1e9
    except SingularError:
        out["tau_d_resonant_ns"] = None
    zb = zero_delay_boundary(rates)
    out["zero_delay_boundary_mhz"] = None if zb is None else [zb[0] / MHZ, zb[1] / MHZ]
    try:
        sp = singular_probe_rabi(atom)
        out["singular_probe_rabi_mhz"] = sp / MHZ
        out["singular_pp_dbm"] = (rabi_to_dbm(sp, atom.k_10, att)
                                  if atom.k_10 is not None else None)
    except NoSolutionError:
        out["singular_probe_rabi_mhz"] = None
        out["singular_pp_dbm"] = None
    if atom.gamma_20 is not None:
        k21 = control_coupling(atom) if atom.k_10 is not None else None
        try:
            sc = singular_control_rabi(atom)
            out["singular_control_rabi_mhz"] = sc / MHZ
            out["singular_pc_dbm"] = rabi_to_dbm(sc, k21, att) if k21 else None
        except NoSolutionError:
            out["singular_control_rabi_mhz"] = None
            out["singular_pc_dbm"] = None
        ats = ats_threshold_rabi(atom)
        out["ats_threshold_rabi_mhz"] = ats / MHZ
        out["ats_threshold_pc_dbm"] = rabi_to_dbm(ats, k21, att) if k21 else None
    _dump_json(out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _common_options(attenuation_default=0.0):
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--device", default="device2",
                        help="device file, or bundled name (device1a, device1b, device2)")
    common.add_argument("--gamma-21-mhz", type=float, default=None,
                        help="override the |1>-|2> decoherence")
    common.add_argument("--attenuation-db", type=float, default=attenuation_default,
                        help="line attenuation to the chip (dB); 0 means powers are chip level")
    common.add_argument("--out", "-o", default="-", help="output file (default stdout)")
    common.add_argument("--dry-run", action="store_true",
                        help="print resolved physical parameters and exit")
    common.add_argument("--threads", type=int, default=None,
                        help="parallel workers (default QDELAY_THREADS or 1)")
    return common


def _grid_options(span_mhz, step_mhz):
    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--span-mhz", type=float, default=span_mhz,
                      help="half-width of detuning grid")
    grid.add_argument("--step-mhz", type=float, default=step_mhz)
    grid.add_argument("--delta-c-mhz", type=float, default=0.0)
    return grid


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()

    pulse = argparse.ArgumentParser(add_help=False)
    pulse.add_argument("--sigma-ns", type=float, default=1040.0)
    pulse.add_argument("--t0-ns", type=float, default=None, help="default 6 sigma")
    pulse.add_argument("--dt-ns", type=float, default=1.0)
    pulse.add_argument("--span-ns", type=float, default=None, help="default 12 sigma + 2000")
    pulse.add_argument("--pp-dbm", type=float, default=DEFAULT_PROBE_DBM)
    pulse.add_argument("--probe-rabi-mhz", type=float, default=None,
                       help="probe peak Rabi frequency; overrides --pp-dbm")
    pulse.add_argument("--pc-dbm", type=float, default=None, help="CW control power")
    pulse.add_argument("--delta-p-mhz", type=float, default=0.0)
    pulse.add_argument("--delta-c-mhz", type=float, default=0.0)
    pulse.add_argument("--tol", type=float, default=1e-9)
    pulse.add_argument("--model", choices=("full", "reduced"), default="full")

    p = argparse.ArgumentParser(prog="qdelay", description=__doc__.strip().splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", parents=[common, _grid_options(10.0, 0.02)], help="r and tau_d vs probe detuning")
    s.add_argument("--pc-dbm", type=float, default=None, help="control power")
    s.add_argument("--pp-dbm", type=float, default=None,
                   help="saturating probe power (two-level formula)")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("delay-map", parents=[common, _grid_options(15.0, 0.05)], help="2D r/tau_d map")
    s.add_argument("--pc-min-dbm", type=float, default=-160.0)
    s.add_argument("--pc-max-dbm", type=float, default=-110.0)
    s.add_argument("--pc-points", type=int, default=501)
    s.add_argument("--atom-table", default=None,
                   help="CSV of omega_10_mhz,gamma_r_10_mhz,gamma_10_mhz rows (replaces the power axis)")
    s.set_defaults(func=cmd_delay_map)

    s = sub.add_parser("pulse", parents=[common, pulse], help="simulate one Gaussian pulse")
    s.set_defaults(func=cmd_pulse)

    s = sub.add_parser("pulse-sweep", parents=[common, pulse], help="delay vs one pulse parameter")
    s.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    s.add_argument("--values", required=True, help="comma-separated values")
    s.set_defaults(func=cmd_pulse_sweep)

    s = sub.add_parser("fit-circle", parents=[common], help="IQ circle fit of a spectrum CSV")
    s.add_argument("input")
    s.set_defaults(func=cmd_fit_circle)

    s = sub.add_parser("fit-spectrum", parents=[common], help="fit omega_10, Gamma_10, gamma_10")
    s.add_argument("input")
    s.add_argument("--remove-phase-slope", action="store_true",
                   help="subtract a linear phase (cable delay) first")
    s.set_defaults(func=cmd_fit_spectrum)

    s = sub.add_parser("fit-power", parents=[_common_options(None)], help="fit k_10 or attenuation")
    s.add_argument("input")
    s.add_argument("--k10", type=float, default=None, help="pin k_10 and fit the attenuation")
    s.set_defaults(func=cmd_fit_power)

    s = sub.add_parser("fit-two-tone", parents=[common], help="fit gamma_20 from a two-tone map")
    s.add_argument("input")
    s.add_argument("--delta-c-mhz", type=float, default=0.0)
    s.set_defaults(func=cmd_fit_two_tone)

    s = sub.add_parser("features", parents=[common],
                       help="singular pump, ATS threshold and zero-delay boundary")
    s.add_argument("--pc-dbm", type=float, default=None,
                   help="evaluate effective rates at this control power")
    s.set_defaults(func=cmd_features)
    return p


_EXIT_FOR = (
    ((ConfigError, ValidationError, BadGridError), EXIT_CONFIG),
    ((DomainError, SingularError, NoSolutionError), EXIT_DOMAIN),
    ((FitDivergedError, NotConvergedError, DegenerateError, UnderdeterminedError,
      InsufficientSamplesError), EXIT_EXTRACTION),
)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        atom = qio.load_device(args.device)
        if args.gamma_21_mhz is not None:
            atom = atom.with_rates(gamma_21=args.gamma_21_mhz * MHZ)
        return args.func(args, atom)
    except CommandFailed as exc:
        print(f"qdelay: {exc}", file=sys.stderr)
        return exc.code
    except QDelayError as exc:
        for types, code in _EXIT_FOR:
            if isinstance(exc, types):
                break
        else:
            code = EXIT_DOMAIN
        print(f"qdelay: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
