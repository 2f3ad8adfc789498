"""Command-line interface: ``twinhitch <command> [options]``.

Exit codes: 0 success, 1 usage/config/input error, 2 invalid parameter,
3 numerical guard or other computational failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import _backend
from .beams import diagnostics, idler_present, propagate_to, synthesize_seed
from .config import PRESETS, ConfigError, RunConfig, check_finite, load_config, preset
from .core import forward_transform
from .errors import DatasetError, HitchError, OnsetNotFoundError, ParameterError
from .fit import SyntheticSpec, fit_hitching, synthesize_dataset
from .formats import dumps_json, read_dataset, write_dataset, write_json, write_pgm, write_table
from .scan import exit_curve, exit_curve_from_gains, hitching_onset, intensity_map, trajectory
from .transfer import direct_coupling_for_angle, phase_matched_angle

EXIT_OK, EXIT_USAGE, EXIT_PARAMETER, EXIT_NUMERICAL = 0, 1, 2, 3
FORMATS = ("csv", "pgm", "json")

DIAGNOSTIC_COLUMNS = (
    "z", "com1", "com2", "peak1", "peak2", "power1", "power2", "gain", "separation", "free_line",
)
TRAJECTORY_COLUMNS = DIAGNOSTIC_COLUMNS + ("mean_kx1", "mean_kx2")
EXIT_CURVE_COLUMNS = ("b", "net_gain", "exit_com1", "exit_com2", "hitch_distance", "status")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


class _HelpFormatter(argparse.RawDescriptionHelpFormatter, argparse.ArgumentDefaultsHelpFormatter):
    pass


def _float_list(text):
    text = text.strip()
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


# -- run context -------------------------------------------------------------


class _Run:
    """Effective configuration plus the output writers of one command."""

    def __init__(self, args, command):
        base = preset(args.preset) if args.preset else RunConfig()
        cfg = load_config(args.config, base) if args.config else base
        if args.out is not None:
            cfg.output.directory = args.out
        unknown = set(cfg.output.formats) - set(FORMATS)
        if unknown:
            raise ConfigError(f"unknown output formats: {', '.join(sorted(unknown))}")
        self.cfg = cfg
        self.command = command
        self.preset = args.preset

    def build(self, what):
        """Construct a domain object from the config; bad types are config errors."""
        try:
            return getattr(self.cfg, f"make_{what}")()
        except (TypeError, AttributeError) as exc:
            raise ConfigError(f"invalid {what} configuration: {exc}") from None

    @property
    def metadata(self):
        config = self.cfg.to_dict()
        # where files go is not a parameter; keep outputs independent of it
        del config["output"]["directory"]
        return {"command": self.command, "preset": self.preset, "config": config}

    def path(self, name):
        return os.path.join(self.cfg.output.directory, name)

    def wants(self, fmt):
        return fmt in self.cfg.output.formats

    def table(self, name, columns, rows, extra=None):
        if self.wants("csv"):
            meta = dict(self.metadata)
            meta.update(extra or {})
            write_table(self.path(name), columns, rows, meta)

    def json(self, name, obj):
        if self.wants("json"):
            payload = dict(self.metadata)
            payload.update(obj)
            write_json(self.path(name), payload)

    def pgm(self, name, image):
        if self.wants("pgm"):
            write_pgm(self.path(name), image)


def _onset(records, fraction):
    try:
        z_star, g_star = hitching_onset(records, fraction)
        return {"z_star": z_star, "gain_star": g_star, "status": "ok"}
    except OnsetNotFoundError as exc:
        return {"z_star": None, "gain_star": None, "status": f"not-found: {exc}"}


def _record_row(r, extra=False):
    row = [r.z, r.com1, r.com2, r.peak1, r.peak2, r.power1, r.power2, r.gain_so_far,
           r.separation, r.free_line]
    if extra:
        row += [r.mean_kx1, r.mean_kx2]
    return row


# -- commands ------------------------------------------------------------------


def cmd_phasematch(args, run):
    medium = run.build("medium")
    report = {"phase_matched_angle_rad": phase_matched_angle(medium)}
    if args.angle is not None:
        a2 = medium.a2.real if args.a2 is None else args.a2
        report["angle_rad"] = args.angle
        report["a2_re"] = a2
        report["a1_re"] = direct_coupling_for_angle(args.angle, medium.k, a2)
    sys.stdout.write(dumps_json(report))
    return EXIT_OK


def cmd_propagate(args, run):
    cfg = run.cfg
    grid, medium, seed = run.build("grid"), run.build("medium"), run.build("seed")
    nz = args.nz or cfg.scan.nz
    records = trajectory(seed, medium, nz, grid)
    map1, map2 = intensity_map(seed, medium, nz, False, grid)
    run.pgm("mode1.pgm", map1)
    run.pgm("mode2.pgm", map2)
    if cfg.scan.normalize_per_z:
        for m in (map1, map2):
            peak = m.max(axis=1, keepdims=True)
            np.divide(m, peak, out=m, where=peak > 0)
        run.pgm("mode1_norm.pgm", map1)
        run.pgm("mode2_norm.pgm", map2)
    run.table("diagnostics.csv", DIAGNOSTIC_COLUMNS, [_record_row(r) for r in records])

    field = synthesize_seed(seed, grid, medium.k)
    state = propagate_to(field, medium.length, medium)
    d1 = diagnostics(state.spec1, medium.k, label="mode 1")
    exit_info = {
        "net_gain": state.spec1.power() / forward_transform(field).power(),
        "com1": d1.com, "peak1": d1.peak, "width1": d1.width, "mean_angle1": d1.mean_angle,
        "free_exit": seed.x0 + seed.tilt * medium.length,
    }
    if idler_present(state):
        d2 = diagnostics(state.spec2, medium.k, label="mode 2")
        exit_info.update(com2=d2.com, peak2=d2.peak, width2=d2.width, mean_angle2=d2.mean_angle,
                         separation=abs(d1.com - d2.com))
    else:
        exit_info.update(com2=None, peak2=None, width2=None, mean_angle2=None, separation=None)
    run.json("summary.json", {"exit": exit_info, "onset": _onset(records, cfg.scan.onset_fraction)})
    sys.stdout.write(f"net gain {exit_info['net_gain']!r}; wrote {cfg.output.directory}\n")
    return EXIT_OK


def cmd_trajectory(args, run):
    cfg = run.cfg
    grid, medium, seed = run.build("grid"), run.build("medium"), run.build("seed")
    records = trajectory(seed, medium, args.nz or cfg.scan.nz, grid)
    run.table("trajectory.csv", TRAJECTORY_COLUMNS, [_record_row(r, True) for r in records])
    onset = _onset(records, cfg.scan.onset_fraction)
    run.json("onset.json", {"onset": onset})
    sys.stdout.write(dumps_json(onset))
    return EXIT_OK


def _sweep_one(job):
    """Worker for one exit curve; module-level so process pools can pickle it."""
    backend, seed, medium, grid, b_values, gains = job
    _backend.use(backend)
    if gains is not None:
        points = exit_curve_from_gains(seed, medium, gains, grid)
    else:
        points = exit_curve(seed, medium, b_values, grid)
    return [(p.control, p.net_gain, p.exit_com1, p.exit_com2, p.hitch_distance, p.status)
            for p in points]


def cmd_sweep(args, run):
    cfg = run.cfg
    grid, medium, seed = run.build("grid"), run.build("medium"), run.build("seed")
    b_values = args.b_values if args.b_values is not None else cfg.scan.b_values
    gains = args.gain_values if args.gain_values is not None else cfg.scan.gain_values
    if args.b_values is not None:
        gains = None
    if b_values is None and gains is None:
        raise UsageError("sweep needs scan.b_values or scan.gain_values (or --b-values)")
    if gains is not None:
        if not gains:
            raise UsageError("empty gain list")
        gains = check_finite(gains, "gain_values")
        control = "gain_values"
    else:
        if not b_values:
            raise UsageError("empty b list")
        b_values = check_finite(b_values, "b_values")
        control = "b_values"
    losses = args.im_a1_values if args.im_a1_values is not None else cfg.scan.im_a1_values
    if losses is not None:
        losses = check_finite(losses, "im_a1_values")
        if not losses:
            raise UsageError("empty im_a1 list")
    media = [medium] if losses is None else [replace(medium, a1=complex(medium.a1.real, v)) for v in losses]
    jobs = [(_backend.name, seed, m, grid, b_values, gains) for m in media]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            curves = list(pool.map(_sweep_one, jobs))
    else:
        curves = [_sweep_one(j) for j in jobs]

    n_ok = 0
    for j, rows in enumerate(curves):
        n_ok += sum(1 for r in rows if r[-1] == "ok")
        if losses is None:
            name, extra = "exit_curve.csv", {"control": control}
        else:
            name = f"exit_curve_im_a1_{losses[j]!r}.csv"
            extra = {"control": control, "im_a1": losses[j]}
        run.table(name, EXIT_CURVE_COLUMNS, rows, extra)
    total = sum(len(r) for r in curves)
    sys.stdout.write(f"{n_ok}/{total} points ok; wrote {cfg.output.directory}\n")
    return EXIT_OK if n_ok else EXIT_NUMERICAL


def cmd_fit(args, run):
    cfg = run.cfg
    fc = cfg.fit
    data = read_dataset(args.data)
    grid = run.build("grid")
    fit_im_a1 = fc.fit_im_a1 and not args.no_im_a1 and args.im_a1 is None
    result = fit_hitching(
        data,
        fit_im_a1,
        weighted=fc.weighted and not args.unweighted,
        shared_offset=fc.shared_offset or args.shared_offset,
        im_a1_fixed=args.im_a1 if args.im_a1 is not None else 0.0,
        im_a1_start=fc.im_a1_start,
        bounds=tuple(fc.bounds),
        xatol=fc.xatol,
        frtol=fc.frtol,
        max_evals=fc.max_evals,
        grid=grid,
    )
    report = {
        "im_a1": result.im_a1,
        "im_a1_fitted": result.im_a1_fitted,
        "offset1": result.offset1,
        "offset2": result.offset2,
        "chi2": result.chi2,
        "dof": result.dof,
        "reduced_chi2": result.reduced_chi2,
        "converged": result.converged,
        "evaluations": result.evaluations,
        "at_bound": result.at_bound,
        "weighted": result.weighted,
        "shared_offset": result.shared_offset,
        "rows": len(data),
    }
    run.json("fit_result.json", {"fit": report})
    m1 = data.pos1 - result.offset1 - result.residuals1
    m2 = data.pos2 - result.offset2 - result.residuals2
    rows = zip(data.net_gain, data.pos1, data.pos2, m1 + result.offset1, m2 + result.offset2,
               result.residuals1, result.residuals2)
    run.table(
        "residuals.csv",
        ("net_gain", "pos1", "pos2", "model1", "model2", "residual1", "residual2"),
        rows,
    )
    sys.stdout.write(dumps_json(report))
    return EXIT_OK


def cmd_synth(args, run):
    geometry = run.build("geometry")
    if args.rows < 1:
        raise UsageError("--rows must be >= 1")
    lo, hi = args.gain_range
    if not (1.0 < lo <= hi and math.isfinite(hi)):
        raise ParameterError(f"gain range must satisfy 1 < min <= max, got {lo}, {hi}")
    if args.noise < 0 or (args.sigma is not None and args.sigma <= 0):
        raise ParameterError("--noise must be >= 0 and --sigma > 0")
    spec = SyntheticSpec(
        geometry=geometry,
        gains=tuple(np.geomspace(lo, hi, args.rows).tolist()),
        im_a1=args.im_a1,
        offset1=args.offset1,
        offset2=args.offset2,
        noise_std=args.noise,
        sigma=args.sigma if args.sigma is not None else (args.noise if args.noise > 0 else 1.0),
    )
    data = synthesize_dataset(spec, args.seed, run.build("grid"))
    path = args.output or run.path("dataset.csv")
    write_dataset(path, data)
    sys.stdout.write(f"wrote {len(data)} rows to {path}\n")
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def _defaults_epilog():
    return "default configuration (JSON; override with --config):\n" + json.dumps(
        RunConfig().to_dict(), indent=2, sort_keys=True
    )


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--config", metavar="FILE", help="JSON RunConfig overlaid on the preset/defaults")
    g.add_argument("--preset", choices=sorted(PRESETS), help="named parameter set")
    g.add_argument("--out", metavar="DIR", help="output directory (default: output.directory)")
    g.add_argument("--backend", choices=_backend.available(), help="kernel implementation")

    parser = _Parser(
        prog="twinhitch",
        description="Twin-beam propagation in a traveling-wave parametric amplifier.",
        epilog=_defaults_epilog(),
        formatter_class=_HelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_,
                           epilog=_defaults_epilog(), formatter_class=_HelpFormatter)
        p.set_defaults(func=func)
        return p

    p = add("phasematch", cmd_phasematch, "phase-matched seed angle of the medium")
    p.add_argument("--angle", type=float, help="also report the Re(a1) that phase-matches this angle")
    p.add_argument("--a2", type=float, help="Re(a2) for --angle (default: the medium's)")

    p = add("propagate", cmd_propagate, "intensity maps, per-z diagnostics and exit summary")
    p.add_argument("--nz", type=int, help="number of z samples (default: scan.nz)")

    p = add("trajectory", cmd_trajectory, "centre-of-mass trajectories and hitching onset")
    p.add_argument("--nz", type=int, help="number of z samples (default: scan.nz)")

    p = add("sweep", cmd_sweep, "exit positions versus cross coupling or net gain")
    p.add_argument("--b-values", type=_float_list, help="comma-separated b list (overrides gains)")
    p.add_argument("--gain-values", type=_float_list, help="comma-separated target net gains")
    p.add_argument("--im-a1-values", type=_float_list, help="one curve per probe absorption")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for multi-curve sweeps")

    p = add("fit", cmd_fit, "fit offsets (and Im a1) to measured exit positions")
    p.add_argument("data", help="dataset CSV (net_gain,pos1,pos2,sigma1,sigma2)")
    p.add_argument("--no-im-a1", action="store_true", help="keep Im a1 fixed at 0")
    p.add_argument("--im-a1", type=float, help="keep Im a1 fixed at this value")
    p.add_argument("--unweighted", action="store_true", help="ignore sigma1/sigma2")
    p.add_argument("--shared-offset", action="store_true", help="one offset for both beams")

    p = add("synth", cmd_synth, "synthetic dataset from the exit-position model")
    p.add_argument("--rows", type=int, default=16)
    p.add_argument("--gain-range", type=float, nargs=2, default=(1.5, 30.0), metavar=("MIN", "MAX"))
    p.add_argument("--im-a1", type=float, default=0.0)
    p.add_argument("--offset1", type=float, default=0.0)
    p.add_argument("--offset2", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=0.0, help="position noise std (lambda)")
    p.add_argument("--sigma", type=float, help="reported uncertainty (default: noise, or 1 without noise)")
    p.add_argument("--seed", type=int, help="noise generator seed")
    p.add_argument("--output", metavar="FILE", help="dataset path (default: OUT/dataset.csv)")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.backend:
            _backend.use(args.backend)
        run = _Run(args, args.command)
        return args.func(args, run)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DatasetError) as exc:
        print(f"twinhitch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"twinhitch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParameterError as exc:
        print(f"twinhitch: invalid parameter: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except HitchError as exc:
        print(f"twinhitch: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
