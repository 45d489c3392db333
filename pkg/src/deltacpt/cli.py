"""
Command-line front end.

    deltacpt spectrum   --config run.ini --out results/
    deltacpt power-map  --preset lab --out results/
    deltacpt shift-table --config run.ini
    deltacpt fit        --config run.ini results/spectrum.csv
    deltacpt presets [fig3|lab]

Exit codes: 0 success, 2 input error, 3 numerical error.
"""

import argparse
import json
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .config import PRESETS, load_config
from .errors import ConfigError, DeltaCPTError, SweepError
from .export import (AXIS_EXPORT, config_hash, provenance_header, read_spectrum_csv,
                     write_spectrum_csv, write_spectrum_jsonl, write_table_csv,
                     write_table_jsonl)
from .sensing import FitProblem, fit
from .spectra import FEATURE_KIND, Spectrum, lineshape_metrics, shift_vs_power, sweep

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
TWO_PI = 2 * np.pi


class InputError(Exception):
    pass


def _load(args):
    overrides = {}
    if args.backend:
        overrides[("run", "backend")] = args.backend
    if args.threads is not None:
        overrides[("run", "threads")] = str(args.threads)
    if args.seed is not None:
        overrides[("run", "seed")] = str(args.seed)
    text, origin = "", "<preset>"
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        origin = args.config
    preset = args.preset or (None if args.config else "fig3")
    cfg = load_config(text, origin, preset=preset, overrides=overrides)
    return cfg, config_hash(cfg.canonical)


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _header(digest, command):
    return provenance_header(__version__, digest, [("command", command)])


def _hz(x):
    return x / TWO_PI


def _print_metrics(s):
    try:
        m = lineshape_metrics(s, FEATURE_KIND[s.observable])
    except DeltaCPTError as exc:
        print(f"lineshape: {exc}")
        return
    unit = AXIS_EXPORT[s.axis_name][0]
    f = AXIS_EXPORT[s.axis_name][1]
    print(f"contrast  {m.contrast:.6g}")
    print(f"fwhm      {m.fwhm * f:.6g} {unit}")
    print(f"center    {m.center * f:.6g} {unit}")
    print(f"baseline  {m.baseline:.6g}")


def cmd_spectrum(args):
    cfg, digest = _load(args)
    s = sweep(cfg.sweep, cfg.threads)
    if cfg.noise > 0:
        rng = np.random.default_rng(cfg.seed)
        sigma = cfg.noise * float(np.max(np.abs(s.values)))
        s = Spectrum(s.axis, s.values + rng.normal(0.0, sigma, s.values.size), s.axis_name,
                     s.observable, s.backend, {**s.provenance, "noise": cfg.noise,
                                               "seed": cfg.seed})
    out = _outdir(args)
    header = _header(digest, "spectrum")
    write_spectrum_csv(s, os.path.join(out, "spectrum.csv"), header)
    write_spectrum_jsonl(s, os.path.join(out, "spectrum.jsonl"), header)
    _print_metrics(s)
    return EXIT_OK


def cmd_power_map(args):
    cfg, digest = _load(args)
    powers = sorted(cfg.power_map_powers)
    if not powers:
        raise InputError("[power_map] powers is empty")
    base = cfg.sweep
    if base.swept_parameter == "mw_power_dBm":
        raise InputError("power-map needs a detuning sweep in [sweep]")
    unit, factor = AXIS_EXPORT[base.swept_parameter]
    rows = []
    for p in powers:
        spec = base.with_(fields=base.fields.with_(omega_mu=base.mw_rabi(p)))
        try:
            s = sweep(spec, cfg.threads)
        except SweepError as exc:
            raise SweepError(f"power {p} dBm: {exc}", exc.axis_value) from exc
        rows += [(p, x * factor, y) for x, y in zip(s.axis, s.values)]
    cols = ["power[dBm]", f"{base.swept_parameter}[{unit}]", base.observable]
    out = _outdir(args)
    header = _header(digest, "power-map") + [
        f"# backend: {base.backend}", f"# observable: {base.observable}"]
    write_table_csv(os.path.join(out, "power_map.csv"), cols, rows, header)
    write_table_jsonl(os.path.join(out, "power_map.jsonl"), cols, rows, header)
    print(f"{len(rows)} rows ({len(powers)} powers x {base.points} points)")
    return EXIT_OK


def cmd_shift_table(args):
    cfg, digest = _load(args)
    if not cfg.shift_detunings or not cfg.shift_powers:
        raise InputError("[shift_table] needs non-empty detunings and powers")
    if cfg.sweep.swept_parameter != "probe_two_photon_detuning":
        raise InputError("shift-table needs [sweep] parameter = probe_two_photon_detuning")
    table = shift_vs_power(cfg.shift_detunings, cfg.shift_powers, cfg.sweep, cfg.threads)
    cols = ["delta_mu[Hz]", "power[dBm]", "omega_mu[Hz]", "center[Hz]", "shift[Hz]",
            "contrast", "valid", "error"]
    rows = [(_hz(r.delta_mu), r.power_dbm, _hz(r.omega_mu), _hz(r.center), _hz(r.shift),
             r.contrast, r.valid, r.error) for r in table]
    out = _outdir(args)
    header = _header(digest, "shift-table") + [
        "# shift: centre of the two-photon resonance minus the Omega_mu = 0 reference"]
    write_table_csv(os.path.join(out, "shift_table.csv"), cols, rows, header)
    write_table_jsonl(os.path.join(out, "shift_table.jsonl"), cols, rows, header)
    for r in rows:
        status = "" if r[6] else f"  INVALID ({r[7]})"
        print(f"delta_mu {r[0]:+10.1f} Hz  power {r[1]:>6} dBm  shift {r[4]:+10.3f} Hz{status}")
    return EXIT_OK


def cmd_fit(args):
    cfg, digest = _load(args)
    if not cfg.fit_free:
        raise InputError("[fit] free is empty")
    observed = read_spectrum_csv(args.data, cfg.sweep.observable)
    if observed.axis_name != cfg.sweep.swept_parameter:
        raise InputError(f"{args.data}: axis {observed.axis_name!r} does not match "
                         f"[sweep] parameter {cfg.sweep.swept_parameter!r}")
    try:
        problem = FitProblem(observed, cfg.fit_free, cfg.fit_bounds, cfg.sweep,
                             grid_points=cfg.fit_grid_points, max_iter=cfg.fit_max_iter,
                             rel_tol=cfg.fit_rel_tol, threads=cfg.threads,
                             starts=cfg.fit_starts)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    result = fit(problem)
    report = {"deltacpt": __version__, "config_sha256": digest,
              "data": os.path.basename(args.data), "backend": cfg.sweep.backend,
              **result.to_dict(),
              "estimates_hz": {k: _hz(v) for k, v in result.estimates.items()
                               if result.units[k] == "rad/s"},
              "timestamp": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")}
    out = _outdir(args)
    with open(os.path.join(out, "fit_report.json"), "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(_finite(report), indent=1, sort_keys=True) + "\n")
    print(result.report())
    for k, v in report["estimates_hz"].items():
        print(f"  {k} = {v:.6g} Hz (cyclic)")
    return EXIT_OK


def _finite(obj):
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def cmd_presets(args):
    if args.name:
        if args.name not in PRESETS:
            raise InputError(f"unknown preset {args.name!r}; choose from {sorted(PRESETS)}")
        sys.stdout.write(PRESETS[args.name])
    else:
        for name in sorted(PRESETS):
            print(name)
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration")
    common.add_argument("--preset", choices=sorted(PRESETS),
                        help="base preset (default fig3 when no --config is given)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--backend", choices=("analytic", "numeric"))
    common.add_argument("--threads", type=int)
    common.add_argument("--seed", type=int)

    p = argparse.ArgumentParser(prog="deltacpt", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"deltacpt {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="one sweep + lineshape metrics"
                   ).set_defaults(func=cmd_spectrum)
    sub.add_parser("power-map", parents=[common], help="spectra over a list of MW powers"
                   ).set_defaults(func=cmd_power_map)
    sub.add_parser("shift-table", parents=[common], help="centre shift per (delta_mu, power)"
                   ).set_defaults(func=cmd_shift_table)
    f = sub.add_parser("fit", parents=[common], help="estimate MW parameters from a spectrum")
    f.add_argument("data", help="spectrum CSV")
    f.set_defaults(func=cmd_fit)
    pr = sub.add_parser("presets", help="list presets or print one")
    pr.add_argument("name", nargs="?")
    pr.set_defaults(func=cmd_presets)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SweepError as exc:
        print(f"numerical error at axis value {exc.axis_value!r}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DeltaCPTError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
