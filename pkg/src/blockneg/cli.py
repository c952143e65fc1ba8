"""Command line entry point: ``blockneg <subcommand>``.

Settings come from an optional INI-style config file (section ``[run]``,
``key = value`` lines, keys spelled like the long flags with ``_`` instead of
``-``) and are overridden by explicit flags::

    [run]
    gamma = 1.0
    lambda = 1.0
    sizes = 64, 128
    kept_states = 60
    sweeps = 6
    window = 0.1, 3
    format = json
    out = ising.json
    jobs = 1

Exit status: 0 on success, 1 if some runs failed (or the oracle check found a
mismatch), 2 for an invalid configuration.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import analysis
from .dmrg import DmrgConfig
from .model import ModelError, ModelParams

log = logging.getLogger("blockneg")

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


def _floats(text):
    return [float(v) for v in str(text).replace(",", " ").split()]


def _ints(text):
    return [int(v) for v in str(text).replace(",", " ").split()]


def _window(text):
    vals = _floats(text)
    if len(vals) != 2 or vals[0] >= vals[1]:
        raise ConfigError(f"window must be 'lo,hi' with lo < hi, got {text!r}")
    return tuple(vals)


def _bool(text):
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in ("1", "true", "yes", "on")


# key -> (parser, default)
SETTINGS = {
    "gamma": (float, None),
    "lambda": (float, None),
    "sizes": (_ints, None),
    "kept_states": (int, 60),
    "sweeps": (int, 6),
    "tol": (float, 1e-12),
    "window": (_window, analysis.DEFAULT_WINDOW),
    "format": (str, "csv"),
    "out": (str, None),
    "log_negativity": (_bool, False),
    "jobs": (int, 1),
    "mu": (Fraction, None),
    "lambdas": (_floats, None),
    "mu_cut": (float, 2.5),
}


def resolve(args) -> dict:
    """Merge config file values and command line flags into typed settings."""
    raw = {}
    if getattr(args, "config", None):
        parser = configparser.ConfigParser()
        if not parser.read(args.config):
            raise ConfigError(f"cannot read config file {args.config}")
        if "run" not in parser:
            raise ConfigError("config file needs a [run] section")
        unknown = set(parser["run"]) - set(SETTINGS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        raw.update(parser["run"])
    for key in SETTINGS:
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    out = {}
    for key, (conv, default) in SETTINGS.items():
        try:
            out[key] = conv(raw[key]) if key in raw else default
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad value for {key}: {raw[key]!r}") from exc
    if out["format"] not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {out['format']!r}")
    return out


def _require(settings, *keys):
    missing = [k for k in keys if settings[k] is None]
    if missing:
        raise ConfigError(f"missing settings: {', '.join(missing)}")


def _dmrg_config(settings) -> DmrgConfig:
    try:
        return DmrgConfig(
            max_kept_states=settings["kept_states"],
            n_sweeps=settings["sweeps"],
            eigensolver_tol=settings["tol"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _provenance_settings(settings) -> dict:
    return {k: (str(v) if isinstance(v, Fraction) else v) for k, v in settings.items()}


def cmd_mu_sweep(settings) -> int:
    _require(settings, "gamma", "lambda", "sizes")
    params = [ModelParams(n, settings["gamma"], settings["lambda"]) for n in settings["sizes"]]
    outcome = analysis.mu_sweep(params, _dmrg_config(settings), settings["window"], settings["jobs"])
    _emit_records(outcome.records, settings)
    return EXIT_PARTIAL if outcome.partial else EXIT_OK


def _emit_records(records, settings):
    if settings["out"]:
        analysis.export(records, settings["out"], settings["format"], _provenance_settings(settings))
        log.info("wrote %d records to %s", len(records), settings["out"])
    else:
        print(",".join(analysis.CSV_COLUMNS))
        for r in records:
            row = r.as_row()
            print(",".join(analysis._fmt(row[c]) for c in analysis.CSV_COLUMNS))


SCAN_COLUMNS = ("n_sites", "lambda", "block_len", "separation", "mu", "negativity", "truncated_weight")


def cmd_lambda_scan(settings) -> int:
    _require(settings, "gamma", "mu", "sizes", "lambdas")
    outcome = analysis.lambda_scan(
        settings["gamma"], settings["mu"], settings["sizes"], settings["lambdas"],
        _dmrg_config(settings), settings["jobs"],
    )
    rows = [
        [r.n_sites, r.lam, r.block_len, r.separation, r.separation / r.block_len, r.negativity, r.truncated_weight]
        for r in outcome.records
    ]
    if settings["out"] and settings["format"] == "json":
        payload = {
            "provenance": analysis.provenance(_provenance_settings(settings)),
            "rows": [dict(zip(SCAN_COLUMNS, row)) for row in rows],
        }
        Path(settings["out"]).write_text(json.dumps(payload, indent=1) + "\n")
    else:
        lines = [",".join(SCAN_COLUMNS)] + [",".join(analysis._fmt(v) for v in row) for row in rows]
        text = "\n".join(lines) + "\n"
        if settings["out"]:
            Path(settings["out"]).write_text(text)
        else:
            sys.stdout.write(text)
    if not outcome.records and not outcome.failures:
        log.warning("mu=%s is not realizable at any requested size", settings["mu"])
    return EXIT_PARTIAL if outcome.partial else EXIT_OK


def cmd_fit(settings, inputs) -> int:
    records = [r for path in inputs for r in analysis.load_records(path)]
    fit = analysis.fit_ansatz(records, settings["window"], settings["log_negativity"])
    what = "E_LN" if fit.log_negativity else "negativity"
    print(f"{what} ~ A mu^-h exp(-alpha mu) on mu in [{fit.fit_window[0]}, {fit.fit_window[1]}], {fit.n_points} points")
    print(f"h = {fit.h:.6f}  alpha = {fit.alpha:.6f}  A = {fit.amplitude:.6f}  residual = {fit.residual_norm:.3e}")
    if settings["out"]:
        analysis.export([fit], settings["out"], "json", _provenance_settings(settings))
    return EXIT_OK


def cmd_compare(settings, input_a, input_b) -> int:
    a = analysis.load_records(input_a)
    b = analysis.load_records(input_b)
    dev = analysis.universality_compare(a, b, settings["mu_cut"], settings["window"][0])
    print(f"max relative deviation for mu <= {settings['mu_cut']}: {dev:.6f}")
    if settings["out"]:
        payload = {
            "provenance": analysis.provenance(_provenance_settings(settings)),
            "inputs": [str(input_a), str(input_b)],
            "mu_cut": settings["mu_cut"],
            "max_relative_deviation": dev,
        }
        Path(settings["out"]).write_text(json.dumps(payload, indent=1) + "\n")
    return EXIT_OK


def cmd_oracle_check(settings, tolerance) -> int:
    from .exact import block_density_operator, exact_ground_state
    from .entanglement import negativity

    _require(settings, "gamma", "lambda", "sizes")
    config = _dmrg_config(settings)
    worst = 0.0
    print("n_sites,block_len,separation,dmrg,oracle,abs_diff")
    for n in settings["sizes"]:
        params = ModelParams(n, settings["gamma"], settings["lambda"])
        ground = exact_ground_state(params)
        result = analysis.run_dmrg(params, config)
        for rec in analysis.series_records(result):
            rho = block_density_operator(ground.state, rec.block_len, rec.separation)
            exact = negativity(rho).negativity
            diff = abs(rec.negativity - exact)
            worst = max(worst, diff)
            print(f"{n},{rec.block_len},{rec.separation},{rec.negativity:.12g},{exact:.12g},{diff:.3e}")
    print(f"max deviation {worst:.3e} (tolerance {tolerance:.1e})")
    return EXIT_OK if worst <= tolerance else EXIT_PARTIAL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with a [run] section")
    common.add_argument("--gamma", type=str)
    common.add_argument("--lambda", dest="lambda", type=str)
    common.add_argument("--sizes", type=str, help="comma separated chain lengths")
    common.add_argument("--kept-states", dest="kept_states", type=str)
    common.add_argument("--sweeps", type=str)
    common.add_argument("--tol", type=str)
    common.add_argument("--window", type=str, help="mu window 'lo,hi'")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--out")
    common.add_argument("--log-negativity", dest="log_negativity", action="store_const", const=True)
    common.add_argument("--jobs", type=str)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="blockneg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("mu-sweep", parents=[common], help="negativity along the unnesting series")
    scan = sub.add_parser("lambda-scan", parents=[common], help="negativity at fixed mu versus field")
    scan.add_argument("--mu", type=str, help="ratio x/Delta, e.g. 2/3")
    scan.add_argument("--lambdas", type=str, help="comma separated field values")
    fit = sub.add_parser("fit", parents=[common], help="fit mu^-h exp(-alpha mu) to exported records")
    fit.add_argument("inputs", nargs="+")
    cmp_ = sub.add_parser("compare", parents=[common], help="max relative deviation between two datasets")
    cmp_.add_argument("input_a")
    cmp_.add_argument("input_b")
    cmp_.add_argument("--mu-cut", dest="mu_cut", type=str)
    oracle = sub.add_parser("oracle-check", parents=[common], help="DMRG versus exact diagonalization")
    oracle.add_argument("--tolerance", type=float, default=1e-6)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        settings = resolve(args)
        if args.command == "mu-sweep":
            return cmd_mu_sweep(settings)
        if args.command == "lambda-scan":
            return cmd_lambda_scan(settings)
        if args.command == "fit":
            return cmd_fit(settings, args.inputs)
        if args.command == "compare":
            return cmd_compare(settings, args.input_a, args.input_b)
        if args.command == "oracle-check":
            return cmd_oracle_check(settings, args.tolerance)
    except (ConfigError, ModelError) as exc:
        print(f"blockneg: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except analysis.FitError as exc:
        print(f"blockneg: fit failed: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    parser.error(f"unknown command {args.command}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
