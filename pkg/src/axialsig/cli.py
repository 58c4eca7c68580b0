"""Command line entry point: ``sig <command> [flags]``.

Exit status is 0 on success, 1 for configuration or input errors and 2
for numerical failures.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .curves import CurveError
from .harness import (KINDS, ConfigError, ExperimentConfig, NumericalFailure, emit_svg_plot,
                      run_experiment, run_table)
from .inversion import InversionError
from .kernel import KernelError
from .norms import NormError
from .rational import RationalError
from .svg import PlotError
from .table import QuadratureError, TableError, emit_table, table_to_csv

log = logging.getLogger("axialsig")

PLOT_KIND = {"rate": "loglog", "trace": "profile", "modcont": "frontier", "discont": "loglog"}
PRESET_FLAGS = {"x0": float, "slope": float, "amplitude": float, "freq_y": float,
                "turns": int, "C0": float, "d": int}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sig", description="Axial signature coefficients, inversion and norm experiments.")
    p.add_argument("command", choices=KINDS)
    p.add_argument("--config", help="JSON file with config keys; flags override it")
    p.add_argument("--preset")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="preset parameter (repeatable); values are parsed as JSON when possible")
    p.add_argument("--polyline", help="CSV polyline (s,x1,...,xd) to reparameterize")
    p.add_argument("--axis", type=int, help="axial coordinate of --polyline (1-based)")
    p.add_argument("--table")
    p.add_argument("--table-b", dest="table_b")
    p.add_argument("--against", help="second preset for norms")
    p.add_argument("--out")
    p.add_argument("--plot", help="SVG output path")
    p.add_argument("--N", type=int)
    p.add_argument("--nmax", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--x", type=float)
    p.add_argument("--j", type=int)
    p.add_argument("--scheme", choices=["naive", "decimal", "cf"])
    p.add_argument("--eps0", type=float)
    p.add_argument("--alpha", type=float, help="Holder exponent (also the holder_kink parameter)")
    p.add_argument("--slack", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--m", type=_ints, help="integer, or comma list for discont")
    p.add_argument("--eps", type=_floats)
    p.add_argument("--lambdas", type=_floats)
    p.add_argument("--freq", type=int, help="perturbation frequency for modcont")
    p.add_argument("--K", type=float)
    p.add_argument("--c1bar", type=float)
    p.add_argument("--c2bar", type=float)
    p.add_argument("--vertices", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--norm", choices=["as", "al1"])
    p.add_argument("--raw", action="store_true", default=None, help="table: write sign/log cells")
    p.add_argument("--grid", type=int)
    p.add_argument("--n-values", dest="n_values", type=_ints)
    for name, typ in PRESET_FLAGS.items():
        p.add_argument(f"--{name.replace('_', '-')}", dest=f"preset_{name}", type=typ)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _parse_param(text: str):
    key, sep, val = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"--param expects KEY=VALUE, got {text!r}")
    try:
        return key, json.loads(val)
    except json.JSONDecodeError:
        return key, val


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    file_cfg = None
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
    params = {}
    for name in PRESET_FLAGS:
        v = getattr(args, f"preset_{name}")
        if v is not None:
            params[{"turns": "n", "freq_y": "freq"}.get(name, name)] = v
    # --m doubles as the monomial power (single value) and the discont list
    m = args.m
    if m is not None and args.command != "discont":
        if len(m) != 1:
            raise ConfigError("--m takes a single integer outside discont")
        params["m"] = m[0]
        m = None
    if args.alpha is not None and args.preset == "holder_kink":
        params["alpha"] = args.alpha
    for item in args.param:
        k, v = _parse_param(item)
        params[k] = v
    flags = {k: v for k, v in vars(args).items()
             if k not in ("command", "config", "param", "verbose") and not k.startswith("preset_")}
    flags["m"] = m
    flags["params"] = params or None
    return ExperimentConfig.from_sources(args.command, file_cfg, flags)


def _write(path, text: str):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"sig: error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if cfg.plot and cfg.kind not in PLOT_KIND:
            raise ConfigError(f"--plot is not available for {cfg.kind}")
        if cfg.kind == "table":
            if cfg.out is None:
                raise ConfigError("table needs --out")
            rep, table = run_table(cfg)
            if cfg.out.endswith(".csv"):
                _write(cfg.out, table_to_csv(table, raw=cfg.raw))
            else:
                emit_table(table, cfg.out, raw=cfg.raw)
            print(rep.summary_text())
            return 0
        rep = run_experiment(cfg)
        _write(cfg.out, rep.to_csv())
        if cfg.plot:
            emit_svg_plot(rep, PLOT_KIND[cfg.kind], cfg.plot)
        if cfg.out is not None:
            print(rep.summary_text())
        return 0
    except NumericalFailure as exc:
        msg, rep = exc.args[0], exc.args[1] if len(exc.args) > 1 else None
        if rep is not None:
            _write(cfg.out, rep.to_csv())
        print(f"sig: numerical failure: {msg}", file=sys.stderr)
        return 2
    except (QuadratureError, FloatingPointError) as exc:
        print(f"sig: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, CurveError, RationalError, TableError, InversionError, NormError,
            KernelError, PlotError) as exc:
        print(f"sig: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"sig: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
