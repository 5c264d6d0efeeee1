"""Command-line entry point.

Every subcommand assembles the same flat key = value config that a config
file would provide and hands it to the persistence runner, so CLI runs and
config-file runs share run ids, manifests and resume behavior.  Reports
(plain-text series plus rendered PNG figures) are written unless
--no-render is given.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import persistence
from .persistence import (
    EXIT_FAILURE,
    ConfigError,
    RunConfig,
    output_root,
    parse_config,
    run,
)
from .plotdata import emit_plots, render_figures


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file", default=None)
    p.add_argument("--out", help="output root (default $WGNLS_OUT or ./runs)",
                   default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-render", action="store_true",
                   help="skip PNG rendering of the report series")
    p.add_argument("--set", action="append", default=[], metavar="SEC.KEY=VAL",
                   help="override any config value")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="wgnls",
        description="Ground states and dynamics of the focusing NLS on a "
                    "waveguide domain (periodic box times torus).",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("groundstate", help="one frequency-constrained solve")
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--constraint", choices=["K", "N"], default="K")
    _add_common(p)

    p = sub.add_parser("threshold", help="locate the y-dependence threshold")
    p.add_argument("--bracket", type=float, nargs=2, required=True,
                   metavar=("LO", "HI"))
    p.add_argument("--tol", type=float, required=True)
    _add_common(p)

    p = sub.add_parser("sweep", help="gamma/beta pair across frequencies")
    p.add_argument("--omegas", help="file with one frequency per line")
    p.add_argument("--omega-list", help="inline comma/space separated list")
    p.add_argument("--adapt-domain", action="store_true")
    _add_common(p)

    p = sub.add_parser("masscurve", help="m_c across prescribed masses")
    p.add_argument("--c-list", help="file with one mass per line")
    p.add_argument("--c-values", help="inline comma/space separated list")
    _add_common(p)

    p = sub.add_parser("lf-check", help="duality check at one frequency")
    p.add_argument("--omega", type=float, required=True)
    _add_common(p)

    p = sub.add_parser("evolve", help="time integration with diagnostics")
    p.add_argument("--init", required=True, help="binary field snapshot")
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--classify", metavar="C,NU",
                   help="classify against the invariant set at (c, nu)")
    p.add_argument("--m-c", type=float,
                   help="mass-curve level for classification")
    p.add_argument("--order", type=int, choices=[2, 4], default=2)
    _add_common(p)

    p = sub.add_parser("gn-test", help="interpolation-quotient corpus")
    p.add_argument("--count", type=int, default=1000)
    _add_common(p)

    p = sub.add_parser("rho-test", help="torus test-profile norms")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--n-y", type=int, default=4096)
    _add_common(p)

    p = sub.add_parser("reference", help="flat-line reference profile")
    p.add_argument("--omega", type=float, default=1.0)
    _add_common(p)

    p = sub.add_parser("run", help="run a pipeline fully described by a config")
    _add_common(p)
    return ap


def _overrides_from(args: argparse.Namespace) -> dict:
    o: dict[str, str] = {}
    cmd = args.command
    if cmd == "groundstate":
        o["groundstate.omega"] = args.omega
        o["groundstate.constraint"] = args.constraint
    elif cmd == "threshold":
        o["threshold.bracket_lo"], o["threshold.bracket_hi"] = args.bracket
        o["threshold.tol"] = args.tol
    elif cmd == "sweep":
        if args.omegas:
            o["sweep.omegas"] = args.omegas
        if args.omega_list:
            o["sweep.omega_list"] = args.omega_list
        if args.adapt_domain:
            o["sweep.adapt_domain"] = "true"
    elif cmd == "masscurve":
        if args.c_list:
            o["masscurve.c_list_file"] = args.c_list
        if args.c_values:
            o["masscurve.c_list"] = args.c_values
    elif cmd == "lf-check":
        o["lf-check.omega"] = args.omega
    elif cmd == "evolve":
        o["evolve.init"] = args.init
        o["evolve.t_end"] = args.t_end
        o["evolve.dt"] = args.dt
        o["evolve.order"] = args.order
        if args.classify:
            o["evolve.classify"] = args.classify
            if args.m_c is None:
                raise ConfigError("--classify needs --m-c")
            o["evolve.m_c"] = args.m_c
    elif cmd == "gn-test":
        o["gn-test.count"] = args.count
    elif cmd == "rho-test":
        o["rho-test.a"] = args.a
        o["rho-test.n_y"] = args.n_y
    elif cmd == "reference":
        o["reference.omega"] = args.omega
    if cmd != "run":
        o["run.command"] = cmd
    if args.seed is not None:
        o["run.seed"] = args.seed
    for item in args.set:
        key, _, val = item.partition("=")
        o[key.strip()] = val.strip()
    return o


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(args.config, _overrides_from(args))
        root = output_root(args.out)
        manifest, code = run(config, root)
        series = emit_plots(manifest, root)
        if series and not args.no_render:
            render_figures(series)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(json.dumps({
        "run_id": manifest.run_id,
        "status": manifest.status,
        "dir": str((output_root(args.out) / manifest.run_id).resolve()),
    }))
    return code


if __name__ == "__main__":
    sys.exit(main())
