"""Command line entry point: ``metid <subcommand> --config FILE [--set key=value ...]``."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .errors import (
    ConfigurationError,
    IdentificationError,
    MetidError,
    NumericalError,
    ParseError,
)
from .pipeline import (
    PipelineError,
    fit_met_stage,
    load_config,
    run_error_surface,
    run_identify,
    run_mc_met,
    simulate_observations,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NUMERICAL = 3
EXIT_IDENTIFICATION = 4
EXIT_OTHER = 1


def exit_code(exc):
    """Map an exception to the process exit code."""
    if isinstance(exc, PipelineError):
        exc = exc.error
    if isinstance(exc, (ParseError, ConfigurationError)):
        return EXIT_PARSE
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(exc, IdentificationError):
        return EXIT_IDENTIFICATION
    return EXIT_OTHER


def _cmd_simulate(cfg, args):
    obs, path = simulate_observations(cfg, args.output)
    print(f"wrote {len(obs)} observations to {path}")


def _cmd_fit(cfg, args):
    fit = fit_met_stage(cfg)
    terms = ", ".join(f"{c:+.6g} x^{j}" for j, c in fit.polynomial.nonzero_terms())
    print(f"support (1-based): {[i + 1 for i in fit.coefficients.support]}")
    print(f"u_f = {terms}")


def _cmd_identify(cfg, args):
    out = run_identify(cfg)
    m = out["model"]
    alpha = "" if m.alpha is None else f" alpha_L={m.alpha:g}"
    print(f"sigma_L={m.sigma:g}{alpha} G={m.objective:.6e}")
    for j, c in m.drift.nonzero_terms():
        print(f"  x^{j}: {c:+.6f}")


def _cmd_surface(cfg, args):
    model, surface = run_error_surface(cfg)
    print(f"{len(surface.G)} candidates, {len(surface.failures)} failed; minimum at sigma={model.sigma:g}"
          + ("" if model.alpha is None else f", alpha={model.alpha:g}"))


def _cmd_mc(cfg, args):
    est = run_mc_met(cfg)
    flag = "" if est.reliable else " (unreliable: censored paths)"
    print(f"mean={est.mean:.6f} stderr={est.stderr:.6f} censored={est.censored_fraction:.4f}{flag}")


def build_parser():
    parser = argparse.ArgumentParser(prog="metid", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "simulate-met": (_cmd_simulate, "forward-solve the true model and write observations"),
        "fit-met": (_cmd_fit, "sparse fit of the observed exit time curve"),
        "identify": (_cmd_identify, "run the full identification and write all artifacts"),
        "error-surface": (_cmd_surface, "write the objective over the candidate grid"),
        "mc-met": (_cmd_mc, "Monte Carlo mean exit time of the true model"),
    }
    for name, (fn, help_text) in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("-c", "--config", help="key = value configuration file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a key")
        p.add_argument("-o", "--out", help="output directory (output.dir)")
        p.add_argument("--observations", help="observations CSV path")
        if name == "simulate-met":
            p.add_argument("--output", help="observations file to write")
        p.set_defaults(func=fn)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = list(args.set)
    if args.out:
        overrides.append(f"output.dir={args.out}")
    if args.observations:
        overrides.append(f"observations={args.observations}")
    try:
        cfg = load_config(args.config, overrides)
        with np.errstate(all="ignore"):
            args.func(cfg, args)
    except (MetidError, OSError) as exc:
        print(f"metid {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_PARSE if isinstance(exc, OSError) else exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
