"""``isostring`` command line.

    isostring simulate    --config run.toml [--output traj.csv] [--format csv|jsonl] [--tol 1e-10]
    isostring solve-exact --config run.toml [--output traj.csv] [--format csv|jsonl]
    isostring spectrum    --config run.toml [--output spec.json]
    isostring verify      --config run.toml [--output report.json] [--tol 1e-10]

Trajectories go to ``--output`` (or ``run.output``, or stdout); a JSON
summary goes to stderr.  Failures print ``{"error": ..., "message": ...}``
to stderr and exit nonzero: 2 for bad configuration, 3 for a failed run,
1 when ``verify`` completes but a check is over its threshold.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from typing import Optional

from . import __version__
from .harness import RunFailure, format_samples, simulate, solve_exact_samples, verify
from .spectral import SpectrumError, spectrum
from .string_model import ConfigError, DiscreteString, ValidationError, load_config

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_RUN = 0, 1, 2, 3


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    # write-then-rename so a reader never sees a half-written file
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".isostring-")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _emit(obj: dict) -> None:
    sys.stderr.write(json.dumps(obj, sort_keys=True) + "\n")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isostring", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("simulate", "integrate the flow ODEs"),
        ("solve-exact", "reconstruct the string from evolved spectral data"),
        ("spectrum", "eigenvalues, residues and gamma as JSON"),
        ("verify", "compare both routes and check conservation laws"),
    ]:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="TOML configuration file")
        sp.add_argument("--output", help="output path (default: run.output or stdout)")
        if name in ("simulate", "solve-exact"):
            sp.add_argument("--format", choices=["csv", "jsonl"], help="trajectory format")
        if name in ("simulate", "verify"):
            sp.add_argument("--tol", type=float, help="adaptive tolerance (overrides the config)")
        if name == "verify":
            for key in ("spectrum", "residue", "hamiltonian", "two-route"):
                sp.add_argument(f"--{key}-threshold", type=float, dest=key.replace("-", "_"))
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    # stderr carries JSON records only
    pkg_log = logging.getLogger("isostring")
    pkg_log.propagate = False
    if not pkg_log.handlers:
        pkg_log.addHandler(logging.NullHandler())
    try:
        with open(args.config, encoding="utf-8") as fh:
            string, flow, run = load_config(fh.read())
    except OSError as exc:
        _emit({"error": "config", "message": str(exc)})
        return EXIT_CONFIG
    except ValidationError as exc:
        _emit({"error": "validation", "message": str(exc), "violations": exc.violations})
        return EXIT_CONFIG
    except ConfigError as exc:
        _emit({"error": "config", "message": str(exc)})
        return EXIT_CONFIG

    tol = getattr(args, "tol", None)
    if tol is not None and not tol > 0:
        _emit({"error": "config", "message": f"--tol must be positive (got {tol})"})
        return EXIT_CONFIG
    output = args.output if args.output is not None else run.output
    fmt = getattr(args, "format", None) or run.format

    if args.command == "spectrum":
        if not isinstance(string, DiscreteString):
            _emit({"error": "unsupported", "message": "spectrum needs the string kernel"})
            return EXIT_CONFIG
        try:
            sd = spectrum(string)
        except SpectrumError as exc:
            _emit({"error": "spectrum", "message": str(exc)})
            return EXIT_RUN
        _write(output, sd.to_json() + "\n")
        return EXIT_OK

    if args.command == "verify":
        thr = {k: v for k in ("spectrum", "residue", "hamiltonian", "two_route")
               if (v := getattr(args, k)) is not None}
        report = verify(string, flow, run, thresholds=thr, tol=tol)
        _write(output, report.to_json() + "\n")
        return EXIT_OK if report.passed else EXIT_CHECK

    try:
        if args.command == "simulate":
            samples, _ = simulate(string, flow, run, tol=tol)
        else:
            samples = solve_exact_samples(string, flow, run)
    except RunFailure as exc:
        if exc.partial is not None and len(exc.partial):
            _write(output, format_samples(exc.partial, fmt, error=exc.to_dict()))
        _emit(exc.to_dict())
        return EXIT_CONFIG if exc.kind == "unsupported" else EXIT_RUN
    _write(output, format_samples(samples, fmt))
    _emit({"command": args.command, "samples": len(samples),
           "drift_max": float(samples.drift_max.max()), **samples.info})
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
