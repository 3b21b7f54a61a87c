"""Command line front end.

Exit codes: 0 success, 1 error, 2 when ``cert`` cannot decide bilocality.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import certify as cert_mod
from .quantum import CHSH_SETTINGS, OPTIMAL_SETTINGS, quantum_point
from .scenario import Correlation, mix, white_noise
from .strategies import SymmetricParams, build_symmetric_weights, pc_weights, pcbar_weights, synthesize

PRESETS = ("pq-optimal", "pq-chsh", "pr", "pc", "pcbar", "symmetric")


class CliError(Exception):
    pass


def make_preset(name: str, params: list[str]) -> Correlation:
    if name != "symmetric" and params:
        raise CliError(f"preset {name!r} takes no parameters")
    if name == "pq-optimal":
        return quantum_point(OPTIMAL_SETTINGS)
    if name == "pq-chsh":
        return quantum_point(CHSH_SETTINGS)
    if name == "pr":
        return white_noise()
    if name == "pc":
        return synthesize(pc_weights())
    if name == "pcbar":
        return synthesize(pcbar_weights())
    if name == "symmetric":
        if len(params) != 4:
            raise CliError("preset 'symmetric' needs four parameters: r s t u")
        try:
            r, s, t, u = (float(v) for v in params)
            return synthesize(build_symmetric_weights(SymmetricParams(r, s, t, u)))
        except ValueError as exc:
            raise CliError(f"bad symmetric parameters: {exc}") from exc
    raise CliError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


def _read_correlation(path: str) -> Correlation:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    try:
        return Correlation.from_json(text)
    except (ValueError, json.JSONDecodeError) as exc:
        raise CliError(f"invalid correlation file {path}: {exc}") from exc


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text + "\n")
    else:
        Path(path).write_text(text + "\n")


def cmd_gen(args) -> int:
    name, *params = args.preset
    p = make_preset(name, params)
    if args.visibility is not None:
        if not 0.0 <= args.visibility <= 1.0:
            raise CliError("--visibility must lie in [0, 1]")
        p = mix(p, white_noise(p.scenario), args.visibility)
    _write_text(args.out, p.to_json())
    return 0


def cmd_cert(args) -> int:
    p = _read_correlation(args.input)
    try:
        report = cert_mod.certify(p, restarts=args.search_restarts, iters=args.search_iters, seed=args.seed)
    except cert_mod.SignalingError as exc:
        raise CliError(str(exc)) from exc
    print(report.to_json())
    return 2 if report.bilocal == "Unknown" else 0


def cmd_sweep(args) -> int:
    p = _read_correlation(args.input)
    method = "inequality" if args.criterion == "inequality" else "local_lp"
    try:
        threshold = cert_mod.critical_visibility(p, method, args.tol)
    except cert_mod.NoThresholdError:
        threshold = None
    except cert_mod.SignalingError as exc:
        raise CliError(str(exc)) from exc
    if args.out:
        noise = white_noise(p.scenario)
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["v", "I", "E", "slack", "local"])
            for v in np.linspace(0.0, 1.0, args.points):
                q = mix(p, noise, float(v))
                ie = cert_mod.compute_IE(q)
                writer.writerow([repr(float(v)), repr(ie.I), repr(ie.E),
                                 repr(1 + ie.E ** 2 - ie.I), int(cert_mod.is_local(q).local)])
    print(json.dumps({"criterion": args.criterion, "threshold": threshold, "tol": args.tol}))
    return 0


def cmd_slice(args) -> int:
    if args.grid < 2:
        raise CliError("--grid must be at least 2")
    table = cert_mod.export_slice(args.grid)
    cert_mod.write_slice_csv(table, args.out)
    out = Path(args.out)
    curves_path = out.with_name(out.stem + "_curves" + (out.suffix or ".csv"))
    cert_mod.write_curves_csv(table.curves, curves_path)
    print(json.dumps({"grid": args.grid, "points": str(out), "curves": str(curves_path)}))
    return 0


def cmd_demo(args) -> int:
    demo = cert_mod.separable_demo(visibility=args.visibility)
    print(json.dumps(demo.to_dict(), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bilocal", description="Bilocality certification for entanglement swapping.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write a preset correlation as JSON")
    gen.add_argument("--preset", nargs="+", required=True, metavar="NAME",
                     help=f"one of {', '.join(PRESETS)}; 'symmetric' takes r s t u")
    gen.add_argument("--visibility", type=float, default=None)
    gen.add_argument("--out", default=None)
    gen.set_defaults(func=cmd_gen)

    cert = sub.add_parser("cert", help="certify a correlation file")
    cert.add_argument("--in", dest="input", required=True)
    cert.add_argument("--search-restarts", type=int, default=49)
    cert.add_argument("--search-iters", type=int, default=500)
    cert.add_argument("--seed", type=int, default=0)
    cert.set_defaults(func=cmd_cert)

    sweep = sub.add_parser("sweep", help="critical visibility along mix(p, P_R, v)")
    sweep.add_argument("--in", dest="input", required=True)
    sweep.add_argument("--criterion", choices=("inequality", "local"), default="inequality")
    sweep.add_argument("--tol", type=float, default=1e-9)
    sweep.add_argument("--out", default=None, help="optional CSV of the sweep")
    sweep.add_argument("--points", type=int, default=101)
    sweep.set_defaults(func=cmd_sweep)

    sl = sub.add_parser("slice", help="export the two-dimensional slice as CSV")
    sl.add_argument("--grid", type=int, default=201)
    sl.add_argument("--out", required=True)
    sl.set_defaults(func=cmd_slice)

    demo = sub.add_parser("demo-separable", help="singlet plus separable source demonstration")
    demo.add_argument("--visibility", type=float, default=1.0)
    demo.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad flags; 2 is reserved for Unknown verdicts
        return 0 if exc.code == 0 else 1
    try:
        if getattr(args, "search_restarts", 1) < 1 or getattr(args, "search_iters", 1) < 1:
            raise CliError("search budget must be positive")
        if getattr(args, "tol", 1.0) <= 0:
            raise CliError("--tol must be positive")
        if getattr(args, "points", 2) < 2:
            raise CliError("--points must be at least 2")
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
