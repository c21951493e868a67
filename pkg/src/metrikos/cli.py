"""Command-line front end.

Subcommands: run (full scenario), convert, integrate, check, locus, demo.
Exit codes: 0 success, 1 a check or demo assertion failed, 2 input error
(bad flags, unparsable config, infeasible or malformed values), 3 runtime
failure (integration or sampling broke down despite valid input).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import core, demos, loci as locus_ops, scenario, spaces
from .conversion import hilbert_to_metric, metric_to_hilbert
from .core import MetricCoords
from .errors import InvalidInputError, MetrikosError
from .scenario import significant


def _parse_vector(text: str) -> list:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InvalidInputError(f"expected comma-separated numbers, "
                                f"got {text!r}")


def _print_values(values, key: str, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps({key: [float(v) for v in values]}))
    else:
        print(",".join(significant(v) for v in values))


def _cmd_run(args) -> int:
    outcome = scenario.run_scenario(args.config, out_dir=args.out,
                                    seed=args.seed, fmt=args.format,
                                    tol=args.tol)
    for path in outcome.paths:
        print(f"wrote {path}")
    for entry in outcome.report["checks"]:
        state = "pass" if entry["passed"] else "FAIL"
        print(f"check {entry['name']}: {state}")
    print(f"scenario {outcome.report['scenario']}: "
          f"{'ok' if outcome.ok else 'FAILED'}")
    return 0 if outcome.ok else 1


def _cmd_convert(args) -> int:
    if args.point is not None:
        w = _parse_vector(args.point)
        if len(w) < 1:
            raise InvalidInputError("point needs at least one component")
        coords = hilbert_to_metric(np.asarray(w))
        _print_values(coords.values, "coords", args.format)
    else:
        values = _parse_vector(args.coords)
        if len(values) < 2:
            raise InvalidInputError("coords need at least two components "
                                    "(unit points plus the origin)")
        point = metric_to_hilbert(MetricCoords(np.asarray(values)))
        _print_values(point, "point", args.format)
    return 0


def _cmd_integrate(args) -> int:
    outcome = scenario.run_scenario(args.config, out_dir=args.out,
                                    seed=args.seed, fmt=args.format,
                                    tol=args.tol, only_run=args.run)
    entry = outcome.report["runs"][0]
    coords = ", ".join(f"x_{k} = {significant(v)}"
                       for k, v in entry["final_coords"].items())
    print(f"run {entry['name']}: status={entry['status']}, "
          f"rows={entry['rows']}, final t={significant(entry['final_t'])}")
    print(f"final coords: {coords}")
    for path in outcome.paths:
        print(f"wrote {path}")
    return 0 if outcome.ok else 1


def _cmd_check(args) -> int:
    outcome = scenario.run_scenario(args.config, out_dir=args.out,
                                    seed=args.seed, fmt=args.format,
                                    tol=args.tol, only_check=args.check)
    for entry in outcome.report["checks"]:
        state = "pass" if entry["passed"] else "FAIL"
        print(f"check {entry['name']} ({entry['kind']}): {state}")
    if not outcome.report["checks"]:
        print("no checks defined")
    return 0 if outcome.ok else 1


def _cmd_locus(args) -> int:
    # validation errors (bad kind, indices, parameter ranges) surface while
    # loading, before any sampling work
    loaded = scenario.load_scenario(args.config, seed=args.seed)
    if not loaded.loci:
        raise InvalidInputError("scenario defines no loci")
    name = args.locus
    if name is None:
        if len(loaded.loci) > 1:
            known = ", ".join(loaded.loci)
            raise InvalidInputError(f"scenario defines several loci; pick "
                                    f"one with --locus ({known})")
        name = next(iter(loaded.loci))
    if name not in loaded.loci:
        known = ", ".join(loaded.loci)
        raise InvalidInputError(f"unknown locus {name!r}; "
                                f"scenario defines: {known}")
    locus = loaded.loci[name]
    seed = args.seed if args.seed is not None else loaded.seed
    points = locus_ops.sample_locus(locus, loaded.system, args.count, seed)
    residuals = []
    for p in points:
        c = core.coords_of(loaded.system, p, warn_nonmember=False)
        residuals.append(abs(locus_ops.locus_residual(locus, c,
                                                      loaded.system)))
    worst = max(residuals)
    print(f"sampled {len(points)} points on locus {name!r} "
          f"(worst residual {worst:.3e})")
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        dim = len(np.atleast_1d(spaces.as_data(loaded.system.space,
                                               points[0])))
        header = [f"p{k}" for k in range(dim)] + ["residual"]
        lines = [",".join(header)]
        for p, res in zip(points, residuals):
            data = np.atleast_1d(spaces.as_data(loaded.system.space, p))
            lines.append(",".join([significant(v) for v in data]
                                  + [significant(res)]))
        path = os.path.join(args.out, f"{name}_locus.csv")
        scenario._atomic_write(path, "\n".join(lines) + "\n")
        print(f"wrote {path}")
    return 0


def _cmd_demo(args) -> int:
    if args.list and args.name is None:
        for name in demos.DEMO_NAMES:
            print(name)
        return 0
    if args.name is None or args.name not in demos.DEMO_NAMES:
        if args.name is not None:
            print(f"unknown demo: {args.name}", file=sys.stderr)
        print("available demos:", file=sys.stderr)
        for name in demos.DEMO_NAMES:
            print(f"  {name}", file=sys.stderr)
        return 2
    return demos.run_demo(args.name, out_dir=args.out)


def _add_common(parser, config_required=True) -> None:
    parser.add_argument("--config", required=config_required,
                        help="scenario config file (TOML)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the scenario seed")
    parser.add_argument("--out", default=None,
                        help="directory for output files")
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="trajectory file format")
    parser.add_argument("--tol", type=float, default=None,
                        help="default tolerance for checks without their own")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metrikos",
        description="Metric coordinate systems: conversions, flows, checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a scenario file")
    _add_common(p)
    p.set_defaults(handler=_cmd_run)

    p = sub.add_parser("convert",
                       help="convert between Cartesian points and "
                            "corner-system coordinates")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--point", help="comma-separated Cartesian point")
    group.add_argument("--coords", help="comma-separated coordinate tuple")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(handler=_cmd_convert)

    p = sub.add_parser("integrate", help="execute one run from a scenario")
    _add_common(p)
    p.add_argument("--run", required=True, help="run name")
    p.set_defaults(handler=_cmd_integrate)

    p = sub.add_parser("check", help="evaluate one check from a scenario")
    _add_common(p)
    p.add_argument("--check", default=None,
                   help="check name (default: all checks)")
    p.set_defaults(handler=_cmd_check)

    p = sub.add_parser("locus", help="sample a locus and export the cloud")
    _add_common(p)
    p.add_argument("--locus", default=None, help="locus name")
    p.add_argument("--count", type=int, default=200,
                   help="number of points to sample")
    p.set_defaults(handler=_cmd_locus)

    p = sub.add_parser("demo", help="run a bundled demonstration")
    p.add_argument("name", nargs="?", default=None)
    p.add_argument("--list", action="store_true",
                   help="list available demos")
    p.add_argument("--out", default=None,
                   help="directory for exported data files")
    p.set_defaults(handler=_cmd_demo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MetrikosError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
