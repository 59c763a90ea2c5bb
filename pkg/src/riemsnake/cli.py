"""Command line front end for the experiment drivers.

Subcommands map one-to-one onto riemsnake.experiments drivers. Exit codes:
0 success, 1 a run finished but violated its own assertion (non-convergence
or a topology scene with the wrong curve count), 2 usage or IO error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import (
    ConfigError,
    resolve_config,
    run_bench,
    run_circle_lengths,
    run_curvature_sweep,
    run_resolution,
    run_segment,
    run_topology,
)
from .imageops import PgmError

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riemsnake",
        description="Adaptive-resolution deformable contour experiments")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None,
                        help="flat key=value parameter file")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", type=Path, default=Path("out"),
                        help="artifact output directory")
    common.add_argument("--snapshot-every", type=int, default=0,
                        help="write an SVG snapshot every N iterations")
    common.add_argument("--uniform", action="store_true",
                        help="identity metric with uniform l_min spacing")

    sub = parser.add_subparsers(dest="command", required=True)
    seg = sub.add_parser("segment", parents=[common],
                         help="segment one PGM image")
    seg.add_argument("image", type=Path)
    sub.add_parser("curvature-sweep", parents=[common],
                   help="curvature estimator accuracy tables")
    sub.add_parser("circle-lengths", parents=[common],
                   help="edge length vs radius of curvature")
    sub.add_parser("resolution", parents=[common],
                   help="vertex count across grid resolutions")
    sub.add_parser("topology", parents=[common],
                   help="split/merge/annulus/vessel scenes")
    sub.add_parser("bench", parents=[common],
                   help="metric build timing and adaptive-vs-uniform")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(overrides={"seed": args.seed},
                             config_path=args.config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        if args.command == "segment":
            _, report = run_segment(args.image, args.out, cfg,
                                    uniform=args.uniform,
                                    snapshot_every=args.snapshot_every)
            if not report.converged:
                print("warning: evolution did not converge", file=sys.stderr)
                return EXIT_ASSERTION
        elif args.command == "curvature-sweep":
            run_curvature_sweep(args.out, cfg)
        elif args.command == "circle-lengths":
            run_circle_lengths(args.out, cfg)
        elif args.command == "resolution":
            run_resolution(args.out, cfg)
        elif args.command == "topology":
            results = run_topology(args.out, cfg,
                                   snapshot_every=args.snapshot_every)
            bad = [r for r in results if r["n_curves"] != r["expected"]]
            if bad:
                for r in bad:
                    print(f"assertion: scene {r['scene']} produced "
                          f"{r['n_curves']} curves, expected {r['expected']}",
                          file=sys.stderr)
                return EXIT_ASSERTION
        elif args.command == "bench":
            run_bench(args.out, cfg)
    except (PgmError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
