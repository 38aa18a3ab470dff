"""Command-line entry point.

Subcommands::

    coevo omnirep {bitcount|precision|program|image} [flags]
    coevo safe {maze|zdt} [flags]
    coevo front {zdt1|zdt2|zdt3|zdt4} [--points N] [--out-dir D]
    coevo validate-maze FILE

Global flags override the matching keys of ``--config``. Exit codes: 0 on
success, 1 when a run or validation fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import ConfigError, PROBLEMS, load_config, parse_config, run_experiment
from .maze import MazeParseError, parse_maze
from .moo import ZdtProblem, reference_front
from .trace import format_value


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--generations", type=int)
    p.add_argument("--pop-size", type=int, dest="population_size")
    p.add_argument("--out-dir", dest="output_dir")
    p.add_argument("--threads", type=int)
    p.add_argument("--quiet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coevo", description="Coevolutionary optimization experiments.")
    sub = parser.add_subparsers(dest="command", metavar="command")

    for algo, problems in PROBLEMS.items():
        p = sub.add_parser(algo, help=f"run {algo.upper()} on a problem")
        p.add_argument("problem", choices=problems)
        _common(p)

    p = sub.add_parser("front", help="write the reference Pareto front of a ZDT problem")
    p.add_argument("zdt", choices=["zdt1", "zdt2", "zdt3", "zdt4"])
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--form", choices=["standard", "verbatim"], default="standard")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("validate-maze", help="check a maze file")
    p.add_argument("file")
    return parser


def _run(args) -> int:
    overrides = {
        k: getattr(args, k)
        for k in ("seed", "generations", "population_size", "output_dir", "threads")
        if getattr(args, k) is not None
    }
    if args.config:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if doc.get("algorithm", args.command) != args.command or doc.get("problem", args.problem) != args.problem:
            raise ConfigError(f"config is for {doc.get('algorithm')} {doc.get('problem')}, "
                              f"not {args.command} {args.problem}")
        cfg = load_config(args.config, {"algorithm": args.command, "problem": args.problem, **overrides})
    else:
        cfg = parse_config({"algorithm": args.command, "problem": args.problem, **overrides})
    log = None if args.quiet else (lambda msg: print(msg, flush=True))
    res = run_experiment(cfg, log=log)
    if not args.quiet:
        for f in res.files:
            print(f"wrote {f}")
    return 0


def _front(args) -> int:
    p = ZdtProblem(int(args.zdt[3:]), form=args.form)
    pts = reference_front(p, args.points)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["f1,f2"] + [f"{format_value(a)},{format_value(b)}" for a, b in pts]
    (out / "front.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if not args.quiet:
        print(f"wrote {out / 'front.csv'} ({len(pts)} points)")
    return 0


def _validate(args) -> int:
    grid = parse_maze(Path(args.file).read_text(encoding="utf-8"))
    print(f"ok: {grid.width}x{grid.height}, start {grid.start}, goal {grid.goal}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("coevo: error: a command is required", file=sys.stderr)
        return 2
    try:
        if args.command == "front":
            return _front(args)
        if args.command == "validate-maze":
            return _validate(args)
        return _run(args)
    except (ConfigError, MazeParseError, OSError, ValueError) as exc:
        print(f"coevo: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
