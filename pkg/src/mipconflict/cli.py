"""Command-line interface: ``solve``, ``bench``, ``generate`` and ``summarize``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .bench import (
    FAMILIES, format_summary, generate_instance, load_instances, read_records,
    run_bench, summarize, write_records,
)
from .model import ModelError, MpsParseError, read_mps, write_mps
from .search import MODES, NODE_SELECTIONS, SOURCES, Settings, solve

STATS_SCHEMA_VERSION = 1
CLI_MODES = tuple(m.replace("+", "-") for m in MODES)


def _mode(text: str) -> str:
    if text not in CLI_MODES and text not in MODES:
        raise argparse.ArgumentTypeError(f"invalid mode {text!r} (choose from {', '.join(CLI_MODES)})")
    return text


def _modes(text: str) -> list[str]:
    return [_mode(t.strip()) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mipconflict", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def limits(sp):
        sp.add_argument("--conflict-source", choices=SOURCES, default="both")
        sp.add_argument("--node-selection", choices=NODE_SELECTIONS, default="hybrid")
        sp.add_argument("--time-limit", type=float, default=60.0)
        sp.add_argument("--node-limit", type=int, default=100_000)

    s = sub.add_parser("solve", help="solve one MPS file")
    s.add_argument("file")
    s.add_argument("--mode", type=_mode, default="combined")
    limits(s)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--stats-json")

    b = sub.add_parser("bench", help="run every MPS file in a directory under several modes")
    b.add_argument("dir")
    b.add_argument("--modes", type=_modes, default=_modes("conflict,dualray,combined,combined-pool"))
    limits(b)
    b.add_argument("--seeds", type=lambda t: [int(x) for x in t.split(",")], default=[0])
    b.add_argument("--out", required=True)

    g = sub.add_parser("generate", help="write a generated instance as MPS")
    g.add_argument("family", choices=FAMILIES)
    g.add_argument("--size", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    m = sub.add_parser("summarize", help="aggregate a bench CSV against a base mode")
    m.add_argument("csv")
    m.add_argument("--base", type=_mode, default="conflict")
    m.add_argument("--no-filter", action="store_true", help="keep every instance")
    return p


def stats_block(res) -> dict:
    return {
        "schema_version": STATS_SCHEMA_VERSION,
        "status": res.status,
        "objective": res.objective,
        "nodes": res.nodes,
        "time_s": res.time,
        "complete": res.complete,
        "stats": res.stats.as_dict(),
    }


def _settings(args) -> dict:
    return dict(conflict_source=args.conflict_source, node_selection=args.node_selection,
                time_limit=args.time_limit, node_limit=args.node_limit)


def cmd_solve(args) -> int:
    model = read_mps(args.file)
    res = solve(model, Settings(mode=args.mode, seed=args.seed, **_settings(args)))
    block = stats_block(res)
    print(f"status     {res.status}")
    print(f"objective  {'-' if res.objective is None else f'{res.objective:.10g}'}")
    print(f"nodes      {res.nodes}")
    print(f"time       {res.time:.3f} s")
    for key, value in block["stats"].items():
        print(f"  {key:<24}{value:.4g}" if isinstance(value, float) else f"  {key:<24}{value}")
    if args.stats_json:
        Path(args.stats_json).write_text(json.dumps(block, indent=2) + "\n")
    return 0


def cmd_bench(args) -> int:
    instances = load_instances(args.dir)
    if not instances:
        print(f"error: no .mps files in {args.dir}", file=sys.stderr)
        return 2
    records = run_bench(instances, args.modes, args.seeds, **_settings(args))
    with open(args.out, "w", newline="") as fh:
        write_records(records, fh)
    print(f"{len(records)} records written to {args.out}")
    return 0


def cmd_generate(args) -> int:
    model = generate_instance(args.family, args.size, args.seed)
    Path(args.out).write_text(write_mps(model))
    return 0


def cmd_summarize(args) -> int:
    with open(args.csv, newline="") as fh:
        records = read_records(fh)
    rows = summarize(records, base=args.base, filtered=not args.no_filter)
    sys.stdout.write(format_summary(rows))
    return 0


COMMANDS = {"solve": cmd_solve, "bench": cmd_bench, "generate": cmd_generate, "summarize": cmd_summarize}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (OSError, MpsParseError, ModelError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
