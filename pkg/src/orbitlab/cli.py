"""Command line: ``orbitlab <scenario> --config FILE --seed N --out DIR``."""
from __future__ import annotations

import argparse
import sys

from . import config as cf
from .scenarios import SCENARIOS, prepare_output_dir, run_scenario, write_outputs

DESCRIPTIONS = {
    "rb-curve": "reference or interleaved RB decay with a fitted A p^m + B",
    "landscape-x2": "sequence fidelity vs. each X/2 pulse parameter at several depths",
    "orbit-x2": "closed-loop X/2 tune-up from a perturbed start, RB before/after",
    "orbit-cz": "closed-loop CZ trajectory tune-up on the two-qubit device",
    "bleedthrough": "learn a two-pole inverse filter for a step pulse's line response",
    "crosstalk-map": "added victim error over aggressor detuning and gate length",
    "sensitivity": "dF/dr against sequence depth",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orbitlab", description="RB-driven calibration scenarios on a simulated transmon.")
    sub = p.add_subparsers(dest="scenario", required=True, metavar="SCENARIO")
    sub.add_parser("list", help="list scenarios and config keys")
    for name in SCENARIOS:
        sp = sub.add_parser(name, help=DESCRIPTIONS[name])
        sp.add_argument("--config", default=None, help="YAML file of config overrides")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--exact", action="store_true", help="exact expectations instead of sampled shots")
        sp.add_argument("--parallel", type=int, default=1, help="worker threads for sequence simulation")
    return p


def _list() -> str:
    lines = ["scenarios:"]
    lines += [f"  {n:14s} {d}" for n, d in DESCRIPTIONS.items()]
    lines.append("config keys:")
    for name, k in cf.KEYS.items():
        unit = f" [{k.unit}]" if k.unit else ""
        lines.append(f"  {name}{unit} = {k.default!r}: {k.doc}")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.scenario == "list":
        print(_list())
        return 0
    if not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    if args.parallel < 1:
        print("error: --parallel must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = cf.parse_config(args.config)
    except cf.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        prepare_output_dir(args.out)
        record = run_scenario(args.scenario, cfg, args.seed, exact=args.exact, parallel=args.parallel)
        paths = write_outputs(record, args.out)
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{args.scenario}: wrote {len(paths)} files to {args.out} ({record.duration_s:.1f} s)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
