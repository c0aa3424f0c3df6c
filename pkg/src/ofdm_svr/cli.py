"""``simulate`` command line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .harness import CONFIG_KEYS, PRESETS, ScenarioConfig, dump_channel, load_config, run_scenario, write_records_csv


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Monte Carlo BER sweep of LS, decision-feedback and complex-SVR channel estimators.",
        epilog="config keys: " + ", ".join(CONFIG_KEYS),
    )
    parser.add_argument("--config", help="key = value scenario file (applied on top of --preset)")
    parser.add_argument("--out", help="CSV output path (default: stdout)")
    parser.add_argument("--seed", type=int, help="override master_seed")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="start from a named scenario")
    parser.add_argument("--estimators", help="comma-separated subset of ls,df,svr")
    parser.add_argument("--dump-channel", metavar="CSV", help="write |H(s,k)| of the first frame to CSV")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress per sweep point")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.config is None and args.preset is None:
        print("simulate: one of --config or --preset is required", file=sys.stderr)
        return 2
    try:
        config = PRESETS[args.preset] if args.preset else ScenarioConfig()
        if args.config:
            config = load_config(args.config, config)
        if args.seed is not None:
            config = replace(config, master_seed=args.seed)
        if args.estimators is not None:
            config = replace(config, estimators=tuple(e for e in args.estimators.split(",") if e))
        if args.dump_channel:
            dump_channel(config, args.dump_channel)
        if args.out:
            run_scenario(config, args.out)
        else:
            records = run_scenario(config)
            write_records_csv(sys.stdout, records)
    except (OSError, ValueError) as err:
        print(f"simulate: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
