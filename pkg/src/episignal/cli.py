"""Command line entry point: ``episignal <stage> --config run.toml``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config, resolve_seed
from .ingest import IngestError
from .pipeline import Pipeline
from .report import STAGES, emit_reports

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("episignal")

_HELP = {
    "ingest": "load inputs; write summary.csv and daily_series.csv",
    "rt": "estimate R(t); write rt_<region>.csv",
    "periods": "slice pandemic periods; write periods.json",
    "correlate": "lagged correlations and trend tests",
    "topics": "daily CTE topics; write topics/<region>_<day>.json",
    "classify": "train and evaluate the topic classifier",
    "report": "write the report tables, category rates, word frequencies and plot",
    "pipeline": "run every stage and write all artifacts",
}


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; validation errors here are 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="episignal", description=__doc__)
    sub = parser.add_subparsers(dest="stage", metavar="stage", parser_class=_Parser)
    sub.required = True
    for stage in STAGES:
        sp = sub.add_parser(stage, help=_HELP[stage])
        sp.add_argument("--config", required=True, help="TOML run configuration")
        sp.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        sp.add_argument("--region", action="append", default=None,
                        help="restrict to this region (repeatable)")
        sp.add_argument("--out-dir", default="out", help="output directory (default: out)")
        sp.add_argument("--strict", action="store_true",
                        help="fail on the first malformed input row instead of skipping it")
        sp.add_argument("--parallel", action="store_true",
                        help="model (region, day) topic slices in parallel processes")
        sp.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(stream=sys.stderr, level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        seed = resolve_seed(args.seed, config["seed"])
        pipe = Pipeline(config, seed, regions=args.region, strict=args.strict,
                        parallel=args.parallel)
        written = emit_reports(pipe, args.out_dir, args.stage)
    except (ConfigError, IngestError, FileNotFoundError) as exc:
        print(f"episignal: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - every other failure is a runtime error
        log.debug("runtime failure", exc_info=True)
        print(f"episignal: {args.stage} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    log.info("%s: wrote %d files to %s", args.stage, len(written), args.out_dir)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
