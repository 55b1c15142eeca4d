"""Command line entry point: ``stabledetect <command> --config FILE [options]``.

Exit status: 0 on success, 2 on a configuration error, 3 on a numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import harness
from .errors import ConfigError, NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

COMMANDS = {
    "ber-sweep": harness.run_ber_sweep,
    "cf-validate": harness.run_cf_validation,
    "estimated-sweep": harness.run_estimated_param_sweep,
    "p-sensitivity": harness.run_p_sensitivity,
}

log = logging.getLogger("stabledetect")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stabledetect", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "ber-sweep": "error rate versus SNR for each detector",
        "cf-validate": "compare spatial-aggregate CFs with the stable-law predictions",
        "estimated-sweep": "error rate with parameters estimated from N_e samples",
        "p-sensitivity": "theoretical error rate versus the moment order p",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="YAML or JSON experiment file")
        p.add_argument("--seed", type=_u64, help="override the config seed")
        p.add_argument("--out", help="output CSV path (manifest written alongside)")
        p.add_argument("--threads", type=_positive, help="worker threads")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = harness.ExperimentConfig.load(args.config, seed=args.seed, output_path=args.out,
                                            threads=args.threads)
        fn = COMMANDS[args.command]
        if args.command == "p-sensitivity":
            result, wall = harness.timed(fn, cfg)
        else:
            result, wall = harness.timed(fn, cfg, cfg.threads)
        csv_path, man_path = harness.write_outputs(cfg.output_path, args.command, cfg, result, wall)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except OSError as exc:
        log.error("cannot write output: %s", exc)
        return EXIT_CONFIG
    log.info("wrote %s and %s (%.1f s)", csv_path, man_path, wall)
    if args.command == "cf-validate" and not result["passed"]:
        log.warning("CF validation exceeded the 4/sqrt(N) bound")
    if isinstance(result, harness.BerCurve):
        bad = [r for r in result.rows if r.info.get("numerical_failure")]
        if bad:
            for r in bad:
                log.error("%s L=%d snr=%g failed: %s", r.detector, r.L, r.snr_db, r.info["error"])
            return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
