"""
Command-line interface for running wavepax experiments.
"""

import argparse
import logging
import sys
from typing import List, Optional

from .config import load_config
from .errors import ConfigError, DomainError, ParameterError, WavepaxError
from .pipeline import SUBCOMMANDS, ExperimentPipeline

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_INTERRUPTED = 130


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavepax",
        description="Gaussian wavepacket parametrix and observability experiments",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Hamiltonian flow and its first zero
  python run_wavepax.py flow --config harmonic.json

  # Observability certificate into a chosen directory
  python run_wavepax.py certify --config harmonic.json --out reports/

  # Parametrix against the split-step reference with a random mixture
  python run_wavepax.py validate --config free.json --seed 7 -v
        """,
    )

    parser.add_argument(
        "subcommand",
        choices=SUBCOMMANDS,
        help="Experiment to run",
    )

    parser.add_argument(
        "--config",
        required=True,
        help="Experiment JSON file (validated against schema.json)",
    )

    parser.add_argument(
        "--out",
        default=None,
        help="Output directory (default: outputs.dir of the config, or wavepax-out)",
    )

    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Seed for random initial data (overrides the config seed)",
    )

    parser.add_argument(
        "--verbose",
        "-v",
        action="store_true",
        help="Enable verbose logging",
    )

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main CLI entry point.

    Returns:
        Exit status: 0 success, 2 configuration error, 3 numeric error,
        130 interrupted, 1 unexpected failure
    """
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    if args.seed is not None and args.seed < 0:
        logger.error("--seed must be non-negative")
        return EXIT_CONFIG

    try:
        config = load_config(args.config, {"outputs.dir": args.out, "seed": args.seed})
        pipeline = ExperimentPipeline(config, out_dir=args.out, seed=args.seed)
    except (ConfigError, ParameterError, DomainError) as e:
        logger.error(f"Invalid configuration: {e}", exc_info=args.verbose)
        return EXIT_CONFIG

    try:
        report = pipeline.run(args.subcommand)
        logger.info(f"Finished '{args.subcommand}' with {len(report)} report entries")
        return EXIT_OK
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return EXIT_INTERRUPTED
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}", exc_info=args.verbose)
        return EXIT_CONFIG
    except WavepaxError as e:
        context = ""
        if getattr(e, "last_valid_time", None) is not None:
            context = f" (last valid time {e.last_valid_time:.9g})"
        elif getattr(e, "time", None) is not None:
            context = f" (at t={e.time:.6g})"
        logger.error(f"'{args.subcommand}' failed: {e}{context}", exc_info=args.verbose)
        return EXIT_NUMERIC
    except Exception as e:
        logger.error(f"Pipeline failed: {e}", exc_info=args.verbose)
        return EXIT_UNEXPECTED


def run() -> None:
    sys.exit(main())
