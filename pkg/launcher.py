#!/usr/bin/env python3
"""
Pipeline launcher for the limit order book price-jump study.

Runs one stage (or all of them) against a run directory. Every stage reads
the CSV/JSON artifacts of the stages before it and writes its own.

Usage:
    python launcher.py <stage> [options]

Stages:
    simulate    Generate a synthetic session (events.csv, truth.csv)
    replay      Rebuild the book, one snapshot per event (snapshots.csv)
    label       Trade signs, trade-throughs, jump labels (trades.csv)
    featurize   Lagged design matrices (design_bid.csv, design_ask.csv)
    fit         Cross-validated LASSO on the training rows (path_*.csv, fit_*.json)
    evaluate    Out-of-sample ROC/AUC (roc_*.csv, auc.csv)
    curve       Conditional trade-sign curves (curve.csv)
    summarize   Event and jump counts (summary.csv)
    report      Selection-rank frequencies over fit_*.json files (selection_report.csv)
    all         Every stage in order

Examples:
    python launcher.py all --config run.cfg
    python launcher.py simulate --config run.cfg --seed 7
    python launcher.py curve --depth 1 --output-dir out/
    python launcher.py report --directory runs/
"""

import argparse
import sys
from typing import Dict, List, Optional

from lobjump.main import app, configure_logging


class PipelineLauncher:
    """Runs a pipeline stage and prints its one-line result envelope."""

    def __init__(self, stage: str, config: Optional[str] = None, seed: Optional[int] = None,
                 output_dir: Optional[str] = None, verbose: bool = False, **options):
        """
        Initialize the launcher.

        Args:
            stage: Stage to run
            config: Path of a `key = value` config file
            seed: Seed override for the run, fit and simulator
            output_dir: Override of the configured output directory
            verbose: Log at DEBUG level
            **options: Stage-specific options such as depth or directory
        """
        self.stage = stage
        self.config = config
        self.seed = seed
        self.output_dir = output_dir
        self.verbose = verbose
        self.options: Dict[str, object] = {k: v for k, v in options.items() if v is not None}

    def run(self) -> int:
        """
        Run the stage.

        Returns:
            Process exit code
        """
        configure_logging(self.verbose)
        code, response = app.run(
            self.stage,
            config_path=self.config,
            seed=self.seed,
            output_dir=self.output_dir,
            **self.options,
        )
        stream = sys.stdout if code == 0 else sys.stderr
        print(response.line(), file=stream)
        return code


def parse_arguments(argv: Optional[List[str]] = None):
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        description="Limit order book price-jump pipeline",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s all --config run.cfg            # Simulate, fit and evaluate end to end
  %(prog)s simulate --seed 7               # Synthetic session with seed 7
  %(prog)s curve --depth 1                 # W(1) trade-sign curve only
  %(prog)s report --directory runs/        # Selection ranks across many runs
        """
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        '--config',
        default=None,
        help='Config file with one key = value per line (default: built-in defaults)'
    )
    common.add_argument(
        '--seed',
        type=int,
        default=None,
        help='Override seed, fit.seed and sim.seed together'
    )
    common.add_argument(
        '--output-dir',
        default=None,
        help='Override the configured output directory'
    )
    common.add_argument(
        '--verbose',
        action='store_true',
        help='Log at DEBUG level'
    )

    subparsers = parser.add_subparsers(dest='stage', required=True, metavar='stage')
    for name, stage in app.stages.items():
        sub = subparsers.add_parser(name, parents=[common], help=stage.help)
        if name == 'curve':
            sub.add_argument(
                '--depth',
                type=int,
                default=None,
                help='Only emit curves for this depth (default: 1..L)'
            )
        if name == 'report':
            sub.add_argument(
                '--directory',
                default=None,
                help='Directory searched recursively for fit_*.json (default: output dir)'
            )

    parser.add_argument(
        '--version',
        action='version',
        version=f'{app.title} v{app.version}'
    )

    return parser.parse_args(argv)


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    args = parse_arguments(argv)
    options = vars(args).copy()
    launcher = PipelineLauncher(**options)
    return launcher.run()


if __name__ == "__main__":
    sys.exit(main())
