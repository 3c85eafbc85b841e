#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
tsaextreme - Time-series aggregation with extreme periods

Command-line entry point: generate, run, sweep, compare-k and compare-methods.
Exit codes: 0 success, 1 runtime or solver failure, 2 configuration error.
"""

from typing import Dict, Any, List, Optional
from pathlib import Path
import argparse
import logging
import sys

from tsaextreme.config.config import CliConfig, load_config
from tsaextreme.exceptions import ConfigurationError, InvalidConfig, TsaExtremeError
from tsaextreme.models.timeseries import write_csv
from tsaextreme.pipeline import Pipeline
from tsaextreme.utils.plotting import plot_design_comparison, plot_sweep
from tsaextreme.utils.reporting import is_cost_monotone, write_json, write_report, write_sweep
from tsaextreme.utils.synthgen import generate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

# argparse dest -> dotted configuration key
FLAG_KEYS = {
    "data": "run.dataset",
    "method": "run.method",
    "modification": "run.modification",
    "k": "run.k",
    "n_init": "run.n_init",
    "grid_fraction": "run.grid_fraction",
    "grid_limit": "run.grid_limit_kw",
    "virtual_days": "run.virtual_days",
    "workers": "run.workers",
    "backend": "solver.backend",
    "out": "output.directory",
    "plots": "output.plots",
    "log_level": "logging.level",
    "days": "synth.n_days",
    "fractions": "sweep.fractions",
    "check_monotone": "sweep.check_monotone",
    "ks": "compare.ks",
}


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one sub-command per experiment."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML configuration file")
    common.add_argument("--seed", type=int, help="Seed for clustering and the synthetic year")
    common.add_argument("--out", help="Output directory")
    common.add_argument("--backend", choices=["simplex", "highs"], help="LP backend")
    common.add_argument("--workers", type=int, help="Worker processes")
    common.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")

    run_opts = argparse.ArgumentParser(add_help=False)
    run_opts.add_argument("--data", help="Hourly CSV dataset; the synthetic year if omitted")
    run_opts.add_argument("--method", choices=["none", "simple", "feasibility", "slack"])
    run_opts.add_argument("--modification", choices=["steps", "feasibility_steps", "append"])
    run_opts.add_argument("--k", type=int, help="Number of clusters")
    run_opts.add_argument("--n-init", dest="n_init", type=int, help="k-means restarts")
    run_opts.add_argument("--grid-fraction", dest="grid_fraction", type=float,
                          help="Grid limit as a share of the reference grid draw")
    run_opts.add_argument("--grid-limit", dest="grid_limit", type=float, help="Absolute grid limit in kW")
    run_opts.add_argument("--virtual-days", dest="virtual_days", action="store_const", const=True,
                          help="Seed with one virtual extreme day")
    run_opts.add_argument("--no-plots", dest="plots", action="store_const", const=False, help="Skip SVG charts")

    parser = argparse.ArgumentParser(prog="tsaextreme",
                                     description="Time-series aggregation with extreme period selection")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", parents=[common], help="Write the synthetic dataset as CSV")
    gen.add_argument("--days", type=int, help="Number of days")
    gen.add_argument("--output", help="CSV path (default: <out>/dataset.csv)")

    sub.add_parser("run", parents=[common, run_opts], help="One aggregated design run")

    sweep = sub.add_parser("sweep", parents=[common, run_opts], help="Grid limit sweep")
    sweep.add_argument("--fractions", type=float, nargs="+", help="Grid fractions, e.g. 1.2 1.0 0.0")
    sweep.add_argument("--check-monotone", dest="check_monotone", action="store_const", const=True,
                       help="Fail if total cost increases with the grid fraction")

    compare = sub.add_parser("compare-k", parents=[common, run_opts],
                             help="Cluster counts with and without extreme days")
    compare.add_argument("--ks", type=int, nargs="+", help="Cluster counts")

    sub.add_parser("compare-methods", parents=[common, run_opts],
                   help="Feasibility vs slack selection, both modifications")
    return parser


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Dotted configuration overrides from parsed flags."""
    overrides: Dict[str, Any] = {}
    for dest, key in FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "seed", None) is not None:
        overrides["run.seed"] = args.seed
        overrides["synth.seed"] = args.seed
    if getattr(args, "grid_fraction", None) is not None:
        overrides["compare.grid_fraction"] = args.grid_fraction
    if getattr(args, "method", None) is not None:
        overrides["compare.method"] = args.method
    return overrides


def cmd_generate(cli: CliConfig, args: argparse.Namespace) -> int:
    """Write the synthetic year."""
    data = generate(cli.synth)
    path = Path(args.output) if args.output else Path(cli.output.directory) / "dataset.csv"
    write_csv(data, path)
    logger.info(f"Wrote {data.n_days} days to {path}")
    return EXIT_OK


def cmd_run(cli: CliConfig, args: argparse.Namespace) -> int:
    """One aggregated run with report and design chart."""
    out = Path(cli.output.directory)
    report = Pipeline.from_config(cli).run_aggregated()
    write_report(report, out)
    if cli.output.plots:
        plot_design_comparison(report, out / "design.svg")
    return EXIT_OK


def cmd_sweep(cli: CliConfig, args: argparse.Namespace) -> int:
    """Grid limit sweep; partial results are written before failing."""
    out = Path(cli.output.directory)
    points = Pipeline.from_config(cli).sweep_grid_limits(cli.sweep.fractions)
    write_sweep(points, out / "sweep.csv")
    if cli.output.plots:
        plot_sweep(points, out / "sweep.svg")
    failed = [p.fraction for p in points if p.report is None]
    if failed:
        logger.error(f"Sweep points failed: {failed}")
        return EXIT_FAILURE
    if cli.sweep.check_monotone and not is_cost_monotone(points):
        logger.error("Total cost increases with the grid fraction")
        return EXIT_FAILURE
    return EXIT_OK


def cmd_compare_k(cli: CliConfig, args: argparse.Namespace) -> int:
    result = Pipeline.from_config(cli).compare_cluster_counts(cli.compare.ks, cli.compare.method,
                                                              cli.compare.grid_fraction)
    write_json(result, Path(cli.output.directory) / "compare_k.json")
    return EXIT_OK


def cmd_compare_methods(cli: CliConfig, args: argparse.Namespace) -> int:
    result = Pipeline.from_config(cli).compare_methods()
    write_json(result, Path(cli.output.directory) / "compare_methods.json")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "compare-k": cmd_compare_k,
    "compare-methods": cmd_compare_methods,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main application entry point.

    Args:
        argv: Arguments without the program name; ``sys.argv[1:]`` by default

    Returns:
        Process exit code
    """
    args = build_parser().parse_args(argv)
    try:
        cli = load_config(args.config, collect_overrides(args))
    except ConfigurationError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    logging.basicConfig(
        level=getattr(logging, cli.logging.level),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
        force=True,
    )
    logger.info(f"Starting tsaextreme {args.command}")

    try:
        return COMMANDS[args.command](cli, args)
    except (ConfigurationError, InvalidConfig) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except (TsaExtremeError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
