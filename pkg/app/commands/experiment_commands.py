"""
Experiment subcommands.

This module defines the `solve`, `sweep`, `trace` and `oracle-check`
subcommands. Each writes one CSV table to the configured output path or to
stdout. With `--instance`, `solve` and `oracle-check` instead solve one saved
instance and write an allocation and a report file per allocator.
"""

import argparse
import os
from typing import Callable, Sequence

from app.commands.options import add_common_options, load_config
from app.config.experiment import TRACE_PARAM_DEFAULTS, ExperimentMode
from app.errors import ValidationError
from app.repositories.instance_repository import InstanceRepository
from app.repositories.result_repository import ResultRepository
from app.services.allocator_methods import IAllocator
from app.services.experiment_service import (
    emit_convergence_trace,
    run_solve,
    run_sweep,
)
from app.services.oracle_service import OracleAllocator
from app.services.solver_service import EemAllocator, SemAllocator
from app.utils.logger import get_logger

logger = get_logger(__name__)


def _solve_instance(
    args: argparse.Namespace, allocator_types: Sequence[Callable[..., IAllocator]]
) -> int:
    """Solve a saved instance with each allocator and write every result."""
    instances = InstanceRepository()
    _, chan = instances.load_instance(args.instance)
    if not args.config:
        args.config = instances.find_params_file(args.instance)
    config = load_config(args)

    stem = os.path.splitext(config.output_path or args.instance)[0]
    results = ResultRepository()
    for allocator_type in allocator_types:
        allocator = allocator_type(config)
        allocation, report = allocator.solve(chan)
        suffix = allocator.mode.lower()
        results.save_allocation(allocation, f"{stem}_{suffix}_allocation.csv")
        results.save_report(report, f"{stem}_{suffix}_report.csv")
        logger.info(
            "[SolveCommand] %s ee=%s se=%s converged=%s",
            allocator.mode,
            report.final_ee,
            report.final_se,
            report.converged,
        )
    return 0


def solve_command(args: argparse.Namespace) -> int:
    if args.instance:
        return _solve_instance(
            args,
            [
                lambda config: EemAllocator(config.params),
                lambda config: SemAllocator(config.params),
            ],
        )
    config = load_config(args)
    if config.mode is ExperimentMode.ORACLE_CHECK:
        raise ValidationError("mode=ORACLE_CHECK belongs to the oracle-check command")
    ResultRepository().save_records(run_solve(config), config.output_path)
    return 0


def sweep_command(args: argparse.Namespace) -> int:
    config = load_config(args)
    ResultRepository().save_records(run_sweep(config), config.output_path)
    return 0


def trace_command(args: argparse.Namespace) -> int:
    config = load_config(args, param_defaults=TRACE_PARAM_DEFAULTS)
    ResultRepository().save_records(emit_convergence_trace(config), config.output_path)
    return 0


def oracle_check_command(args: argparse.Namespace) -> int:
    if args.instance:
        return _solve_instance(
            args, [lambda config: OracleAllocator(config.params, config.grid)]
        )
    config = load_config(args, mode=ExperimentMode.ORACLE_CHECK)
    ResultRepository().save_records(run_solve(config), config.output_path)
    return 0


def register(subparsers) -> None:
    """Add the experiment subcommands to the CLI."""
    solve = subparsers.add_parser(
        "solve", help="solve generated samples, or one saved instance"
    )
    add_common_options(solve)
    solve.add_argument("--instance", help="instance file written by `gen`")
    solve.set_defaults(func=solve_command)

    sweep = subparsers.add_parser("sweep", help="aggregate metrics over a sweep")
    add_common_options(sweep)
    sweep.set_defaults(func=sweep_command)

    trace = subparsers.add_parser("trace", help="per-sample EE convergence rows")
    add_common_options(trace)
    trace.set_defaults(func=trace_command)

    oracle = subparsers.add_parser(
        "oracle-check", help="compare Dinkelbach with exhaustive search"
    )
    add_common_options(oracle)
    oracle.add_argument("--instance", help="instance file written by `gen`")
    oracle.set_defaults(func=oracle_check_command)
