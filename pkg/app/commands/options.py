"""
Options shared by every subcommand.

`--seed`, `--out` and `--workers` override the matching config values; when
`--workers` is absent the APP_WORKERS setting is used unless the config file
sets `workers` itself.
"""

import argparse
from typing import Mapping, Optional

from app.config.experiment import (
    ExperimentConfig,
    ExperimentMode,
    load_experiment_config,
    parse_config_values,
)
from app.config.settings import get_settings


def add_common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="experiment config file (key=value lines)")
    parser.add_argument("--seed", type=int, help="master seed override")
    parser.add_argument("--out", help="output path override")
    parser.add_argument("--workers", type=int, help="worker process count")


def load_config(
    args: argparse.Namespace,
    param_defaults: Optional[Mapping[str, str]] = None,
    mode: Optional[ExperimentMode] = None,
) -> ExperimentConfig:
    """Load `--config` (or the defaults) and apply the command-line overrides."""
    if args.config:
        config = load_experiment_config(args.config, param_defaults)
    else:
        config = parse_config_values({}, param_defaults)

    workers = args.workers
    if workers is None and "workers" not in config.model_fields_set:
        workers = get_settings().workers
    return config.with_overrides(
        master_seed=args.seed, output_path=args.out, workers=workers, mode=mode
    )
