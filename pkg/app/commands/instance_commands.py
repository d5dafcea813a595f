"""
Instance subcommands.

`gen` draws sample `--sample` of the configured experiment (the same draw
`solve` would use for that sample index at the base parameters) and writes it
with its parameter sidecar.
"""

import argparse

from app.commands.options import add_common_options, load_config
from app.errors import ValidationError
from app.repositories.instance_repository import InstanceRepository
from app.services.experiment_service import generate_instance
from app.utils.seed_util import derive_seed


def gen_command(args: argparse.Namespace) -> int:
    config = load_config(args)
    if not config.output_path:
        raise ValidationError("gen needs an output path (--out or output_path)")
    if args.sample < 0:
        raise ValidationError("--sample must be nonnegative")
    topology, chan = generate_instance(
        config.params, derive_seed(config.master_seed, args.sample)
    )
    InstanceRepository().save_instance(
        config.output_path, topology, chan, config.params
    )
    return 0


def register(subparsers) -> None:
    """Add the `gen` subcommand to the CLI."""
    gen = subparsers.add_parser("gen", help="write a topology/channel instance")
    add_common_options(gen)
    gen.add_argument("--sample", type=int, default=0, help="sample index to draw")
    gen.set_defaults(func=gen_command)
