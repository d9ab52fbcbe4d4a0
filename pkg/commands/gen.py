"""
`gen`: generate a sharded dataset from a config file plus flag overrides
"""

import logging

from commands import emit, fail
from config import apply_overrides, load_config
from exceptions import AssetError, ConfigError, PipelineError
from models import TaskFamily
from services.run_service import run, run_exists

logger = logging.getLogger(__name__)


def add_config_arguments(parser) -> None:
    parser.add_argument('--config', help='JSON config file (defaults apply when omitted)')
    parser.add_argument('--seed', type=int, help='master seed')
    parser.add_argument('--assets', help='asset root directory')


def register(subparsers) -> None:
    parser = subparsers.add_parser('gen', help='generate a dataset')
    add_config_arguments(parser)
    parser.add_argument('--out', help='output directory')
    parser.add_argument('--jobs', type=int, help='worker processes')
    parser.add_argument('--shard-size', type=int, dest='shard_size', help='samples per shard')
    for task in TaskFamily:
        parser.add_argument(f'--count.{task.value}', type=int, dest=f'count_{task.value}',
                            metavar='N', help=f'number of {task.value} samples')
    parser.set_defaults(handler=handle)


def task_counts(args) -> dict:
    counts = {}
    for task in TaskFamily:
        value = getattr(args, f'count_{task.value}', None)
        if value is not None:
            counts[task.value] = value
    return counts


def handle(args) -> int:
    try:
        config = load_config(args.config)
        config = apply_overrides(config, seed=args.seed, out=args.out, counts=task_counts(args),
                                 jobs=args.jobs, assets=args.assets, shard_size=args.shard_size)
    except ConfigError as e:
        for message in e.messages:
            logger.error(f"config: {message}")
        return fail('invalid configuration')

    if run_exists(config.out_dir):
        return fail(f"{config.out_dir} already contains a run")

    try:
        summary = run(config)
    except AssetError as e:
        return fail(str(e))
    except PipelineError as e:
        logger.error(f"Generation aborted: {e}")
        return 1

    emit(summary)
    if not summary['success']:
        logger.error(f"Error rate {summary['error_rate']:.2%} exceeds the 1% limit")
        return 1
    return 0
