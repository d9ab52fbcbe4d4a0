"""
`preview`: render a contact sheet of one task family without writing a dataset
"""

import logging

from commands import emit, fail
from commands.gen import add_config_arguments
from config import apply_overrides, load_config
from exceptions import AssetError, ConfigError, PipelineError
from models import TaskFamily
from services.run_service import MAX_PREVIEW, preview

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser('preview', help='render source|target pairs into one image')
    add_config_arguments(parser)
    parser.add_argument('--task', required=True, choices=[task.value for task in TaskFamily])
    parser.add_argument('-n', type=int, default=4, help=f'rows, 1..{MAX_PREVIEW}')
    parser.add_argument('--output', default='preview.png', help='PNG file to write')
    parser.set_defaults(handler=handle)


def handle(args) -> int:
    if not 1 <= args.n <= MAX_PREVIEW:
        return fail(f"-n must be in 1..{MAX_PREVIEW}, got {args.n}")
    try:
        config = apply_overrides(load_config(args.config), seed=args.seed, assets=args.assets)
    except ConfigError as e:
        for message in e.messages:
            logger.error(f"config: {message}")
        return fail('invalid configuration')

    try:
        result = preview(config, TaskFamily(args.task), args.n, args.output)
    except AssetError as e:
        return fail(str(e))
    except PipelineError as e:
        logger.error(f"Preview failed: {e}")
        return 1
    emit(result)
    return 0
