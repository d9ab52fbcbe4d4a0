"""
Collage synthetic-data pipeline
Command-line entry point
"""

import argparse
import logging
import os
import sys

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

from commands import assets, gen, preview, validate

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'

LEVEL_COLORS = {
    'DEBUG': '\033[36m',
    'INFO': '\033[32m',
    'WARNING': '\033[33m',
    'ERROR': '\033[31m',
    'CRITICAL': '\033[1;31m',
}
RESET = '\033[0m'


class ColorFormatter(logging.Formatter):
    """Colors the level name; plain output when disabled"""

    def __init__(self, fmt: str, use_color: bool):
        super().__init__(fmt)
        self.use_color = use_color

    def format(self, record: logging.LogRecord) -> str:
        if not self.use_color or record.levelname not in LEVEL_COLORS:
            return super().format(record)
        original = record.levelname
        record.levelname = f"{LEVEL_COLORS[original]}{original}{RESET}"
        try:
            return super().format(record)
        finally:
            record.levelname = original


def use_color(stream=None) -> bool:
    stream = stream or sys.stderr
    return 'NO_COLOR' not in os.environ and hasattr(stream, 'isatty') and stream.isatty()


def configure_logging(level: str = None) -> None:
    level = (level or os.getenv('LOG_LEVEL', 'INFO')).upper()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(ColorFormatter(LOG_FORMAT, use_color(sys.stderr)))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(getattr(logging, level, logging.INFO))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='collage',
        description='Deterministic collage-based training data for image generation and editing')
    subparsers = parser.add_subparsers(dest='command', required=True)

    # Register command modules
    gen.register(subparsers)
    validate.register(subparsers)
    preview.register(subparsers)
    assets.register(subparsers)
    return parser


def main(argv=None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    return args.handler(args)


if __name__ == '__main__':
    sys.exit(main())
