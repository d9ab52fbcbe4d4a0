"""
`validate`: replay every record of a run and check it bit-exactly
"""

from commands import emit
from services.run_service import validate


def register(subparsers) -> None:
    parser = subparsers.add_parser('validate', help='replay and check a generated run')
    parser.add_argument('out_dir', help='run directory written by gen')
    parser.add_argument('--assets', help='asset root (defaults to the one recorded in run.json)')
    parser.set_defaults(handler=handle)


def handle(args) -> int:
    report = validate(args.out_dir, asset_root=args.assets)
    emit(report)
    return report['exit_code']
