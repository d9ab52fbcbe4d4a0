"""
`assets check`: load an asset root and report invariant violations
"""

from commands import emit
from services.asset_service import AssetService


def register(subparsers) -> None:
    parser = subparsers.add_parser('assets', help='asset library tools')
    actions = parser.add_subparsers(dest='assets_command', required=True)
    check = actions.add_parser('check', help='audit an asset root')
    check.add_argument('root', nargs='?', default='assets', help='asset root directory')
    check.set_defaults(handler=handle_check)


def handle_check(args) -> int:
    result = AssetService(args.root).check()
    emit(result)
    if 'error' in result:
        return 2
    return 0 if result['success'] else 1
