"""
Command modules; each exposes register(subparsers) and sets an exit-code handler
"""

import json
import sys


def emit(result) -> None:
    """Print a command result as JSON on stdout"""
    print(json.dumps(result, indent=2, ensure_ascii=False, default=str))


def fail(message: str, code: int = 2) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code
