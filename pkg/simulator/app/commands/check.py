"""
check 命令：闭式公式校验表
"""
import argparse
import logging
import sys

from app.services.checks import run_checks
from app.utils.errors import EXIT_CHECK_FAILED, EXIT_OK
from app.utils.numeric import fmt_float

logger = logging.getLogger(__name__)


def handle(args: argparse.Namespace) -> int:
    rows = run_checks()
    width = max(len(r.name) for r in rows)
    for row in rows:
        status = "PASS" if row.passed else "FAIL"
        print(f"{row.name:<{width}}  {status}  expected={fmt_float(row.expected)} "
              f"actual={fmt_float(row.actual)}")
    failed = [r.name for r in rows if not r.passed]
    if failed:
        for name in failed:
            print(f"check failed: {name}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    logger.info("all %d checks passed", len(rows))
    return EXIT_OK


def register(subparsers) -> None:
    parser = subparsers.add_parser("check", help="运行闭式公式校验")
    parser.set_defaults(handler=handle)
