"""
命令行入口

    python -m app.main simulate <file> --out <dir> [--substeps N] [--sample-rate R]
    python -m app.main check
    python -m app.main sweep <file> --param <key> --range a:b:n --out <dir> [--workers N]

退出码：0 成功，1 公式校验失败，2 输入/场景校验失败，3 运行期错误。
"""
import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from app.config import settings
from app.utils.errors import EXIT_RUNTIME, EXIT_VALIDATION, WaveCrestError

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.app_name,
        description="运动分束器上的波峰与包络事件驱动模拟",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.version}")
    parser.add_argument("--verbose", "-v", action="store_true", help="输出 DEBUG 日志")
    subparsers = parser.add_subparsers(dest="command", required=True)

    # 注册子命令
    from app.commands import check, simulate, sweep

    simulate.register(subparsers)
    check.register(subparsers)
    sweep.register(subparsers)
    return parser


def configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose or settings.debug else getattr(logging, settings.log_level.upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format="[%(levelname)s] [%(name)s] %(message)s",
        stream=sys.stderr,
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.handler(args)
    except WaveCrestError as exc:
        print(f"error: {exc.detail}", file=sys.stderr)
        return exc.exit_code
    except ValidationError as exc:
        print(f"error: invalid value: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
