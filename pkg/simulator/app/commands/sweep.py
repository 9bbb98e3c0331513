"""
sweep 命令：对场景的一个数值键做参数扫描
"""
import argparse
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from app.commands.simulate import run_scenario
from app.config import settings
from app.services import export
from app.services.scenario_file import emit, parse_scenario, to_scenario, with_override
from app.utils.errors import EXIT_OK, InvalidInputError
from app.utils.files import atomic_write_text

logger = logging.getLogger(__name__)


def parse_range(text: str) -> List[float]:
    """start:stop:count → 含端点的等间距取值"""
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidInputError(f"range must be start:stop:count, got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InvalidInputError(f"range must be start:stop:count, got {text!r}")
    if count < 1:
        raise InvalidInputError(f"range count must be >= 1, got {count}")
    return [float(v) for v in np.linspace(start, stop, count)]


def _sweep_one(job: Dict) -> Dict[str, Optional[float]]:
    """单个子运行（可在子进程中执行）"""
    text = job["text"]
    scenario = to_scenario(parse_scenario(text))
    report, _ = run_scenario(scenario, text.encode("utf-8"), Path(job["out_dir"]),
                             job["substeps"], job["sample_rate"])
    return {
        "value": job["value"],
        "beat_frequency": report.beat_frequency,
        "visibility": report.visibility,
        "stationary_phase_diff": report.stationary_phase_difference,
    }


def sweep(
    path: Path,
    key: str,
    values: List[float],
    out_dir: Path,
    workers: int = 1,
    substeps: Optional[int] = None,
    sample_rate: Optional[float] = None,
) -> List[Dict[str, Optional[float]]]:
    base = parse_scenario(Path(path).read_text(encoding="utf-8"))
    jobs = []
    for i, value in enumerate(values):
        # 先完成全部覆盖与建模，非法键在启动任何子运行前报错
        text = emit(to_scenario(with_override(base, key, value)))
        jobs.append({
            "text": text, "value": value, "out_dir": str(Path(out_dir) / f"run_{i:03d}"),
            "substeps": substeps, "sample_rate": sample_rate,
        })
    logger.info("sweeping %s over %d value(s) with %d worker(s)", key, len(jobs), workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(job) for job in jobs]
    atomic_write_text(Path(out_dir) / export.SWEEP_FILE, export.sweep_csv(rows))
    return rows


def handle(args: argparse.Namespace) -> int:
    values = parse_range(args.range)
    sweep(Path(args.scenario), args.param, values, Path(args.out), args.workers,
          args.substeps, args.sample_rate)
    return EXIT_OK


def register(subparsers) -> None:
    parser = subparsers.add_parser("sweep", help="参数扫描")
    parser.add_argument("scenario", help="场景文件路径")
    parser.add_argument("--param", required=True, help="点分键，如 source.v_g")
    parser.add_argument("--range", required=True, help="start:stop:count")
    parser.add_argument("--out", default=settings.default_out_dir, help="输出目录")
    parser.add_argument("--workers", type=int, default=settings.sweep_workers, help="并行子进程数")
    parser.add_argument("--substeps", type=int, default=None)
    parser.add_argument("--sample-rate", type=float, default=None, dest="sample_rate")
    parser.set_defaults(handler=handle)
