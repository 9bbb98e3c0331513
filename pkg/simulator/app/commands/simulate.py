"""
simulate 命令：运行一个场景并写出全部结果文件
"""
import argparse
import logging
from pathlib import Path
from typing import Optional, Tuple

from app.config import settings
from app.schemas.detector import InterferenceReport
from app.schemas.manifest import RunManifest
from app.schemas.scenario import Scenario
from app.services import detector as detector_service
from app.services import export
from app.services import tracer as tracer_service
from app.services.scenario_file import read_scenario
from app.utils.errors import EXIT_OK

logger = logging.getLogger(__name__)


def run_scenario(
    scenario: Scenario,
    scenario_bytes: bytes,
    out_dir: Path,
    substeps: Optional[int] = None,
    sample_rate: Optional[float] = None,
) -> Tuple[InterferenceReport, RunManifest]:
    """追踪 → 探测 → 导出"""
    result = tracer_service.run(scenario, substeps=substeps)
    rate = sample_rate if sample_rate is not None else scenario.run.sample_rate
    trace, report = detector_service.detect(result.segments, scenario.detector.position, rate)
    worldlines = tracer_service.export_worldlines(result)
    manifest = export.write_run(out_dir, result, worldlines, trace, report, scenario_bytes)
    return report, manifest


def simulate(
    path: Path,
    out_dir: Path,
    substeps: Optional[int] = None,
    sample_rate: Optional[float] = None,
) -> RunManifest:
    scenario, data = read_scenario(path)
    report, manifest = run_scenario(scenario, data, out_dir, substeps, sample_rate)
    final = report.final_window
    if final is not None:
        logger.info("final window [%r, %r]: %d segment(s), visibility %r, stationary phase %r",
                    final.t_start, final.t_end, len(final.segment_ids), final.visibility,
                    report.stationary_phase_difference)
    return manifest


def handle(args: argparse.Namespace) -> int:
    simulate(Path(args.scenario), Path(args.out), args.substeps, args.sample_rate)
    return EXIT_OK


def register(subparsers) -> None:
    parser = subparsers.add_parser("simulate", help="运行场景并写出 CSV 与清单")
    parser.add_argument("scenario", help="场景文件路径")
    parser.add_argument("--out", default=settings.default_out_dir, help="输出目录")
    parser.add_argument("--substeps", type=int, default=None, help="匀加速段子区间数")
    parser.add_argument("--sample-rate", type=float, default=None, dest="sample_rate",
                        help="每个最短拍频周期的采样点数")
    parser.set_defaults(handler=handle)
