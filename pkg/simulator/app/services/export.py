"""
结果导出：逐字节确定的 CSV 与运行清单

所有数值用最短往返表示；列表字段用 ';' 连接；文件先写临时文件再替换。
"""
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from app.config import settings
from app.schemas.detector import DetectorTrace, InterferenceReport
from app.schemas.manifest import RunManifest
from app.schemas.tracer import Event, SimulationResult, WaveSegment
from app.services.tracer import WorldlinePoint
from app.utils.files import atomic_write_text, csv_text, sha256_bytes
from app.utils.numeric import fmt_float, fmt_optional

logger = logging.getLogger(__name__)

EVENTS_HEADER = ("id", "time", "position", "kind", "incident_id", "product_ids", "amplitude_abs")
WORLDLINES_HEADER = ("object_id", "object_kind", "t", "x")
SEGMENTS_HEADER = ("segment_id", "omega", "k", "amp_re", "amp_im", "phase0", "t_in", "t_out", "provenance")
TRACE_HEADER = ("t", "amp_re", "amp_im", "pdf")
REPORT_HEADER = ("window_start", "window_end", "beat_frequency", "visibility",
                 "stationary_phase_diff", "flags")
SWEEP_HEADER = ("value", "beat_frequency", "visibility", "stationary_phase_diff")

EVENTS_FILE = "events.csv"
WORLDLINES_FILE = "worldlines.csv"
SEGMENTS_FILE = "segments.csv"
TRACE_FILE = "trace.csv"
REPORT_FILE = "report.csv"
MANIFEST_FILE = "manifest.json"
SWEEP_FILE = "sweep.csv"


def events_csv(events: Sequence[Event]) -> str:
    rows = (
        (str(e.id), fmt_float(e.time), fmt_float(e.position), e.kind.value, e.incident_id,
         ";".join(e.product_ids), fmt_float(e.amplitude_abs))
        for e in events
    )
    return csv_text(EVENTS_HEADER, rows)


def worldlines_csv(points: Sequence[WorldlinePoint]) -> str:
    rows = ((p.object_id, p.object_kind, fmt_float(p.t), fmt_float(p.x)) for p in points)
    return csv_text(WORLDLINES_HEADER, rows)


def segments_csv(segments: Sequence[WaveSegment]) -> str:
    rows = (
        (s.id, fmt_float(s.wave.omega), fmt_float(s.wave.k), fmt_float(s.wave.amplitude.real),
         fmt_float(s.wave.amplitude.imag), fmt_float(s.wave.phase0), fmt_float(s.t_in),
         fmt_float(s.t_out), ";".join(str(i) for i in s.provenance))
        for s in segments
    )
    return csv_text(SEGMENTS_HEADER, rows)


def trace_csv(trace: DetectorTrace) -> str:
    rows = (
        (fmt_float(t), fmt_float(a.real), fmt_float(a.imag), fmt_float(p))
        for t, a, p in zip(trace.times.tolist(), trace.amplitude.tolist(), trace.pdf.tolist())
    )
    return csv_text(TRACE_HEADER, rows)


def report_csv(report: InterferenceReport) -> str:
    rows = (
        (fmt_float(w.t_start), fmt_float(w.t_end), fmt_optional(w.beat_frequency),
         fmt_float(w.visibility), fmt_optional(w.stationary_phase_difference), ";".join(w.flags))
        for w in report.windows
    )
    return csv_text(REPORT_HEADER, rows)


def sweep_csv(rows: Sequence[Dict[str, Optional[float]]]) -> str:
    return csv_text(SWEEP_HEADER, (
        (fmt_float(r["value"]), fmt_optional(r["beat_frequency"]),
         fmt_optional(r["visibility"]), fmt_optional(r["stationary_phase_diff"]))
        for r in rows
    ))


def write_run(
    out_dir: Path,
    result: SimulationResult,
    worldlines: Sequence[WorldlinePoint],
    trace: DetectorTrace,
    report: InterferenceReport,
    scenario_bytes: bytes,
) -> RunManifest:
    """写出一次运行的全部文件"""
    out_dir = Path(out_dir)
    outputs = {
        EVENTS_FILE: events_csv(result.events),
        WORLDLINES_FILE: worldlines_csv(worldlines),
        SEGMENTS_FILE: segments_csv(result.segments),
        TRACE_FILE: trace_csv(trace),
        REPORT_FILE: report_csv(report),
    }
    for name, text in outputs.items():
        atomic_write_text(out_dir / name, text)
    manifest = RunManifest(
        scenario_digest=sha256_bytes(scenario_bytes),
        tool_version=settings.version,
        files=sorted(list(outputs) + [MANIFEST_FILE]),
    )
    write_manifest(out_dir, manifest)
    logger.info("wrote %d files to %s", len(manifest.files), out_dir)
    return manifest


def write_manifest(out_dir: Path, manifest: RunManifest) -> None:
    text = json.dumps(manifest.model_dump(), indent=2, sort_keys=True) + "\n"
    atomic_write_text(Path(out_dir) / MANIFEST_FILE, text)


def read_manifest(out_dir: Path) -> RunManifest:
    return RunManifest.model_validate_json((Path(out_dir) / MANIFEST_FILE).read_text(encoding="utf-8"))


def output_files(out_dir: Path) -> List[str]:
    return sorted(p.name for p in Path(out_dir).iterdir() if p.is_file())
