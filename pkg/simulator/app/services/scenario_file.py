"""
场景文件：解析、建模、规范化输出与扫描覆盖

格式为按行的 `[section]` 头与 `key = value` 对，`#` 之后为注释：

    [units]        hbar m c sound_speed
    [model]        family
    [source]       position v_g|omega0 t_on t_off crest_spacing
    [beamsplitter] reflectivity phase x0 t0，
                   segment = kind,duration,velocity0,accel（按顺序，可重复），
                   switch = time,r（可重复）
    [detector]     position
    [run]          t_max x_min x_max substeps sample_rate

[beamsplitter] 可以出现多次，其余节至多一次。
"""
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from pydantic import ValidationError

from app.models.trajectory import SegmentKind
from app.models.wave import WaveFamily
from app.schemas.scattering import SplitterOptics
from app.schemas.scenario import (
    DetectorSpec,
    OpticsSwitch,
    RunSpec,
    Scenario,
    SourceSpec,
    SplitterSpec,
)
from app.schemas.scenario_file import FileEntry, FileSection, ScenarioFile
from app.schemas.trajectory import CONTINUITY_TOLERANCE, Trajectory, TrajectorySegment
from app.schemas.wave import Units, WaveModel
from app.utils.errors import InvalidInputError, ScenarioParseError
from app.utils.numeric import fmt_float

logger = logging.getLogger(__name__)

SECTION_KEYS: Dict[str, Tuple[str, ...]] = {
    "units": ("hbar", "m", "c", "sound_speed"),
    "model": ("family",),
    "source": ("position", "v_g", "omega0", "t_on", "t_off", "crest_spacing"),
    "beamsplitter": ("reflectivity", "phase", "x0", "t0", "segment", "switch"),
    "detector": ("position",),
    "run": ("t_max", "x_min", "x_max", "substeps", "sample_rate"),
}
SECTION_ORDER = tuple(SECTION_KEYS)
REPEATABLE_SECTIONS = {"beamsplitter"}
REPEATABLE_KEYS = {"segment", "switch"}
REQUIRED_SECTIONS = ("model", "source", "beamsplitter", "detector", "run")
REQUIRED_KEYS: Dict[str, Tuple[str, ...]] = {
    "model": ("family",),
    "source": ("t_off",),
    "beamsplitter": ("x0", "segment"),
    "detector": ("position",),
    "run": ("t_max", "x_min", "x_max"),
}
SEGMENT_FIELDS = ("kind", "duration", "velocity0", "accel")
SWITCH_FIELDS = ("time", "r")
INTEGER_KEYS = {"substeps"}


# ================== 解析 ==================

def _number(token: str, line: int, allow_infinite: bool = False) -> float:
    """数值词元；nan 一律拒绝，inf 只在允许处（段时长）接受"""
    try:
        value = float(token)
    except ValueError:
        raise ScenarioParseError(line, token, "not a number")
    if math.isnan(value) or (math.isinf(value) and not allow_infinite):
        raise ScenarioParseError(line, token, "not a finite number")
    return value


def _integer(token: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ScenarioParseError(line, token, "not an integer")


def _check_value(section: str, key: str, value: str, line: int) -> None:
    """逐行检查值的词法"""
    if key == "family":
        if value not in {f.value for f in WaveFamily}:
            raise ScenarioParseError(line, value, "unknown wave family")
    elif key == "segment":
        fields = [f.strip() for f in value.split(",")]
        if len(fields) != len(SEGMENT_FIELDS):
            raise ScenarioParseError(line, value, "segment needs kind,duration,velocity0,accel")
        if fields[0] not in {k.value for k in SegmentKind}:
            raise ScenarioParseError(line, fields[0], "unknown segment kind")
        _number(fields[1], line, allow_infinite=True)
        for token in fields[2:]:
            _number(token, line)
    elif key == "switch":
        fields = [f.strip() for f in value.split(",")]
        if len(fields) != len(SWITCH_FIELDS):
            raise ScenarioParseError(line, value, "switch needs time,r")
        for token in fields:
            _number(token, line)
    elif key in INTEGER_KEYS:
        _integer(value, line)
    else:
        _number(value, line)


def parse_scenario(text: str) -> ScenarioFile:
    """按行解析并做结构校验；错误带行号与出错词元"""
    sections: List[FileSection] = []
    current: Optional[dict] = None
    seen_sections = set()

    def flush():
        if current is not None:
            sections.append(FileSection(**current))

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioParseError(number, line, "malformed section header")
            name = line[1:-1].strip()
            if name not in SECTION_KEYS:
                raise ScenarioParseError(number, name, "unknown section")
            if name in seen_sections and name not in REPEATABLE_SECTIONS:
                raise ScenarioParseError(number, name, "duplicate section")
            seen_sections.add(name)
            flush()
            current = {"name": name, "line": number, "entries": []}
            continue
        if current is None:
            raise ScenarioParseError(number, line, "entry outside of any section")
        if "=" not in line:
            raise ScenarioParseError(number, line, "expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SECTION_KEYS[current["name"]]:
            raise ScenarioParseError(number, key, f"unknown key in [{current['name']}]")
        if key not in REPEATABLE_KEYS and any(e.key == key for e in current["entries"]):
            raise ScenarioParseError(number, key, "duplicate key")
        if not value:
            raise ScenarioParseError(number, key, "missing value")
        _check_value(current["name"], key, value, number)
        current["entries"].append(FileEntry(key=key, value=value, line=number))
    flush()

    last_line = max(1, len(text.splitlines()))
    for name in REQUIRED_SECTIONS:
        if name not in seen_sections:
            raise ScenarioParseError(last_line, name, "missing required section")
    for section in sections:
        for key in REQUIRED_KEYS.get(section.name, ()):
            if section.get(key) is None:
                raise ScenarioParseError(section.line, key, f"missing required key in [{section.name}]")
    return ScenarioFile(sections=sections)


# ================== 建模 ==================

def _float_of(section: Optional[FileSection], key: str, default: Optional[float] = None) -> Optional[float]:
    if section is None:
        return default
    entry = section.get(key)
    return default if entry is None else float(entry.value)


def _wrap(section: FileSection, build):
    """把 pydantic 校验错误定位到节头"""
    try:
        return build()
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ScenarioParseError(section.line, section.name, first.get("msg", str(exc)))


def _segments(section: FileSection) -> List[TrajectorySegment]:
    segments: List[TrajectorySegment] = []
    for i, entry in enumerate(section.all("segment")):
        kind, duration, velocity0, accel = (f.strip() for f in entry.value.split(","))
        try:
            segment = TrajectorySegment(
                kind=SegmentKind(kind), duration=float(duration),
                velocity0=float(velocity0), accel=float(accel),
            )
        except ValidationError as exc:
            raise ScenarioParseError(entry.line, entry.value,
                                     f"segment {i}: {exc.errors()[0].get('msg', exc)}")
        if segments:
            previous = segments[-1]
            if not previous.is_bounded:
                raise ScenarioParseError(entry.line, entry.value,
                                         f"segment {i} follows an unbounded segment")
            v_end = previous.end_velocity
            if abs(v_end - segment.velocity0) > CONTINUITY_TOLERANCE * max(1.0, abs(v_end)):
                raise ScenarioParseError(
                    entry.line, velocity0,
                    f"velocity discontinuity at segment {i}: previous segment ends at {v_end!r}",
                )
        segments.append(segment)
    return segments


def _splitter(section: FileSection) -> SplitterSpec:
    r = _float_of(section, "reflectivity", math.sqrt(0.5))
    chi = _float_of(section, "phase", 0.0)
    segments = _segments(section)

    def build() -> SplitterSpec:
        switches = []
        for entry in section.all("switch"):
            time, r_new = (float(f) for f in entry.value.split(","))
            switches.append(OpticsSwitch(time=time, optics=SplitterOptics.from_reflectivity(r_new, chi)))
        return SplitterSpec(
            optics=SplitterOptics.from_reflectivity(r, chi),
            trajectory=Trajectory(x0=_float_of(section, "x0"), t0=_float_of(section, "t0", 0.0),
                                  segments=segments),
            switches=switches,
        )

    return _wrap(section, build)


def to_scenario(file: ScenarioFile) -> Scenario:
    """结构化文件 → 场景值"""
    units_section = file.section("units")
    model_section = file.section("model")
    source_section = file.section("source")
    detector_section = file.section("detector")
    run_section = file.section("run")

    def build_units() -> Units:
        return Units(
            hbar=_float_of(units_section, "hbar", 1.0),
            mass=_float_of(units_section, "m", 1.0),
            c=_float_of(units_section, "c", 1.0),
            sound_speed=_float_of(units_section, "sound_speed"),
        )

    units = _wrap(units_section, build_units) if units_section else Units()
    model = _wrap(model_section, lambda: WaveModel(
        family=WaveFamily(model_section.get("family").value), units=units))
    source = _wrap(source_section, lambda: SourceSpec(
        position=_float_of(source_section, "position", 0.0),
        group_velocity=_float_of(source_section, "v_g"),
        omega0=_float_of(source_section, "omega0"),
        t_on=_float_of(source_section, "t_on", 0.0),
        t_off=_float_of(source_section, "t_off"),
        crest_spacing=_float_of(source_section, "crest_spacing", 1.0),
    ))
    splitters = [_splitter(s) for s in file.sections_named("beamsplitter")]
    detector = _wrap(detector_section, lambda: DetectorSpec(
        position=_float_of(detector_section, "position")))

    def build_run() -> RunSpec:
        substeps = run_section.get("substeps")
        return RunSpec(
            t_max=_float_of(run_section, "t_max"),
            x_min=_float_of(run_section, "x_min"),
            x_max=_float_of(run_section, "x_max"),
            substeps=int(substeps.value) if substeps else None,
            sample_rate=_float_of(run_section, "sample_rate"),
        )

    run = _wrap(run_section, build_run)
    return Scenario(model=model, source=source, splitters=splitters, detector=detector, run=run)


def load_scenario(text: str) -> Scenario:
    return to_scenario(parse_scenario(text))


def read_scenario(path) -> Tuple[Scenario, bytes]:
    """读取场景文件，同时返回原始字节（用于清单摘要）"""
    data = Path(path).read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidInputError(f"{path}: not UTF-8 text ({exc.reason})")
    scenario = load_scenario(text)
    logger.info("loaded scenario %s (%s, %d beamsplitter(s))",
                path, scenario.model.family.value, len(scenario.splitters))
    return scenario, data


# ================== 规范化输出 ==================

def emit(scenario: Scenario) -> str:
    """规范形式：固定节顺序与键顺序，数值用最短往返表示"""
    lines: List[str] = []

    def section(name: str, pairs: List[Tuple[str, str]]) -> None:
        if lines:
            lines.append("")
        lines.append(f"[{name}]")
        lines.extend(f"{key} = {value}" for key, value in pairs)

    units = scenario.model.units
    unit_pairs = [("hbar", fmt_float(units.hbar)), ("m", fmt_float(units.mass)), ("c", fmt_float(units.c))]
    if units.sound_speed is not None:
        unit_pairs.append(("sound_speed", fmt_float(units.sound_speed)))
    section("units", unit_pairs)
    section("model", [("family", scenario.model.family.value)])

    src = scenario.source
    carrier = ("v_g", fmt_float(src.group_velocity)) if src.group_velocity is not None \
        else ("omega0", fmt_float(src.omega0))
    section("source", [
        ("position", fmt_float(src.position)),
        carrier,
        ("t_on", fmt_float(src.t_on)),
        ("t_off", fmt_float(src.t_off)),
        ("crest_spacing", fmt_float(src.crest_spacing)),
    ])

    for splitter in scenario.splitters:
        traj = splitter.trajectory
        pairs = [
            ("reflectivity", fmt_float(splitter.optics.r)),
            ("phase", fmt_float(splitter.optics.interface_phase)),
            ("x0", fmt_float(traj.x0)),
            ("t0", fmt_float(traj.t0)),
        ]
        for seg in traj.segments:
            fields = [seg.kind.value, fmt_float(seg.duration), fmt_float(seg.velocity0), fmt_float(seg.accel)]
            pairs.append(("segment", ",".join(fields)))
        for switch in splitter.switches:
            pairs.append(("switch", f"{fmt_float(switch.time)},{fmt_float(switch.optics.r)}"))
        section("beamsplitter", pairs)

    section("detector", [("position", fmt_float(scenario.detector.position))])
    run = scenario.run
    run_pairs = [("t_max", fmt_float(run.t_max)), ("x_min", fmt_float(run.x_min)),
                 ("x_max", fmt_float(run.x_max))]
    if run.substeps is not None:
        run_pairs.append(("substeps", str(run.substeps)))
    if run.sample_rate is not None:
        run_pairs.append(("sample_rate", fmt_float(run.sample_rate)))
    section("run", run_pairs)
    return "\n".join(lines) + "\n"


# ================== 扫描覆盖 ==================

def _replace_entry(section: FileSection, entry: FileEntry, value: str) -> FileSection:
    entries = [e.model_copy(update={"value": value}) if e is entry else e for e in section.entries]
    return section.model_copy(update={"entries": entries})


def _set_key(section: FileSection, key: str, value: str) -> FileSection:
    entry = section.get(key)
    if entry is None:
        added = FileEntry(key=key, value=value, line=section.line)
        return section.model_copy(update={"entries": section.entries + [added]})
    return _replace_entry(section, entry, value)


def with_override(file: ScenarioFile, key: str, value: float) -> ScenarioFile:
    """
    按点分键覆盖一个数值：
        section.key
        beamsplitter.<j>.key
        beamsplitter[.<j>].segment.<i>.<duration|velocity0|accel>
        beamsplitter[.<j>].switch.<i>.<time|r>
    """
    parts = key.split(".")
    if len(parts) < 2 or parts[0] not in SECTION_KEYS:
        raise InvalidInputError(f"unknown sweep key {key!r}")
    name, rest = parts[0], parts[1:]
    index = 0
    if name in REPEATABLE_SECTIONS and rest[0].isdigit():
        index, rest = int(rest[0]), rest[1:]
    candidates = file.sections_named(name)
    if index >= len(candidates) or not rest:
        raise InvalidInputError(f"sweep key {key!r} does not name an existing entry")
    section = candidates[index]
    if math.isnan(value) or (math.isinf(value) and rest[-1] != "duration"):
        raise InvalidInputError(f"sweep value for {key!r} must be finite, got {value!r}")
    token = fmt_float(value)

    if rest[0] in ("segment", "switch"):
        fields = SEGMENT_FIELDS if rest[0] == "segment" else SWITCH_FIELDS
        if len(rest) != 3 or not rest[1].isdigit() or rest[2] not in fields:
            raise InvalidInputError(f"sweep key {key!r} must end in .{rest[0]}.<i>.<field>")
        entries = section.all(rest[0])
        position = int(rest[1])
        if position >= len(entries):
            raise InvalidInputError(f"sweep key {key!r}: no {rest[0]} {position}")
        field = fields.index(rest[2])
        if rest[2] == "kind":
            raise InvalidInputError(f"sweep key {key!r} is not numeric")
        values = [f.strip() for f in entries[position].value.split(",")]
        values[field] = token
        updated = _replace_entry(section, entries[position], ",".join(values))
    else:
        if len(rest) != 1 or rest[0] not in SECTION_KEYS[name] or rest[0] in REPEATABLE_KEYS:
            raise InvalidInputError(f"unknown sweep key {key!r}")
        if rest[0] == "family":
            raise InvalidInputError(f"sweep key {key!r} is not numeric")
        if rest[0] in INTEGER_KEYS:
            if value != int(value):
                raise InvalidInputError(f"sweep key {key!r} takes integers, got {value!r}")
            token = str(int(value))
        updated = _set_key(section, rest[0], token)

    sections = [updated if s is section else s for s in file.sections]
    return file.model_copy(update={"sections": sections})
