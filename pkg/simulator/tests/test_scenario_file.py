"""
场景文件解析、规范化输出与扫描覆盖
"""
import math

import pytest

from app.models.wave import WaveFamily
from app.services.scenario_file import (
    emit,
    load_scenario,
    parse_scenario,
    read_scenario,
    to_scenario,
    with_override,
)
from app.utils.errors import InvalidInputError, ScenarioParseError

MINIMAL = """\
[model]
family = schrodinger   # 自然单位

[source]
v_g = 0.5
t_off = 10.0

[beamsplitter]
x0 = 3.0
segment = rest,inf,0.0,0.0

[detector]
position = 1.0

[run]
t_max = 30.0
x_min = -1.0
x_max = 4.0
"""

TWO_SEGMENTS = """\
[model]
family = schrodinger
[source]
v_g = 0.5
t_off = 10.0
[beamsplitter]
x0 = 3.0
segment = const_velocity,2.0,-1.0,0.0
segment = const_velocity,inf,0.5,0.0
[detector]
position = 1.0
[run]
t_max = 30.0
x_min = -1.0
x_max = 4.0
"""


@pytest.mark.golden
@pytest.mark.parametrize("name", ["static_mirror.scn", "overtake_schrodinger.scn", "overtake_klein_gordon.scn"])
def test_shipped_scenarios_are_canonical(scenario_dir, name):
    scenario, data = read_scenario(scenario_dir / name)
    assert emit(scenario) == data.decode("utf-8")


def test_defaults_fill_optional_keys():
    scenario = load_scenario(MINIMAL)
    assert scenario.model.family == WaveFamily.SCHRODINGER
    assert scenario.model.units.hbar == 1.0
    assert scenario.source.position == 0.0
    assert scenario.splitters[0].optics.r == pytest.approx(0.5 ** 0.5)
    assert scenario.run.substeps is None


def test_emit_is_stable():
    text = emit(load_scenario(MINIMAL))
    assert emit(load_scenario(text)) == text
    assert "\n\n[source]\n" in text
    assert "segment = rest,inf,0.0,0.0" in text


@pytest.mark.parametrize("text, line, token", [
    ("[bogus]\n", 1, "bogus"),
    ("family = schrodinger\n", 1, "family = schrodinger"),
    ("[model]\nfamily schrodinger\n", 2, "family schrodinger"),
    ("[model]\nfamily = schrodinger\ncolour = red\n", 3, "colour"),
    ("[model]\nfamily = schrodinger\nfamily = klein_gordon\n", 3, "family"),
    ("[model]\nfamily = dirac\n", 2, "dirac"),
    ("[model]\nfamily =\n", 2, "family"),
    ("[model]\nfamily = schrodinger\n[model]\n", 3, "model"),
    ("[detector]\nposition = one\n", 2, "one"),
    ("[beamsplitter]\nsegment = hover,1.0,0.0,0.0\n", 2, "hover"),
    ("[detector]\nposition = nan\n", 2, "nan"),
    ("[run]\nt_max = inf\n", 2, "inf"),
    ("[beamsplitter]\nsegment = rest,inf,-inf,0.0\n", 2, "-inf"),
    ("[beamsplitter]\nswitch = nan,0.5\n", 2, "nan"),
])
def test_parse_errors_report_line_and_token(text, line, token):
    with pytest.raises(ScenarioParseError) as info:
        parse_scenario(text)
    assert info.value.line == line
    assert info.value.token == token
    assert f"line {line}" in info.value.detail


def test_missing_section_is_reported():
    text = MINIMAL.replace("[detector]\nposition = 1.0\n", "")
    with pytest.raises(ScenarioParseError) as info:
        parse_scenario(text)
    assert info.value.token == "detector"
    assert info.value.reason == "missing required section"


def test_missing_required_key_is_reported():
    text = MINIMAL.replace("t_max = 30.0\n", "")
    with pytest.raises(ScenarioParseError) as info:
        parse_scenario(text)
    assert info.value.token == "t_max"


def test_velocity_discontinuity_cites_the_segment():
    with pytest.raises(ScenarioParseError) as info:
        load_scenario(TWO_SEGMENTS)
    assert info.value.line == 9
    assert info.value.token == "0.5"
    assert "segment 1" in info.value.reason


def test_override_top_level_key():
    file = with_override(parse_scenario(MINIMAL), "source.v_g", 0.25)
    assert file.section("source").get("v_g").value == "0.25"
    assert to_scenario(file).source.group_velocity == 0.25


def test_override_adds_missing_key():
    file = with_override(parse_scenario(MINIMAL), "run.substeps", 40)
    assert to_scenario(file).run.substeps == 40


def test_override_segment_field():
    file = with_override(parse_scenario(TWO_SEGMENTS), "beamsplitter.segment.1.velocity0", -1.0)
    scenario = to_scenario(file)
    assert scenario.splitters[0].trajectory.segments[1].velocity0 == -1.0


@pytest.mark.parametrize("key, value", [
    ("model.family", 1.0),
    ("source.colour", 1.0),
    ("beamsplitter.3.x0", 1.0),
    ("beamsplitter.segment.7.accel", 1.0),
    ("beamsplitter.segment.0.kind", 1.0),
    ("run.substeps", 2.5),
    ("source.v_g", math.nan),
    ("detector.position", math.inf),
    ("beamsplitter.segment.0.accel", -math.inf),
    ("nowhere", 1.0),
])
def test_invalid_overrides_raise(key, value):
    with pytest.raises(InvalidInputError):
        with_override(parse_scenario(MINIMAL), key, value)



def test_non_finite_numbers_are_rejected_with_reason():
    with pytest.raises(ScenarioParseError) as info:
        parse_scenario(MINIMAL.replace("position = 1.0", "position = NaN"))
    assert info.value.reason == "not a finite number"
    assert isinstance(info.value, InvalidInputError)


def test_unbounded_segment_duration_still_parses():
    file = with_override(parse_scenario(TWO_SEGMENTS), "beamsplitter.segment.1.duration", math.inf)
    assert file.section("beamsplitter").all("segment")[1].value.startswith("const_velocity,inf,")
