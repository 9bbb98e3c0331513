"""
事件驱动追踪：静态反射镜与超越实验的运动分束器
"""
import math

import numpy as np
import pytest

from app.config import settings
from app.models.event import EdgeKind, EventKind
from app.models.train import TrainRole
from app.schemas.detector import MovingReflection, PathLeg
from app.services import detector as detector_service
from app.services import tracer as tracer_service
from app.services.scenario_file import read_scenario
from app.services.scenarios import build_fig1_scenario
from app.services.wavemodel import crest_speed, group_velocity
from app.utils.errors import EventExplosionError, ScenarioValidationError
from tests.conftest import SCENARIO_DIR

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def static_mirror_result():
    scenario, _ = read_scenario(SCENARIO_DIR / "static_mirror.scn")
    return tracer_service.run(scenario)


def _final_report(result):
    _, report = detector_service.detect(result.segments, result.scenario.detector.position)
    return report


# ================== 静态反射镜 ==================

def test_static_mirror_segment(static_mirror_result):
    segments = static_mirror_result.segments
    assert len(segments) == 1
    seg = segments[0]
    assert seg.t_in == pytest.approx(10.0)
    assert seg.t_out == pytest.approx(20.0)
    assert abs(seg.wave.amplitude) == pytest.approx(1.0)
    assert seg.wave.k == pytest.approx(-0.5)


def test_static_mirror_detector_arrivals(static_mirror_result):
    arrivals = static_mirror_result.events_of(EventKind.DETECTOR_ARRIVAL)
    assert [e.time for e in arrivals] == pytest.approx([10.0, 20.0])


def test_static_mirror_events_are_time_ordered(static_mirror_result):
    events = static_mirror_result.events
    assert [e.id for e in events] == list(range(len(events)))
    assert all(a.time <= b.time for a, b in zip(events, events[1:]))
    assert events[0].kind == EventKind.SOURCE_ON
    assert static_mirror_result.overtake_count == 0


def test_static_mirror_crests_pair_reflect_and_transmit(static_mirror_result):
    reflect = static_mirror_result.events_of(EventKind.REFLECT_HEAD_ON)
    transmit = static_mirror_result.events_of(EventKind.TRANSMIT_HEAD_ON)
    assert reflect
    assert [e.time for e in reflect] == [e.time for e in transmit]
    assert all(e.position == pytest.approx(3.0) for e in reflect)


def test_invalid_scenario_is_rejected():
    scenario = build_fig1_scenario(0.2, 1.0, 5.0)
    broken = scenario.model_copy(update={
        "detector": scenario.detector.model_copy(update={"position": 5.0}),
    })
    with pytest.raises(ScenarioValidationError) as info:
        tracer_service.run(broken)
    assert any("above the detector" in v for v in info.value.violations)


# ================== 超越实验：薛定谔 ==================

def _train(result, train_id):
    return result.trains[train_id]


def test_schrodinger_overtakes(overtake_schrodinger_result):
    result = overtake_schrodinger_result
    reflect = result.events_of(EventKind.REFLECT_OVERTAKE)
    transmit = result.events_of(EventKind.TRANSMIT_OVERTAKE)
    assert len(transmit) > 0
    assert len(reflect) == len(transmit)
    assert result.overtake_count == len(reflect) + len(transmit)


def test_schrodinger_case_frequencies_present(overtake_schrodinger_result):
    omegas = [t.wave.omega for t in overtake_schrodinger_result.trains]
    assert any(w == pytest.approx(2.42, rel=1e-12) for w in omegas)
    assert any(w == pytest.approx(1.62, rel=1e-12) for w in omegas)


def test_transmitted_trains_keep_parent_wave(overtake_schrodinger_result):
    result = overtake_schrodinger_result
    transmitted = [t for t in result.trains if t.role == TrainRole.TRANSMIT]
    assert transmitted
    for train in transmitted:
        parent = _train(result, train.parent_id)
        assert (train.wave.k, train.wave.omega) == (parent.wave.k, parent.wave.omega)
    source = result.trains[0]
    assert any(t.parent_id == source.id for t in transmitted)


def test_schrodinger_beat_frequency(overtake_schrodinger_result):
    report = _final_report(overtake_schrodinger_result)
    assert report.beat_frequency == pytest.approx(0.8, rel=0.01)


def test_schrodinger_final_window(overtake_schrodinger_result):
    result = overtake_schrodinger_result
    report = _final_report(result)
    final = report.final_window
    assert final.t_end == pytest.approx(87.25)
    assert len(final.segment_ids) == 2
    # R_a 两次透射（振幅 r·t²）与静止后的直接反射（振幅 r）：同频，|ψ|² 不随时间变化
    assert final.visibility == pytest.approx(0.0, abs=1e-9)
    assert final.stationary_phase_difference == pytest.approx(2.0, abs=1e-9)
    assert report.stationary_window is final


def test_beat_window_ends_with_rest_edge(overtake_schrodinger_result):
    result = overtake_schrodinger_result
    x_d = result.scenario.detector.position
    trajectory = result.scenario.splitters[0].trajectory
    t_rest = trajectory.spans[-1].t_start
    launched = [
        edge for edge in result.edges
        if edge.kind == EdgeKind.BACK and edge.speed < 0
        and any(p.element is None and p.t_start == t_rest for p in edge.pieces)
    ]
    assert len(launched) == 1
    piece = [p for p in launched[0].pieces if p.element is None and p.t_start == t_rest][0]
    expected = piece.t0 + (x_d - piece.x0) / piece.speed

    report = _final_report(result)
    ends = [w.t_end for w in report.windows if w.beat_frequency is not None]
    assert min(abs(t - expected) for t in ends) < 1e-9


def test_detector_segments_are_left_moving(overtake_schrodinger_result):
    result = overtake_schrodinger_result
    model = result.scenario.model
    for seg in result.segments:
        assert group_velocity(model, seg.wave.k) < 0
        assert seg.t_out - seg.t_in > 1e-12 * max(1.0, seg.t_out)
    assert [s.id for s in result.segments] == [f"s{i}" for i in range(len(result.segments))]


def test_shipped_overtake_scenario_analyzes_end_to_end(scenario_dir):
    scenario, _ = read_scenario(scenario_dir / "overtake_schrodinger.scn")
    report = _final_report(tracer_service.run(scenario))
    assert report.beat_frequency == pytest.approx(0.8, rel=0.01)
    assert report.stationary_phase_difference == pytest.approx(2.0, abs=1e-6)


@pytest.mark.parametrize("v_g, displacement", [
    (0.2, 4.0), (0.2, 5.5), (0.22, 1.7),
    # 子步中点速度与波峰速度只差几个 ulp
    (0.25, 6.1), (0.35, 7.0),
    # 曾产生不足一个 ulp 的探测器波列段
    (0.1, 3.0), (0.15, 4.2), (0.4, 3.3), (0.12, 5.5), (0.18, 8.0),
])
def test_final_phase_tracks_displacement(v_g, displacement):
    result = tracer_service.run(build_fig1_scenario(v_g, 1.0, displacement))
    report = _final_report(result)
    expected = math.fmod(2.0 * v_g * displacement, 2.0 * math.pi)
    assert report.stationary_phase_difference == pytest.approx(expected, abs=1e-6)


# ================== 超越实验：KG 与电磁波 ==================

def test_klein_gordon_null_result(overtake_klein_gordon_result):
    result = overtake_klein_gordon_result
    assert result.overtake_count == 0
    report = _final_report(result)
    assert len(report.final_window.segment_ids) == 1
    assert report.visibility < 1e-12


def test_em_null_result(overtake_em_result):
    result = overtake_em_result
    assert result.overtake_count == 0
    report = _final_report(result)
    assert len(report.final_window.segment_ids) == 1
    assert report.visibility < 1e-12


def test_kg_scenario_file_runs(scenario_dir):
    scenario, _ = read_scenario(scenario_dir / "overtake_klein_gordon.scn")
    assert tracer_service.run(scenario).overtake_count == 0


# ================== 世界线数据集 ==================

def test_worldlines_cover_every_object(static_mirror_result):
    points = tracer_service.export_worldlines(static_mirror_result)
    ids = {p.object_id for p in points}
    assert {"src", "det", "b0"} <= ids
    assert {e.id for e in static_mirror_result.edges} <= ids
    kinds = [p.object_kind for p in points]
    assert kinds.index("source") < kinds.index("detector") < kinds.index("beamsplitter")
    edge_points = [p for p in points if p.object_kind == "edge"]
    assert all(-1.0 - 1e-9 <= p.x <= 4.0 + 1e-9 for p in edge_points)


# ================== 剪枝与事件上限 ==================

@pytest.mark.parametrize("floor, kept", [(0.6, 2), (0.8, 0)])
def test_pruned_weight_closes_the_balance(monkeypatch, floor, kept):
    monkeypatch.setattr(settings, "amplitude_floor", floor)
    result = tracer_service.run(build_fig1_scenario(0.2, 1.0, 0.0))
    products = [t for t in result.trains if t.role != TrainRole.SOURCE]
    assert len(products) == kept
    retained = sum(abs(t.wave.amplitude) ** 2 for t in products)
    assert retained + result.discarded_weight == pytest.approx(result.source_weight, rel=1e-12)


def test_amplitude_floor_prunes_overtake_products(monkeypatch):
    monkeypatch.setattr(settings, "amplitude_floor", 0.4)
    result = tracer_service.run(build_fig1_scenario(0.2, 1.0, 5.0))
    assert result.discarded_weight > 0.0
    products = [t for t in result.trains if t.role != TrainRole.SOURCE]
    assert products
    for train in products:
        parent = _train(result, train.parent_id)
        assert abs(train.wave.amplitude) == pytest.approx(abs(parent.wave.amplitude) * math.sqrt(0.5), rel=1e-12)
        assert abs(train.wave.amplitude) >= 0.4


def test_event_limit_raises(monkeypatch):
    monkeypatch.setattr(settings, "max_events", 5)
    scenario, _ = read_scenario(SCENARIO_DIR / "static_mirror.scn")
    with pytest.raises(EventExplosionError):
        tracer_service.run(scenario)


# ================== 推迟相位与追踪结果 ==================

def _total_phase(seg, x: float, t: float) -> float:
    return seg.wave.phase_at(x, t) + float(np.angle(seg.wave.amplitude))


def _residue(a: float, b: float) -> float:
    return abs(math.remainder(a - b, 2.0 * math.pi))


@pytest.mark.parametrize("t", [12.5, 17.0])
def test_static_mirror_phase_matches_retarded_phase(static_mirror_result, t):
    seg = static_mirror_result.segments[0]
    path = [PathLeg(length=3.0, phase_speed=0.25), PathLeg(length=2.0, phase_speed=-0.25)]
    expected = detector_service.retarded_phase(path, 0.125, t)
    assert _residue(_total_phase(seg, 1.0, t), expected) < 1e-9


def test_head_on_reflection_phase_matches_retarded_phase(overtake_schrodinger_result):
    result = overtake_schrodinger_result
    model = result.scenario.model
    source = result.trains[0].wave
    x_d = result.scenario.detector.position
    seg = next(s for s in result.segments if s.wave.omega == pytest.approx(2.42, rel=1e-12))
    t = 0.5 * (seg.t_in + seg.t_out)
    path = [MovingReflection(
        trajectory=result.scenario.splitters[0].trajectory,
        x_from=result.scenario.source.position, incident_speed=crest_speed(model, source),
        x_to=x_d, reflected_speed=crest_speed(model, seg.wave),
    )]
    expected = detector_service.retarded_phase(path, source.omega, t)
    assert _residue(_total_phase(seg, x_d, t), expected) < 1e-8


# ================== 位移扫描 ==================

def _stationary_sample(v_g: float, displacement: float):
    result = tracer_service.run(build_fig1_scenario(v_g, 1.0, displacement))
    x_d = result.scenario.detector.position
    _, report = detector_service.detect(result.segments, x_d)
    window = report.stationary_window
    active = [s for s in result.segments if s.id in window.segment_ids]
    mid = 0.5 * (window.t_start + window.t_end)
    pdf = detector_service.superpose(active, x_d, np.array([mid])).pdf[0]
    return window.stationary_phase_difference, pdf


def test_displacement_sweep_traces_one_fringe():
    v_g = 0.8
    displacements = np.linspace(2.0, 2.0 + math.pi / v_g, 5)
    phases, pdfs = zip(*(_stationary_sample(v_g, float(L)) for L in displacements))
    for phase, L in zip(phases, displacements):
        assert _residue(phase, 2.0 * v_g * L) < 1e-6

    basis = np.column_stack([np.ones_like(displacements), np.cos(2.0 * v_g * displacements),
                             np.sin(2.0 * v_g * displacements)])
    coeffs, *_ = np.linalg.lstsq(basis, np.array(pdfs), rcond=None)
    assert np.max(np.abs(basis @ coeffs - np.array(pdfs))) < 1e-6
    # 两臂振幅 r 与 r·t²：平均 0.625，条纹幅度 0.5
    assert coeffs[0] == pytest.approx(0.625, rel=1e-9)
    assert math.hypot(coeffs[1], coeffs[2]) == pytest.approx(0.5, rel=1e-9)


# ================== 情形 I/II 频率网格 ==================

@pytest.mark.parametrize("V", [0.5, 0.75, 1.0, 1.25, 1.5])
@pytest.mark.parametrize("v_g", [0.1, 0.15, 0.2, 0.25, 0.3])
def test_case_frequencies_across_speed_grid(V, v_g):
    result = tracer_service.run(build_fig1_scenario(v_g, V, 5.0), substeps=2)
    waves = [t.wave for t in result.trains]
    for speed in (2.0 * V + v_g, 2.0 * V - v_g):
        assert any(
            w.omega == pytest.approx(0.5 * speed ** 2, rel=1e-12) and abs(w.k) == pytest.approx(speed, rel=1e-12)
            for w in waves
        )
