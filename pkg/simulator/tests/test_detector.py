"""
探测器：叠加、干涉窗口与推迟相位
"""
import math

import numpy as np
import pytest

from app.models.trajectory import SegmentKind
from app.models.wave import WaveFamily
from app.schemas.detector import InterferenceReport, InterferenceWindow, MovingReflection, PathLeg
from app.schemas.scattering import SplitterOptics
from app.schemas.tracer import WaveSegment
from app.schemas.trajectory import Trajectory, TrajectorySegment
from app.schemas.wave import PlaneWave, WaveModel
from app.services import detector as detector_service
from app.services.scattering import reflect_at_moving_bs
from app.services.wavemodel import plane_wave
from app.utils.errors import EXIT_RUNTIME, AnalysisError, InvalidInputError, UnreachablePathError

SCHRODINGER = WaveModel(family=WaveFamily.SCHRODINGER)


def _segment(sid: str, wave: PlaneWave, t_in: float, t_out: float, train_id: int = 0) -> WaveSegment:
    return WaveSegment(id=sid, train_id=train_id, wave=wave, t_in=t_in, t_out=t_out)


def _residue(a: float, b: float) -> float:
    return abs(math.remainder(a - b, 2.0 * math.pi))


# ================== 叠加 ==================

def test_opposite_phase_segments_cancel():
    a = _segment("s0", plane_wave(SCHRODINGER, -1.0, amplitude=0.5), 0.0, 10.0)
    b = _segment("s1", plane_wave(SCHRODINGER, -1.0, amplitude=0.5, phase0=math.pi), 0.0, 10.0, 1)
    trace = detector_service.superpose([a, b], 1.0, np.linspace(0.0, 9.0, 50))
    assert np.max(trace.pdf) < 1e-20


def test_superpose_only_counts_present_segments():
    a = _segment("s0", plane_wave(SCHRODINGER, -1.0, amplitude=0.5), 0.0, 5.0)
    trace = detector_service.superpose([a], 0.0, np.array([1.0, 5.0, 6.0]))
    assert trace.pdf.tolist() == pytest.approx([0.25, 0.0, 0.0])


@pytest.mark.parametrize("grid", [[0.0, 1.0, 1.0], [2.0, 1.0]])
def test_superpose_rejects_non_increasing_grid(grid):
    a = _segment("s0", plane_wave(SCHRODINGER, -1.0), 0.0, 5.0)
    with pytest.raises(InvalidInputError):
        detector_service.superpose([a], 0.0, grid)


def test_superpose_rejects_empty_grid():
    with pytest.raises(InvalidInputError):
        detector_service.superpose([], 0.0, [])


# ================== 窗口分析 ==================

def test_beat_frequency_of_two_chirped_reflections():
    fast = _segment("s0", plane_wave(SCHRODINGER, -2.2, amplitude=0.5), 0.0, 40.0)
    slow = _segment("s1", plane_wave(SCHRODINGER, -1.8, amplitude=0.7), 0.0, 40.0, 1)
    _, report = detector_service.detect([fast, slow], 1.0)
    assert len(report.windows) == 1
    window = report.windows[0]
    assert window.beat_frequency == pytest.approx(0.8, rel=0.01)
    assert window.flags == []
    assert window.visibility == pytest.approx((1.44 - 0.04) / (1.44 + 0.04), rel=0.01)
    assert report.beat_frequency == window.beat_frequency


def test_short_coexistence_is_flagged():
    fast = _segment("s0", plane_wave(SCHRODINGER, -2.2, amplitude=0.5), 0.0, 2.0)
    slow = _segment("s1", plane_wave(SCHRODINGER, -1.8, amplitude=0.7), 0.0, 2.0, 1)
    _, report = detector_service.detect([fast, slow], 1.0)
    assert detector_service.FLAG_LOW_CONFIDENCE in report.windows[0].flags


def test_windows_split_at_segment_edges():
    a = _segment("s0", plane_wave(SCHRODINGER, -1.0, amplitude=0.5), 0.0, 10.0)
    b = _segment("s1", plane_wave(SCHRODINGER, -1.0, amplitude=0.5), 4.0, 12.0, 1)
    _, report = detector_service.detect([a, b], 1.0)
    assert [(w.t_start, w.t_end, w.segment_ids) for w in report.windows] == [
        (0.0, 4.0, ["s0"]), (4.0, 10.0, ["s0", "s1"]), (10.0, 12.0, ["s1"]),
    ]
    # 同频同相：叠加后 |ψ|² 为常数
    assert report.windows[1].visibility == pytest.approx(0.0, abs=1e-12)
    assert report.windows[0].visibility == 0.0
    assert detector_service.overlap_duration(report) == pytest.approx(6.0)
    assert report.window_at(5.0) is report.windows[1]


def test_stationary_phase_difference_is_first_minus_second():
    a = _segment("s0", plane_wave(SCHRODINGER, -1.0, amplitude=0.3, phase0=2.5), 0.0, 10.0)
    b = _segment("s1", plane_wave(SCHRODINGER, -1.0, amplitude=0.6, phase0=0.5), 0.0, 10.0, 1)
    _, report = detector_service.detect([a, b], 0.0)
    assert report.stationary_phase_difference == pytest.approx(2.0, abs=1e-12)
    assert report.beat_frequency is None


@pytest.mark.parametrize("pdf, expected", [
    ([1.0, 1.0, 1.0], 0.0),
    ([0.2, 1.8, 1.0], 0.8),
    ([0.0, 4.0], 1.0),
    ([], 0.0),
    ([0.0, 0.0], 0.0),
])
def test_fringe_visibility(pdf, expected):
    assert detector_service.fringe_visibility(pdf) == pytest.approx(expected, abs=1e-12)


def test_window_visibility_uses_the_superposed_signal():
    # 两个同频段加一个异频段：对比度来自三者叠加的 |ψ|²，而非振幅公式
    a = _segment("s0", plane_wave(SCHRODINGER, -1.0, amplitude=0.5), 0.0, 30.0)
    b = _segment("s1", plane_wave(SCHRODINGER, -1.0, amplitude=0.3, phase0=1.0), 0.0, 30.0, 1)
    c = _segment("s2", plane_wave(SCHRODINGER, -1.4, amplitude=0.2), 0.0, 30.0, 2)
    _, report = detector_service.detect([a, b, c], 1.0)
    window = report.windows[0]
    dense = np.linspace(0.0, 30.0, 200001)
    psi = sum(s.wave.amplitude * np.exp(1j * (s.wave.k - s.wave.omega * dense + s.wave.phase0))
              for s in (a, b, c))
    pdf = np.abs(psi) ** 2
    expected = (pdf.max() - pdf.min()) / (pdf.max() + pdf.min())
    assert window.visibility == pytest.approx(expected, rel=5e-3)
    assert window.stationary_phase_difference is None


def test_beat_is_seeded_by_the_dominant_line():
    strong = _segment("s0", plane_wave(SCHRODINGER, -2.2, amplitude=0.6), 0.0, 40.0)
    partner = _segment("s1", plane_wave(SCHRODINGER, -1.8, amplitude=0.5), 0.0, 40.0, 1)
    faint = _segment("s2", plane_wave(SCHRODINGER, -0.6, amplitude=0.02), 0.0, 40.0, 2)
    _, report = detector_service.detect([strong, partner, faint], 1.0)
    assert report.windows[0].beat_frequency == pytest.approx(0.8, rel=0.01)


def test_dominant_line_sums_equal_difference_frequencies():
    waves = [plane_wave(SCHRODINGER, -k, amplitude=0.3) for k in (1.0, math.sqrt(3.0), 2.0)]
    segments = [_segment(f"s{i}", w, 0.0, 1.0, i) for i, w in enumerate(waves)]
    assert detector_service.dominant_line(segments[:1]) is None
    assert detector_service.dominant_line(segments[:2]) == pytest.approx(1.0)
    # ω = 0.5, 1.0, 1.5：差频 0.5 出现两次，强度相加
    waves = [plane_wave(SCHRODINGER, -math.sqrt(2.0 * w), amplitude=0.3) for w in (0.5, 1.0, 1.5)]
    segments = [_segment(f"s{i}", w, 0.0, 1.0, i) for i, w in enumerate(waves)]
    assert detector_service.dominant_line(segments) == pytest.approx(0.5)


def test_sub_ulp_segment_does_not_break_analysis():
    t = 63.13692307692334
    # 只存在一个 ulp 的波列段
    base = _segment("s0", plane_wave(SCHRODINGER, -0.2, amplitude=0.7), 60.0, 70.0)
    other = _segment("s1", plane_wave(SCHRODINGER, -1.8, amplitude=0.5), 62.0, t, 1)
    sliver = _segment("s2", plane_wave(SCHRODINGER, -2.2, amplitude=0.5), t, math.nextafter(t, math.inf), 2)
    _, report = detector_service.detect([base, other, sliver], 1.0)
    assert all(w.duration > 1e-12 * w.t_end for w in report.windows)
    assert report.windows[-1].segment_ids == ["s0"]


def test_report_beat_is_the_line_with_the_longest_total_duration():
    windows = [
        InterferenceWindow(t_start=0.0, t_end=1.0, segment_ids=["s0", "s1"], beat_frequency=0.3),
        InterferenceWindow(t_start=1.0, t_end=1.6, segment_ids=["s0", "s2"], beat_frequency=0.8),
        InterferenceWindow(t_start=1.6, t_end=1.7, segment_ids=["s0", "s2", "s3"], beat_frequency=2.0),
        InterferenceWindow(t_start=1.7, t_end=2.3, segment_ids=["s0", "s2"], beat_frequency=0.8),
        InterferenceWindow(t_start=2.3, t_end=3.0, segment_ids=["s0", "s4"], stationary_phase_difference=1.25),
        InterferenceWindow(t_start=3.0, t_end=4.0, segment_ids=["s4"]),
    ]
    report = InterferenceReport(windows=windows)
    assert report.beat_frequency == 0.8
    assert report.final_window is windows[-1]
    assert report.stationary_window is windows[4]
    assert report.stationary_phase_difference == 1.25
    assert report.visibility == 0.0


def test_detect_reports_analysis_failures_as_runtime_errors():
    a = _segment("s0", plane_wave(SCHRODINGER, -1.0), 0.0, 10.0)
    with pytest.raises(AnalysisError) as info:
        detector_service.detect([a], 1.0, sample_rate=1e12)
    assert info.value.exit_code == EXIT_RUNTIME


def test_detect_without_segments_returns_empty_report():
    trace, report = detector_service.detect([], 1.0)
    assert trace.times.size == 0
    assert report.windows == []
    assert report.final_window is None
    assert report.visibility == 0.0
    assert report.beat_frequency is None


def test_fit_beat_recovers_frequency():
    times = np.linspace(0.0, 30.0, 400)
    pdf = 0.8 + 0.3 * np.cos(1.3 * times + 0.4)
    omega, ok = detector_service.fit_beat(times, pdf, 1.28)
    assert ok
    assert omega == pytest.approx(1.3, rel=1e-6)


# ================== 推迟相位 ==================

def test_retarded_phase_single_em_leg():
    omega0 = 2.0
    path = [PathLeg(length=3.0, phase_speed=1.0)]
    assert detector_service.retarded_time(path, 10.0) == pytest.approx(7.0)
    assert detector_service.retarded_phase(path, omega0, 10.0) == pytest.approx(-7.0 * omega0)


def test_retarded_time_static_retro_reflection():
    path = [PathLeg(length=5.0, phase_speed=0.1), PathLeg(length=5.0, phase_speed=-0.1)]
    assert detector_service.retarded_time(path, 200.0) == pytest.approx(100.0)


@pytest.mark.parametrize("L", [0.5, 3.0, 12.25])
@pytest.mark.parametrize("omega0", [0.7, 4.0])
@pytest.mark.parametrize("t", [20.0, 31.5])
def test_static_path_phase_matches_crest_counting(L, omega0, t):
    speed = 1.0
    k = omega0 / speed
    phase = detector_service.retarded_phase([PathLeg(length=L, phase_speed=speed)], omega0, t)
    assert _residue(phase, k * L - omega0 * t) < 1e-9


@pytest.mark.parametrize("t", [9.92, 9.95])
def test_moving_mirror_phase_matches_reflected_wave(t):
    mirror = Trajectory(x0=10.0, t0=0.0, segments=[
        TrajectorySegment(kind=SegmentKind.CONST_VELOCITY, duration=math.inf, velocity0=-1.0),
    ])
    incident = plane_wave(SCHRODINGER, 0.2)
    reflected = reflect_at_moving_bs(SCHRODINGER, incident, -1.0, SplitterOptics.mirror(), at=(10.0, 0.0))
    path = [MovingReflection(
        trajectory=mirror, x_from=0.0, incident_speed=incident.omega / incident.k,
        x_to=0.0, reflected_speed=reflected.omega / reflected.k,
    )]
    phase = detector_service.retarded_phase(path, incident.omega, t)
    assert _residue(phase, reflected.phase_at(0.0, t)) < 1e-9


def test_unreachable_reflection_raises():
    mirror = Trajectory(x0=10.0, t0=0.0, segments=[
        TrajectorySegment(kind=SegmentKind.CONST_VELOCITY, duration=math.inf, velocity0=-1.0),
    ])
    path = [MovingReflection(trajectory=mirror, x_from=0.0, incident_speed=0.1,
                             x_to=0.0, reflected_speed=-1.1)]
    with pytest.raises(UnreachablePathError):
        detector_service.retarded_time(path, 12.0)
