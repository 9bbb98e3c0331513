"""
探测器：波列段叠加、干涉窗口分析与推迟相位
"""
import logging
import math
import warnings
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from app.config import settings
from app.schemas.detector import (
    DetectorTrace,
    InterferenceReport,
    InterferenceWindow,
    MovingReflection,
    PathItem,
    PathLeg,
)
from app.schemas.tracer import WaveSegment
from app.services import trajectory as trajectory_service
from app.utils.errors import AnalysisError, InvalidInputError, UnreachablePathError
from app.utils.numeric import time_slack, wrap_phase

logger = logging.getLogger(__name__)

SAME_FREQUENCY_TOLERANCE = 1e-9

FLAG_LOW_CONFIDENCE = "low_confidence"
FLAG_FIT_FAILED = "fit_failed"


# ================== 叠加 ==================

def superpose(segments: Sequence[WaveSegment], x_d: float, t_grid) -> DetectorTrace:
    """Σ a_j·exp(i(k_j x_D − ω_j t + φ_j))，只计入 t 时刻在场的波列段"""
    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise InvalidInputError("time grid must be a nonempty 1-D sequence")
    if np.any(np.diff(times) <= 0):
        raise InvalidInputError("time grid must be strictly increasing")

    amplitude = np.zeros(times.shape, dtype=complex)
    for seg in segments:
        mask = (times >= seg.t_in) & (times < seg.t_out)
        if not mask.any():
            continue
        wave = seg.wave
        phase = wave.k * x_d - wave.omega * times[mask] + wave.phase0
        amplitude[mask] += wave.amplitude * np.exp(1j * phase)
    pdf = amplitude.real ** 2 + amplitude.imag ** 2
    return DetectorTrace(position=x_d, times=times, amplitude=amplitude, pdf=pdf,
                         segments=list(segments))


def _overlapping_pairs(segments: Sequence[WaveSegment]) -> List[Tuple[WaveSegment, WaveSegment]]:
    return [(a, b) for a, b in combinations(segments, 2)
            if min(a.t_out, b.t_out) > max(a.t_in, b.t_in)]


def default_grid(
    segments: Sequence[WaveSegment],
    samples_per_period: Optional[float] = None,
) -> np.ndarray:
    """覆盖全部波列段的均匀网格：最短拍频周期内 samples_per_period 个点"""
    spp = samples_per_period or settings.samples_per_period
    if not segments:
        return np.zeros(0)
    t_a = min(s.t_in for s in segments)
    t_b = max(s.t_out for s in segments)
    span = t_b - t_a
    if not span > 0:
        return np.array([t_a])
    beats = [abs(a.wave.omega - b.wave.omega) for a, b in _overlapping_pairs(segments)]
    beats = [w for w in beats if w > 0]
    step = 2.0 * math.pi / max(beats) / spp if beats else span / spp
    count = int(math.ceil(span / step)) + 1
    if count > settings.max_events:
        raise InvalidInputError(
            f"sample grid of {count} points exceeds the event cap; lower the sample rate"
        )
    return np.unique(np.linspace(t_a, t_b, count))


# ================== 窗口分析 ==================

def _same_frequency(a: float, b: float) -> bool:
    return abs(a - b) <= SAME_FREQUENCY_TOLERANCE * max(abs(a), abs(b), 1.0)


def _cuts(segments: Sequence[WaveSegment]) -> List[float]:
    """窗口切点；与前一切点相距不超过时间容差的切点被并入前者"""
    raw = sorted({s.t_in for s in segments} | {s.t_out for s in segments if math.isfinite(s.t_out)})
    cuts: List[float] = []
    for t in raw:
        if cuts and t - cuts[-1] <= time_slack(t, settings.time_tolerance):
            continue
        cuts.append(t)
    return cuts


def _windows(segments: Sequence[WaveSegment]) -> List[Tuple[float, float, List[WaveSegment]]]:
    """参与集合恒定的最大区间"""
    cuts = _cuts(segments)
    out: List[Tuple[float, float, List[WaveSegment]]] = []
    for a, b in zip(cuts, cuts[1:]):
        mid = 0.5 * (a + b)
        active = [s for s in segments if s.active(mid)]
        if not active:
            continue
        ids = [s.id for s in active]
        if out and out[-1][1] == a and [s.id for s in out[-1][2]] == ids:
            out[-1] = (out[-1][0], b, active)
        else:
            out.append((a, b, active))
    return out


def _window_grid(t_a: float, t_b: float, active: Sequence[WaveSegment]) -> np.ndarray:
    """窗口内的采样点：最短拍周期内 samples_per_period 个，至少 16 个，严格递增"""
    top = max((abs(a.wave.omega - b.wave.omega) for a, b in combinations(active, 2)), default=0.0)
    count = 16
    if top > 0.0:
        count = max(count, int(math.ceil((t_b - t_a) * top / (2.0 * math.pi) * settings.samples_per_period)))
    count = min(count, settings.max_events)
    return np.unique(np.linspace(t_a, t_b, count, endpoint=False))


def _window_pdf(active: Sequence[WaveSegment], x_d: float, times: np.ndarray) -> np.ndarray:
    """窗口内全部在场波列段的叠加 |ψ|²"""
    amplitude = np.zeros(times.shape, dtype=complex)
    for seg in active:
        wave = seg.wave
        amplitude += wave.amplitude * np.exp(1j * (wave.k * x_d - wave.omega * times + wave.phase0))
    return amplitude.real ** 2 + amplitude.imag ** 2


def fringe_visibility(pdf) -> float:
    """(max − min)/(max + min)；空序列或全零为 0"""
    samples = np.asarray(pdf, dtype=float)
    if samples.size == 0:
        return 0.0
    high, low = float(samples.max()), float(samples.min())
    if not high + low > 0.0:
        return 0.0
    return min(1.0, max(0.0, (high - low) / (high + low)))


def _stationary_phase(active: Sequence[WaveSegment], x_d: float) -> float:
    """两个最强同频波列段的相位差（按段 id 顺序：前者减后者）"""
    strongest = sorted(active, key=lambda s: -abs(s.wave.amplitude))[:2]
    first, second = sorted(strongest, key=lambda s: active.index(s))

    def phase(seg: WaveSegment) -> float:
        return seg.wave.k * x_d + seg.wave.phase0 + float(np.angle(seg.wave.amplitude))

    return wrap_phase(phase(first) - phase(second))


def dominant_line(active: Sequence[WaveSegment]) -> Optional[float]:
    """
    窗口离散谱中最强的差频

    |Σ a_j e^{-iω_j t}|² 的交叉项给出差频 |ω_i − ω_j| 处强度 2|a_i a_j| 的谱线，
    相同差频的谱线强度相加。全部同频时返回 None。
    """
    lines: List[List[float]] = []
    for a, b in combinations(active, 2):
        if _same_frequency(a.wave.omega, b.wave.omega):
            continue
        delta = abs(a.wave.omega - b.wave.omega)
        weight = 2.0 * abs(a.wave.amplitude) * abs(b.wave.amplitude)
        for line in lines:
            if _same_frequency(line[0], delta):
                line[1] += weight
                break
        else:
            lines.append([delta, weight])
    if not lines:
        return None
    return max(lines, key=lambda line: line[1])[0]


def _beat_model(t, level, depth, omega, phi):
    return level + depth * np.cos(omega * t + phi)


def fit_beat(times: np.ndarray, pdf: np.ndarray, seed: float) -> Tuple[float, bool]:
    """
    拟合 pdf ≈ A + B·cos(Ωt + φ)

    先固定 Ω = seed 做线性最小二乘得到 A、B、φ 初值，再用 curve_fit 整体细化。
    返回 (Ω, 是否成功)。
    """
    if times.size < 4:
        return seed, False
    tau = times - times[0]
    design = np.column_stack([np.ones_like(tau), np.cos(seed * tau), np.sin(seed * tau)])
    (level, c_coef, s_coef), *_ = np.linalg.lstsq(design, pdf, rcond=None)
    p0 = (level, math.hypot(c_coef, s_coef), seed, math.atan2(-s_coef, c_coef))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", optimize.OptimizeWarning)
            params, _ = optimize.curve_fit(_beat_model, tau, pdf, p0=p0, maxfev=5000)
    except (RuntimeError, ValueError) as exc:
        logger.warning("beat fit did not converge: %s", exc)
        return seed, False
    omega = abs(float(params[2]))
    if not math.isfinite(omega) or omega == 0.0:
        return seed, False
    return omega, True


def analyze(trace: DetectorTrace) -> InterferenceReport:
    """把探测器信号切成干涉窗口，逐窗在窗口内叠加信号上求对比度、拍频与相位差"""
    if trace.times.size == 0 and not trace.segments:
        raise InvalidInputError("cannot analyze an empty trace")
    windows: List[InterferenceWindow] = []
    for t_a, t_b, active in _windows(trace.segments):
        flags: List[str] = []
        beat = None
        phase_diff = None
        visibility = 0.0
        if len(active) > 1:
            times = _window_grid(t_a, t_b, active)
            pdf = _window_pdf(active, trace.position, times)
            visibility = fringe_visibility(pdf)
            seed = dominant_line(active)
            if seed is None:
                phase_diff = _stationary_phase(active, trace.position)
            elif (t_b - t_a) * seed < 2.0 * math.pi:
                # 不足一个拍周期：取谱线本身
                beat = seed
                flags.append(FLAG_LOW_CONFIDENCE)
            else:
                beat, ok = fit_beat(times, pdf, seed)
                if not ok:
                    flags.append(FLAG_FIT_FAILED)
        windows.append(InterferenceWindow(
            t_start=t_a, t_end=t_b, segment_ids=[s.id for s in active], beat_frequency=beat,
            visibility=visibility, stationary_phase_difference=phase_diff, flags=flags,
        ))
    low = [w for w in windows if FLAG_LOW_CONFIDENCE in w.flags]
    if low:
        logger.info("%d beat window(s) shorter than one beat period", len(low))
    return InterferenceReport(windows=windows)


def overlap_duration(report: InterferenceReport) -> float:
    """至少两个波列段同时在场的总时长"""
    return sum(w.duration for w in report.windows if len(w.segment_ids) >= 2)


def detect(segments: Sequence[WaveSegment], x_d: float,
           sample_rate: Optional[float] = None) -> Tuple[DetectorTrace, InterferenceReport]:
    """
    默认网格上叠加并分析；没有波列段到达时返回空信号与空报告

    运行产物上的网格或叠加失败属于运行期错误，以 AnalysisError 抛出。
    """
    if not segments:
        empty = DetectorTrace(position=x_d, times=np.zeros(0),
                              amplitude=np.zeros(0, dtype=complex), pdf=np.zeros(0))
        return empty, InterferenceReport()
    try:
        trace = superpose(segments, x_d, default_grid(segments, sample_rate))
        return trace, analyze(trace)
    except InvalidInputError as exc:
        raise AnalysisError(f"detector analysis failed: {exc.detail}") from exc


# ================== 推迟相位 ==================

def _reflection_time(item: MovingReflection, t_arrive: float) -> float:
    """反射时刻 t_r：X(t_r) + v_r(t_arrive − t_r) = x_to"""
    traj = item.trajectory

    def residual(t: float) -> float:
        return trajectory_service.state_at(traj, t)[0] + item.reflected_speed * (t_arrive - t) - item.x_to

    t_lo = traj.t0
    t_hi = min(t_arrive, traj.end_time)
    if not t_hi > t_lo:
        raise UnreachablePathError(f"arrival at t = {t_arrive!r} precedes the mirror worldline")
    f_lo, f_hi = residual(t_lo), residual(t_hi)
    if f_lo == 0.0:
        return t_lo
    if f_hi == 0.0:
        return t_hi
    if (f_lo > 0) == (f_hi > 0):
        raise UnreachablePathError(
            f"no reflection event reaches x = {item.x_to!r} at t = {t_arrive!r}"
        )
    tol = settings.boundary_tolerance * traj.horizon
    return optimize.bisect(residual, t_lo, t_hi, xtol=tol, maxiter=500)


def retarded_time(path: Sequence[PathItem], t: float) -> float:
    """沿路径倒推波峰离开输入端的时刻"""
    t_cur = t
    for item in reversed(list(path)):
        if isinstance(item, PathLeg):
            t_cur -= item.length / abs(item.phase_speed)
            continue
        t_r = _reflection_time(item, t_cur)
        x_r = trajectory_service.state_at(item.trajectory, t_r)[0]
        t_emit = t_r - (x_r - item.x_from) / item.incident_speed
        if t_emit > t_r:
            raise UnreachablePathError(
                f"crest moving at {item.incident_speed!r} cannot reach the mirror from x = {item.x_from!r}"
            )
        t_cur = t_emit
    return t_cur


def retarded_phase(path: Sequence[PathItem], omega0: float, t: float) -> float:
    """−ω₀·t_ret"""
    return -omega0 * retarded_time(path, t)
