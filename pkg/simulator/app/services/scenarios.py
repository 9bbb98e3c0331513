"""
场景构造、场景校验与闭式实验公式（快门、平板、光栅）
"""
import logging
import math
from typing import List, Optional, Tuple

from app.models.trajectory import SegmentKind
from app.models.wave import WaveFamily
from app.schemas.scattering import SplitterOptics
from app.schemas.scenario import (
    DetectorSpec,
    OpticsSwitch,
    RunSpec,
    Scenario,
    ShutterPair,
    SlabParams,
    SourceSpec,
    SplitterSpec,
)
from app.schemas.trajectory import Trajectory, TrajectorySegment
from app.schemas.wave import PlaneWave, Units, WaveModel
from app.services import trajectory as trajectory_service
from app.services.wavemodel import (
    dispersion_omega,
    group_velocity,
    plane_wave,
    wavevector_from_group_speed,
    wavevector_from_omega,
)
from app.utils.errors import (
    InvalidIndexError,
    InvalidInputError,
    NoTransitError,
    SuperluminalError,
    WaveCrestError,
)

logger = logging.getLogger(__name__)

# 采样波前的默认时间间隔：固定位置处每 2π 时间单位一个波前
FRONT_INTERVAL = 2.0 * math.pi


# ================== 波源 ==================

def carrier_wavevector(model: WaveModel, source: SourceSpec) -> float:
    """波源载波的波矢（k > 0）"""
    if source.group_velocity is not None:
        return wavevector_from_group_speed(model, source.group_velocity)
    return wavevector_from_omega(model, source.omega0)


def source_wave(scenario: Scenario) -> PlaneWave:
    """波源发射的平面波：振幅 1，在 x_S 处相位为 −ω₀t"""
    k0 = carrier_wavevector(scenario.model, scenario.source)
    return plane_wave(scenario.model, k0, amplitude=1.0, phase0=-k0 * scenario.source.position)


def crest_spacing_for(omega0: float, interval: float = FRONT_INTERVAL) -> float:
    """固定位置处每 interval 时间一个采样波前对应的周期数"""
    return omega0 * interval / (2.0 * math.pi)


# ================== 场景校验 ==================

def validate_scenario(scenario: Scenario) -> List[str]:
    """返回全部违规项（空列表表示通过）"""
    violations: List[str] = []
    model = scenario.model
    source = scenario.source
    run = scenario.run
    family = model.family

    if not math.isfinite(source.t_off):
        violations.append("source: emission window must be finite")
    if not run.t_max > source.t_on:
        violations.append("run: t_max must be later than source t_on")

    if family in (WaveFamily.EM_VACUUM, WaveFamily.ACOUSTIC) and source.group_velocity is not None:
        violations.append(f"source: {family.value} carrier must be given by omega0")
    try:
        k0 = carrier_wavevector(model, source)
        omega0 = dispersion_omega(model, k0)
        if k0 <= 0.0:
            violations.append("source: carrier wavevector must be positive")
        elif math.isfinite(source.t_off):
            cycles = (source.t_off - source.t_on) * omega0 / (2.0 * math.pi)
            if cycles < source.crest_spacing:
                violations.append("source: emission window holds no sampled crest")
    except WaveCrestError as exc:
        violations.append(f"source: {exc.detail}")

    limit = model.speed_limit
    ranges: List[Tuple[float, float, int]] = []
    for i, splitter in enumerate(scenario.splitters):
        traj = splitter.trajectory
        if traj.t0 > source.t_on:
            violations.append(f"beamsplitter {i}: trajectory starts after the source turns on")
        if traj.end_time < run.t_max:
            violations.append(f"beamsplitter {i}: trajectory ends before t_max")
        if limit is not None:
            for j, seg in enumerate(traj.segments):
                speed = max(abs(seg.velocity0), abs(seg.end_velocity))
                if speed >= limit:
                    violations.append(
                        f"beamsplitter {i} segment {j}: |velocity| {speed!r} "
                        f">= speed limit {limit!r}"
                    )
        lo, hi = trajectory_service.position_range(traj, run.t_max)
        ranges.append((lo, hi, i))
        if not lo > scenario.detector.position:
            violations.append(
                f"beamsplitter {i}: must stay above the detector (reaches {lo!r})"
            )
        if not hi < run.x_max:
            violations.append(f"beamsplitter {i}: leaves the spatial domain (reaches {hi!r})")

    ranges.sort()
    for (lo_a, hi_a, i), (lo_b, hi_b, j) in zip(ranges, ranges[1:]):
        if hi_a >= lo_b:
            violations.append(f"beamsplitters {i} and {j}: position ranges overlap")

    if not source.position < scenario.detector.position:
        violations.append("detector: must lie above the source")
    if not run.x_min < source.position:
        violations.append("run: x_min must lie below the source")
    return violations


# ================== 闭式公式 ==================

def shutter_overlap_window(p: ShutterPair) -> Tuple[float, float]:
    """(t2, 干涉持续时间)：τ = L/v_g，t2 = t1 + ατ，持续 τ(1 − α)"""
    if p.group_velocity == 0.0:
        raise NoTransitError("group velocity is zero; the envelope never crosses the shutters")
    tau = p.separation / abs(p.group_velocity)
    return p.t1 + p.alpha * tau, tau * (1.0 - p.alpha)


def em_shutter_overlap(t1: float, t2: float, L: float, c: float) -> bool:
    """电磁波：t2 − t1 < L/c 时才有重叠（边界情形记为无重叠）"""
    if L <= 0.0:
        raise InvalidInputError(f"shutter separation must be positive, got {L!r}")
    if c <= 0.0:
        raise InvalidInputError(f"c must be positive, got {c!r}")
    return t2 - t1 < L / c


def slab_transmission_shift(p: SlabParams) -> float:
    """Δν = mgL(1 − n)/(nħ)，单位随所给 ħ（约化 ħ 时为 rad/时间）"""
    if p.n <= 0.0:
        raise InvalidIndexError(f"index of refraction must be positive, got {p.n!r}")
    return p.mass * p.g * p.length * (1.0 - p.n) / (p.n * p.hbar)


def slab_direction(v_g: float, V: float) -> str:
    """透射波峰相对平板的运动方向：v_g/2 > V 远离，< V 靠近"""
    half = 0.5 * v_g
    if half > V:
        return "away"
    if half < V:
        return "toward"
    return "comoving"


def grating_phase_difference(k: float, L: float) -> float:
    """ΔΦ = 2kL"""
    return 2.0 * k * L


# ================== 场景构造 ==================

def _default_model() -> WaveModel:
    return WaveModel(family=WaveFamily.SCHRODINGER)


def _envelope_speed(model: WaveModel, v_g: Optional[float]) -> float:
    """几何用的包络速度：EM/声波固定为 c / c_s"""
    if model.family == WaveFamily.EM_VACUUM:
        return model.units.c
    if model.family == WaveFamily.ACOUSTIC:
        return model.units.sound_speed
    if v_g is None or v_g <= 0.0:
        raise InvalidInputError(f"group velocity must be positive, got {v_g!r}")
    return v_g


def _source_spec(
    model: WaveModel,
    v_g: Optional[float],
    omega0: Optional[float],
    t_on: float,
    t_off: float,
    position: float = 0.0,
) -> SourceSpec:
    if model.family in (WaveFamily.EM_VACUUM, WaveFamily.ACOUSTIC):
        omega = 1.0 if omega0 is None else omega0
        return SourceSpec(position=position, omega0=omega, t_on=t_on, t_off=t_off,
                          crest_spacing=crest_spacing_for(omega))
    if omega0 is not None:
        k0 = wavevector_from_omega(model, omega0)
        return SourceSpec(position=position, omega0=omega0, t_on=t_on, t_off=t_off,
                          crest_spacing=crest_spacing_for(dispersion_omega(model, k0)))
    k0 = wavevector_from_group_speed(model, v_g)
    return SourceSpec(position=position, group_velocity=v_g, t_on=t_on, t_off=t_off,
                      crest_spacing=crest_spacing_for(dispersion_omega(model, k0)))


def overtake_trajectory(
    start: float,
    t_start: float,
    coast_speed: float,
    displacement: float,
    accel: float,
) -> Trajectory:
    """静止 → 加速到 −V → 匀速 → 减速到 0 → 静止，净位移 −L"""
    if displacement == 0.0:
        return Trajectory(x0=start, t0=0.0, segments=[
            TrajectorySegment(kind=SegmentKind.REST, duration=math.inf),
        ])
    t_acc = coast_speed / accel
    t_coast = displacement / coast_speed - t_acc
    segments = [
        TrajectorySegment(kind=SegmentKind.REST, duration=t_start),
        TrajectorySegment(kind=SegmentKind.CONST_ACCEL, duration=t_acc,
                          velocity0=0.0, accel=-accel),
    ]
    if t_coast > 0.0:
        segments.append(TrajectorySegment(kind=SegmentKind.CONST_VELOCITY, duration=t_coast,
                                          velocity0=-coast_speed))
    segments += [
        TrajectorySegment(kind=SegmentKind.CONST_ACCEL, duration=t_acc,
                          velocity0=-coast_speed, accel=accel),
        TrajectorySegment(kind=SegmentKind.REST, duration=math.inf),
    ]
    return Trajectory(x0=start, t0=0.0, segments=segments)


def build_fig1_scenario(
    v_g: Optional[float],
    coast_speed: float,
    displacement: float,
    accel: Optional[float] = None,
    model: Optional[WaveModel] = None,
    optics: Optional[SplitterOptics] = None,
    omega0: Optional[float] = None,
    detector_gap: float = 1.0,
) -> Scenario:
    """
    运动分束器干涉实验

    几何：波源 x_S = 0，探测器 x_D = 1，分束器从 B = L + 2 出发向下运动，
    最终停在 x_D + detector_gap 处。默认加速度 a = 20V²/L，加/减速各占行程时间不到 5%。
    开始运动的时刻使静止期反射波的前沿在分束器停下时恰好位于停止点与探测器正中，
    因此匀速段的情形 I/II 反射先于该前沿到达探测器。
    """
    model = model or _default_model()
    optics = optics or SplitterOptics.balanced()
    if coast_speed <= 0.0:
        raise InvalidInputError(f"coast speed must be positive, got {coast_speed!r}")
    if displacement < 0.0:
        raise InvalidInputError(f"displacement must be non-negative, got {displacement!r}")
    limit = model.speed_limit
    if limit is not None and coast_speed >= limit:
        raise SuperluminalError(f"coast speed {coast_speed!r} must be below {limit!r}")
    speed = _envelope_speed(model, v_g)
    if model.family == WaveFamily.SCHRODINGER and coast_speed <= 0.5 * speed:
        logger.warning(
            "coast speed %r does not exceed the crest speed %r; no overtaking will occur",
            coast_speed, 0.5 * speed,
        )

    x_source = 0.0
    x_detector = x_source + 1.0
    x_rest = x_detector + detector_gap
    start = x_rest + displacement

    if displacement == 0.0:
        t_motion = 0.0
        t_rest = 2.0 * (start - x_source) / speed
    else:
        a = accel if accel is not None else 20.0 * coast_speed ** 2 / displacement
        if a <= 0.0:
            raise InvalidInputError(f"acceleration must be positive, got {a!r}")
        if coast_speed ** 2 / a > displacement:
            raise InvalidInputError("acceleration too small to reach the coast speed within L")
        t_motion = 2.0 * (coast_speed / a) + (displacement / coast_speed - coast_speed / a)
        t_rest = (2.0 * start - x_source - 0.5 * (x_rest + x_detector)) / speed
        # 分束器开始运动前，静止反射波必须已经形成
        t_rest = max(t_rest, 1.5 * (start - x_source) / speed + t_motion)
        accel = a
    t_start = t_rest - t_motion
    # 静止期反射波的尾边在 t_start 离开起点，两臂在探测器处一直共存到它到达；
    # 运动期的啁啾波列都比它快且出发不晚，此前已全部通过探测器
    t_max = max(t_start + (start - x_detector) / speed, t_rest + 2.0 * (x_rest - x_detector) / speed)

    trajectory = overtake_trajectory(start, t_start, coast_speed, displacement, accel or 1.0)
    scenario = Scenario(
        model=model,
        source=_source_spec(model, v_g, omega0, t_on=0.0, t_off=t_max, position=x_source),
        splitters=[SplitterSpec(optics=optics, trajectory=trajectory)],
        detector=DetectorSpec(position=x_detector),
        run=RunSpec(t_max=t_max, x_min=x_source - 1.0, x_max=start + 1.0),
    )
    logger.debug("overtake scenario: start=%r t_start=%r t_rest=%r t_max=%r",
                 start, t_start, t_rest, t_max)
    return scenario


def _shutter_scenario(
    model: WaveModel,
    t1: float,
    t2: float,
    separation: float,
    v_g: Optional[float],
    omega0: Optional[float] = None,
) -> Scenario:
    """静止的下快门（透明 → 分束）与上快门（反射镜 → 打开）"""
    speed = _envelope_speed(model, v_g)
    x_source, x_detector, x_lower = 0.0, 1.0, 2.0
    x_upper = x_lower + separation
    tau = separation / speed
    # 波源提前开启，使上快门反射波在 t1 之前已经铺满两快门之间
    t_on = t1 - (x_upper + separation - x_source) / speed - tau
    t_max = max(t1, t2) + tau + (x_lower - x_detector) / speed + tau

    def rest_at(x: float) -> Trajectory:
        return Trajectory(x0=x, t0=t_on, segments=[
            TrajectorySegment(kind=SegmentKind.REST, duration=math.inf),
        ])

    upper = SplitterSpec(
        optics=SplitterOptics.mirror(),
        trajectory=rest_at(x_upper),
        switches=[OpticsSwitch(time=t1, optics=SplitterOptics.transparent())],
    )
    lower = SplitterSpec(
        optics=SplitterOptics.transparent(),
        trajectory=rest_at(x_lower),
        switches=[OpticsSwitch(time=t2, optics=SplitterOptics.balanced())],
    )
    return Scenario(
        model=model,
        source=_source_spec(model, v_g, omega0, t_on=t_on, t_off=t_max, position=x_source),
        splitters=[lower, upper],
        detector=DetectorSpec(position=x_detector),
        run=RunSpec(t_max=t_max, x_min=x_source - 1.0, x_max=x_upper + 1.0),
    )


def build_shutter_scenario(p: ShutterPair, model: Optional[WaveModel] = None) -> Scenario:
    """快门对场景；预测的重叠窗口由 shutter_overlap_window 给出"""
    model = model or _default_model()
    t2, _ = shutter_overlap_window(p)
    v_g = None if model.family in (WaveFamily.EM_VACUUM, WaveFamily.ACOUSTIC) else p.group_velocity
    return _shutter_scenario(model, p.t1, t2, p.separation, v_g)


def build_em_shutter_scenario(
    t1: float,
    t2: float,
    separation: float,
    c: float = 1.0,
    omega0: float = 1.0,
) -> Scenario:
    """电磁快门对：t2 − t1 可以超过渡越时间 L/c"""
    model = WaveModel(family=WaveFamily.EM_VACUUM, units=Units(c=c))
    return _shutter_scenario(model, t1, t2, separation, None, omega0=omega0)


def source_group_velocity(scenario: Scenario) -> float:
    """波源载波的群速度"""
    return group_velocity(scenario.model, carrier_wavevector(scenario.model, scenario.source))
