"""
分束器轨迹：分段积分与直线世界线求交

每段内相对位移 g(τ) = C + Bτ + Aτ² 的根用数值稳定的二次公式求解，
判别式在 ε_disc 相对容差内视为相切（单根）。
"""
import bisect
import logging
import math
from typing import List, Optional, Sequence, Tuple

from app.config import settings
from app.models.trajectory import SegmentKind
from app.schemas.trajectory import CrestLine, Piece, SegmentSpan, Trajectory
from app.utils.errors import OutOfRangeError

logger = logging.getLogger(__name__)


def _time_tolerance(traj: Trajectory) -> float:
    return settings.boundary_tolerance * traj.horizon


def segment_at(traj: Trajectory, t: float) -> SegmentSpan:
    """t 所在分段；恰在分段边界时归属前一段"""
    tol = _time_tolerance(traj)
    if t < traj.t0 - tol or t > traj.end_time + tol:
        raise OutOfRangeError(
            f"t = {t!r} outside trajectory domain [{traj.t0!r}, {traj.end_time!r}]"
        )
    for span in traj.spans:
        if t <= span.t_end + tol:
            return span
    return traj.spans[-1]


def state_at(traj: Trajectory, t: float) -> Tuple[float, float]:
    """(位置, 速度)"""
    span = segment_at(traj, t)
    tau = min(max(t - span.t_start, 0.0), span.segment.duration)
    seg = span.segment
    return span.x_start + seg.displacement(tau), seg.velocity0 + seg.accel * tau


def position_range(traj: Trajectory, t_end: Optional[float] = None) -> Tuple[float, float]:
    """[t0, t_end] 内的位置范围（含匀加速段内的转折点）"""
    stop = traj.end_time if t_end is None else min(t_end, traj.end_time)
    xs = [traj.x0]
    for span in traj.spans:
        if span.t_start > stop:
            break
        seg = span.segment
        tau_end = min(span.t_end, stop) - span.t_start
        if not math.isfinite(tau_end):
            if seg.velocity0 != 0.0:
                xs.append(math.copysign(math.inf, seg.velocity0))
            continue
        xs.append(span.x_start + seg.displacement(tau_end))
        if seg.accel != 0.0:
            tau_turn = -seg.velocity0 / seg.accel
            if 0.0 < tau_turn < tau_end:
                xs.append(span.x_start + seg.displacement(tau_turn))
    return min(xs), max(xs)


def _segment_roots(a_coef: float, b_coef: float, c_coef: float) -> List[float]:
    """C + Bτ + Aτ² = 0 的实根（数值稳定形式）"""
    if a_coef == 0.0:
        if b_coef == 0.0:
            return []
        return [-c_coef / b_coef]
    disc = b_coef * b_coef - 4.0 * a_coef * c_coef
    scale = b_coef * b_coef + 4.0 * abs(a_coef * c_coef)
    if scale == 0.0:
        return [0.0]
    eps = settings.tangency_tolerance
    if disc < -eps * scale:
        return []
    if disc <= eps * scale:
        return [-b_coef / (2.0 * a_coef)]
    root = math.sqrt(disc)
    q = -0.5 * (b_coef + math.copysign(root, b_coef))
    return sorted((q / a_coef, c_coef / q))


def crossings(
    traj: Trajectory,
    line: CrestLine,
    t_lower: Optional[float] = None,
    t_upper: Optional[float] = None,
    exclude_start: bool = False,
) -> List[float]:
    """直线与轨迹在 [max(t_start, t0, t_lower), t_upper] 内的全部交点时间（升序）"""
    tol = _time_tolerance(traj)
    t_lo = max(line.t_start, traj.t0)
    if t_lower is not None:
        t_lo = max(t_lo, t_lower)
    t_hi = traj.end_time if t_upper is None else min(t_upper, traj.end_time)
    if t_hi < t_lo:
        return []

    found: List[float] = []
    for span in traj.spans:
        if span.t_end < t_lo - tol:
            continue
        if span.t_start > t_hi + tol:
            break
        seg = span.segment
        lo = max(t_lo, span.t_start)
        hi = min(t_hi, span.t_end)
        offset = line.position(span.t_start) - span.x_start
        b_coef = line.speed - seg.velocity0
        a_coef = -0.5 * seg.accel
        if a_coef == 0.0 and b_coef == 0.0:
            # 直线与该段重合：只在段起点记一次接触
            if offset == 0.0 and not exclude_start:
                found.append(lo)
            continue
        for tau in _segment_roots(a_coef, b_coef, offset):
            t = span.t_start + tau
            if t < lo - tol or t > hi + tol:
                continue
            found.append(min(max(t, lo), hi))

    result: List[float] = []
    for t in sorted(found):
        if exclude_start and t <= t_lo + tol:
            continue
        if result and t - result[-1] <= tol:
            continue
        result.append(t)
    return result


def first_crossing(
    traj: Trajectory,
    line: CrestLine,
    t_upper: Optional[float] = None,
    exclude_start: bool = False,
) -> Optional[float]:
    """直线首次与轨迹相交的时间；不相交返回 None"""
    roots = crossings(traj, line, t_upper=t_upper, exclude_start=exclude_start)
    return roots[0] if roots else None


def substep_count(
    traj: Trajectory,
    span: SegmentSpan,
    substeps: Optional[int] = None,
    fraction: Optional[float] = None,
) -> int:
    """匀加速段的子区间数：每个子区间速度变化不超过参考速度的 fraction"""
    seg = span.segment
    if seg.kind != SegmentKind.CONST_ACCEL:
        return 1
    if substeps is not None:
        return max(1, int(substeps))
    fraction = settings.velocity_step_fraction if fraction is None else fraction
    reference = traj.max_speed()
    dv = abs(seg.accel) * seg.duration
    if reference == 0.0 or dv == 0.0:
        return 1
    # 浮点误差不应多出一个子区间
    return max(1, math.ceil(dv / (fraction * reference) - 1e-9))


def pieces(
    traj: Trajectory,
    substeps: Optional[int] = None,
    fraction: Optional[float] = None,
) -> List[Piece]:
    """把轨迹切成运动学片段（匀加速段按中点速度离散）"""
    out: List[Piece] = []
    for span in traj.spans:
        seg = span.segment
        n = substep_count(traj, span, substeps, fraction)
        if n == 1 and seg.kind != SegmentKind.CONST_ACCEL:
            out.append(Piece(
                index=len(out), segment_index=span.index,
                t_start=span.t_start, t_end=span.t_end,
                velocity=seg.velocity0, t_ref=span.t_start,
            ))
            continue
        for i in range(n):
            t_a = span.t_start + seg.duration * i / n
            t_b = span.t_end if i == n - 1 else span.t_start + seg.duration * (i + 1) / n
            mid = 0.5 * (t_a + t_b)
            out.append(Piece(
                index=len(out), segment_index=span.index,
                t_start=t_a, t_end=t_b,
                velocity=seg.velocity0 + seg.accel * (mid - span.t_start),
                t_ref=mid,
            ))
    logger.debug("trajectory split into %d pieces", len(out))
    return out


def piece_at(piece_list: Sequence[Piece], t: float) -> Piece:
    """t 时刻生效的片段（片段左闭右开，最后一段右闭）"""
    starts = [p.t_start for p in piece_list]
    idx = bisect.bisect_right(starts, t) - 1
    if idx < 0:
        raise OutOfRangeError(f"t = {t!r} precedes the first piece")
    return piece_list[idx]


def breakpoints(piece_list: Sequence[Piece], t_max: float) -> List[float]:
    """片段起点（不含第一段起点），截止 t_max"""
    return [p.t_start for p in piece_list[1:] if p.t_start <= t_max]


def sample(traj: Trajectory, t_a: float, t_b: float, dt: float) -> List[Tuple[float, float]]:
    """按 dt 采样世界线，分段边界总是包含在内"""
    times = set()
    if dt > 0 and math.isfinite(t_b):
        n = int(math.floor((t_b - t_a) / dt))
        times.update(t_a + i * dt for i in range(n + 1))
    times.add(t_a)
    if math.isfinite(t_b):
        times.add(t_b)
    for span in traj.spans:
        if t_a < span.t_start < t_b:
            times.add(span.t_start)
    return [(t, state_at(traj, t)[0]) for t in sorted(times)]
