"""
轨迹相关的 Pydantic 模型
"""
import math
from functools import cached_property
from typing import List, Optional, Tuple
from pydantic import BaseModel, Field, field_validator, model_validator

from app.models.trajectory import SegmentKind

# 相邻分段速度连续性的容差
CONTINUITY_TOLERANCE = 1e-9


class TrajectorySegment(BaseModel):
    """轨迹分段"""
    kind: SegmentKind
    duration: float = Field(..., gt=0, description="时长，仅最后一段可为 inf")
    velocity0: float = Field(0.0, description="段起点速度")
    accel: float = Field(0.0, description="加速度，仅匀加速段非零")

    class Config:
        frozen = True

    @field_validator("velocity0", "accel")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("segment velocity/acceleration must be finite")
        return value

    @model_validator(mode="after")
    def _kind_consistency(self) -> "TrajectorySegment":
        if self.kind == SegmentKind.REST and (self.velocity0 != 0.0 or self.accel != 0.0):
            raise ValueError("rest segment requires velocity0 = 0 and accel = 0")
        if self.kind == SegmentKind.CONST_VELOCITY and self.accel != 0.0:
            raise ValueError("const_velocity segment requires accel = 0")
        if self.kind == SegmentKind.CONST_ACCEL and not math.isfinite(self.duration):
            raise ValueError("const_accel segment must have a finite duration")
        return self

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.duration)

    @property
    def end_velocity(self) -> float:
        if not self.is_bounded:
            return self.velocity0
        return self.velocity0 + self.accel * self.duration

    def displacement(self, tau: float) -> float:
        """段内位移（tau 为段内时间）"""
        return self.velocity0 * tau + 0.5 * self.accel * tau * tau


class SegmentSpan(BaseModel):
    """分段在实验室时间轴上的位置（派生量）"""
    index: int
    t_start: float
    t_end: float
    x_start: float
    segment: TrajectorySegment

    class Config:
        frozen = True


class Trajectory(BaseModel):
    """分束器世界线：从 (x0, t0) 开始的有序分段"""
    x0: float = Field(0.0, description="t0 时刻位置")
    t0: float = Field(0.0, description="起始时间")
    segments: List[TrajectorySegment] = Field(..., min_length=1)

    class Config:
        frozen = True

    @model_validator(mode="after")
    def _continuity(self) -> "Trajectory":
        for i, seg in enumerate(self.segments[:-1]):
            if not seg.is_bounded:
                raise ValueError(f"segment {i}: only the last segment may be unbounded")
            nxt = self.segments[i + 1]
            v_end = seg.end_velocity
            scale = max(1.0, abs(v_end))
            if abs(nxt.velocity0 - v_end) > CONTINUITY_TOLERANCE * scale:
                raise ValueError(
                    f"segment {i + 1}: velocity0 {nxt.velocity0!r} breaks continuity "
                    f"(previous segment ends at {v_end!r})"
                )
        return self

    @cached_property
    def spans(self) -> Tuple[SegmentSpan, ...]:
        spans = []
        t, x = self.t0, self.x0
        for i, seg in enumerate(self.segments):
            t_end = t + seg.duration
            spans.append(SegmentSpan(index=i, t_start=t, t_end=t_end, x_start=x, segment=seg))
            if seg.is_bounded:
                x = x + seg.displacement(seg.duration)
            t = t_end
        return tuple(spans)

    @property
    def end_time(self) -> float:
        return self.spans[-1].t_end

    @property
    def horizon(self) -> float:
        """时间尺度（用于相对容差）"""
        total = sum(s.duration for s in self.segments if s.is_bounded)
        return max(1.0, total)

    def max_speed(self) -> float:
        speed = 0.0
        for seg in self.segments:
            speed = max(speed, abs(seg.velocity0), abs(seg.end_velocity))
        return speed

    def displacement(self) -> Optional[float]:
        """最终静止位置相对 x0 的位移；末段不静止时为 None"""
        rest = self.rest_position()
        return None if rest is None else rest - self.x0

    def rest_position(self) -> Optional[float]:
        """最终静止位置；末段不静止时为 None"""
        last = self.spans[-1]
        if last.segment.velocity0 == 0.0 and last.segment.accel == 0.0:
            return last.x_start
        return None


class CrestLine(BaseModel):
    """直线世界线：从 (x_start, t_start) 以 speed 运动"""
    x_start: float
    t_start: float
    speed: float

    class Config:
        frozen = True

    @field_validator("x_start", "t_start", "speed")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("line parameters must be finite")
        return value

    def position(self, t: float) -> float:
        return self.x_start + self.speed * (t - self.t_start)


class Piece(BaseModel):
    """运动学片段：片段内用一个参考速度做反射（加速段取子区间中点速度）"""
    index: int
    segment_index: int
    t_start: float
    t_end: float
    velocity: float
    t_ref: float

    class Config:
        frozen = True
