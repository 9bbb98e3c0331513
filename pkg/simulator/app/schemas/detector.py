"""
探测器相关的 Pydantic 模型
"""
from typing import Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator

from app.schemas.tracer import WaveSegment
from app.schemas.trajectory import Trajectory

# 拍频按相对差分组累计时长
BEAT_GROUP_TOLERANCE = 1e-6


class DetectorTrace(BaseModel):
    """探测器处的复振幅与概率密度时间序列"""
    position: float
    times: np.ndarray
    amplitude: np.ndarray
    pdf: np.ndarray
    segments: List[WaveSegment] = Field(default_factory=list, description="参与叠加的波列段")

    class Config:
        frozen = True
        arbitrary_types_allowed = True


class InterferenceWindow(BaseModel):
    """参与波列段集合不变的最大时间区间"""
    t_start: float
    t_end: float
    segment_ids: List[str]
    beat_frequency: Optional[float] = Field(None, description="拍频 Ω（rad/时间）")
    visibility: float = Field(0.0, ge=0, le=1)
    stationary_phase_difference: Optional[float] = Field(None, description="同频波列相位差，[0, 2π)")
    flags: List[str] = Field(default_factory=list)

    class Config:
        frozen = True

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


class InterferenceReport(BaseModel):
    """干涉分析结果"""
    windows: List[InterferenceWindow] = Field(default_factory=list)

    class Config:
        frozen = True

    @property
    def final_window(self) -> Optional[InterferenceWindow]:
        return self.windows[-1] if self.windows else None

    @property
    def stationary_window(self) -> Optional[InterferenceWindow]:
        """最后一个同频干涉窗口"""
        for window in reversed(self.windows):
            if window.stationary_phase_difference is not None:
                return window
        return None

    @property
    def beat_frequency(self) -> Optional[float]:
        """累计窗口时长最长的拍频"""
        totals: Dict[float, float] = {}
        for window in self.windows:
            beat = window.beat_frequency
            if beat is None:
                continue
            key = next((b for b in totals if abs(b - beat) <= BEAT_GROUP_TOLERANCE * b), beat)
            totals[key] = totals.get(key, 0.0) + window.duration
        if not totals:
            return None
        return max(totals, key=totals.get)

    @property
    def visibility(self) -> float:
        final = self.final_window
        return final.visibility if final is not None else 0.0

    @property
    def stationary_phase_difference(self) -> Optional[float]:
        window = self.stationary_window
        return window.stationary_phase_difference if window is not None else None

    def window_at(self, t: float) -> Optional[InterferenceWindow]:
        for window in self.windows:
            if window.t_start <= t < window.t_end:
                return window
        return None


class PathLeg(BaseModel):
    """静态路径段：长度与波峰速度"""
    length: float = Field(..., ge=0)
    phase_speed: float

    class Config:
        frozen = True

    @field_validator("phase_speed")
    @classmethod
    def _nonzero(cls, value: float) -> float:
        if value == 0.0:
            raise ValueError("leg phase speed must be nonzero")
        return value


class MovingReflection(BaseModel):
    """运动反射镜路径段：x_from 出发的波峰在镜面反射后到达 x_to"""
    trajectory: Trajectory
    x_from: float
    incident_speed: float
    x_to: float
    reflected_speed: float

    class Config:
        frozen = True

    @field_validator("incident_speed", "reflected_speed")
    @classmethod
    def _nonzero(cls, value: float) -> float:
        if value == 0.0:
            raise ValueError("crest speed must be nonzero")
        return value


PathItem = Union[PathLeg, MovingReflection]
