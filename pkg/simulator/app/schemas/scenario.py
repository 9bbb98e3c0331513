"""
场景相关的 Pydantic 模型
"""
import math
from typing import List, Optional
from pydantic import BaseModel, Field, field_validator, model_validator

from app.schemas.scattering import SplitterOptics
from app.schemas.trajectory import Trajectory
from app.schemas.wave import WaveModel


class SourceSpec(BaseModel):
    """单色波源：在 [t_on, t_off] 内向 +x 发射，边沿以群速度传播"""
    position: float = Field(0.0, description="波源位置 x_S")
    group_velocity: Optional[float] = Field(None, gt=0, description="群速度（薛定谔/KG）")
    omega0: Optional[float] = Field(None, gt=0, description="角频率（EM/声波，或代替群速度）")
    t_on: float = Field(0.0, description="开启时间")
    t_off: float = Field(..., description="关闭时间")
    crest_spacing: float = Field(1.0, gt=0, description="采样波前间隔（周期数）")

    class Config:
        frozen = True

    @model_validator(mode="after")
    def _carrier(self) -> "SourceSpec":
        if (self.group_velocity is None) == (self.omega0 is None):
            raise ValueError("source needs exactly one of group_velocity / omega0")
        if not self.t_off > self.t_on:
            raise ValueError("source t_off must be later than t_on")
        return self


class OpticsSwitch(BaseModel):
    """快门切换：time 时刻起光学参数变为 optics"""
    time: float
    optics: SplitterOptics

    class Config:
        frozen = True


class SplitterSpec(BaseModel):
    """分束器（或快门）：轨迹 + 光学参数 + 切换计划"""
    optics: SplitterOptics = Field(default_factory=SplitterOptics.balanced)
    trajectory: Trajectory
    switches: List[OpticsSwitch] = Field(default_factory=list)

    class Config:
        frozen = True

    @field_validator("switches")
    @classmethod
    def _ordered(cls, value: List[OpticsSwitch]) -> List[OpticsSwitch]:
        times = [s.time for s in value]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("switch times must be strictly increasing")
        return value

    def optics_at(self, t: float) -> SplitterOptics:
        current = self.optics
        for switch in self.switches:
            if switch.time <= t:
                current = switch.optics
            else:
                break
        return current


class DetectorSpec(BaseModel):
    """被动探测器（45° 分束器后的端口），只记录 −x 方向的波列"""
    position: float

    class Config:
        frozen = True


class RunSpec(BaseModel):
    """运行参数"""
    t_max: float = Field(..., description="模拟截止时间")
    x_min: float = Field(..., description="空间域下界")
    x_max: float = Field(..., description="空间域上界")
    substeps: Optional[int] = Field(None, ge=1, description="匀加速段子区间数（默认按 1% 规则）")
    sample_rate: Optional[float] = Field(None, gt=0, description="每个最短周期的采样点数")

    class Config:
        frozen = True

    @model_validator(mode="after")
    def _bounds(self) -> "RunSpec":
        if not math.isfinite(self.t_max):
            raise ValueError("t_max must be finite")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")
        return self


class Scenario(BaseModel):
    """完整场景"""
    model: WaveModel
    source: SourceSpec
    splitters: List[SplitterSpec] = Field(..., min_length=1)
    detector: DetectorSpec
    run: RunSpec

    class Config:
        frozen = True


class ShutterPair(BaseModel):
    """上/下快门：上快门 t1 打开，下快门 t2 = t1 + ατ 启用"""
    t1: float = Field(0.0, description="上快门打开时间")
    alpha: float = Field(..., ge=0, le=1, description="延迟占群渡越时间的比例")
    separation: float = Field(..., gt=0, description="快门间距 L")
    group_velocity: float = Field(..., description="群速度 v_g")

    class Config:
        frozen = True


class SlabParams(BaseModel):
    """加速平板参数"""
    mass: float = Field(..., gt=0)
    g: float = Field(..., gt=0, description="平板加速度")
    length: float = Field(..., gt=0, description="平板长度 L")
    n: float = Field(..., description="折射率")
    hbar: float = Field(..., gt=0)

    class Config:
        frozen = True
