"""
波动模型相关的 Pydantic 模型
"""
import math
from typing import Optional
from pydantic import BaseModel, Field, field_validator, model_validator

from app.models.wave import WaveFamily


class Units(BaseModel):
    """物理常数（默认自然单位 m = ħ = c = 1）"""
    hbar: float = Field(1.0, gt=0, description="约化普朗克常数")
    mass: float = Field(1.0, gt=0, description="粒子质量")
    c: float = Field(1.0, gt=0, description="光速")
    sound_speed: Optional[float] = Field(None, gt=0, description="介质声速，仅声学模型需要")

    class Config:
        frozen = True

    @field_validator("hbar", "mass", "c")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("constant must be finite")
        return value


class WaveModel(BaseModel):
    """色散族 + 物理常数"""
    family: WaveFamily
    units: Units = Field(default_factory=Units)

    class Config:
        frozen = True

    @model_validator(mode="after")
    def _family_units(self) -> "WaveModel":
        if self.family == WaveFamily.ACOUSTIC and self.units.sound_speed is None:
            raise ValueError("acoustic model requires units.sound_speed")
        return self

    @property
    def is_relativistic(self) -> bool:
        return self.family in (WaveFamily.KLEIN_GORDON, WaveFamily.EM_VACUUM)

    @property
    def speed_limit(self) -> Optional[float]:
        """轨迹速度上限（KG/EM 为 c，声学为 c_s，薛定谔无上限）"""
        if self.is_relativistic:
            return self.units.c
        if self.family == WaveFamily.ACOUSTIC:
            return self.units.sound_speed
        return None


class PlaneWave(BaseModel):
    """单色平面波片段：a·exp(i(kx − ωt + φ₀))"""
    k: float = Field(..., description="有符号波矢")
    omega: float = Field(..., ge=0, description="角频率")
    amplitude: complex = Field(1.0 + 0.0j, description="复振幅")
    phase0: float = Field(0.0, description="相位偏置")

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @field_validator("amplitude", mode="before")
    @classmethod
    def _coerce_amplitude(cls, value) -> complex:
        return complex(value)

    @field_validator("amplitude")
    @classmethod
    def _bounded(cls, value: complex) -> complex:
        if abs(value) > 1.0 + 1e-12:
            raise ValueError("|amplitude| must not exceed 1")
        return value

    @field_validator("k", "omega", "phase0")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("wave parameters must be finite")
        return value

    @property
    def direction(self) -> int:
        """传播方向，完全由 k 的符号决定"""
        if self.k > 0:
            return 1
        if self.k < 0:
            return -1
        return 0

    def phase_at(self, x: float, t: float) -> float:
        """kx − ωt + φ₀（不含振幅辐角）"""
        return self.k * x - self.omega * t + self.phase0

    def scaled(self, factor: float) -> "PlaneWave":
        """振幅乘以实系数"""
        return self.model_copy(update={"amplitude": self.amplitude * factor})
