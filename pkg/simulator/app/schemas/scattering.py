"""
分束器光学参数
"""
import math
from pydantic import BaseModel, Field, model_validator

# r² + t² = 1 的容差
CONSERVATION_TOLERANCE = 1e-12


class SplitterOptics(BaseModel):
    """静止系中的实振幅反射/透射系数，以及可选的界面相位 χ"""
    r: float = Field(..., ge=0, le=1, description="反射振幅")
    t: float = Field(..., ge=0, le=1, description="透射振幅")
    interface_phase: float = Field(0.0, description="反射附加相位 χ（弧度）")

    class Config:
        frozen = True

    @model_validator(mode="after")
    def _conservation(self) -> "SplitterOptics":
        if abs(self.r * self.r + self.t * self.t - 1.0) > CONSERVATION_TOLERANCE:
            raise ValueError(f"r^2 + t^2 must equal 1 (r={self.r!r}, t={self.t!r})")
        if not math.isfinite(self.interface_phase):
            raise ValueError("interface_phase must be finite")
        return self

    @classmethod
    def from_reflectivity(cls, r: float, interface_phase: float = 0.0) -> "SplitterOptics":
        """由 r 补出 t = sqrt(1 − r²)"""
        if r == 1.0:
            t = 0.0
        elif r == 0.0:
            t = 1.0
        else:
            t = math.sqrt((1.0 - r) * (1.0 + r))
        return cls(r=r, t=t, interface_phase=interface_phase)

    @classmethod
    def balanced(cls) -> "SplitterOptics":
        half = math.sqrt(0.5)
        return cls(r=half, t=half)

    @classmethod
    def mirror(cls) -> "SplitterOptics":
        return cls(r=1.0, t=0.0)

    @classmethod
    def transparent(cls) -> "SplitterOptics":
        return cls(r=0.0, t=1.0)
