"""
追踪结果相关的 Pydantic 模型
"""
from typing import List, Optional, Tuple
from pydantic import BaseModel, Field

from app.models.event import EdgeKind, EventKind
from app.models.train import TrainRole
from app.schemas.scenario import Scenario
from app.schemas.wave import PlaneWave


class Event(BaseModel):
    """时间排序后的事件"""
    id: int
    time: float
    position: float
    kind: EventKind
    incident_id: str = Field("", description="入射波峰/包络边 ID")
    product_ids: List[str] = Field(default_factory=list)
    amplitude_abs: float = 0.0

    class Config:
        frozen = True


class EdgePiece(BaseModel):
    """包络边世界线的一段：直线（x0, t0, speed）或附着于分束器 element"""
    t_start: float
    t_end: float
    x0: Optional[float] = None
    t0: Optional[float] = None
    speed: Optional[float] = None
    element: Optional[int] = None

    class Config:
        frozen = True


class EnvelopeEdge(BaseModel):
    """包络边"""
    id: str
    train_id: int
    kind: EdgeKind
    birth: Tuple[float, float] = Field(..., description="(x, t)")
    speed: float = Field(..., description="所属波列的群速度")
    pieces: List[EdgePiece]

    class Config:
        frozen = True


class Crest(BaseModel):
    """采样波峰（常相位面）在其波列内的一段世界线"""
    id: str
    train_id: int
    index: int = Field(..., description="波前序号 n")
    birth: Tuple[float, float]
    death: Tuple[float, float]
    speed: float = Field(..., description="相速度")
    wave: PlaneWave
    parent_event: Optional[int] = None

    class Config:
        frozen = True


class TrainSummary(BaseModel):
    """波列摘要"""
    id: int
    wave: PlaneWave
    role: TrainRole
    depth: int
    parent_id: Optional[int]
    element: Optional[int]
    born: float
    died: Optional[float]
    lower_edge: str
    upper_edge: str
    provenance: List[int]

    class Config:
        frozen = True


class WaveSegment(BaseModel):
    """到达探测器的波列段"""
    id: str
    train_id: int
    wave: PlaneWave
    t_in: float
    t_out: float
    provenance: List[int] = Field(default_factory=list, description="产生链事件 ID")

    class Config:
        frozen = True

    def active(self, t: float) -> bool:
        return self.t_in <= t < self.t_out


class SimulationResult(BaseModel):
    """一次运行的完整结果（不可变）"""
    scenario: Scenario
    events: List[Event]
    crests: List[Crest]
    edges: List[EnvelopeEdge]
    trains: List[TrainSummary]
    segments: List[WaveSegment]
    discarded_weight: float = 0.0
    source_weight: float = 1.0
    max_depth: int = 0
    substeps: Optional[int] = None

    class Config:
        frozen = True

    def events_of(self, *kinds: EventKind) -> List[Event]:
        return [e for e in self.events if e.kind in kinds]

    @property
    def overtake_count(self) -> int:
        return sum(1 for e in self.events if e.kind.is_overtake)
