"""
追踪器运行期记录：波列与包络边界

波列是两条边界之间的单色平面波区域；边界是分段世界线，
每段要么是以群速度运动的直线（自由包络边），要么附着在某个分束器的轨迹上。
"""
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

from app.models.event import AttachMode, EdgeKind, Side
from app.schemas.trajectory import Trajectory
from app.schemas.wave import PlaneWave


class TrainRole(str, enum.Enum):
    """波列来源"""
    SOURCE = "source"       # 波源发射
    REFLECT = "reflect"     # 反射产物
    TRANSMIT = "transmit"   # 透射产物


@dataclass
class BoundaryPiece:
    """边界的一段世界线"""
    t_start: float
    t_end: float = math.inf
    x0: float = 0.0                          # 直线段：t0 时刻位置
    t0: float = 0.0
    speed: float = 0.0
    element: Optional[int] = None            # 附着段：分束器序号
    trajectory: Optional[Trajectory] = None
    locate: Optional[Callable[[float], float]] = None  # 附着段：t -> 分束器位置

    @property
    def is_track(self) -> bool:
        return self.element is not None

    def position(self, t: float) -> float:
        if self.locate is not None:
            return self.locate(t)
        return self.x0 + self.speed * (t - self.t0)


@dataclass
class Boundary:
    """波列边界（即包络边）"""
    id: int
    train_id: int
    kind: EdgeKind
    pieces: List[BoundaryPiece] = field(default_factory=list)
    element: Optional[int] = None            # 当前附着的分束器
    mode: Optional[AttachMode] = None        # 附着状态
    version: int = 0                         # 每次换段递增，用于丢弃过期的队列项
    exited: int = 0                          # 离开空间域的方向（±1），0 表示仍在域内

    @property
    def current(self) -> BoundaryPiece:
        return self.pieces[-1]

    @property
    def label(self) -> str:
        return f"e{self.id}"

    def close(self, t: float) -> None:
        self.current.t_end = t

    def start_line(self, x0: float, t0: float, speed: float) -> None:
        self.pieces.append(BoundaryPiece(t_start=t0, x0=x0, t0=t0, speed=speed))
        self.element = None
        self.mode = None
        self.version += 1

    def start_track(self, t: float, element: int, trajectory: Trajectory, mode: AttachMode,
                    locate: Callable[[float], float]) -> None:
        self.pieces.append(BoundaryPiece(t_start=t, element=element, trajectory=trajectory,
                                         locate=locate))
        self.element = element
        self.mode = mode
        self.version += 1

    def position(self, t: float) -> float:
        for piece in self.pieces:
            if t <= piece.t_end:
                return piece.position(max(t, piece.t_start))
        return self.current.position(t)

    def __repr__(self):
        return f"<Boundary(id={self.id}, train={self.train_id}, kind={self.kind.value}, element={self.element})>"


@dataclass
class Train:
    """单色波列"""
    id: int
    wave: PlaneWave
    role: TrainRole
    lower: Boundary
    upper: Boundary
    born: float
    depth: int = 0
    parent_id: Optional[int] = None
    element: Optional[int] = None            # 产生它的分束器
    front_offset: float = 0.0                # 采样波前相位偏置（累计界面相位）
    died: Optional[float] = None
    provenance: List[int] = field(default_factory=list)  # 产生链上的事件序号

    @property
    def alive(self) -> bool:
        return self.died is None

    def side_of(self, boundary: Boundary) -> Side:
        """以该边界附着时，波列位于分束器哪一侧"""
        return Side.ABOVE if boundary is self.lower else Side.BELOW

    def other(self, boundary: Boundary) -> Boundary:
        return self.upper if boundary is self.lower else self.lower

    def __repr__(self):
        return f"<Train(id={self.id}, role={self.role.value}, k={self.wave.k!r}, depth={self.depth})>"
