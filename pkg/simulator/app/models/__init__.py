"""
枚举与追踪器运行期记录
"""
from app.models.event import AttachMode, EdgeKind, EventKind, Side
from app.models.trajectory import SegmentKind
from app.models.wave import WaveFamily

__all__ = [
    "AttachMode",
    "EdgeKind",
    "EventKind",
    "Side",
    "SegmentKind",
    "WaveFamily",
]
