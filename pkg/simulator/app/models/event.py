"""
事件与包络边类型
"""
import enum


class EventKind(str, enum.Enum):
    """事件类型"""
    REFLECT_HEAD_ON = "ReflectHeadOn"
    REFLECT_OVERTAKE = "ReflectOvertake"
    TRANSMIT_HEAD_ON = "TransmitHeadOn"
    TRANSMIT_OVERTAKE = "TransmitOvertake"
    SHUTTER_OPEN = "ShutterOpen"            # 反射率下降（快门打开）
    SHUTTER_ACTIVATE = "ShutterActivate"    # 反射率上升（分束快门启用）
    DETECTOR_ARRIVAL = "DetectorArrival"
    EDGE_ARRIVAL = "EdgeArrival"            # 包络边到达分束器
    EDGE_LAUNCH = "EdgeLaunch"              # 包络边离开分束器
    SOURCE_ON = "SourceOn"
    SOURCE_OFF = "SourceOff"
    DOMAIN_EXIT = "DomainExit"

    @property
    def is_overtake(self) -> bool:
        return self in (EventKind.REFLECT_OVERTAKE, EventKind.TRANSMIT_OVERTAKE)


class EdgeKind(str, enum.Enum):
    """包络边：沿传播方向的前沿/后沿"""
    FRONT = "front"
    BACK = "back"


class Side(str, enum.Enum):
    """相对分束器的位置"""
    BELOW = "below"   # x 更小的一侧
    ABOVE = "above"

    @property
    def sign(self) -> int:
        return -1 if self is Side.BELOW else 1

    @property
    def other(self) -> "Side":
        return Side.ABOVE if self is Side.BELOW else Side.BELOW


class AttachMode(str, enum.Enum):
    """波列在分束器处的状态"""
    INCIDENT = "incident"     # 正在入射（被消耗）
    GENERATED = "generated"   # 由入射波产生（反射/透射）
    SWEPT = "swept"           # 被分束器扫过截断，不产生任何波
