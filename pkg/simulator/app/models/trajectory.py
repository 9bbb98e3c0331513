"""
分束器轨迹分段类型
"""
import enum


class SegmentKind(str, enum.Enum):
    """轨迹分段类型"""
    REST = "rest"                       # 静止
    CONST_VELOCITY = "const_velocity"   # 匀速
    CONST_ACCEL = "const_accel"         # 匀加速
