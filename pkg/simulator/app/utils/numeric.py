"""
数值格式化工具
"""
import math


def fmt_float(value: float) -> str:
    """最短可往返的浮点表示（repr），保证 CSV 输出逐字节确定"""
    value = float(value)
    if value == 0.0:
        # -0.0 与 0.0 输出一致
        return "0.0"
    return repr(value)


def fmt_optional(value) -> str:
    """None 输出为空字段"""
    if value is None:
        return ""
    return fmt_float(value)


def wrap_phase(phase: float) -> float:
    """相位归一化到 [0, 2π)"""
    wrapped = math.fmod(phase, 2.0 * math.pi)
    if wrapped < 0.0:
        wrapped += 2.0 * math.pi
    if wrapped >= 2.0 * math.pi:
        wrapped = 0.0
    return wrapped


def relative_error(actual: float, expected: float) -> float:
    """相对误差；期望值为 0 时退化为绝对误差"""
    if expected == 0.0:
        return abs(actual)
    return abs(actual - expected) / abs(expected)


def time_slack(t: float, tolerance: float) -> float:
    """t 附近的时间容差：相对容差，|t| < 1 时按绝对容差"""
    return tolerance * max(1.0, abs(t))
