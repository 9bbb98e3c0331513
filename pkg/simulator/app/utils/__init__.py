"""
工具函数模块
"""
from app.utils.numeric import fmt_float, fmt_optional, relative_error, time_slack, wrap_phase

__all__ = [
    "fmt_float",
    "fmt_optional",
    "relative_error",
    "time_slack",
    "wrap_phase",
]
