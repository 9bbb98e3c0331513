"""
异常定义

所有领域错误都继承 WaveCrestError，exit_code 即命令行退出码
（相当于 HTTP 接口里的 status_code）：
    2 - 输入或场景校验失败
    3 - 运行期错误
"""
from typing import Optional, Sequence


EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


class WaveCrestError(Exception):
    """领域错误基类"""
    exit_code: int = EXIT_RUNTIME

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


# ================== 校验类错误（退出码 2） ==================

class InvalidInputError(WaveCrestError):
    """非法输入（非有限数值、参数越界等）"""
    exit_code = EXIT_VALIDATION


class UndefinedPhaseVelocityError(InvalidInputError):
    """k = 0 时相速度无定义"""


class SuperluminalError(InvalidInputError):
    """速度达到或超过光速"""


class WrongModelError(InvalidInputError):
    """对不支持的波动方程族调用了变换"""


class OutOfRangeError(InvalidInputError):
    """时间超出轨迹定义域"""


class NoTransitError(InvalidInputError):
    """群速度为零，包络无法在快门之间传播"""


class InvalidIndexError(InvalidInputError):
    """折射率必须为正"""


class ScenarioValidationError(WaveCrestError):
    """场景校验失败，violations 列出全部问题"""
    exit_code = EXIT_VALIDATION

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ScenarioParseError(InvalidInputError):
    """场景文件解析失败，带行号与出错的词元"""

    def __init__(self, line: int, token: str, reason: str):
        self.line = line
        self.token = token
        self.reason = reason
        super().__init__(f"line {line}: {reason} (token {token!r})")


# ================== 运行期错误（退出码 3） ==================

class DegenerateIncidenceError(WaveCrestError):
    """波峰与分束器同速共动，不存在入射"""

    def __init__(self, detail: str, sub_interval: Optional[int] = None):
        self.sub_interval = sub_interval
        if sub_interval is not None:
            detail = f"sub-interval {sub_interval}: {detail}"
        super().__init__(detail)


class UnreachablePathError(WaveCrestError):
    """推迟时间方程在定义域内无根"""


class AnalysisError(WaveCrestError):
    """探测器分析在运行中失败（采样网格、叠加等内部数值问题）"""


class EventExplosionError(WaveCrestError):
    """事件数超过上限"""

    def __init__(self, count: int, depth: int):
        self.count = count
        self.depth = depth
        super().__init__(f"event count {count} exceeds cap (depth reached {depth})")
