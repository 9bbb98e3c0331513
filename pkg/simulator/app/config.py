"""
应用配置管理
"""
from pydantic_settings import BaseSettings
from functools import lru_cache


class Settings(BaseSettings):
    """应用配置"""

    # 应用配置
    app_name: str = "wavecrest"
    version: str = "1.0.0"
    debug: bool = False
    log_level: str = "INFO"

    # 事件剪枝（振幅下限 ε_amp 与最大事件深度）
    amplitude_floor: float = 1e-4
    max_depth: int = 32
    max_events: int = 500_000

    # 加速段细分：每个子区间的速度变化不超过参考速度的 1%
    velocity_step_fraction: float = 0.01

    # 数值容差
    tangency_tolerance: float = 1e-12  # 二次判别式相对容差 ε_disc
    boundary_tolerance: float = 1e-12  # 分段边界时间容差 ε_t（相对于时间跨度）
    time_tolerance: float = 1e-12      # 探测器时间容差（相对）：更短的片段与窗口被并入或丢弃

    # 探测器采样：最短拍频/条纹周期内的采样点数
    samples_per_period: int = 64

    # 输出
    default_out_dir: str = "out"
    sweep_workers: int = 1

    class Config:
        env_prefix = "WAVECREST_"
        env_file = ".env"
        env_file_encoding = "utf-8"


@lru_cache()
def get_settings() -> Settings:
    """获取配置单例"""
    return Settings()


settings = get_settings()
