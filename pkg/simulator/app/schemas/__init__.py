"""
Pydantic 值类型模块
"""
from app.schemas.wave import PlaneWave, Units, WaveModel
from app.schemas.trajectory import CrestLine, Trajectory, TrajectorySegment
from app.schemas.scattering import SplitterOptics
from app.schemas.scenario import (
    DetectorSpec,
    OpticsSwitch,
    RunSpec,
    Scenario,
    ShutterPair,
    SlabParams,
    SourceSpec,
    SplitterSpec,
)

__all__ = [
    # Wave
    "PlaneWave",
    "Units",
    "WaveModel",
    # Trajectory
    "CrestLine",
    "Trajectory",
    "TrajectorySegment",
    # Optics
    "SplitterOptics",
    # Scenario
    "DetectorSpec",
    "OpticsSwitch",
    "RunSpec",
    "Scenario",
    "ShutterPair",
    "SlabParams",
    "SourceSpec",
    "SplitterSpec",
]
