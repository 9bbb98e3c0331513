"""
闭式公式校验表

每一行把服务层的计算结果与解析公式对比；`check` 命令逐行打印，全部通过才返回 0。
"""
import logging
import math
from typing import Callable, List, Tuple

from pydantic import BaseModel

from app.models.wave import WaveFamily
from app.schemas.scattering import SplitterOptics
from app.schemas.scenario import ShutterPair, SlabParams
from app.schemas.wave import Units, WaveModel
from app.services import tracer as tracer_service
from app.services.scattering import (
    galilean_boost_plane_wave,
    is_overtake,
    reflect_at_moving_bs,
    transmit_at_moving_bs,
)
from app.services.scenarios import (
    build_fig1_scenario,
    em_shutter_overlap,
    grating_phase_difference,
    shutter_overlap_window,
    slab_transmission_shift,
)
from app.services.wavemodel import dispersion_omega, plane_wave, wavevector_from_group_speed
from app.utils.errors import WaveCrestError
from app.utils.numeric import relative_error

logger = logging.getLogger(__name__)

# 校验用参数：m = ħ = 1，V = 1，v_g = 0.2
COAST_SPEED = 1.0
GROUP_SPEED = 0.2
DISPLACEMENT = 5.0
RELATIVISTIC_UNITS = Units(c=10.0)


class FormulaCheck(BaseModel):
    """校验表的一行"""
    name: str
    expected: float
    actual: float
    tolerance: float
    passed: bool

    class Config:
        frozen = True


def _schrodinger() -> WaveModel:
    return WaveModel(family=WaveFamily.SCHRODINGER)


def _reflected_omega(sign: int) -> float:
    """BS 以 −V 运动：sign=+1 为迎面（情形 II），−1 为追赶（情形 I）"""
    model = _schrodinger()
    k = sign * wavevector_from_group_speed(model, GROUP_SPEED)
    wave = plane_wave(model, k)
    return reflect_at_moving_bs(model, wave, -COAST_SPEED, SplitterOptics.mirror(), at=(0.0, 0.0)).omega


def _case_one() -> Tuple[float, float]:
    return 0.5 * (2 * COAST_SPEED - GROUP_SPEED) ** 2, _reflected_omega(-1)


def _case_two() -> Tuple[float, float]:
    return 0.5 * (2 * COAST_SPEED + GROUP_SPEED) ** 2, _reflected_omega(1)


def _beat() -> Tuple[float, float]:
    return 4 * COAST_SPEED * GROUP_SPEED, _reflected_omega(1) - _reflected_omega(-1)


def _transmitted() -> Tuple[float, float]:
    model = _schrodinger()
    wave = plane_wave(model, wavevector_from_group_speed(model, GROUP_SPEED))
    out = transmit_at_moving_bs(model, wave, -COAST_SPEED, SplitterOptics.balanced())
    return wave.omega, out.omega


def _galilean_boost() -> Tuple[float, float]:
    model = _schrodinger()
    wave = plane_wave(model, 0.7)
    there = galilean_boost_plane_wave(wave, 0.3, model.units)
    back = galilean_boost_plane_wave(there, -0.3, model.units)
    return wave.omega, back.omega


def _grating() -> Tuple[float, float]:
    k = wavevector_from_group_speed(_schrodinger(), GROUP_SPEED)
    return 2.0 * k * DISPLACEMENT, grating_phase_difference(k, DISPLACEMENT)


def _shutter() -> Tuple[float, float]:
    p = ShutterPair(t1=0.0, alpha=0.25, separation=1.0, group_velocity=0.5)
    return (1.0 / 0.5) * (1.0 - 0.25), shutter_overlap_window(p)[1]


def _em_shutter() -> Tuple[float, float]:
    inside = em_shutter_overlap(0.0, 0.5, 1.0, 1.0)
    boundary = em_shutter_overlap(0.0, 1.0, 1.0, 1.0)
    outside = em_shutter_overlap(0.0, 2.0, 1.0, 1.0)
    return 1.0, float(inside and not boundary and not outside)


def _slab() -> Tuple[float, float]:
    p = SlabParams(mass=1.0, g=2.0, length=3.0, n=0.5, hbar=1.0)
    return 6.0, slab_transmission_shift(p)


def _kg_crests() -> Tuple[float, float]:
    """KG 反射波峰速度总超过 c，任何亚光速分束器都追不上"""
    model = WaveModel(family=WaveFamily.KLEIN_GORDON, units=RELATIVISTIC_UNITS)
    k = wavevector_from_group_speed(model, GROUP_SPEED)
    overtakes = 0
    for V in (-9.9, -5.0, -1.0, -0.1, 0.1, 1.0, 5.0, 9.9):
        for wave in (plane_wave(model, k), plane_wave(model, -k)):
            reflected = reflect_at_moving_bs(model, wave, V, SplitterOptics.mirror(), at=(0.0, 0.0))
            overtakes += is_overtake(model, wave, V) + is_overtake(model, reflected, V)
    return 0.0, float(overtakes)


def _run_overtakes(family: WaveFamily) -> float:
    units = Units() if family == WaveFamily.SCHRODINGER else RELATIVISTIC_UNITS
    model = WaveModel(family=family, units=units)
    v_g = None if family == WaveFamily.EM_VACUUM else GROUP_SPEED
    scenario = build_fig1_scenario(v_g, COAST_SPEED, DISPLACEMENT, model=model)
    return float(tracer_service.run(scenario).overtake_count)


def _kg_run() -> Tuple[float, float]:
    return 0.0, _run_overtakes(WaveFamily.KLEIN_GORDON)


def _em_run() -> Tuple[float, float]:
    return 0.0, _run_overtakes(WaveFamily.EM_VACUUM)


def _schrodinger_run() -> Tuple[float, float]:
    """薛定谔下必须出现追赶事件（记 1 表示出现）"""
    return 1.0, float(_run_overtakes(WaveFamily.SCHRODINGER) > 0)


FORMULAS: List[Tuple[str, Callable[[], Tuple[float, float]], float]] = [
    ("case I reflected frequency m(2V-v_g)^2/2hbar", _case_one, 1e-12),
    ("case II reflected frequency m(2V+v_g)^2/2hbar", _case_two, 1e-12),
    ("beat frequency 4mVv_g/hbar", _beat, 1e-12),
    ("transmitted frequency unchanged", _transmitted, 0.0),
    ("galilean boost round trip", _galilean_boost, 1e-12),
    ("grating phase difference 2kL", _grating, 1e-12),
    ("shutter duration tau(1-alpha)", _shutter, 1e-12),
    ("EM shutter overlap iff t2-t1<L/c", _em_shutter, 0.0),
    ("slab shift mgL(1-n)/n hbar", _slab, 1e-12),
    ("KG crests never overtaken", _kg_crests, 0.0),
    ("KG overtake run has no overtake events", _kg_run, 0.0),
    ("EM overtake run has no overtake events", _em_run, 0.0),
    ("Schrodinger overtake run has overtake events", _schrodinger_run, 0.0),
]


def run_checks() -> List[FormulaCheck]:
    rows: List[FormulaCheck] = []
    for name, compute, tolerance in FORMULAS:
        try:
            expected, actual = compute()
        except WaveCrestError as exc:
            logger.error("%s: %s", name, exc.detail)
            rows.append(FormulaCheck(name=name, expected=math.nan, actual=math.nan,
                                     tolerance=tolerance, passed=False))
            continue
        passed = relative_error(actual, expected) <= tolerance
        rows.append(FormulaCheck(name=name, expected=expected, actual=actual,
                                 tolerance=tolerance, passed=passed))
    return rows
