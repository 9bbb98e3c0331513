"""
参考系变换与运动分束器上的反射/透射

约定：所有公式使用带符号的 k 与 V，情形 I / II 由几何关系自然产生。
    薛定谔   伽利略变换（含额外相位因子），反射后 k_r = 2mV/ħ − k
    KG / EM  洛伦兹变换到分束器静止系，镜面反射后变换回实验室系
    声波     介质系多普勒相位匹配（声波方程不满足伽利略/洛伦兹协变）
"""
import logging
import math
from typing import List, Optional, Tuple

from app.models.event import Side
from app.models.wave import WaveFamily
from app.schemas.scattering import SplitterOptics
from app.schemas.trajectory import Trajectory
from app.schemas.wave import PlaneWave, Units, WaveModel
from app.services import trajectory as trajectory_service
from app.services.wavemodel import (
    check_plane_wave,
    crest_speed,
    dispersion_omega,
    group_velocity,
)
from app.utils.errors import (
    DegenerateIncidenceError,
    InvalidInputError,
    SuperluminalError,
    WrongModelError,
)

logger = logging.getLogger(__name__)

# 判断波峰/包络与分束器“同速”的相对容差；入射判断与反射/透射共用
COMOVING_TOLERANCE = 1e-12


def comoving(speed: float, V: float) -> bool:
    return abs(speed - V) <= COMOVING_TOLERANCE * max(abs(speed), abs(V), 1.0)


def _lorentz_gamma(V: float, c: float) -> float:
    if abs(V) >= c:
        raise SuperluminalError(f"boost speed |V| = {abs(V)!r} must be below c = {c!r}")
    beta = V / c
    return 1.0 / math.sqrt((1.0 - beta) * (1.0 + beta))


def galilean_boost_plane_wave(
    wave: PlaneWave,
    V: float,
    units: Units,
    family: WaveFamily = WaveFamily.SCHRODINGER,
) -> PlaneWave:
    """
    伽利略变换到以 V 运动的参考系

    k' = k − mV/ħ，ω' = ω − kV + mV²/2ħ。额外的相位因子 exp(−i(mVx + mV²t/2)/ħ)
    保证变换后仍满足自由薛定谔色散；ω' 直接由 ħk'²/2m 给出，两者恒等。
    全局相位约定：原点 (0, 0) 处相位不变。
    """
    if family != WaveFamily.SCHRODINGER:
        raise WrongModelError(f"Galilean boost applies to Schrodinger waves, not {family.value}")
    model = WaveModel(family=WaveFamily.SCHRODINGER, units=units)
    try:
        check_plane_wave(model, wave)
    except InvalidInputError as exc:
        raise WrongModelError(f"wave is not a Schrodinger plane wave: {exc.detail}") from exc
    if not math.isfinite(V):
        raise InvalidInputError(f"boost speed must be finite, got {V!r}")
    if V == 0.0:
        return wave
    k_new = wave.k - units.mass * V / units.hbar
    return wave.model_copy(update={"k": k_new, "omega": dispersion_omega(model, k_new)})


def lorentz_boost_wave(
    wave: PlaneWave,
    V: float,
    units: Units,
    family: Optional[WaveFamily] = None,
) -> PlaneWave:
    """洛伦兹变换：ω' = γ(ω − Vk)，k' = γ(k − Vω/c²)"""
    if family is not None and family not in (WaveFamily.KLEIN_GORDON, WaveFamily.EM_VACUUM):
        raise WrongModelError(f"Lorentz boost applies to KG/EM waves, not {family.value}")
    if family is not None:
        check_plane_wave(WaveModel(family=family, units=units), wave)
    c = units.c
    gamma = _lorentz_gamma(V, c)
    if V == 0.0:
        return wave
    omega_new = gamma * (wave.omega - V * wave.k)
    k_new = gamma * (wave.k - V * wave.omega / (c * c))
    return wave.model_copy(update={"k": k_new, "omega": max(omega_new, 0.0)})


def reflection_phase(
    incident: PlaneWave,
    reflected: PlaneWave,
    x: float,
    t: float,
    chi: float = 0.0,
) -> float:
    """使反射波在 (x, t) 处与入射波同相（再加界面相位 χ）的 phase0"""
    return (
        incident.phase0
        + (incident.k - reflected.k) * x
        - (incident.omega - reflected.omega) * t
        + chi
    )


def _check_not_comoving(model: WaveModel, wave: PlaneWave, V: float) -> None:
    if wave.k == 0.0:
        # 无波峰：包络静止（群速度为 0）时与静止分束器不相遇
        if model.family in (WaveFamily.EM_VACUUM, WaveFamily.ACOUSTIC) or V == 0.0:
            raise DegenerateIncidenceError("wave at rest relative to the beamsplitter")
        return
    v_p = crest_speed(model, wave)
    if comoving(v_p, V):
        raise DegenerateIncidenceError(
            f"crest speed {v_p!r} equals beamsplitter speed {V!r}"
        )


def reflected_wavevector(model: WaveModel, wave: PlaneWave, V: float) -> float:
    """反射波矢（不含振幅与相位）"""
    u = model.units
    family = model.family
    if family == WaveFamily.SCHRODINGER:
        return 2.0 * u.mass * V / u.hbar - wave.k
    if family in (WaveFamily.KLEIN_GORDON, WaveFamily.EM_VACUUM):
        rest_frame = lorentz_boost_wave(wave, V, u)
        mirrored = rest_frame.model_copy(update={"k": -rest_frame.k})
        return lorentz_boost_wave(mirrored, -V, u).k
    # 声波：介质系多普勒
    c_s = u.sound_speed
    if abs(V) >= c_s:
        raise SuperluminalError(f"|V| = {abs(V)!r} must be below the sound speed {c_s!r}")
    sigma = 1.0 if wave.k > 0 else -1.0
    return -wave.k * (c_s - sigma * V) / (c_s + sigma * V)


def reflect_at_moving_bs(
    model: WaveModel,
    wave: PlaneWave,
    V: float,
    optics: SplitterOptics,
    at: Tuple[float, float] = (0.0, 0.0),
) -> PlaneWave:
    """
    以速度 V 运动的分束器上的反射波

    振幅乘 r；反射波在世界线上的点 at = (x, t) 处与入射波同相（加 χ）。
    """
    _check_not_comoving(model, wave, V)
    k_r = reflected_wavevector(model, wave, V)
    bare = PlaneWave(
        k=k_r,
        omega=dispersion_omega(model, k_r),
        amplitude=wave.amplitude * optics.r,
        phase0=0.0,
    )
    x, t = at
    return bare.model_copy(
        update={"phase0": reflection_phase(wave, bare, x, t, optics.interface_phase)}
    )


def transmit_at_moving_bs(
    model: WaveModel,
    wave: PlaneWave,
    V: float,
    optics: SplitterOptics,
) -> PlaneWave:
    """透射波：k、ω、phase0 不变，振幅乘 t"""
    _check_not_comoving(model, wave, V)
    return wave.scaled(optics.t)


def comoving_reflection_sequence(
    model: WaveModel,
    wave: PlaneWave,
    traj: Trajectory,
    interval: Tuple[float, float],
    substeps: int,
    optics: Optional[SplitterOptics] = None,
) -> List[PlaneWave]:
    """
    瞬时共动惯性系序列近似下的加速反射

    [t_a, t_b] 等分为 N 段，每段用中点速度反射，相位在中点处匹配。
    """
    if substeps < 1:
        raise InvalidInputError(f"substeps must be >= 1, got {substeps!r}")
    t_a, t_b = interval
    if not t_b > t_a:
        raise InvalidInputError(f"interval must be increasing, got {interval!r}")
    trajectory_service.state_at(traj, t_a)
    trajectory_service.state_at(traj, t_b)
    optics = optics or SplitterOptics.balanced()

    waves: List[PlaneWave] = []
    width = (t_b - t_a) / substeps
    for i in range(substeps):
        mid = t_a + (i + 0.5) * width
        x_mid, v_mid = trajectory_service.state_at(traj, mid)
        try:
            waves.append(reflect_at_moving_bs(model, wave, v_mid, optics, at=(x_mid, mid)))
        except DegenerateIncidenceError as exc:
            raise DegenerateIncidenceError(exc.detail, sub_interval=i) from exc
    return waves


def approaches(model: WaveModel, wave: PlaneWave, side: Side, V: float) -> Tuple[bool, bool]:
    """
    (波峰是否趋近, 包络是否趋近) 分束器；side 为波列所在一侧

    与分束器同速（在 COMOVING_TOLERANCE 内）的波峰或包络不趋近。
    """
    if wave.k == 0.0 and model.family in (WaveFamily.EM_VACUUM, WaveFamily.ACOUSTIC):
        return False, False
    v_g = group_velocity(model, wave.k)
    v_p = crest_speed(model, wave)
    if v_p is None:
        v_p = v_g
    crest = not comoving(v_p, V) and (v_p > V if side == Side.BELOW else v_p < V)
    envelope = not comoving(v_g, V) and (v_g > V if side == Side.BELOW else v_g < V)
    return crest, envelope


def is_incident(model: WaveModel, wave: PlaneWave, side: Side, V: float) -> bool:
    """波峰与包络都趋近分束器时才算入射"""
    crest, envelope = approaches(model, wave, side, V)
    return crest and envelope


def is_overtake(model: WaveModel, wave: PlaneWave, V: float) -> bool:
    """分束器与波峰同向且更快：从后方越过波峰"""
    v_p = crest_speed(model, wave)
    if v_p is None or V == 0.0:
        return False
    return (v_p > 0) == (V > 0) and abs(V) > abs(v_p)
