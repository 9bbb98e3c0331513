"""
色散关系、相速度与群速度

四种波动方程族：
    薛定谔      ω = ħk²/2m          v_p = v_g/2
    Klein-Gordon ω = c·sqrt(k² + (mc/ħ)²)  v_p = c²/v_g
    真空电磁波   ω = c|k|            v_p = v_g = ±c
    声波        ω = c_s|k|          v_p = v_g = ±c_s（介质系）
"""
import math
from typing import Optional

from app.models.wave import WaveFamily
from app.schemas.wave import PlaneWave, WaveModel
from app.utils.errors import (
    InvalidInputError,
    SuperluminalError,
    UndefinedPhaseVelocityError,
    WrongModelError,
)

DISPERSION_TOLERANCE = 1e-12


def _require_finite(value: float, name: str) -> None:
    if not math.isfinite(value):
        raise InvalidInputError(f"{name} must be finite, got {value!r}")


def compton_wavevector(model: WaveModel) -> float:
    """mc/ħ"""
    u = model.units
    return u.mass * u.c / u.hbar


def dispersion_omega(model: WaveModel, k: float) -> float:
    """角频率 ω(k)，恒为非负"""
    _require_finite(k, "k")
    u = model.units
    family = model.family
    if family == WaveFamily.SCHRODINGER:
        return u.hbar * k * k / (2.0 * u.mass)
    if family == WaveFamily.KLEIN_GORDON:
        return u.c * math.hypot(k, compton_wavevector(model))
    if family == WaveFamily.EM_VACUUM:
        return u.c * abs(k)
    return u.sound_speed * abs(k)


def group_velocity(model: WaveModel, k: float) -> float:
    """群速度 dω/dk（解析式）"""
    _require_finite(k, "k")
    u = model.units
    family = model.family
    if family == WaveFamily.SCHRODINGER:
        return u.hbar * k / u.mass
    if family == WaveFamily.KLEIN_GORDON:
        # c²k/ω 写成 c·k/hypot(k, mc/ħ)，大 k 时严格小于 c
        return u.c * k / math.hypot(k, compton_wavevector(model))
    if k == 0.0:
        raise InvalidInputError(f"{family.value} group velocity needs k != 0")
    speed = u.c if family == WaveFamily.EM_VACUUM else u.sound_speed
    return math.copysign(speed, k)


def phase_velocity(model: WaveModel, k: float) -> float:
    """相速度 ω/k（有符号）"""
    _require_finite(k, "k")
    if k == 0.0:
        raise UndefinedPhaseVelocityError("phase velocity is undefined at k = 0")
    if model.family == WaveFamily.SCHRODINGER:
        return group_velocity(model, k) / 2.0
    return dispersion_omega(model, k) / k


def wavevector_from_group_speed(model: WaveModel, v_g: float) -> float:
    """由群速度反求波矢"""
    _require_finite(v_g, "v_g")
    u = model.units
    if model.family == WaveFamily.SCHRODINGER:
        return u.mass * v_g / u.hbar
    if model.family == WaveFamily.KLEIN_GORDON:
        if abs(v_g) >= u.c:
            raise SuperluminalError(f"|v_g| = {abs(v_g)!r} must be below c = {u.c!r}")
        beta = v_g / u.c
        gamma = 1.0 / math.sqrt((1.0 - beta) * (1.0 + beta))
        return gamma * u.mass * v_g / u.hbar
    raise WrongModelError(f"{model.family.value} group speed does not determine k")


def crest_speed(model: WaveModel, wave: PlaneWave) -> Optional[float]:
    """波峰速度；k = 0 时没有波峰，返回 None"""
    if wave.k == 0.0:
        return None
    return phase_velocity(model, wave.k)


def nonrelativistic_limit_error(model: WaveModel, k: float) -> float:
    """KG 精确频率扣除静止频率后，与 ħk²/2m 的相对偏差"""
    if model.family != WaveFamily.KLEIN_GORDON:
        raise WrongModelError("non-relativistic limit is defined for Klein-Gordon only")
    if k == 0.0:
        return 0.0
    u = model.units
    kc = compton_wavevector(model)
    # ω − mc²/ħ = c·k²/(hypot(k, kc) + kc)，避免相减抵消
    kinetic = u.c * k * k / (math.hypot(k, kc) + kc)
    newtonian = u.hbar * k * k / (2.0 * u.mass)
    return abs(kinetic - newtonian) / newtonian


def plane_wave(
    model: WaveModel,
    k: float,
    amplitude: complex = 1.0,
    phase0: float = 0.0,
) -> PlaneWave:
    """按色散关系构造平面波"""
    return PlaneWave(k=k, omega=dispersion_omega(model, k), amplitude=amplitude, phase0=phase0)


def check_plane_wave(model: WaveModel, wave: PlaneWave) -> None:
    """(k, ω) 必须满足色散关系（相对误差 1e-12）"""
    expected = dispersion_omega(model, wave.k)
    scale = max(abs(expected), abs(wave.omega))
    if scale == 0.0:
        return
    if abs(wave.omega - expected) > DISPERSION_TOLERANCE * scale:
        raise InvalidInputError(
            f"(k={wave.k!r}, omega={wave.omega!r}) violates {model.family.value} dispersion"
        )


def wavevector_from_omega(model: WaveModel, omega: float) -> float:
    """由角频率反求正向传播（k ≥ 0）的波矢"""
    _require_finite(omega, "omega")
    if omega < 0.0:
        raise InvalidInputError(f"omega must be non-negative, got {omega!r}")
    u = model.units
    family = model.family
    if family == WaveFamily.SCHRODINGER:
        return math.sqrt(2.0 * u.mass * omega / u.hbar)
    if family == WaveFamily.KLEIN_GORDON:
        kc = compton_wavevector(model)
        ratio = omega / u.c
        if ratio < kc:
            raise InvalidInputError(
                f"omega = {omega!r} is below the rest frequency {u.c * kc!r}"
            )
        return math.sqrt((ratio - kc) * (ratio + kc))
    if family == WaveFamily.EM_VACUUM:
        return omega / u.c
    return omega / u.sound_speed
