"""
波动方程族
"""
import enum


class WaveFamily(str, enum.Enum):
    """色散关系族"""
    SCHRODINGER = "schrodinger"     # ω = ħk²/2m
    KLEIN_GORDON = "klein_gordon"   # ω = c·sqrt(k² + (mc/ħ)²)
    EM_VACUUM = "em_vacuum"         # ω = c|k|
    ACOUSTIC = "acoustic"           # ω = c_s|k|（介质系）
