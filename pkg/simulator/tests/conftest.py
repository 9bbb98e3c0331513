"""
测试公共夹具
"""
from pathlib import Path

import pytest

from app.models.wave import WaveFamily
from app.schemas.wave import Units, WaveModel
from app.services import tracer as tracer_service
from app.services.scenarios import build_fig1_scenario

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

# 超越实验几何：v_g = 0.2，匀速 V = 1，位移 L = 5，m = ħ = 1
OVERTAKE_V_G = 0.2
OVERTAKE_COAST = 1.0
OVERTAKE_DISPLACEMENT = 5.0


@pytest.fixture
def schrodinger() -> WaveModel:
    return WaveModel(family=WaveFamily.SCHRODINGER)


@pytest.fixture
def klein_gordon() -> WaveModel:
    return WaveModel(family=WaveFamily.KLEIN_GORDON, units=Units(c=10.0))


@pytest.fixture
def em_vacuum() -> WaveModel:
    return WaveModel(family=WaveFamily.EM_VACUUM, units=Units(c=10.0))


@pytest.fixture
def scenario_dir() -> Path:
    return SCENARIO_DIR


@pytest.fixture(scope="session")
def overtake_schrodinger_result():
    scenario = build_fig1_scenario(OVERTAKE_V_G, OVERTAKE_COAST, OVERTAKE_DISPLACEMENT)
    return tracer_service.run(scenario)


@pytest.fixture(scope="session")
def overtake_klein_gordon_result():
    model = WaveModel(family=WaveFamily.KLEIN_GORDON, units=Units(c=10.0))
    scenario = build_fig1_scenario(OVERTAKE_V_G, OVERTAKE_COAST, OVERTAKE_DISPLACEMENT, model=model)
    return tracer_service.run(scenario)


@pytest.fixture(scope="session")
def overtake_em_result():
    model = WaveModel(family=WaveFamily.EM_VACUUM, units=Units(c=10.0))
    scenario = build_fig1_scenario(None, OVERTAKE_COAST, OVERTAKE_DISPLACEMENT, model=model)
    return tracer_service.run(scenario)
