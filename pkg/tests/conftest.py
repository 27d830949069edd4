import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tsfrac import build_mesh, preset

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

PRESET_H = {"unit-interval": 1 / 64, "integer-4": 1.0, "mixed": 0.25}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=sorted(PRESET_H))
def preset_mesh(request):
    return build_mesh(preset(request.param), PRESET_H[request.param])


@pytest.fixture
def mixed_scale():
    return preset("mixed")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
