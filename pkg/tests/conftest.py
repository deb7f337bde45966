import numpy as np
import pytest

from boosted_glmb.models import (BearingRangeModel, ConstantVelocityModel, CoordinatedTurnModel,
                                 LinearPositionModel, ModelSet, SurvivalDetectionSpec)

_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): acceptance criterion check")


@pytest.fixture
def criterion(request):
    """Record one ``PASS``/``FAIL`` line for an acceptance check.

    Call the returned function with ``(ok, detail)`` before asserting.
    """
    name = request.node.get_closest_marker("acceptance").args[0]

    def record(ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE:
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ct_models():
    return ModelSet(CoordinatedTurnModel(), BearingRangeModel())


@pytest.fixture
def cv_models():
    probs = SurvivalDetectionSpec(p_S1=0.95, p_S0=0.9, p_D1=0.9, p_D0=0.5)
    return ModelSet(ConstantVelocityModel(sigma_w=1.0),
                    LinearPositionModel(Sigma=np.eye(2) * 4.0), probs=probs)
