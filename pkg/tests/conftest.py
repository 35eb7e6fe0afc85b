import os

import numpy as np
import pytest
from hypothesis import settings

from skytrail.geometry import PointCloud, Sensor
from skytrail.synth import generate, standard_suite

settings.register_profile("default", max_examples=60, deadline=None)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def make_cloud(xyz, frames=None, sensor=Sensor.AVIA, frame_rate=10.0):
    xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
    n = len(xyz)
    frames = np.zeros(n, dtype=int) if frames is None else np.asarray(frames)
    sensors = np.full(n, int(sensor)) if np.isscalar(sensor) or isinstance(sensor, Sensor) else np.asarray(sensor)
    return PointCloud(xyz, frames / frame_rate, sensors, frames)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def suite_scenes():
    return {spec.name: generate(spec) for spec in standard_suite()}


# one PASS/FAIL line per acceptance criterion in the terminal summary
_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    num, title = mark.args
    if rep.when == "setup" and rep.passed:
        return
    detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    _criteria[num] = ("PASS" if rep.passed else "FAIL", title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        status, title, detail = _criteria[num]
        line = f"{status} criterion {num}: {title}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
