import math

import numpy as np
import pytest
from hypothesis import strategies as st

from ghzqkd.protocol_ops import CoefficientTable

angles_theta = st.floats(0.0, math.pi, allow_nan=False)
angles_phase = st.floats(-math.pi, math.pi, allow_nan=False)
probabilities = st.floats(0.0, 1.0, allow_nan=False)


@pytest.fixture
def coeffs():
    return CoefficientTable.default()


def random_pure_density(rng, dim=8):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_mixed_density(rng, dim=8, rank=3):
    weights = rng.dirichlet(np.ones(rank))
    return sum(w * random_pure_density(rng, dim) for w in weights)


_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config.stash[_CRITERIA] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    passed = outcome.get_result().passed
    results = item.config.stash[_CRITERIA]
    results[number] = (passed and results.get(number, (True,))[0], title, call.duration)


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_CRITERIA, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        passed, title, seconds = results[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict}  {title} ({seconds:.2f} s)")
