import math

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from dmberry.model import ModelParams

settings.register_profile("default", derandomize=True)
settings.load_profile("default")

coupling = st.floats(-5, 5, allow_nan=False)
params_st = st.builds(
    ModelParams,
    j=coupling,
    jz=coupling,
    d=coupling,
    b=st.floats(0, 5, allow_nan=False),
    theta=st.floats(0, math.pi, allow_nan=False),
)
phi_st = st.floats(-10, 10, allow_nan=False)


def random_params(rng, scale=5.0, b=None):
    j, jz, d = rng.uniform(-scale, scale, 3)
    bb = rng.uniform(0, scale) if b is None else b
    return ModelParams(j, jz, d, bb, rng.uniform(0, math.pi))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fig_params():
    """Reference point used throughout: j=1, jz=1.1, d=0.5, b=1, theta=pi/4."""
    return ModelParams(1.0, 1.1, 0.5, 1.0, math.pi / 4)


@pytest.fixture(scope="session")
def figure(request):
    """Lazily built figure tables, shared across the session."""
    from dmberry.sweep import figure_table

    cache = {}

    def get(k):
        if k not in cache:
            cache[k] = figure_table(k)
        return cache[k]

    return get


_CRITERIA = pytest.StashKey[list]()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    rep = outcome.get_result()
    if mark is None or rep.when != "call":
        return
    detail = dict(item.user_properties).get("detail", "")
    line = f"criterion {mark.args[0]:>2}: {'PASS' if rep.passed else 'FAIL'}  {detail}".rstrip()
    item.config.stash.setdefault(_CRITERIA, []).append((mark.args[0], line))
    print("\n" + line)


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
