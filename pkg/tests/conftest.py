import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from zrsim.experiments import GridRange, SweepSpec, sweep_region_map
from zrsim.user_model import ModelParams

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_ACCEPTANCE = pytest.StashKey[dict]()


def random_params(rng: np.random.Generator, max_rate: float = 20.0) -> ModelParams:
    """Draw p, c and rates uniformly; pick t above the Hotelling gap."""
    p = rng.uniform(0.05, 0.9)
    c = rng.uniform(0.5, 100.0)
    a1, a2 = rng.uniform(0.0, max_rate, size=2)
    gap = ModelParams(p, c, 1.0, 1.0).hotelling_gap()
    t1, t2 = gap * rng.uniform(1.01, 5.0, size=2)
    return ModelParams(p, c, t1, t2, a1, a2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def base():
    return ModelParams.symmetric(0.35, 4.0, 3.0)


def map_spec(**kw) -> SweepSpec:
    return SweepSpec(**{"a1": GridRange.up_to(10.0, 60), **kw})


@pytest.fixture(scope="session")
def map_t3():
    spec = map_spec()
    return spec, sweep_region_map(spec)


@pytest.fixture(scope="session")
def map_t1000():
    spec = map_spec(t1=1000.0, t2=1000.0)
    return spec, sweep_region_map(spec)


@pytest.fixture(scope="session")
def acceptance(request):
    return request.config.stash.setdefault(_ACCEPTANCE, {})


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
