import pytest
from hypothesis import HealthCheck, settings

from _helpers import FROZEN_SEED
from cogsec.rng import stream

settings.register_profile("repo", derandomize=True, deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture
def rng():
    return stream(20240611, "tests")


@pytest.fixture(scope="session")
def scenario_records():
    """One default-config run of every scenario kind at the frozen seed."""
    from cogsec.harness import KINDS, run_scenario
    return {kind: run_scenario({"kind": kind, "seed": FROZEN_SEED}, write=False) for kind in KINDS}
