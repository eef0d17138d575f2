import pytest
from hypothesis import HealthCheck, settings

# scan kernels JIT on first use; a fixed deadline would blame the test
settings.register_profile(
    "suite", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile (or load from cache) the scan kernels once per session so
    timings and deadlines never include JIT cost."""
    from rhseg._kernels import warm_up

    warm_up()
