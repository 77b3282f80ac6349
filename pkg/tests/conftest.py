import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cdca.bench import InstanceSpec, generate_instance
from cdca.operators import RegularizerSpec, estimate_lipschitz

settings.register_profile(
    "default", deadline=None, max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", help="run the long reproduction checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_instance(m, n, K, seed=0, kind="l12", noise=0.001, normalize=True):
    spec = InstanceSpec(m, n, K, noise_scale=noise, seed=seed,
                        regularizer=RegularizerSpec(kind), normalize_columns=normalize)
    inst = generate_instance(spec)
    return inst, inst.problem(estimate_lipschitz(inst.data, tolerance=1e-12).value)
