import numpy as np
import pytest

from lindbraid.model import ModelParams


@pytest.fixture
def defaults():
    """Reference parameter point used throughout: gamma_B=0.5, Omega_B=0.1."""
    return ModelParams()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        print(f"\n[acceptance] {name}: {report.outcome.upper()}")
