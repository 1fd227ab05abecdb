import numpy as np
import pytest

from hubbard_vca.model import ClusterModel, VariationalParams

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def tb_model():
    return ClusterModel(dimension=1, L_c=2, N_c=50, t=1.0, U=0.0, mu=0.0, T=1.0)


@pytest.fixture
def zero_fields():
    return VariationalParams()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
