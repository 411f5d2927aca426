import numpy as np
import pytest

from attrition.domain import build_matrix
from attrition.synth import default_department_spec, generate_cohort


@pytest.fixture(scope="session")
def default_cohort():
    records, curriculum, planted = generate_cohort(default_department_spec(7))
    return records, curriculum, planted


@pytest.fixture(scope="session")
def default_matrix(default_cohort):
    records, curriculum, _ = default_cohort
    return build_matrix(records, curriculum)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance_log(request):
    return request.config.stash[_ACCEPTANCE]


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line[1])
