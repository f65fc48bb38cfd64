import numpy as np
import pytest

from modnet.core import MnmModel

ACCEPTANCE_LINES = []


def record_criterion(name: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def chain_model(p=6, weight=0.3):
    """Pairwise chain 1-2-...-p with a single 3-way term on (1, 2, 3)."""
    beta = {(k, k + 1): weight for k in range(1, p)}
    return MnmModel(p, np.zeros(p), beta, {(1, 2, 3): 0.15}, np.ones(p))
