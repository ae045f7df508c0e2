from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


def random_spd(rng: np.random.Generator, d: int, cond: float = 50.0) -> np.ndarray:
    """Random SPD matrix with eigenvalues spread over ``[1, cond]``."""
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eig = np.exp(rng.uniform(0.0, np.log(cond), d))
    return (q * eig) @ q.T


# one verdict line per acceptance criterion, printed after the run
CRITERIA: dict = {}


@pytest.fixture
def criterion():
    def record(letter: str, ok: bool, detail: str) -> None:
        line = f"criterion {letter}: {'PASS' if ok else 'FAIL'}  {detail}"
        CRITERIA[letter] = line
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for letter in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[letter])
