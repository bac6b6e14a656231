import math

import numpy as np
import pytest

from ttwlab.models import model
from ttwlab.sampling import sample_points

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, summary: str) -> None:
    ACCEPTANCE[n] = (bool(ok), summary)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, summary = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {summary}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def ttw2():
    return model("ttw", k=2, alpha=0.5, beta=0.7, omega=1.0)


@pytest.fixture(scope="session")
def ttw2_points(ttw2):
    return sample_points(ttw2, 100, seed=3)


def wedge_point(m, r=1.3, offset=0.05, pr=0.2, pphi=0.4):
    return m.point([r, math.pi / (4 * m.k) + offset], [pr, pphi])
