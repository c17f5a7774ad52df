import json
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bergman_dpp.hilbert import BergmanEvaluator
from bergman_dpp.weights import catalog, quadratic

settings.register_profile("default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def oracles():
    return json.loads((DATA / "oracles.json").read_text())


@lru_cache(maxsize=None)
def evaluator(name: str, k: int, n: int = 1) -> BergmanEvaluator:
    """Shared read-only bases; ``name`` is a catalog key or ``quadratic:a``."""
    if name.startswith("quadratic:"):
        w = quadratic(float(name.split(":")[1]), n)
    else:
        w = catalog(n)[name]
    return BergmanEvaluator.build(w, k)


def fock_rho1(k, z):
    """Closed form for phi = |z|^2 via the regularized incomplete gamma function."""
    from scipy.special import gammaincc

    return k / np.pi * gammaincc(k + 1, k * np.abs(z) ** 2)


def pts(z):
    return np.atleast_1d(np.asarray(z, complex))[:, None]


ACCEPTANCE_LINES = []


def report_line(label: str, passed: bool, detail: str) -> bool:
    """Record one acceptance line; it is echoed in the terminal summary."""
    line = f"{label}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
