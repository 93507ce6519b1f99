import json
from pathlib import Path

import numpy as np
import pytest

from funnel_semiconvex.envelope import EnvelopeResult
from funnel_semiconvex.modulus import Power
from funnel_semiconvex.omega_eta import PowerShiftWidth, build_grid, compute_omega_eta

ORACLES = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())
CONFIGS = Path(__file__).resolve().parents[1] / "configs"

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def oracles():
    return ORACLES


@pytest.fixture
def record_criterion():
    def record(number: int, passed: bool, detail: str = ""):
        _ACCEPTANCE[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def small_run():
    """Power(0.5) with width (1+x)^0.4 up to 1000; fast enough for unit tests."""
    om, eta = Power(0.5), PowerShiftWidth(0.4, 1.0)
    res = compute_omega_eta(om, eta, build_grid(eta, 1000.0, include=(1.0,)))
    return om, eta, res, EnvelopeResult.of(res)


@pytest.fixture(scope="session")
def standard_run():
    """The divergence-scale run: grid to 1.05e6 so probes up to 1e6 fit in the domain."""
    om, eta = Power(0.5), PowerShiftWidth(0.4, 1.0)
    res = compute_omega_eta(om, eta, build_grid(eta, 1.05e6, include=(1.0,)))
    return om, eta, res, EnvelopeResult.of(res)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
