import math

import numpy as np
import pytest
from hypothesis import strategies as st

from chiralnet.params import NetworkParams


def random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = A @ A.conj().T
    return rho / np.trace(rho)


rates = st.floats(0.0, 3.0, allow_nan=False)
freqs = st.floats(-2.0, 2.0, allow_nan=False)
phases = st.floats(0.0, 2 * math.pi, allow_nan=False, exclude_max=True)


@st.composite
def network_params(draw, symmetric=False, variant="with_cavity"):
    gR1 = draw(st.floats(0.1, 3.0))
    gL1 = draw(rates)
    gR2 = gR1 if symmetric else draw(st.floats(0.1, 3.0))
    gL2 = gL1 if symmetric else draw(rates)
    return NetworkParams(
        omega_c1=draw(freqs), omega_c2=draw(freqs), omega_a1=draw(freqs), omega_a2=draw(freqs),
        g1=draw(rates), g2=draw(rates), alpha=draw(phases),
        gamma_R1=gR1, gamma_R2=gR2, gamma_L1=gL1, gamma_L2=gL2,
        Gamma1=draw(st.floats(0.0, 0.5)), Gamma2=draw(st.floats(0.0, 0.5)),
        kD=draw(phases), variant=variant,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# One line per acceptance criterion, printed at the end of the run.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    def record(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  [{number:>2}] {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
