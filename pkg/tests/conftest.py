import numpy as np
import pytest

from floquet_loss.charge import DriveParams, TransmonParams
from floquet_loss.floquet import NumericalConfig
from floquet_loss.units import ghz

Q1_EC_GHZ = 0.259
Q1_EJ_GHZ = 14.24
Q1_WD_GHZ = 4.284


def q1(dim=21, n_g=0.25):
    return TransmonParams.from_ghz(Q1_EC_GHZ, Q1_EJ_GHZ, n_g=n_g, dim=dim)


def drive(omega_q_ghz, omega_d_ghz=Q1_WD_GHZ):
    return DriveParams.from_ghz(omega_q_ghz, omega_d_ghz)


def small_cfg(n_t=201, n_big_t=2001, k_max=50, **kw):
    return NumericalConfig(dim=None, n_t=n_t, n_big_t=n_big_t, k_max=k_max, **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def fold_reference(energies, omega_d):
    """Independent Brillouin folding: shift by whole periods into (-w/2, w/2]."""
    out = []
    for e in energies:
        n = np.ceil((e - omega_d / 2) / omega_d)
        f = e - n * omega_d
        if f <= -omega_d / 2:
            f += omega_d
        out.append(f)
    return np.array(out)


__all__ = ["q1", "drive", "small_cfg", "fold_reference", "ghz", "record_criterion"]


# one verdict line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
