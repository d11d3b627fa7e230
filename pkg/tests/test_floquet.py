import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from floquet_loss import floquet as fl
from floquet_loss.charge import TransmonParams, build_static_hamiltonian, hamiltonian_at_time, static_eigensystem
from floquet_loss.floquet import (
    FloquetError,
    ModeLabel,
    NumericalConfig,
    TruncationWarning,
    averaged_energy,
    check_truncation,
    classify_chaotic,
    compute_floquet_basis,
    floquet_basis,
    fold_quasienergy,
    mode_table,
    one_period_propagator,
    propagate_period,
)
from floquet_loss.units import ghz

from conftest import drive, fold_reference, q1, small_cfg


def unitarity(u):
    return np.abs(u.conj().T @ u - np.eye(len(u))).max()


def ode_propagator(params, drv):
    """Independent oracle: adaptive Runge-Kutta on i d/dt U = H(t) U."""
    dim = params.dim

    def rhs(t, y):
        u = y.reshape(dim, dim)
        return (-1j * hamiltonian_at_time(params, drv, t) @ u).ravel()

    sol = solve_ivp(rhs, (0.0, drv.period), np.eye(dim, dtype=complex).ravel(),
                    method="DOP853", rtol=1e-12, atol=1e-13)
    return sol.y[:, -1].reshape(dim, dim)


def test_config_defaults_and_validation():
    cfg = NumericalConfig()
    assert (cfg.dim, cfg.k_max, cfg.n_t, cfg.n_big_t) == (401, 200, 2001, 20001)
    assert cfg.n_steps >= cfg.n_big_t - 1
    for bad in (dict(n_t=2), dict(n_big_t=2), dict(dim=4), dict(k_max=-1), dict(d_active=0)):
        with pytest.raises(ValueError):
            NumericalConfig(**bad)
    with pytest.raises(ValueError):
        one_period_propagator(q1(dim=11), drive(1.0), NumericalConfig(dim=13))


def test_zero_drive_propagator_is_static_exponential():
    p = q1(dim=11)
    d = drive(0.0)
    u = one_period_propagator(p, d, small_cfg(n_t=201, n_big_t=4001))
    ref = expm(-1j * build_static_hamiltonian(p).matrix * d.period)
    assert np.abs(u - ref).max() < 1e-8


def test_small_system_matches_ode_oracle():
    p = q1(dim=5)
    d = drive(1.0)
    u = one_period_propagator(p, d, NumericalConfig(dim=5))
    assert np.abs(u - ode_propagator(p, d)).max() < 1e-8


def test_small_system_matches_refined_steps():
    p = q1(dim=5)
    d = drive(1.0)
    base = NumericalConfig(dim=5, n_t=201, n_big_t=20001)
    fine = base.with_(n_big_t=200001)
    assert np.abs(one_period_propagator(p, d, base) - one_period_propagator(p, d, fine)).max() < 1e-8


@given(
    dim=st.sampled_from([3, 5, 9, 15]),
    om=st.floats(0.0, 30.0),
    wd=st.floats(2.0, 8.0),
    n_g=st.floats(-0.5, 0.5),
)
@settings(max_examples=15, deadline=None)
def test_propagator_unitary(dim, om, wd, n_g):
    p = q1(dim=dim, n_g=n_g)
    u = one_period_propagator(p, drive(om, wd), small_cfg(n_t=31, n_big_t=301))
    assert unitarity(u) < 1e-8


def test_propagator_independent_of_worker_count():
    p = q1(dim=15)
    d = drive(8.0)
    cfg = small_cfg(n_t=64, n_big_t=640)
    u1, a1 = propagate_period(p, d, cfg, workers=1)
    u3, a3 = propagate_period(p, d, cfg, workers=3)
    assert np.array_equal(u1, u3) and np.array_equal(a1, a3)
    b1 = compute_floquet_basis(u1, p, d, cfg, a1)
    b3 = compute_floquet_basis(u3, p, d, cfg, a3)
    assert np.array_equal(b1.quasienergies, b3.quasienergies)


def test_non_unitary_step_raises(monkeypatch):
    orig = fl._SplitStepper.interval
    monkeypatch.setattr(fl._SplitStepper, "interval", lambda self, s: 1.001 * orig(self, s))
    with pytest.raises(FloquetError, match="n_big_t"):
        one_period_propagator(q1(dim=5), drive(1.0), small_cfg(n_t=11, n_big_t=101))


def test_zero_drive_basis_matches_static_spectrum():
    p = q1(dim=21)
    d = drive(0.0)
    cfg = small_cfg(n_t=401, n_big_t=8001)
    b = floquet_basis(p, d, cfg)
    vals, vecs = static_eigensystem(p)
    fid = np.abs(np.sum(vecs.conj() * b.modes0, axis=0)) ** 2
    assert np.all(fid[:5] > 1 - 1e-9)
    ref = fold_reference(vals, d.omega_d)
    assert np.all(np.abs(b.quasienergies - ref) < 1e-9 * d.omega_d)
    assert np.allclose(b.avg_energy, vals, rtol=1e-9, atol=0)


def test_basis_invariants_under_drive():
    p = q1(dim=31)
    d = drive(6.0)
    b = floquet_basis(p, d, small_cfg())
    assert np.abs(b.modes0.conj().T @ b.modes0 - np.eye(31)).max() < 1e-8
    w = d.omega_d
    assert np.all(b.quasienergies > -w / 2) and np.all(b.quasienergies <= w / 2)
    assert np.array_equal(np.sort(b.order), np.arange(31))
    assert np.all(np.diff(b.avg_energy) >= 0)


def test_very_weak_drive_lowest_modes_regular():
    # levels 2-4 sit within ~0.25 GHz of one-photon resonances, so keep the drive tiny
    p = q1(dim=41)
    b = floquet_basis(p, drive(0.05), small_cfg())
    _, vecs = static_eigensystem(p)
    cls = classify_chaotic(b, vecs)
    assert cls.n_ch == 0
    for i in range(8):
        assert cls.overlaps[i].argmax() == i
    assert np.all(np.diag(cls.overlaps)[:2] > 0.99)


def test_drive_2p2_ghz_small_chaotic_block_then_diagonal():
    # near-resonant dressing already mixes the lowest levels; above a small
    # block the overlap matrix is diagonal
    p = q1(dim=41)
    b = floquet_basis(p, drive(2.2), small_cfg())
    _, vecs = static_eigensystem(p)
    cls = classify_chaotic(b, vecs)
    assert 0 < cls.n_ch <= 15
    for i in range(cls.n_ch + 2, 25):
        assert cls.overlaps[i].argmax() == i
        assert cls.labels[i] is ModeLabel.REGULAR


def test_degenerate_point_is_reproducible():
    # n_g = 0 with weak Josephson coupling: +-m charge pairs nearly degenerate
    p = TransmonParams(e_c=ghz(0.3), e_j=0.0, n_g=0.0, dim=9)
    d = drive(0.0, 4.0)
    cfg = small_cfg(n_t=21, n_big_t=201)
    b1 = floquet_basis(p, d, cfg)
    b2 = floquet_basis(p, d, cfg)
    assert np.array_equal(b1.modes0, b2.modes0)
    assert np.abs(b1.modes0.conj().T @ b1.modes0 - np.eye(9)).max() < 1e-12
    # each mode is a pure charge state (canonical inside the degenerate pair)
    assert np.allclose(np.abs(b1.modes0).max(axis=0), 1.0)


def test_mode_table_properties():
    p = q1(dim=21)
    d = drive(5.0)
    cfg = small_cfg(n_t=128, n_big_t=2561)
    b = floquet_basis(p, d, cfg)
    tab = mode_table(b, p, d, cfg)
    assert np.array_equal(tab.samples[0], b.modes0)
    gram = np.einsum("sai,saj->sij", tab.samples.conj(), tab.samples)
    assert np.abs(gram - np.eye(21)).max() < 1e-6
    assert tab.closure > 1 - 1e-6
    assert np.allclose(tab.times, np.arange(128) * d.period / 128)


def test_zero_drive_table_is_static():
    p = q1(dim=15)
    d = drive(0.0)
    cfg = small_cfg(n_t=50, n_big_t=4001)
    b = floquet_basis(p, d, cfg)
    tab = mode_table(b, p, d, cfg)
    for snap in tab.samples:
        overlap = np.sum(b.modes0.conj() * snap, axis=0)
        assert np.all(np.abs(np.abs(overlap) - 1) < 1e-8)
        assert np.abs(snap - b.modes0 * overlap).max() < 1e-8


def test_averaged_energy_cross_check_and_gauge():
    p = q1(dim=21)
    d = drive(5.0)
    cfg = small_cfg(n_t=128, n_big_t=2561)
    b = floquet_basis(p, d, cfg)
    tab = mode_table(b, p, d, cfg)
    hq = averaged_energy(b, tab, p, d)
    assert np.allclose(hq, b.avg_energy, rtol=1e-9, atol=1e-9 * np.abs(hq).max())
    shifted = dataclasses.replace(tab, samples=tab.samples * np.exp(1j * d.omega_d * tab.times)[:, None, None])
    assert np.allclose(averaged_energy(b, shifted, p, d), hq, rtol=1e-9, atol=1e-9 * np.abs(hq).max())


def test_zero_drive_averaged_energy_equals_eigenvalues():
    p = q1(dim=21)
    d = drive(0.0)
    cfg = small_cfg(n_t=64, n_big_t=4001)
    b = floquet_basis(p, d, cfg)
    tab = mode_table(b, p, d, cfg)
    vals, _ = static_eigensystem(p)
    assert np.allclose(averaged_energy(b, tab, p, d), vals, rtol=1e-9, atol=0)


def test_fourier_parseval_of_modes():
    p = q1(dim=21)
    d = drive(5.0)
    cfg = small_cfg(n_t=128, n_big_t=2561)
    b = floquet_basis(p, d, cfg)
    tab = mode_table(b, p, d, cfg)
    c = np.fft.fft(tab.samples, axis=0) / tab.n_t
    total = np.sum(np.abs(c) ** 2, axis=(0, 1))
    assert np.all(np.abs(total - 1) < 1e-6)


def test_classification_zero_drive_and_row_sums():
    p = q1(dim=21)
    b = floquet_basis(p, drive(0.0), small_cfg(n_t=64, n_big_t=1281))
    _, vecs = static_eigensystem(p)
    cls = classify_chaotic(b, vecs)
    assert cls.n_ch == 0
    assert all(lbl is ModeLabel.REGULAR for lbl in cls.labels)
    assert np.abs(cls.overlaps.sum(axis=1) - 1).max() < 1e-8


@given(st.floats(-1e12, 1e12), st.floats(1e9, 1e11))
def test_folding(eps, wd):
    f = fold_quasienergy(eps, wd)
    assert -wd / 2 < f <= wd / 2
    n = (eps - f) / wd
    assert abs(n - round(n)) < 1e-6


def test_truncation_warning():
    modes = np.zeros((11, 2))
    modes[0, 0] = 1.0
    modes[5, 1] = 1.0
    with pytest.warns(TruncationWarning):
        assert check_truncation(modes) == 1.0
    assert check_truncation(modes[:, 1:]) == 0.0
