"""Conversions between readout-resonator observables and the qubit drive.

All rates and frequencies are angular (rad/s), powers in watts. The mapping
assumes a resonant probe (``omega_d = omega_r``), where the coherent field
amplitude fixes the drive as ``Omega_q = 2 g sqrt(N_r)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectra import DEFAULT_GAP_UEV
from .units import E_CHARGE, HBAR, mhz, uev

DEFAULT_KAPPA_BOUND = mhz(1e4)


@dataclass(frozen=True)
class ResonatorParams:
    omega_r: float
    g: float
    kappa_ex: float
    kappa_o: float

    def __post_init__(self):
        for name in ("omega_r", "g", "kappa_ex", "kappa_o"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class ComparisonPoint:
    n_r: float
    omega_q_drive: float
    p_r: float | None = None
    kappa_meas: float | None = None
    noise_photons: float | None = None
    kappa_pred: float | None = None

    def __post_init__(self):
        if not self.n_r > 0:
            raise ValueError("n_r must be positive")


def omega_q_from_photons(g, n_r):
    n_r = np.asarray(n_r, dtype=float)
    if np.any(n_r < 0):
        raise ValueError("n_r must be non-negative")
    return 2.0 * g * np.sqrt(n_r)


def photons_from_omega_q(g, omega_q):
    """Inverse of :func:`omega_q_from_photons`."""
    return (np.asarray(omega_q, dtype=float) / (2.0 * g)) ** 2


def photons_from_power(p_r, omega_d, kappa_ex, kappa):
    """Intracavity photon number ``2 P_r kappa_ex / (hbar omega_d kappa^2)``."""
    p_r = np.asarray(p_r, dtype=float)
    if np.any(p_r < 0) or not (omega_d > 0 and kappa_ex > 0 and kappa > 0):
        raise ValueError("power must be non-negative and rates positive")
    return 2.0 * p_r * kappa_ex / (HBAR * omega_d * kappa**2)


def power_from_photons(n_r, omega_d, kappa_ex, kappa):
    """Inverse of :func:`photons_from_power`."""
    return np.asarray(n_r, dtype=float) * HBAR * omega_d * kappa**2 / (2.0 * kappa_ex)


def kappa_from_s21(kappa_ex, s21_min, bound: float = DEFAULT_KAPPA_BOUND):
    """Total linewidth from the transmission dip depth.

    Raises when there is no dip (``s21_min >= 1``) or when the result exceeds
    ``bound`` (rad/s), which guards against dips that are too shallow to invert.
    """
    s21_min = np.asarray(s21_min, dtype=float)
    if np.any(s21_min < 0) or np.any(s21_min >= 1):
        raise ValueError("s21_min must lie in [0, 1)")
    kappa = kappa_ex / (1.0 - s21_min)
    if np.any(kappa > bound):
        raise ValueError(f"kappa {np.max(kappa):.4g} rad/s exceeds the bound {bound:.4g} rad/s")
    return kappa


def s21_from_kappa(kappa_ex, kappa):
    """Inverse of :func:`kappa_from_s21`."""
    return 1.0 - kappa_ex / np.asarray(kappa, dtype=float)


def noise_power(noise_photons, omega_d, kappa):
    """``R = hbar omega_d kappa <da^dag da>`` in watts."""
    return HBAR * omega_d * kappa * np.asarray(noise_photons, dtype=float)


def predicted_kappa(loss, n_r, omega_d, kappa_o, r_power=None):
    """``kappa_o + (T + R) / (hbar omega_d N_r)``.

    ``loss`` is a :class:`LossReport` or a power in watts; ``r_power`` in watts
    (zero when omitted).
    """
    if not n_r > 0:
        raise ValueError("n_r must be positive")
    t = getattr(loss, "loss_total", loss)
    r = 0.0 if r_power is None else r_power
    return kappa_o + (t + r) / (HBAR * omega_d * n_r)


@dataclass(frozen=True)
class JunctionVoltage:
    amplitude: float
    ok: bool


def vjj_amplitude(omega_q, delta_al=uev(DEFAULT_GAP_UEV)) -> JunctionVoltage:
    """Semiclassical junction voltage ``hbar Omega_q / 2e``.

    ``ok`` is False once the amplitude reaches the pair-breaking voltage ``2 Delta / e``.
    """
    if not omega_q >= 0:
        raise ValueError("omega_q must be non-negative")
    v = HBAR * omega_q / (2.0 * E_CHARGE)
    return JunctionVoltage(float(v), bool(v < 2.0 * delta_al / E_CHARGE))
