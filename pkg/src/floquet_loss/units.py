"""Physical constants and unit helpers.

Internally every frequency-like quantity is an angular frequency in rad/s and
energies are stored divided by hbar (also rad/s). Config files and CSV output
use GHz/MHz meaning ``value / 2pi``.
"""

import numpy as np
from scipy import constants as _c

H = _c.h
HBAR = _c.hbar
E_CHARGE = _c.e
K_B = _c.k
TWO_PI = 2.0 * np.pi

#: Conductance quantum e^2/h (inverse von Klitzing constant).
G_K = E_CHARGE**2 / H


def ghz(value):
    """GHz (cyclic) -> rad/s."""
    return TWO_PI * 1e9 * value


def mhz(value):
    """MHz (cyclic) -> rad/s."""
    return TWO_PI * 1e6 * value


def to_ghz(omega):
    """rad/s -> GHz (cyclic)."""
    return omega / (TWO_PI * 1e9)


def to_mhz(omega):
    """rad/s -> MHz (cyclic)."""
    return omega / (TWO_PI * 1e6)


def uev(value):
    """Micro-electronvolt -> joule."""
    return float(value) * 1e-6 * E_CHARGE


def dbm_to_watts(p_dbm):
    return 1e-3 * 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0)
