"""Zero-temperature bath spectra for radiative, dielectric and pair-breaking loss.

Every spectrum maps an angular frequency (rad/s) to a rate density in 1/s per
unit squared matrix element. All spectra vanish for ``omega <= 0``: only
emission into the baths is allowed.

The pair-breaking (QPG) spectrum needs the dimensionless integrals

    S+-(w) = int_1^{w-1} dx (x(w-x) +- 1) / (sqrt(x^2-1) sqrt((w-x)^2-1)),

with ``w = hbar omega / Delta``. Writing ``x = 1 + a``, ``w - x = 1 + b`` and
``a = (w-2)(1 - cos t)/2`` turns both inverse-square-root endpoints into a
smooth integrand on ``t in [0, pi]``,

    S+-(w) = int_0^pi dt ((1+a)(1+b) +- 1) / sqrt((2+a)(2+b)),

which Gauss-Legendre integrates to machine precision with a few dozen nodes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .charge import OperatorKind
from .units import G_K, HBAR, K_B, TWO_PI, ghz, uev

DEFAULT_Q_RAD = 3830.0
DEFAULT_Q_DIEL = 4.8e5
DEFAULT_DIEL_CUTOFF_GHZ = 1000.0
DEFAULT_QPG_CUTOFF_GHZ = 17.0
DEFAULT_GAP_UEV = 180.0

_GL_NODES = 64
_GL_CHECK = 32
_S_RTOL = 1e-10
_CHUNK = 1 << 15


class QuadratureError(RuntimeError):
    pass


class Mechanism(str, enum.Enum):
    RAD = "rad"
    DIEL = "diel"
    QPG = "qpg"


class Branch(str, enum.Enum):
    PLUS = "plus"
    MINUS = "minus"


def _leg(n):
    x, w = np.polynomial.legendre.leggauss(n)
    # map [-1, 1] -> [0, pi]
    return 0.5 * np.pi * (x + 1.0), 0.5 * np.pi * w


_NODES = _leg(_GL_NODES)
_NODES_CHECK = _leg(_GL_CHECK)


def _s_theta_integrand(theta, eps, sign):
    c = np.cos(theta)
    a = 0.5 * eps * (1.0 - c)
    b = 0.5 * eps * (1.0 + c)
    return ((1.0 + a) * (1.0 + b) + sign) / np.sqrt((2.0 + a) * (2.0 + b))


def _s_gauss(eps, sign, nodes):
    t, wt = nodes
    vals = _s_theta_integrand(t[None, :], eps[:, None], sign)
    return vals @ wt


def _s_quad(eps, sign):
    val, err = integrate.quad(_s_theta_integrand, 0.0, np.pi, args=(eps, sign), epsabs=0.0, epsrel=1e-12, limit=200)
    bound = 1e-8 * max(abs(val), 1e-300)
    if not err <= bound:
        raise QuadratureError(f"S integral did not converge at w={eps + 2:.6g}: estimate {val:.12g}, error {err:.3g} > {bound:.3g}")
    return val


def _s_pm(w, sign):
    w = np.asarray(w, dtype=float)
    out = np.zeros(w.shape)
    flat_w = w.ravel()
    flat = out.ravel()
    above = np.flatnonzero(flat_w > 2.0)
    for start in range(0, len(above), _CHUNK):
        idx = above[start:start + _CHUNK]
        eps = flat_w[idx] - 2.0
        fine = _s_gauss(eps, sign, _NODES)
        coarse = _s_gauss(eps, sign, _NODES_CHECK)
        scale = np.maximum(np.abs(fine), np.finfo(float).tiny)
        bad = np.abs(fine - coarse) > _S_RTOL * scale
        for b in np.flatnonzero(bad):
            fine[b] = _s_quad(eps[b], sign)
        flat[idx] = fine
    return out.reshape(w.shape) if w.ndim else float(out)


def s_plus(w):
    """S+ as a function of ``w = hbar omega / Delta``; zero for ``w <= 2``."""
    return _s_pm(w, 1.0)


def s_minus(w):
    """S- as a function of ``w = hbar omega / Delta``; zero for ``w <= 2``."""
    return _s_pm(w, -1.0)


def s_plus_threshold(w):
    """Leading behaviour of S+ just above ``w = 2``."""
    return np.pi * (1.0 + (np.asarray(w, dtype=float) - 2.0) / 4.0)


def s_minus_threshold(w):
    """Leading behaviour of S- just above ``w = 2``."""
    return 0.5 * np.pi * (np.asarray(w, dtype=float) - 2.0)


def s_large(w):
    """Common large-``w`` behaviour of S+ and S-."""
    return np.asarray(w, dtype=float)


@dataclass(frozen=True)
class RadiativeBath:
    """Ohmic radiative bath ``J = omega / q_rad``, coupled through the charge operator."""

    q_rad: float = DEFAULT_Q_RAD

    def __post_init__(self):
        if not self.q_rad > 0:
            raise ValueError("q_rad must be positive")

    mechanism = Mechanism.RAD

    def channels(self):
        return ((OperatorKind.NUMBER, lambda om: j_rad(om, self)),)


@dataclass(frozen=True)
class DielectricBath:
    """Dielectric bath coupled through the phase, ``1/Q(omega) = (1/q_diel) exp(-omega/omega_c)``.

    ``e_c`` is the charging energy over hbar (rad/s), ``omega_c`` in rad/s.
    """

    e_c: float
    q_diel: float = DEFAULT_Q_DIEL
    omega_c: float = ghz(DEFAULT_DIEL_CUTOFF_GHZ)

    def __post_init__(self):
        if not self.q_diel > 0 or not self.omega_c > 0 or not self.e_c > 0:
            raise ValueError("q_diel, omega_c and e_c must be positive")

    mechanism = Mechanism.DIEL

    def channels(self):
        return ((OperatorKind.PHASE, lambda om: j_diel(om, self)),)


@dataclass(frozen=True)
class QpgBath:
    """Pair-breaking bath of a single junction.

    ``e_j`` is the Josephson energy over hbar (rad/s), ``delta_al`` the gap in
    joules and ``omega_c`` the common cutoff of both branches (rad/s).
    """

    e_j: float
    delta_al: float = uev(DEFAULT_GAP_UEV)
    omega_c: float = ghz(DEFAULT_QPG_CUTOFF_GHZ)

    def __post_init__(self):
        if not self.delta_al > 0 or not self.omega_c > 0:
            raise ValueError("delta_al and omega_c must be positive")
        if not self.e_j >= 0:
            raise ValueError("e_j must be non-negative")

    mechanism = Mechanism.QPG

    @property
    def gap_frequency(self) -> float:
        """Pair-breaking threshold ``2 Delta / hbar`` in rad/s."""
        return 2.0 * self.delta_al / HBAR

    def channels(self):
        return (
            (OperatorKind.SIN_HALF_PHASE, lambda om: j_qpg(om, self, Branch.PLUS)),
            (OperatorKind.COS_HALF_PHASE, lambda om: j_qpg(om, self, Branch.MINUS)),
        )


def _positive_part(omega):
    omega = np.asarray(omega, dtype=float)
    return omega, omega > 0


def j_rad(omega, bath: RadiativeBath):
    omega, pos = _positive_part(omega)
    return np.where(pos, omega, 0.0) / bath.q_rad


def j_diel(omega, bath: DielectricBath):
    omega, pos = _positive_part(omega)
    om = np.where(pos, omega, 0.0)
    return om**2 / (4.0 * bath.e_c * bath.q_diel) * np.exp(-om / bath.omega_c)


def j_qpg(omega, bath: QpgBath, branch=Branch.PLUS, cutoff: bool = True):
    """``(16 E_J / h) S(omega) / (1 + (omega/omega_c)^2)``; ``cutoff=False`` drops the Lorentzian."""
    omega = np.asarray(omega, dtype=float)
    w = HBAR * omega / bath.delta_al
    s = s_plus(w) if Branch(branch) is Branch.PLUS else s_minus(w)
    out = 16.0 * bath.e_j / TWO_PI * np.asarray(s)
    if cutoff:
        out = out / (1.0 + (omega / bath.omega_c) ** 2)
    return out


def qpg_conductance(omega, bath: QpgBath):
    """Junction conductance ``sigma = pi g_K J+(omega) / omega`` in siemens."""
    omega = np.asarray(omega, dtype=float)
    if np.any(~(omega > 0)):
        raise ValueError("qpg_conductance requires omega > 0")
    return np.pi * G_K * j_qpg(omega, bath, Branch.PLUS) / omega


def x_qp_thermal(theta, delta_al=uev(DEFAULT_GAP_UEV)):
    """Thermal quasiparticle density normalised by the Cooper-pair density.

    ``theta`` in kelvin, ``delta_al`` in joules.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(~(theta > 0)):
        raise ValueError("theta must be positive")
    kt = K_B * theta
    with np.errstate(under="ignore"):
        return np.sqrt(TWO_PI * kt / delta_al) * np.exp(-delta_al / kt)


def spectra_grid(omega, baths) -> dict:
    """Evaluate every spectrum of ``baths`` on ``omega`` (rad/s).

    ``baths`` holds at most one bath per mechanism. Missing mechanisms give
    columns of NaN; ``sigma`` is reported only for positive frequencies.
    """
    omega = np.asarray(omega, dtype=float)
    by_mech = {b.mechanism: b for b in baths}
    nan = np.full(omega.shape, np.nan)
    cols = {"omega_ghz": omega / (TWO_PI * 1e9)}
    cols["j_rad"] = j_rad(omega, by_mech[Mechanism.RAD]) if Mechanism.RAD in by_mech else nan
    cols["j_diel"] = j_diel(omega, by_mech[Mechanism.DIEL]) if Mechanism.DIEL in by_mech else nan
    if Mechanism.QPG in by_mech:
        q = by_mech[Mechanism.QPG]
        cols["j_qpg_plus"] = j_qpg(omega, q, Branch.PLUS)
        cols["j_qpg_minus"] = j_qpg(omega, q, Branch.MINUS)
        sig = nan.copy()
        pos = omega > 0
        sig[pos] = qpg_conductance(omega[pos], q)
        cols["sigma"] = sig
    else:
        cols["j_qpg_plus"] = cols["j_qpg_minus"] = cols["sigma"] = nan
    return cols
