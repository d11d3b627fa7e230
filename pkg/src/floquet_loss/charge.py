"""Transmon Hamiltonian and bath-coupling operators in the Cooper-pair charge basis.

Charge states are indexed ``m = -(D-1)/2 ... (D-1)/2``; row/column ``r`` of
every matrix corresponds to ``m = r - (D-1)/2``. Energies are in rad/s
(energy / hbar).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .units import ghz


class OperatorKind(str, enum.Enum):
    NUMBER = "number"
    PHASE = "phase"
    SIN_HALF_PHASE = "sin_half_phase"
    COS_HALF_PHASE = "cos_half_phase"
    STATIC_HAMILTONIAN = "static_hamiltonian"


@dataclass(frozen=True)
class TransmonParams:
    """Static transmon parameters.

    Parameters
    ----------
    e_c, e_j : float
        Charging and Josephson energies divided by hbar, in rad/s.
    n_g : float
        Offset charge in units of 2e.
    dim : int
        Number of charge states (odd).
    """

    e_c: float
    e_j: float
    n_g: float = 0.0
    dim: int = 401

    def __post_init__(self):
        _check_dim(self.dim)
        if not self.e_c > 0:
            raise ValueError(f"e_c must be positive, got {self.e_c}")
        if not self.e_j >= 0:
            raise ValueError(f"e_j must be non-negative, got {self.e_j}")
        if not np.isfinite(self.n_g):
            raise ValueError("n_g must be finite")

    @classmethod
    def from_ghz(cls, e_c_ghz: float, e_j_ghz: float, n_g: float = 0.0, dim: int = 401) -> "TransmonParams":
        """Build from energies quoted as h * GHz."""
        return cls(e_c=ghz(e_c_ghz), e_j=ghz(e_j_ghz), n_g=float(n_g), dim=int(dim))

    def with_(self, **changes) -> "TransmonParams":
        kw = dict(e_c=self.e_c, e_j=self.e_j, n_g=self.n_g, dim=self.dim)
        kw.update(changes)
        return TransmonParams(**kw)

    @property
    def charges(self) -> np.ndarray:
        return charge_states(self.dim)


@dataclass(frozen=True)
class DriveParams:
    """Semiclassical charge drive ``hbar * omega_q * n * cos(omega_d t)`` (both in rad/s)."""

    omega_q: float
    omega_d: float

    def __post_init__(self):
        if not self.omega_d > 0:
            raise ValueError(f"omega_d must be positive, got {self.omega_d}")
        if not self.omega_q >= 0:
            raise ValueError(f"omega_q must be non-negative, got {self.omega_q}")

    @classmethod
    def from_ghz(cls, omega_q_ghz: float, omega_d_ghz: float) -> "DriveParams":
        return cls(omega_q=ghz(omega_q_ghz), omega_d=ghz(omega_d_ghz))

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega_d


@dataclass(frozen=True)
class ChargeOperator:
    kind: OperatorKind
    matrix: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _check_dim(dim):
    if int(dim) != dim or dim < 3 or dim % 2 == 0:
        raise ValueError(f"charge-basis dimension must be an odd integer >= 3, got {dim}")


def charge_states(dim: int) -> np.ndarray:
    _check_dim(dim)
    half = (dim - 1) // 2
    return np.arange(-half, half + 1, dtype=float)


def static_tridiagonal(params: TransmonParams) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and first off-diagonal of the undriven Hamiltonian."""
    m = params.charges
    diag = 4.0 * params.e_c * (m - params.n_g) ** 2
    off = np.full(params.dim - 1, -0.5 * params.e_j)
    return diag, off


def build_static_hamiltonian(params: TransmonParams) -> ChargeOperator:
    diag, off = static_tridiagonal(params)
    h = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    return ChargeOperator(OperatorKind.STATIC_HAMILTONIAN, h.astype(complex))


def build_coupling_operator(kind, dim: int) -> ChargeOperator:
    """Matrix of a bath-coupling operator in the charge basis.

    ``<C_n|n|C_m> = m delta_nm``. The phase operator and the half-phase
    sine/cosine use the closed-form Fourier-series elements; the half-phase
    forms carry a global factor ``i``, so the cosine matrix is anti-Hermitian.
    Only ``|.|^2`` of their Floquet matrix elements is ever used.
    """
    kind = OperatorKind(kind)
    m = charge_states(dim)
    diff = m[:, None] - m[None, :]  # n - m
    sign = np.where(np.mod(diff, 2) == 0, 1.0, -1.0)  # (-1)^(n-m)
    if kind is OperatorKind.NUMBER:
        mat = np.diag(m).astype(complex)
    elif kind is OperatorKind.PHASE:
        with np.errstate(divide="ignore", invalid="ignore"):
            mat = np.where(diff != 0, 1j * (-sign) / diff, 0.0)
    elif kind is OperatorKind.SIN_HALF_PHASE:
        mat = (1j / np.pi) * (-sign) * diff / (diff**2 - 0.25)
    elif kind is OperatorKind.COS_HALF_PHASE:
        mat = (1j / (2.0 * np.pi)) * sign / (diff**2 - 0.25)
    else:
        raise ValueError(f"{kind!r} is not a bath-coupling operator")
    return ChargeOperator(kind, np.asarray(mat, dtype=complex))


def hamiltonian_at_time(params: TransmonParams, drive: DriveParams, t: float) -> np.ndarray:
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    h = build_static_hamiltonian(params).matrix.copy()
    h[np.diag_indices(params.dim)] += drive.omega_q * np.cos(drive.omega_d * t) * params.charges
    return h


def static_eigensystem(params: TransmonParams) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending, rad/s) and real eigenvectors of the undriven Hamiltonian."""
    from scipy.linalg import eigh_tridiagonal

    diag, off = static_tridiagonal(params)
    return eigh_tridiagonal(diag, off)
