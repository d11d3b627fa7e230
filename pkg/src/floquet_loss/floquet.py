"""Floquet modes, quasienergies and averaged energies of the driven transmon.

The one-period propagator is built with a fourth-order (Yoshida) composition
of a symmetric splitting between the charge-diagonal part of the Hamiltonian,
whose time integral including the drive is known in closed form, and the
constant Josephson term ``-E_J cos(phi)``, whose exponentials are computed
once. Every sub-step is an exact unitary, so the only error is the
splitting error, which scales as ``dt**4`` over a period.
"""

from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal, schur

from .charge import DriveParams, TransmonParams, static_eigensystem, static_tridiagonal

UNITARITY_TOL = 1e-8
TABLE_DRIFT_TOL = 1e-6
EDGE_STATES = 2  # per side; 4 outermost charge states in total
EDGE_POPULATION_TOL = 1e-6
DEGENERACY_TOL = 1e-10  # relative to omega_d
REGULAR_THRESHOLD = 0.5


class FloquetError(RuntimeError):
    pass


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class NumericalConfig:
    """Discretisation parameters.

    ``n_t`` is the number of uniformly spaced samples per period at which the
    modes are tabulated (and at which period averages are taken). The period is
    integrated with ``n_t * substeps`` splitting steps, where ``substeps`` is
    the smallest integer giving at least ``n_big_t - 1`` steps.
    ``dim=None`` means "use the dimension carried by the transmon parameters".
    """

    dim: int | None = 401
    k_max: int = 200
    n_t: int = 2001
    n_big_t: int = 20001
    d_active: int | None = None

    def __post_init__(self):
        if self.dim is not None and (self.dim < 3 or self.dim % 2 == 0):
            raise ValueError(f"dim must be odd and >= 3, got {self.dim}")
        if self.k_max < 0:
            raise ValueError("k_max must be non-negative")
        if self.n_t < 3 or self.n_big_t < 3:
            raise ValueError("n_t and n_big_t must be >= 3")
        if self.d_active is not None and self.d_active < 1:
            raise ValueError("d_active must be positive")

    @property
    def substeps(self) -> int:
        return max(1, math.ceil((self.n_big_t - 1) / self.n_t))

    @property
    def n_steps(self) -> int:
        return self.substeps * self.n_t

    def with_(self, **changes) -> "NumericalConfig":
        kw = dict(dim=self.dim, k_max=self.k_max, n_t=self.n_t, n_big_t=self.n_big_t, d_active=self.d_active)
        kw.update(changes)
        return NumericalConfig(**kw)


def _check_dims(params: TransmonParams, cfg: NumericalConfig):
    if cfg.dim is not None and cfg.dim != params.dim:
        raise ValueError(f"NumericalConfig.dim={cfg.dim} disagrees with TransmonParams.dim={params.dim}")


class _SplitStepper:
    """Splitting integrator over one drive period, organised by sample interval."""

    W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
    W0 = 1.0 - 2.0 * W1
    # positions of the three Josephson kicks inside a step, in units of dt
    KICK_AT = (W1 / 2.0, 0.5, 1.0 - W1 / 2.0)

    def __init__(self, params: TransmonParams, drive: DriveParams, cfg: NumericalConfig):
        _check_dims(params, cfg)
        self.diag, off = static_tridiagonal(params)
        self.charges = params.charges
        self.omega_d = drive.omega_d
        self.amp = drive.omega_q / drive.omega_d
        self.period = drive.period
        self.n_samples = cfg.n_t
        self.substeps = cfg.substeps
        self.dt = self.period / cfg.n_steps
        w, v = eigh_tridiagonal(np.zeros(params.dim), off)
        kick1 = (v * np.exp(-1j * w * self.W1 * self.dt)) @ v.T
        kick0 = (v * np.exp(-1j * w * self.W0 * self.dt)) @ v.T
        self.kicks = (kick1, kick0, kick1)
        self.times = np.arange(cfg.n_t) * (self.period / cfg.n_t)

    def _phase_factors(self, s: int) -> np.ndarray:
        """Diagonal propagators between consecutive kicks of interval ``s``.

        Row 0 runs from the sample time to the first kick, the last row from
        the last kick to the next sample time.
        """
        m = self.substeps
        t0 = s * m * self.dt
        rel = (np.arange(m)[:, None] + np.asarray(self.KICK_AT)[None, :]).ravel()
        marks = np.concatenate(([0.0], rel, [float(m)]))
        a = t0 + marks[:-1] * self.dt
        b = t0 + marks[1:] * self.dt
        span = (marks[1:] - marks[:-1]) * self.dt
        # exact integral of 4Ec(m-ng)^2 + omega_q cos(omega_d t) m over [a, b]
        dsin = 2.0 * np.cos(0.5 * self.omega_d * (a + b)) * np.sin(0.5 * self.omega_d * span)
        phase = span[:, None] * self.diag[None, :] + (self.amp * dsin)[:, None] * self.charges[None, :]
        return np.exp(-1j * phase)

    def interval(self, s: int) -> np.ndarray:
        """Propagator from sample ``s`` to sample ``s + 1``."""
        ph = self._phase_factors(s)
        kicks = self.kicks
        out = kicks[0] * ph[0][None, :]
        for j in range(1, ph.shape[0] - 1):
            out = kicks[j % 3] @ (ph[j][:, None] * out)
        return ph[-1][:, None] * out

    def evolve(self, vecs: np.ndarray, s: int) -> np.ndarray:
        """Apply the interval-``s`` propagator to the columns of ``vecs``."""
        ph = self._phase_factors(s)
        kicks = self.kicks
        out = vecs
        for j in range(ph.shape[0] - 1):
            out = kicks[j % 3] @ (ph[j][:, None] * out)
        return ph[-1][:, None] * out

    def hamiltonian_apply(self, t: float, vecs: np.ndarray, e_j_half: float) -> np.ndarray:
        diag = self.diag + self.amp * self.omega_d * np.cos(self.omega_d * t) * self.charges
        out = diag[:, None] * vecs
        out[:-1] -= e_j_half * vecs[1:]
        out[1:] -= e_j_half * vecs[:-1]
        return out


def _interval_blocks(stepper: _SplitStepper, workers: int):
    """Yield interval propagators in order; computed in parallel blocks when workers > 1."""
    n = stepper.n_samples
    if workers <= 1:
        for s in range(n):
            yield stepper.interval(s)
        return
    block = 4 * workers
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for start in range(0, n, block):
            yield from pool.map(stepper.interval, range(start, min(n, start + block)))


def _unitarity_error(u: np.ndarray) -> float:
    return float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())


def propagate_period(params: TransmonParams, drive: DriveParams, cfg: NumericalConfig,
                     workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """One-period propagator and the period-averaged Heisenberg Hamiltonian.

    Returns ``U = U(T, 0)`` and ``A = (1/n_t) sum_s U(t_s)^dag H(t_s) U(t_s)``,
    so that the averaged energy of a Floquet mode with initial vector ``v`` is
    ``v^dag A v`` evaluated on exactly the sample grid of the mode table.
    The result does not depend on ``workers``.
    """
    stepper = _SplitStepper(params, drive, cfg)
    dim = params.dim
    u = np.eye(dim, dtype=complex)
    h_avg = np.zeros((dim, dim), dtype=complex)
    for s, interval in enumerate(_interval_blocks(stepper, workers)):
        h_avg += u.conj().T @ stepper.hamiltonian_apply(stepper.times[s], u, 0.5 * params.e_j)
        u = interval @ u
    h_avg /= stepper.n_samples
    h_avg = 0.5 * (h_avg + h_avg.conj().T)
    err = _unitarity_error(u)
    if not err < UNITARITY_TOL:
        raise FloquetError(
            f"one-period propagator is not unitary (max|U^dag U - I| = {err:.3e}); "
            f"increase n_big_t (currently {cfg.n_big_t})"
        )
    return u, h_avg


def one_period_propagator(params: TransmonParams, drive: DriveParams, cfg: NumericalConfig,
                          workers: int = 1) -> np.ndarray:
    return propagate_period(params, drive, cfg, workers)[0]


class ModeLabel(str, enum.Enum):
    CHAOTIC = "chaotic"
    REGULAR = "regular"


@dataclass(frozen=True)
class FloquetBasis:
    """Floquet modes at t=0, sorted by ascending averaged energy.

    ``order[i]`` is the raw eigenvector index of sorted mode ``i``.
    Energies and quasienergies are in rad/s.
    """

    modes0: np.ndarray = field(repr=False)
    quasienergies: np.ndarray = field(repr=False)
    avg_energy: np.ndarray = field(repr=False)
    order: np.ndarray = field(repr=False)
    omega_d: float
    schur_residual: float = 0.0

    @property
    def dim(self) -> int:
        return self.modes0.shape[0]


def fold_quasienergy(eps, omega_d):
    """Fold into the first Brillouin zone (-omega_d/2, omega_d/2]."""
    eps = np.asarray(eps, dtype=float)
    out = np.mod(eps + 0.5 * omega_d, omega_d) - 0.5 * omega_d
    return np.where(out <= -0.5 * omega_d, out + omega_d, out)


def _canonical_gauge(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    pivot = vecs[idx, np.arange(vecs.shape[1])]
    return vecs * (np.abs(pivot) / pivot)[None, :]


def compute_floquet_basis(u: np.ndarray, params: TransmonParams, drive: DriveParams,
                          cfg: NumericalConfig, h_avg: np.ndarray | None = None) -> FloquetBasis:
    """Diagonalise the one-period propagator.

    A complex Schur decomposition is used: for a unitary matrix the Schur
    vectors are an orthonormal eigenbasis even inside degenerate clusters.
    Inside a cluster the basis is rotated to diagonalise the averaged
    Hamiltonian ``h_avg`` (recomputed if not supplied).
    """
    if h_avg is None:
        h_avg = propagate_period(params, drive, cfg)[1]
    err = _unitarity_error(u)
    if not err < UNITARITY_TOL:
        raise FloquetError(f"propagator not unitary to tolerance ({err:.3e})")
    tri, z = schur(u, output="complex")
    lam = np.diag(tri).copy()
    resid = float(np.abs(np.triu(tri, 1)).max()) if u.shape[0] > 1 else 0.0
    if resid > 1e-6 or np.abs(np.abs(lam) - 1.0).max() > 1e-6:
        raise FloquetError(
            f"ill-conditioned eigendecomposition of U: Schur off-diagonal {resid:.3e}, "
            f"max ||lambda|-1| {np.abs(np.abs(lam) - 1.0).max():.3e}"
        )
    period = drive.period
    eps = fold_quasienergy(-np.angle(lam) / period, drive.omega_d)

    # degenerate clusters: rotate to diagonalise the averaged Hamiltonian
    srt = np.argsort(eps, kind="stable")
    gaps = np.diff(eps[srt]) < DEGENERACY_TOL * drive.omega_d
    start = 0
    for pos in range(1, len(srt) + 1):
        if pos < len(srt) and gaps[pos - 1]:
            continue
        members = srt[start:pos]
        if len(members) > 1:
            zc = z[:, members]
            zc, _ = np.linalg.qr(zc)
            _, rot = eigh(zc.conj().T @ h_avg @ zc)
            z[:, members] = zc @ rot
        start = pos

    z = _canonical_gauge(z)
    hbar_diag = np.einsum("ji,jk,ki->i", z.conj(), h_avg, z)
    scale = max(1.0, float(np.abs(hbar_diag).max()))
    if np.abs(hbar_diag.imag).max() > 1e-6 * scale:
        raise FloquetError("averaged energies have a large imaginary part")
    hbar_q = hbar_diag.real

    charges = params.charges
    pop = np.abs(z) ** 2
    c0 = pop[np.argmin(np.abs(charges)), :]
    centroid = charges @ pop
    order = np.lexsort((centroid, -c0, hbar_q))
    return FloquetBasis(
        modes0=z[:, order],
        quasienergies=eps[order],
        avg_energy=hbar_q[order],
        order=order,
        omega_d=drive.omega_d,
        schur_residual=resid,
    )


def floquet_basis(params: TransmonParams, drive: DriveParams, cfg: NumericalConfig,
                  workers: int = 1) -> FloquetBasis:
    """Propagate one period and diagonalise; the common entry point."""
    u, h_avg = propagate_period(params, drive, cfg, workers)
    return compute_floquet_basis(u, params, drive, cfg, h_avg)


@dataclass(frozen=True)
class ModeTable:
    """Floquet modes sampled over one period.

    ``samples[s, :, c]`` is ``|phi_{indices[c]}(times[s])>`` in the charge basis.
    ``closure`` is the smallest fidelity between a propagated mode after a
    full period and its starting vector.
    """

    times: np.ndarray = field(repr=False)
    samples: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    quasienergies: np.ndarray = field(repr=False)
    period: float
    omega_d: float
    closure: float = 1.0

    @property
    def n_t(self) -> int:
        return len(self.times)


def mode_table(basis: FloquetBasis, params: TransmonParams, drive: DriveParams,
               cfg: NumericalConfig, indices=None) -> ModeTable:
    """Tabulate ``|phi_i(t_s)> = exp(i eps_i t_s) U(t_s, 0) |phi_i(0)>``.

    ``indices`` selects sorted modes (default: all). Storing only the modes
    that enter the dynamics keeps memory at ``n_t * D * len(indices)``.
    """
    stepper = _SplitStepper(params, drive, cfg)
    idx = np.arange(basis.dim) if indices is None else np.asarray(indices, dtype=int)
    eps = basis.quasienergies[idx]
    phi0 = basis.modes0[:, idx]
    samples = np.empty((cfg.n_t, basis.dim, len(idx)), dtype=complex)
    vecs = phi0
    for s in range(cfg.n_t):
        t = stepper.times[s]
        samples[s] = vecs * np.exp(1j * eps * t)[None, :]
        drift = np.abs(np.linalg.norm(vecs, axis=0) - 1.0).max()
        if drift > TABLE_DRIFT_TOL:
            raise FloquetError(f"norm drift {drift:.3e} at sample {s}; increase n_big_t")
        vecs = stepper.evolve(vecs, s)
    back = vecs * np.exp(1j * eps * stepper.period)[None, :]
    closure = float(np.min(np.abs(np.sum(phi0.conj() * back, axis=0)) ** 2)) if len(idx) else 1.0
    return ModeTable(
        times=stepper.times.copy(),
        samples=samples,
        indices=idx,
        quasienergies=eps,
        period=stepper.period,
        omega_d=drive.omega_d,
        closure=closure,
    )


def averaged_energy(basis: FloquetBasis, table: ModeTable, params: TransmonParams,
                    drive: DriveParams) -> np.ndarray:
    """Period average of ``<phi_i(t)|H(t)|phi_i(t)>`` over the table samples (rad/s).

    The integrand is periodic, so the trapezoid rule on the uniform grid is the
    plain sample mean.
    """
    diag, _ = static_tridiagonal(params)
    half_ej = 0.5 * params.e_j
    charges = params.charges
    acc = np.zeros(table.samples.shape[2], dtype=complex)
    for t, vecs in zip(table.times, table.samples):
        d = diag + drive.omega_q * np.cos(drive.omega_d * t) * charges
        hv = d[:, None] * vecs
        hv[:-1] -= half_ej * vecs[1:]
        hv[1:] -= half_ej * vecs[:-1]
        acc += np.sum(vecs.conj() * hv, axis=0)
    acc /= table.n_t
    scale = max(1.0, float(np.abs(acc).max()))
    if np.abs(acc.imag).max() > 1e-6 * scale:
        raise FloquetError("averaged energy has a large imaginary part")
    return acc.real


@dataclass(frozen=True)
class ChaoticClassification:
    """``overlaps[i, j] = |<j|phi_i(0)>|^2`` with ``j`` the undriven eigenstates."""

    n_ch: int
    overlaps: np.ndarray = field(repr=False)
    labels: tuple
    threshold: float = REGULAR_THRESHOLD

    @property
    def max_overlap(self) -> np.ndarray:
        return self.overlaps.max(axis=1)


def classify_chaotic(basis: FloquetBasis, eigenbasis: np.ndarray,
                     threshold: float = REGULAR_THRESHOLD) -> ChaoticClassification:
    """Label a mode Regular when one undriven eigenstate carries >= ``threshold`` of it."""
    overlaps = np.abs(basis.modes0.T @ eigenbasis.conj()) ** 2
    regular = overlaps.max(axis=1) >= threshold
    labels = tuple(ModeLabel.REGULAR if r else ModeLabel.CHAOTIC for r in regular)
    return ChaoticClassification(int(np.count_nonzero(~regular)), overlaps, labels, threshold)


def edge_population(modes: np.ndarray, n_edge: int = EDGE_STATES) -> np.ndarray:
    """Population of each column in the ``2 * n_edge`` outermost charge states."""
    pop = np.abs(modes) ** 2
    return pop[:n_edge].sum(axis=0) + pop[-n_edge:].sum(axis=0)


def check_truncation(modes: np.ndarray, tol: float = EDGE_POPULATION_TOL) -> float:
    worst = float(edge_population(modes).max()) if modes.size else 0.0
    if worst >= tol:
        warnings.warn(
            f"charge-basis truncation: edge population {worst:.2e} >= {tol:.0e}; increase dim",
            TruncationWarning,
            stacklevel=2,
        )
    return worst


def ground_connected_mode(classification: ChaoticClassification) -> int:
    """Index of the sorted mode with the largest weight on the undriven ground state."""
    return int(np.argmax(classification.overlaps[:, 0]))


def chaotic_threshold_scan(params: TransmonParams, omega_d: float, omega_qs, cfg: NumericalConfig,
                           threshold: float = REGULAR_THRESHOLD) -> list[dict]:
    """Follow the ground-connected mode along increasing drive amplitudes.

    Returns one record per amplitude with the averaged energy of the
    ground-connected mode, its largest overlap, its label and N_ch.
    """
    _, vecs = static_eigensystem(params)
    out = []
    for omega_q in omega_qs:
        drive = DriveParams(omega_q=float(omega_q), omega_d=omega_d)
        basis = floquet_basis(params, drive, cfg)
        cls = classify_chaotic(basis, vecs, threshold)
        g = ground_connected_mode(cls)
        out.append(
            dict(
                omega_q=float(omega_q),
                mode=g,
                avg_energy=float(basis.avg_energy[g]),
                max_overlap=float(cls.max_overlap[g]),
                chaotic=cls.labels[g] is ModeLabel.CHAOTIC,
                n_ch=cls.n_ch,
            )
        )
    return out
