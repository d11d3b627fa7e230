"""Floquet-Markov transition rates, steady state and energy-loss rate.

Conventions: ``elements[i, j, k_max + k]`` is the period average of
``<phi_i(t)|Psi|phi_j(t)> exp(-i k omega_d t)``. The matching transition
frequency is ``Delta_ijk = eps_i - eps_j + k omega_d`` and the rate
``Gamma_ijk = J(Delta_ijk) |Psi_ijk|^2`` describes a jump from mode ``i`` to
mode ``j`` that deposits ``hbar Delta_ijk`` in the bath.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sp_fft
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .charge import ChargeOperator, DriveParams, OperatorKind, TransmonParams, build_coupling_operator, static_eigensystem
from .floquet import (
    ChaoticClassification,
    FloquetBasis,
    ModeTable,
    NumericalConfig,
    check_truncation,
    classify_chaotic,
    floquet_basis,
    mode_table,
)
from .spectra import Mechanism
from .units import HBAR, TWO_PI, ghz

RAD_DELTA_CUTOFF = ghz(100.0)
PRUNE_RELATIVE = 1e-18
NEGATIVE_TOL = 1e-10
# harmonics beyond this fraction of n_t count as the band edge of the sampled spectrum
TAIL_BAND = 0.4
TAIL_WARN = 1e-6
_BLOCK_BYTES = 1 << 27


class SteadyStateError(RuntimeError):
    pass


class AliasingWarning(UserWarning):
    """Sampled matrix elements carry power near the Nyquist limit; increase n_t."""


@dataclass(frozen=True)
class TransitionTensor:
    operator_kind: OperatorKind
    elements: np.ndarray = field(repr=False)
    k_max: int
    indices: np.ndarray = field(repr=False)
    tail_fraction: float = 0.0

    @property
    def harmonics(self) -> np.ndarray:
        return np.arange(-self.k_max, self.k_max + 1)


@dataclass(frozen=True)
class RateTensor:
    mechanism: Mechanism
    rates: np.ndarray = field(repr=False)
    delta: np.ndarray = field(repr=False)
    omega_d: float

    @property
    def size(self) -> int:
        return self.rates.shape[0]


@dataclass(frozen=True)
class RateMatrix:
    gamma: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.gamma.shape[0]


@dataclass(frozen=True)
class LossReport:
    """Steady-state loss. ``loss_total`` and ``loss_by_mechanism`` in watts."""

    populations: np.ndarray = field(repr=False)
    loss_total: float
    loss_by_mechanism: dict
    omega_d: float
    n_ch_used: int = 0
    metadata: dict = field(default_factory=dict, repr=False)

    @property
    def photon_rate(self) -> float:
        """Loss expressed as drive photons per second."""
        return self.loss_total / (HBAR * self.omega_d)

    def photon_rate_by_mechanism(self) -> dict:
        return {m: v / (HBAR * self.omega_d) for m, v in self.loss_by_mechanism.items()}


def fourier_components(table: ModeTable, op: ChargeOperator, k_max: int) -> TransitionTensor:
    """Fourier-resolved matrix elements of ``op`` between the tabulated modes."""
    n_t = table.n_t
    if 2 * k_max + 1 > n_t:
        raise ValueError(f"k_max={k_max} aliases on n_t={n_t} samples; need k_max <= (n_t-1)/2")
    if op.dim != table.samples.shape[1]:
        raise ValueError("operator and mode table dimensions differ")
    r = table.samples.shape[2]
    mat = op.matrix
    diagonal = op.kind is OperatorKind.NUMBER
    inner = np.empty((n_t, r, r), dtype=complex)
    for s in range(n_t):
        phi = table.samples[s]
        psi_phi = np.diag(mat)[:, None] * phi if diagonal else mat @ phi
        inner[s] = phi.conj().T @ psi_phi
    ks = np.arange(-k_max, k_max + 1) % n_t
    freq = np.abs(sp_fft.fftfreq(n_t, 1.0 / n_t))
    tail = freq > TAIL_BAND * n_t
    elements = np.empty((r, r, 2 * k_max + 1), dtype=complex)
    rows = max(1, _BLOCK_BYTES // (16 * n_t * r))
    power = tail_power = 0.0
    for start in range(0, r, rows):
        blk = sp_fft.fft(inner[:, start:start + rows, :], axis=0)
        elements[start:start + rows] = np.moveaxis(blk[ks], 0, -1) / n_t
        pw = blk.real**2 + blk.imag**2
        power += float(pw.sum())
        tail_power += float(pw[tail].sum())
    frac = tail_power / power if power > 0 else 0.0
    return TransitionTensor(OperatorKind(op.kind), elements, int(k_max), table.indices.copy(), frac)


def transition_deltas(quasienergies, omega_d: float, k_max: int) -> np.ndarray:
    eps = np.asarray(quasienergies, dtype=float)
    k = np.arange(-k_max, k_max + 1)
    return (eps[:, None] - eps[None, :])[:, :, None] + k[None, None, :] * omega_d


def transition_rates(tensors, quasienergies, bath, omega_d: float) -> RateTensor:
    """Rates of one mechanism.

    ``tensors`` maps operator kind to :class:`TransitionTensor` (a single tensor
    is accepted for one-channel baths). ``quasienergies`` are those of the
    tabulated modes, in table order.
    """
    if isinstance(tensors, TransitionTensor):
        tensors = {tensors.operator_kind: tensors}
    any_t = next(iter(tensors.values()))
    k_max = any_t.k_max
    delta = transition_deltas(quasienergies, omega_d, k_max)
    if delta.shape != any_t.elements.shape:
        raise ValueError("quasienergies do not match the tensor dimension")
    rates = np.zeros(delta.shape)
    for kind, spectrum in bath.channels():
        if kind not in tensors:
            raise KeyError(f"bath {bath.mechanism.value} needs a {kind.value} tensor")
        tt = tensors[kind]
        if tt.k_max != k_max or tt.elements.shape != delta.shape:
            raise ValueError("tensors have inconsistent shapes")
        active = delta > 0
        vals = np.zeros(delta.shape)
        vals[active] = spectrum(delta[active])
        rates += vals * (tt.elements.real**2 + tt.elements.imag**2)
    if bath.mechanism is Mechanism.RAD:
        rates[np.abs(delta) > RAD_DELTA_CUTOFF] = 0.0
    top = rates.max(initial=0.0)
    if top > 0:
        rates[rates < PRUNE_RELATIVE * top] = 0.0
    return RateTensor(bath.mechanism, rates, delta, float(omega_d))


def total_rate_matrix(tensors) -> RateMatrix:
    tensors = list(tensors)
    if not tensors:
        raise ValueError("no rate tensors given")
    shape = tensors[0].rates.shape[:2]
    gamma = np.zeros(shape)
    for t in tensors:
        if t.rates.shape[:2] != shape:
            raise ValueError("rate tensors have mismatched dimensions")
        gamma = gamma + t.rates.sum(axis=2)
    return RateMatrix(gamma)


def generator(gamma) -> np.ndarray:
    """``dp/dt = L p`` with ``L[j, i] = Gamma_ij`` off the diagonal."""
    g = np.array(gamma, dtype=float)
    np.fill_diagonal(g, 0.0)
    lmat = g.T.copy()
    lmat[np.diag_indices_from(lmat)] = -g.sum(axis=1)
    return lmat


def closed_classes(gamma) -> list[np.ndarray]:
    """Closed communicating classes of the jump graph ``i -> j`` for ``Gamma_ij > 0``."""
    g = np.array(gamma, dtype=float)
    np.fill_diagonal(g, 0.0)
    n_comp, labels = connected_components(csr_matrix(g > 0), directed=True, connection="strong")
    leaves = np.ones(n_comp, dtype=bool)
    src, dst = np.nonzero(g > 0)
    leaves[labels[src][labels[src] != labels[dst]]] = False
    return [np.flatnonzero(labels == c) for c in range(n_comp) if leaves[c]]


def steady_state(gamma, n_ch: int = 0) -> np.ndarray:
    """Stationary populations of the rate equation.

    The null vector is found on the unique closed class with an SVD-based
    least-squares solve of the generator with a normalisation row appended.
    Components at (0-based) index ``>= n_ch`` are then discarded and the
    rest renormalised; ``n_ch = 0`` keeps everything.
    """
    g = gamma.gamma if isinstance(gamma, RateMatrix) else np.asarray(gamma, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError("rate matrix must be square")
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise ValueError("rates must be finite and non-negative")
    n = g.shape[0]
    classes = closed_classes(g)
    if len(classes) != 1:
        raise SteadyStateError(
            f"steady state is not unique: {len(classes)} closed classes "
            + "; ".join(str(c.tolist()) for c in classes[:5])
        )
    cls = classes[0]
    sub = generator(g[np.ix_(cls, cls)])
    scale = max(float(np.abs(sub).max()), 1e-300)
    a = np.vstack([sub / scale, np.ones((1, len(cls)))])
    rhs = np.zeros(len(cls) + 1)
    rhs[-1] = 1.0
    sol = np.linalg.lstsq(a, rhs, rcond=None)[0]
    if sol.min() < -NEGATIVE_TOL:
        raise SteadyStateError(f"negative population {sol.min():.3e} in steady state")
    p = np.zeros(n)
    p[cls] = np.clip(sol, 0.0, None)
    p /= p.sum()
    if 0 < n_ch < n:
        p[n_ch:] = 0.0
        kept = p.sum()
        if not kept > 0:
            raise SteadyStateError(f"no steady-state population left in the lowest {n_ch} modes")
        p /= kept
    return p


def relax_populations(gamma, p0=None, tol: float = 1e-12, max_iter: int = 10_000_000) -> np.ndarray:
    """Integrate the rate equation until ``||dp/dt||_1 < tol * max Gamma``.

    Uses uniformisation: ``p <- p + L p / lam`` with ``lam`` above the largest
    escape rate is an explicit Euler step that stays a probability vector.
    Slow, intended as a cross-check of :func:`steady_state`.
    """
    g = np.asarray(gamma, dtype=float)
    lmat = generator(g)
    n = g.shape[0]
    lam = 1.05 * max(float(-np.diag(lmat).min()), 1e-300)
    step = np.eye(n) + lmat / lam
    p = np.full(n, 1.0 / n) if p0 is None else np.asarray(p0, dtype=float)
    top = max(float(g.max()), 1e-300)
    for _ in range(max_iter):
        # square the step matrix whenever progress is slow
        for _ in range(64):
            p = step @ p
        if np.abs(lmat @ p).sum() < tol * top:
            return p / p.sum()
        step = step @ step
    raise RuntimeError("rate equation did not relax")


def loss_rate(p, tensors, n_ch_used: int = 0, metadata: dict | None = None) -> LossReport:
    """``T = hbar sum_ijk p_i Gamma_ijk Delta_ijk`` per mechanism and in total (watts)."""
    tensors = list(tensors)
    if not tensors:
        raise ValueError("no rate tensors given")
    p = np.asarray(p, dtype=float)
    parts = {}
    for t in tensors:
        flux = np.einsum("ijk,ijk->i", t.rates, t.delta)
        parts[t.mechanism] = parts.get(t.mechanism, 0.0) + HBAR * float(p @ flux)
    total = math.fsum(parts.values())
    return LossReport(p, total, parts, tensors[0].omega_d, n_ch_used, dict(metadata or {}))


def default_d_active(n_ch: int, dim: int) -> int:
    return min(max(2 * n_ch, 60), dim)


@dataclass(frozen=True)
class LossComputation:
    """All intermediate products of one pipeline run, for diagnostics."""

    basis: FloquetBasis = field(repr=False)
    classification: ChaoticClassification = field(repr=False)
    d_active: int
    transition: dict = field(repr=False)
    rates: list = field(repr=False)
    gamma: RateMatrix = field(repr=False)
    report: LossReport


def run_pipeline(params: TransmonParams, drive: DriveParams, cfg: NumericalConfig, baths,
                 workers: int = 1) -> LossComputation:
    """Floquet basis, transition tensors, rates, steady state and loss."""
    baths = list(baths)
    if not baths:
        raise ValueError("at least one bath is required")
    basis = floquet_basis(params, drive, cfg, workers=workers)
    _, eig = static_eigensystem(params)
    cls = classify_chaotic(basis, eig)
    d_act = min(cfg.d_active, params.dim) if cfg.d_active else default_d_active(cls.n_ch, params.dim)
    edge = check_truncation(basis.modes0[:, :d_act])
    table = mode_table(basis, params, drive, cfg, indices=np.arange(d_act))
    kinds = []
    for b in baths:
        kinds.extend(k for k, _ in b.channels() if k not in kinds)
    transition = {k: fourier_components(table, build_coupling_operator(k, params.dim), cfg.k_max) for k in kinds}
    tail = max(t.tail_fraction for t in transition.values())
    if tail > TAIL_WARN:
        warnings.warn(
            f"matrix elements carry {tail:.2e} of their power near the sampling limit; "
            f"increase n_t (now {cfg.n_t}) or reduce d_active",
            AliasingWarning,
            stacklevel=2,
        )
    rates = [transition_rates(transition, table.quasienergies, b, drive.omega_d) for b in baths]
    gamma = total_rate_matrix(rates)
    p = steady_state(gamma, cls.n_ch)
    meta = dict(
        n_g=params.n_g,
        omega_q=drive.omega_q,
        omega_d=drive.omega_d,
        dim=params.dim,
        d_active=d_act,
        k_max=cfg.k_max,
        n_t=cfg.n_t,
        n_big_t=cfg.n_big_t,
        chaotic_threshold=cls.threshold,
        edge_population=edge,
        table_closure=table.closure,
        spectral_tail=tail,
        mechanisms=[b.mechanism.value for b in baths],
    )
    report = loss_rate(p, rates, n_ch_used=cls.n_ch, metadata=meta)
    return LossComputation(basis, cls, d_act, transition, rates, gamma, report)


def compute_loss(params: TransmonParams, drive: DriveParams, cfg: NumericalConfig, baths,
                 workers: int = 1) -> LossReport:
    return run_pipeline(params, drive, cfg, baths, workers).report


def parity_averaged_loss(params: TransmonParams, drive: DriveParams, cfg: NumericalConfig, baths,
                         n_g_static: float, workers: int = 1) -> LossReport:
    """Mean loss over the two offset charges ``n_g_static -+ 0.25``.

    Populations are averaged index by index (shorter vectors zero-padded);
    both component reports are kept in the metadata.
    """
    reports = [
        compute_loss(params.with_(n_g=n_g_static + shift), drive, cfg, baths, workers)
        for shift in (-0.25, 0.25)
    ]
    mechs = list(dict.fromkeys(m for r in reports for m in r.loss_by_mechanism))
    parts = {m: 0.5 * (reports[0].loss_by_mechanism.get(m, 0.0) + reports[1].loss_by_mechanism.get(m, 0.0)) for m in mechs}
    size = max(len(r.populations) for r in reports)
    pops = np.zeros(size)
    for r in reports:
        pops[: len(r.populations)] += 0.5 * r.populations
    if len({r.n_ch_used for r in reports}) > 1:
        warnings.warn("parity partners have different chaotic-subspace sizes", RuntimeWarning, stacklevel=2)
    meta = dict(n_g_static=n_g_static, parity_reports=reports)
    return LossReport(pops, math.fsum(parts.values()), parts, drive.omega_d,
                      max(r.n_ch_used for r in reports), meta)
