"""CSV diagnostic dumps: bath spectra, overlap matrices, rate histograms, averaged energies."""

from __future__ import annotations

import enum
from pathlib import Path

import numpy as np

from .charge import static_eigensystem
from .config import SweepConfig
from .dissipation import run_pipeline
from .floquet import ModeLabel, classify_chaotic, floquet_basis
from .spectra import spectra_grid
from .sweep import _csv_line, provenance_lines
from .units import ghz, to_ghz

DEFAULT_SPECTRA_GRID = dict(start_ghz=0.0, stop_ghz=1000.0, num=2001)
DEFAULT_HBAR_MODES = 20
DEFAULT_HIST_BINS = 60
SPECTRA_COLUMNS = ["omega_ghz", "j_rad", "j_diel", "j_qpg_plus", "j_qpg_minus", "sigma"]


class DumpKind(str, enum.Enum):
    SPECTRA = "spectra"
    OVERLAPS = "overlaps"
    RATES = "rates"
    HBAR = "hbar"


def _write(path: Path, cfg: SweepConfig, title: str, columns, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(provenance_lines(cfg, title))
        fh.write(_csv_line(columns))
        for r in rows:
            fh.write(_csv_line(r))
    return path


def _dump_drive(cfg: SweepConfig) -> float:
    return float(cfg.dump.get("omega_q_ghz", cfg.drive_points[0][1]))


def dump_spectra(cfg: SweepConfig, out_dir: Path) -> Path:
    grid = {**DEFAULT_SPECTRA_GRID, **cfg.dump.get("spectra_grid", {})}
    omega = ghz(np.linspace(grid["start_ghz"], grid["stop_ghz"], int(grid["num"])))
    params = cfg.params
    cols = spectra_grid(omega, cfg.baths.build(params, ["rad", "diel", "qpg"]))
    rows = zip(*(cols[c] for c in SPECTRA_COLUMNS))
    return _write(out_dir / "spectra.csv", cfg, "floquet-loss bath spectra (rates in 1/s, sigma in S)",
                  SPECTRA_COLUMNS, rows)


def dump_overlaps(cfg: SweepConfig, out_dir: Path) -> Path:
    om = _dump_drive(cfg)
    params = cfg.params
    basis = floquet_basis(params, cfg.drive(om), cfg.numerical)
    _, vecs = static_eigensystem(params)
    cls = classify_chaotic(basis, vecs)
    dim = params.dim
    cols = ["mode", "hbar_ghz", "quasienergy_ghz", "label"] + [f"j{j}" for j in range(dim)]
    rows = (
        [i, to_ghz(basis.avg_energy[i]), to_ghz(basis.quasienergies[i]), cls.labels[i].value, *cls.overlaps[i]]
        for i in range(dim)
    )
    return _write(out_dir / "overlaps.csv", cfg,
                  f"floquet-loss overlaps |<j|phi_i(0)>|^2 at omega_q/2pi={om!r} GHz, n_ch={cls.n_ch}",
                  cols, rows)


def rate_histogram(rate_tensors, bins: int = DEFAULT_HIST_BINS):
    """Histogram of ``log10(Gamma_ijk)`` over the non-zero entries of each tensor.

    Returns ``[(mechanism, lo, hi, count), ...]``; counts per mechanism add up
    to that tensor's number of non-zero entries.
    """
    out = []
    for rt in rate_tensors:
        vals = rt.rates[rt.rates > 0]
        if vals.size == 0:
            continue
        logs = np.log10(vals)
        lo, hi = np.floor(logs.min()), np.ceil(logs.max())
        if hi <= lo:
            hi = lo + 1.0
        counts, edges = np.histogram(logs, bins=bins, range=(lo, hi))
        out.extend((rt.mechanism.value, edges[b], edges[b + 1], int(counts[b])) for b in range(bins))
    return out


def dump_rates(cfg: SweepConfig, out_dir: Path) -> Path:
    om = _dump_drive(cfg)
    params = cfg.params
    comp = run_pipeline(params, cfg.drive(om), cfg.numerical, cfg.bath_list(params))
    rows = rate_histogram(comp.rates, int(cfg.dump.get("bins", DEFAULT_HIST_BINS)))
    return _write(out_dir / "rates_histogram.csv", cfg,
                  f"floquet-loss histogram of log10 Gamma_ijk (1/s) at omega_q/2pi={om!r} GHz",
                  ["mechanism", "log10_lo", "log10_hi", "count"], rows)


def dump_hbar(cfg: SweepConfig, out_dir: Path) -> Path:
    n_modes = int(cfg.dump.get("hbar_modes", DEFAULT_HBAR_MODES))
    rows = []
    for n_g, om in cfg.drive_points:
        p = cfg.params.with_(n_g=n_g)
        _, vecs = static_eigensystem(p)
        basis = floquet_basis(p, cfg.drive(om), cfg.numerical)
        cls = classify_chaotic(basis, vecs)
        ground = int(np.argmax(cls.overlaps[:, 0]))
        for i in range(min(n_modes, p.dim)):
            rows.append([n_g, om, cfg.photons(om), i, to_ghz(basis.avg_energy[i]), float(cls.max_overlap[i]),
                         cls.labels[i] is ModeLabel.CHAOTIC, i == ground])
    cols = ["n_g", "omega_q_ghz", "n_r", "mode", "hbar_ghz", "max_overlap", "chaotic", "ground_connected"]
    return _write(out_dir / "hbar.csv", cfg, "floquet-loss averaged energies along the sweep", cols, rows)


_DUMPERS = {
    DumpKind.SPECTRA: dump_spectra,
    DumpKind.OVERLAPS: dump_overlaps,
    DumpKind.RATES: dump_rates,
    DumpKind.HBAR: dump_hbar,
}


def dump_diagnostics(cfg: SweepConfig, what, out_dir=None) -> Path:
    try:
        kind = DumpKind(what)
    except ValueError:
        raise ValueError(f"unknown dump '{what}'; choose from {[k.value for k in DumpKind]}") from None
    return _DUMPERS[kind](cfg, Path(out_dir) if out_dir else Path(cfg.output_dir))
