"""Sweep orchestration, checkpoint/resume and experiment comparison.

Output layout inside ``config.output_dir``:

``results.csv``
    ``#``-prefixed provenance lines (package version, resolved config as
    JSON, config hash), one header row, then one row per sweep point in
    sweep order. Floats use 17 significant digits.
``checkpoint.jsonl``
    One JSON object per line. The first is a header with the schema
    version and config hash; each later record lists the completed point
    indices and the byte length of ``results.csv`` at that moment. A row is
    written and flushed before the record that covers it, so a checkpoint
    never points into a partial row. Resuming truncates the CSV to the last
    recorded length and recomputes everything after it.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import SweepConfig
from .dissipation import compute_loss, parity_averaged_loss
from .resonator import (
    kappa_from_s21,
    noise_power,
    omega_q_from_photons,
    photons_from_power,
    predicted_kappa,
    vjj_amplitude,
)
from .spectra import Mechanism
from .units import HBAR, dbm_to_watts, ghz, mhz, to_ghz, to_mhz, uev

SCHEMA_VERSION = 1
RESULTS_NAME = "results.csv"
CHECKPOINT_NAME = "checkpoint.jsonl"
COMPARISON_NAME = "comparison.csv"
Q4_STABLE_DRIVE_GHZ = 50.0

RESULT_COLUMNS = [
    "index", "n_g", "omega_q_ghz", "n_r", "status", "n_ch", "d_active",
    "loss_w", "photon_rate", "loss_rad_w", "loss_diel_w", "loss_qpg_w",
    "kappa_pred_mhz", "vjj_v", "vjj_ok", "edge_population", "reason",
]
COMPARISON_COLUMNS = [
    "line", "n_r", "omega_q_ghz", "grid_omega_q_ghz", "kappa_meas_mhz", "kappa_pred_mhz",
    "residual_mhz", "t_photon_rate", "r_included", "low_drive_flag",
]


class CheckpointError(RuntimeError):
    pass


class SchemaError(ValueError):
    pass


def fmt(value) -> str:
    """Format numbers with 17 significant digits, leave everything else as text."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return "" if value is None else str(value)


def _csv_line(values) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow([fmt(v) for v in values])
    return buf.getvalue()


def provenance_lines(cfg: SweepConfig, title: str) -> str:
    lines = [
        f"# {title}",
        f"# floquet_loss version: {__version__}",
        f"# config_hash: {cfg.config_hash()}",
        "# config: " + json.dumps(cfg.resolved, sort_keys=True),
    ]
    return "\n".join(lines) + "\n"


def evaluate_point(cfg: SweepConfig, index: int, n_g: float, omega_q_ghz: float, workers: int = 1) -> dict:
    """Full pipeline at one sweep point; failures become an error row."""
    n_r = cfg.photons(omega_q_ghz)
    row = dict.fromkeys(RESULT_COLUMNS, float("nan"))
    row.update(index=index, n_g=n_g, omega_q_ghz=omega_q_ghz, n_r=n_r, reason="")
    try:
        params = cfg.params.with_(n_g=n_g)
        drive = cfg.drive(omega_q_ghz)
        baths = cfg.bath_list(params)
        if cfg.parity_average:
            rep = parity_averaged_loss(params, drive, cfg.numerical, baths, n_g, workers)
            parts = rep.metadata["parity_reports"]
            d_active = max(r.metadata["d_active"] for r in parts)
            edge = max(r.metadata["edge_population"] for r in parts)
        else:
            rep = compute_loss(params, drive, cfg.numerical, baths, workers)
            d_active = rep.metadata["d_active"]
            edge = rep.metadata["edge_population"]
        row.update(
            status="ok",
            n_ch=rep.n_ch_used,
            d_active=d_active,
            loss_w=rep.loss_total,
            photon_rate=rep.photon_rate,
            edge_population=edge,
        )
        for m in Mechanism:
            if m in rep.loss_by_mechanism:
                row[f"loss_{m.value}_w"] = rep.loss_by_mechanism[m]
        if cfg.resonator is not None and n_r > 0:
            row["kappa_pred_mhz"] = to_mhz(predicted_kappa(rep, n_r, cfg.omega_d, cfg.resonator.kappa_o))
        v = vjj_amplitude(drive.omega_q, uev(cfg.baths.gap_uev))
        row.update(vjj_v=v.amplitude, vjj_ok=v.ok)
    except Exception as exc:  # noqa: BLE001 - recorded per point, sweep continues
        row.update(status="error", reason=f"{type(exc).__name__}: {exc}")
    return row


@dataclass(frozen=True)
class SweepResult:
    rows: list
    results_path: Path
    checkpoint_path: Path
    complete: bool


def _fsync_append(fh, text: str):
    fh.write(text.encode() if "b" in fh.mode else text)
    fh.flush()
    os.fsync(fh.fileno())


def _read_checkpoint(path: Path, cfg: SweepConfig):
    """Return ``(completed_count, csv_offset, valid_checkpoint_bytes)``."""
    header = None
    last = None
    good_bytes = 0
    with open(path, "rb") as fh:
        for raw in fh:
            if not raw.endswith(b"\n"):
                break  # torn final record
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError:
                break
            if header is None:
                header = rec
            else:
                last = rec
            good_bytes += len(raw)
    if header is None or header.get("record") != "header":
        raise CheckpointError(f"{path} has no valid header record")
    if header.get("schema") != SCHEMA_VERSION:
        raise CheckpointError(f"checkpoint schema {header.get('schema')} != {SCHEMA_VERSION}")
    if header.get("config_hash") != cfg.config_hash():
        raise CheckpointError("checkpoint was written for a different configuration; refusing to resume")
    if last is None:
        return 0, int(header["csv_offset"]), good_bytes
    done = last["completed"]
    if done != list(range(len(done))):
        raise CheckpointError("checkpoint completed indices are not a prefix of the sweep")
    return len(done), int(last["csv_offset"]), good_bytes


def _start_fresh(cfg: SweepConfig, results: Path, ckpt: Path):
    head = provenance_lines(cfg, "floquet-loss sweep results")
    if cfg.resonator is not None:
        head += "# kappa_pred excludes the resonator-noise term (no noise data in a sweep)\n"
    head += _csv_line(RESULT_COLUMNS)
    with open(results, "wb") as fh:
        _fsync_append(fh, head)
    offset = results.stat().st_size
    rec = dict(record="header", schema=SCHEMA_VERSION, config_hash=cfg.config_hash(),
               version=__version__, results=RESULTS_NAME, csv_offset=offset)
    with open(ckpt, "w") as fh:
        _fsync_append(fh, json.dumps(rec, sort_keys=True) + "\n")


def run_sweep(cfg: SweepConfig, resume: bool = False, threads: int = 1, max_points: int | None = None) -> SweepResult:
    """Run (or continue) a sweep.

    ``threads`` sweep points are evaluated concurrently; rows are committed in
    sweep order by the calling thread. ``max_points`` stops after that many
    newly committed points, leaving a resumable checkpoint.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = out / RESULTS_NAME
    ckpt = out / CHECKPOINT_NAME
    points = cfg.drive_points
    n_done = 0
    if resume and ckpt.exists() and results.exists():
        n_done, offset, good = _read_checkpoint(ckpt, cfg)
        with open(results, "r+b") as fh:
            fh.truncate(offset)
        with open(ckpt, "r+b") as fh:
            fh.truncate(good)
    else:
        if resume:
            warnings.warn("no checkpoint found; starting a fresh sweep", RuntimeWarning, stacklevel=2)
        _start_fresh(cfg, results, ckpt)

    todo = list(range(n_done, len(points)))
    if max_points is not None:
        todo = todo[: max(0, int(max_points))]
    completed = list(range(n_done))

    def work(i):
        n_g, om = points[i]
        return evaluate_point(cfg, i, n_g, om)

    with open(results, "ab") as rfh, open(ckpt, "a") as cfh:
        def commit(row, since_ckpt):
            _fsync_append(rfh, _csv_line([row[c] for c in RESULT_COLUMNS]))
            completed.append(row["index"])
            if since_ckpt + 1 >= cfg.checkpoint_interval or row["index"] == len(points) - 1:
                rec = dict(record="points", completed=completed, csv_offset=rfh.tell())
                _fsync_append(cfh, json.dumps(rec) + "\n")
                return 0
            return since_ckpt + 1

        pending = 0
        if threads <= 1:
            for i in todo:
                pending = commit(work(i), pending)
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for fut in [pool.submit(work, i) for i in todo]:
                    pending = commit(fut.result(), pending)
        if pending:
            rec = dict(record="points", completed=completed, csv_offset=rfh.tell())
            _fsync_append(cfh, json.dumps(rec) + "\n")

    rows = read_results(results)
    return SweepResult(rows, results, ckpt, len(rows) == len(points))


def _parse_field(col, text):
    if col in ("status", "reason"):
        return text
    if col in ("index", "n_ch", "d_active", "vjj_ok"):
        try:
            return int(text)
        except ValueError:
            return float(text)
    return float(text)


def read_results(path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return [{k: _parse_field(k, v) for k, v in row.items()} for row in csv.DictReader(lines)]


def _read_experiment(path) -> tuple[list[dict], list[int]]:
    """Rows of an experiment CSV with their 1-based file line numbers."""
    with open(path, newline="") as fh:
        numbered = [(n, ln) for n, ln in enumerate(fh, start=1) if ln.strip() and not ln.startswith("#")]
    if not numbered:
        return [], []
    reader = csv.DictReader([ln for _, ln in numbered])
    fields = set(reader.fieldnames or [])
    missing = []
    if "omega_d_ghz" not in fields:
        missing.append("omega_d_ghz")
    if not fields & {"p_r_dbm", "n_r"}:
        missing.append("p_r_dbm or n_r")
    if not fields & {"s21_min", "kappa_mhz"}:
        missing.append("s21_min or kappa_mhz")
    if missing:
        raise SchemaError(f"experiment CSV line {numbered[0][0]}: missing columns {missing}")
    rows = list(reader)
    return rows, [n for n, _ in numbered[1:]]


def compare(cfg: SweepConfig, experiment_csv, out_path=None, threads: int = 1) -> Path:
    """Join measured linewidths with predictions on the nearest drive-grid point.

    The sweep is run (or resumed) first if its results are incomplete.
    Predictions use the first ``n_g`` value of the sweep.
    """
    if cfg.resonator is None:
        raise SchemaError("comparison needs resonator parameters in the config")
    res = cfg.resonator
    exp_rows, line_nos = _read_experiment(experiment_csv)
    out_path = Path(out_path) if out_path else Path(cfg.output_dir) / COMPARISON_NAME
    out_path.parent.mkdir(parents=True, exist_ok=True)
    head = provenance_lines(cfg, "floquet-loss comparison") + _csv_line(COMPARISON_COLUMNS)
    if not exp_rows:
        warnings.warn(f"{experiment_csv} has no data rows; writing header only", RuntimeWarning, stacklevel=2)
        out_path.write_text(head)
        return out_path

    parsed, bad = [], []
    for line, row in zip(line_nos, exp_rows):
        try:
            wd = ghz(float(row["omega_d_ghz"]))
            if row.get("kappa_mhz", "") not in ("", None):
                kappa = mhz(float(row["kappa_mhz"]))
            else:
                kappa = kappa_from_s21(res.kappa_ex, float(row["s21_min"]))
            if row.get("n_r", "") not in ("", None):
                n_r = float(row["n_r"])
            else:
                n_r = float(photons_from_power(dbm_to_watts(float(row["p_r_dbm"])), wd, res.kappa_ex, kappa))
            noise = row.get("noise_photons", "")
            noise = float(noise) if noise not in ("", None) else None
            if not (wd > 0 and n_r > 0 and math.isfinite(kappa)):
                raise ValueError("non-positive value")
        except (KeyError, TypeError, ValueError):
            bad.append(line)
            continue
        parsed.append((line, wd, kappa, n_r, noise))
    if bad:
        raise SchemaError(f"experiment CSV: invalid values on lines {bad}")

    results = Path(cfg.output_dir) / RESULTS_NAME
    rows = read_results(results) if results.exists() else []
    if len(rows) < len(cfg.drive_points):
        rows = run_sweep(cfg, resume=True, threads=threads).rows
    n_g0 = cfg.n_g_values[0]
    grid = [r for r in rows if r["status"] == "ok" and r["n_g"] == n_g0]
    if not grid:
        raise RuntimeError("no successful sweep points to compare against")
    grid_om = np.array([r["omega_q_ghz"] for r in grid])

    with open(out_path, "w", newline="") as fh:
        fh.write(head)
        for line, wd, kappa, n_r, noise in parsed:
            om = to_ghz(omega_q_from_photons(res.g, n_r))
            g = grid[int(np.argmin(np.abs(grid_om - om)))]
            r_pow = None if noise is None else float(noise_power(noise, wd, kappa))
            k_pred = predicted_kappa(g["loss_w"], n_r, wd, res.kappa_o, r_pow)
            flag = cfg.device == "Q4" and om < Q4_STABLE_DRIVE_GHZ
            fh.write(_csv_line([
                line, n_r, om, g["omega_q_ghz"], to_mhz(kappa), to_mhz(k_pred),
                to_mhz(kappa - k_pred), g["loss_w"] / (HBAR * wd), noise is not None, flag,
            ]))
    return out_path
