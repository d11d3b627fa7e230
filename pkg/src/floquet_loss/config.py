"""YAML sweep configuration and device profiles.

Frequencies are given as cyclic values with the unit in the key
(``*_ghz``, ``*_mhz``); energies are ``h * GHz``, the gap is in micro-eV and
temperatures in mK. A ``device`` key pulls in one of the shipped profiles;
anything given explicitly overrides it.

Example::

    device: Q1
    transmon: {n_g: 0.25}
    numerical: {dim: 201, n_t: 1201, n_big_t: 4001, k_max: 200}
    sweep: {omega_q_ghz: [10, 20, 40]}
    mechanisms: [diel, qpg]
    output_dir: out/q1
"""

from __future__ import annotations

import copy
import hashlib
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .charge import DriveParams, TransmonParams
from .floquet import NumericalConfig
from .resonator import ResonatorParams
from .spectra import (
    DEFAULT_DIEL_CUTOFF_GHZ,
    DEFAULT_GAP_UEV,
    DEFAULT_Q_DIEL,
    DEFAULT_Q_RAD,
    DEFAULT_QPG_CUTOFF_GHZ,
    DielectricBath,
    Mechanism,
    QpgBath,
    RadiativeBath,
)
from .units import ghz, mhz, uev

RAD_MAX_DIM = 201

# readout resonator and transmon parameters of the four measured devices
DEVICE_PROFILES = {
    "Q1": dict(omega_r_ghz=4.284, e_j_ghz=14.24, e_c_ghz=0.259, g_ghz=0.231,
               kappa_ex_mhz=15.586, kappa_o_mhz=16.82, qpg_cutoff_ghz=17.0, qubit_ghz=5.161),
    "Q2": dict(omega_r_ghz=4.297, e_j_ghz=13.01, e_c_ghz=0.257, g_ghz=0.212,
               kappa_ex_mhz=16.73, kappa_o_mhz=16.79, qpg_cutoff_ghz=17.0, qubit_ghz=4.896),
    "Q3": dict(omega_r_ghz=3.745, e_j_ghz=13.02, e_c_ghz=0.254, g_ghz=0.188,
               kappa_ex_mhz=27.38, kappa_o_mhz=27.59, qpg_cutoff_ghz=19.0, qubit_ghz=4.873),
    "Q4": dict(omega_r_ghz=7.5474, e_j_ghz=12.06, e_c_ghz=0.310, g_ghz=0.041,
               kappa_ex_mhz=6.43, kappa_o_mhz=6.43, qpg_cutoff_ghz=20.0, qubit_ghz=5.381),
}

_TOP_KEYS = {"device", "transmon", "drive", "resonator", "numerical", "baths", "sweep", "mechanisms",
             "parity_average", "output_dir", "checkpoint_interval", "dump"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BathSettings:
    q_rad: float = DEFAULT_Q_RAD
    q_diel: float = DEFAULT_Q_DIEL
    diel_cutoff_ghz: float = DEFAULT_DIEL_CUTOFF_GHZ
    qpg_cutoff_ghz: float = DEFAULT_QPG_CUTOFF_GHZ
    gap_uev: float = DEFAULT_GAP_UEV

    def build(self, params: TransmonParams, mechanisms) -> list:
        out = []
        for m in mechanisms:
            m = Mechanism(m)
            if m is Mechanism.RAD:
                out.append(RadiativeBath(self.q_rad))
            elif m is Mechanism.DIEL:
                out.append(DielectricBath(params.e_c, self.q_diel, ghz(self.diel_cutoff_ghz)))
            else:
                out.append(QpgBath(params.e_j, uev(self.gap_uev), ghz(self.qpg_cutoff_ghz)))
        return out


@dataclass(frozen=True)
class SweepConfig:
    """Resolved, validated sweep description.

    ``axis`` holds drive amplitudes ``Omega_q / 2pi`` in GHz when
    ``axis_kind == "omega_q"`` and photon numbers when ``axis_kind == "n_r"``.
    ``resolved`` is the plain-data form echoed into outputs and hashed.
    """

    params: TransmonParams
    omega_d: float
    resonator: ResonatorParams | None
    numerical: NumericalConfig
    baths: BathSettings
    axis_kind: str
    axis: tuple
    mechanisms: tuple
    parity_average: bool
    n_g_values: tuple
    output_dir: Path
    checkpoint_interval: int
    device: str | None
    dump: dict
    resolved: dict

    @property
    def drive_points(self) -> list[tuple[float, float]]:
        """``(n_g, omega_q_ghz)`` for every sweep point, in output order."""
        out = []
        for n_g in self.n_g_values:
            for v in self.axis:
                out.append((n_g, self.omega_q_ghz(v)))
        return out

    def omega_q_ghz(self, axis_value: float) -> float:
        if self.axis_kind == "omega_q":
            return float(axis_value)
        return 2.0 * self.resolved["resonator"]["g_ghz"] * float(np.sqrt(axis_value))

    def photons(self, omega_q_ghz: float) -> float:
        if self.resonator is None:
            return float("nan")
        return (omega_q_ghz / (2.0 * self.resolved["resonator"]["g_ghz"])) ** 2

    def drive(self, omega_q_ghz: float) -> DriveParams:
        return DriveParams(omega_q=ghz(omega_q_ghz), omega_d=self.omega_d)

    def bath_list(self, params: TransmonParams) -> list:
        return self.baths.build(params, self.mechanisms)

    def config_hash(self) -> str:
        blob = {k: v for k, v in self.resolved.items() if k not in ("output_dir", "checkpoint_interval")}
        text = json.dumps(blob, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _section(raw: dict, key: str) -> dict:
    val = raw.get(key) or {}
    if not isinstance(val, dict):
        raise ConfigError(f"section '{key}' must be a mapping")
    return dict(val)


def _strictly_increasing(vals, name):
    arr = np.asarray(vals, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ConfigError(f"{name} must be a non-empty list")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} must be finite")
    if np.any(np.diff(arr) <= 0):
        raise ConfigError(f"{name} must be strictly increasing")
    return tuple(float(v) for v in arr)


def resolve_config(raw: dict, base_dir: Path | None = None) -> SweepConfig:
    """Validate a parsed YAML mapping and fill in defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    raw = copy.deepcopy(raw)
    device = raw.get("device")
    prof = {}
    if device is not None:
        if device not in DEVICE_PROFILES:
            raise ConfigError(f"unknown device '{device}'; known: {sorted(DEVICE_PROFILES)}")
        prof = DEVICE_PROFILES[device]

    tr = _section(raw, "transmon")
    transmon = dict(
        e_c_ghz=float(tr.pop("e_c_ghz", prof.get("e_c_ghz", np.nan))),
        e_j_ghz=float(tr.pop("e_j_ghz", prof.get("e_j_ghz", np.nan))),
        n_g=float(tr.pop("n_g", 0.25)),
    )
    if tr:
        raise ConfigError(f"unknown transmon keys: {sorted(tr)}")
    if not np.isfinite(transmon["e_c_ghz"]) or not np.isfinite(transmon["e_j_ghz"]):
        raise ConfigError("transmon e_c_ghz and e_j_ghz are required (or give a device)")

    rs = _section(raw, "resonator")
    resonator = None
    if rs or prof:
        resonator = dict(
            omega_r_ghz=float(rs.pop("omega_r_ghz", prof.get("omega_r_ghz", np.nan))),
            g_ghz=float(rs.pop("g_ghz", prof.get("g_ghz", np.nan))),
            kappa_ex_mhz=float(rs.pop("kappa_ex_mhz", prof.get("kappa_ex_mhz", np.nan))),
            kappa_o_mhz=float(rs.pop("kappa_o_mhz", prof.get("kappa_o_mhz", np.nan))),
        )
        if rs:
            raise ConfigError(f"unknown resonator keys: {sorted(rs)}")
        if not all(np.isfinite(v) for v in resonator.values()):
            raise ConfigError("resonator needs omega_r_ghz, g_ghz, kappa_ex_mhz and kappa_o_mhz")

    dr = _section(raw, "drive")
    default_wd = resonator["omega_r_ghz"] if resonator else np.nan
    drive = dict(omega_d_ghz=float(dr.pop("omega_d_ghz", default_wd)))
    if dr:
        raise ConfigError(f"unknown drive keys: {sorted(dr)}")
    if not drive["omega_d_ghz"] > 0:
        raise ConfigError("drive.omega_d_ghz is required and must be positive")

    mechanisms = raw.get("mechanisms", ["rad", "diel", "qpg"])
    try:
        mechanisms = tuple(dict.fromkeys(Mechanism(m).value for m in mechanisms))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not mechanisms:
        raise ConfigError("mechanisms must be non-empty")

    nm = _section(raw, "numerical")
    numerical = dict(dim=401, k_max=200, n_t=2001, n_big_t=20001, d_active=None)
    extra = set(nm) - set(numerical)
    if extra:
        raise ConfigError(f"unknown numerical keys: {sorted(extra)}")
    numerical.update(nm)
    if "rad" in mechanisms and numerical["dim"] > RAD_MAX_DIM:
        warnings.warn(
            f"radiative loss requested: charge-basis dimension capped at {RAD_MAX_DIM} (was {numerical['dim']})",
            UserWarning,
            stacklevel=2,
        )
        numerical["dim"] = RAD_MAX_DIM

    ba = _section(raw, "baths")
    baths = dict(
        q_rad=DEFAULT_Q_RAD,
        q_diel=DEFAULT_Q_DIEL,
        diel_cutoff_ghz=DEFAULT_DIEL_CUTOFF_GHZ,
        qpg_cutoff_ghz=prof.get("qpg_cutoff_ghz", DEFAULT_QPG_CUTOFF_GHZ),
        gap_uev=DEFAULT_GAP_UEV,
    )
    extra = set(ba) - set(baths)
    if extra:
        raise ConfigError(f"unknown baths keys: {sorted(extra)}")
    baths.update({k: float(v) for k, v in ba.items()})

    sw = _section(raw, "sweep")
    if ("omega_q_ghz" in sw) == ("n_r" in sw):
        raise ConfigError("sweep needs exactly one of omega_q_ghz or n_r")
    axis_kind = "omega_q" if "omega_q_ghz" in sw else "n_r"
    axis = _strictly_increasing(sw.pop("omega_q_ghz" if axis_kind == "omega_q" else "n_r"), f"sweep.{axis_kind}")
    if axis[0] < 0:
        raise ConfigError("sweep values must be non-negative")
    if axis_kind == "n_r" and resonator is None:
        raise ConfigError("a photon-number sweep needs resonator parameters")
    n_g_values = _strictly_increasing(sw.pop("n_g", [transmon["n_g"]]), "sweep.n_g")
    if sw:
        raise ConfigError(f"unknown sweep keys: {sorted(sw)}")

    out_dir = Path(raw.get("output_dir", "floquet_loss_out"))
    if base_dir is not None and not out_dir.is_absolute():
        out_dir = Path(base_dir) / out_dir
    interval = int(raw.get("checkpoint_interval", 1))
    if interval < 1:
        raise ConfigError("checkpoint_interval must be >= 1")
    dump = _section(raw, "dump")

    resolved = dict(
        device=device,
        transmon=transmon,
        drive=drive,
        resonator=resonator,
        numerical=numerical,
        baths=baths,
        sweep={"axis_kind": axis_kind, "axis": list(axis), "n_g": list(n_g_values)},
        mechanisms=list(mechanisms),
        parity_average=bool(raw.get("parity_average", False)),
        output_dir=str(out_dir),
        checkpoint_interval=interval,
        dump=dump,
    )
    try:
        params = TransmonParams.from_ghz(transmon["e_c_ghz"], transmon["e_j_ghz"], transmon["n_g"], numerical["dim"])
        ncfg = NumericalConfig(**numerical)
        res = None
        if resonator is not None:
            res = ResonatorParams(
                omega_r=ghz(resonator["omega_r_ghz"]),
                g=ghz(resonator["g_ghz"]),
                kappa_ex=mhz(resonator["kappa_ex_mhz"]),
                kappa_o=mhz(resonator["kappa_o_mhz"]),
            )
        bath_settings = BathSettings(**baths)
        bath_settings.build(params, mechanisms)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return SweepConfig(
        params=params,
        omega_d=ghz(drive["omega_d_ghz"]),
        resonator=res,
        numerical=ncfg,
        baths=bath_settings,
        axis_kind=axis_kind,
        axis=axis,
        mechanisms=mechanisms,
        parity_average=resolved["parity_average"],
        n_g_values=n_g_values,
        output_dir=out_dir,
        checkpoint_interval=interval,
        device=device,
        dump=dump,
        resolved=resolved,
    )


def load_config(path) -> SweepConfig:
    path = Path(path)
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    return resolve_config(raw or {}, base_dir=path.parent)
