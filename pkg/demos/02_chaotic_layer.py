"""
Growth of the chaotic layer
===========================

A strong drive mixes the transmon states above the Josephson barrier into
broadband Floquet modes. We count them with the largest-overlap criterion and
watch the ground-connected mode until it is swallowed.
"""

# %%
import numpy as np

from floquet_loss import (
    DriveParams,
    NumericalConfig,
    TransmonParams,
    classify_chaotic,
    floquet_basis,
    ground_connected_mode,
    static_eigensystem,
)
from floquet_loss.resonator import photons_from_omega_q
from floquet_loss.units import ghz, mhz, to_ghz

params = TransmonParams.from_ghz(0.259, 14.24, n_g=0.25, dim=101)
cfg = NumericalConfig(dim=None, n_t=401, n_big_t=4001)
_, states = static_eigensystem(params)
g = mhz(231.0)

# %%
print(" Omega_q/2pi   N_r    N_ch  ground mode  max overlap  H (GHz)")
for om in [0.5, 1.0, 1.5, 2.0, 5.0, 10.0, 20.0]:
    drive = DriveParams(omega_q=ghz(om), omega_d=ghz(4.284))
    basis = floquet_basis(params, drive, cfg)
    cls = classify_chaotic(basis, states)
    i = ground_connected_mode(cls)
    print("%8.1f GHz %7.1f %6d %8d %12.3f %10.2f"
          % (om, photons_from_omega_q(g, drive.omega_q), cls.n_ch, i, cls.max_overlap[i], to_ghz(basis.avg_energy[i])))

# %%
# The chaotic modes sit at the bottom of the averaged-energy order and are
# spread over many charge states.
spread = np.sum(np.abs(basis.modes0) ** 2 > 1e-3, axis=0)
print("charge states above 1e-3 weight, first 5 chaotic modes:", spread[:5])
print("same for the first 5 regular modes above the layer:", spread[cls.n_ch:cls.n_ch + 5])
