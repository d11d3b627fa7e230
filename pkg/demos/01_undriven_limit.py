"""
The undriven limit
==================

Without a drive the Floquet modes are the transmon eigenstates and the
quasienergies are the eigenenergies folded into one drive-photon window.
"""

# %%
import numpy as np

from floquet_loss import DriveParams, NumericalConfig, TransmonParams, floquet_basis, static_eigensystem
from floquet_loss.units import to_ghz

params = TransmonParams.from_ghz(e_c_ghz=0.259, e_j_ghz=14.24, n_g=0.25, dim=21)
energies, states = static_eigensystem(params)
print("f01 = %.4f GHz, anharmonicity = %.1f MHz"
      % (to_ghz(energies[1] - energies[0]), 1e3 * to_ghz(energies[2] - 2 * energies[1] + energies[0])))

# %%
# One period of free evolution at the readout frequency.
drive = DriveParams.from_ghz(omega_q_ghz=0.0, omega_d_ghz=4.284)
basis = floquet_basis(params, drive, NumericalConfig(dim=None, n_t=401, n_big_t=4001))

folded = (energies + drive.omega_d / 2) % drive.omega_d - drive.omega_d / 2
print("largest quasienergy mismatch: %.2e GHz" % to_ghz(np.abs(basis.quasienergies - folded).max()))

# %%
# The ordering by averaged energy recovers the eigenstate ladder.
fid = np.abs(np.sum(basis.modes0.conj() * states, axis=0)) ** 2
for i in range(5):
    print("mode %d  H = %8.3f GHz  eps = %+7.3f GHz  fidelity %.12f"
          % (i, to_ghz(basis.avg_energy[i]), to_ghz(basis.quasienergies[i]), fid[i]))
