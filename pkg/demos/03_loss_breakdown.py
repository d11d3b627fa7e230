"""
Where the drive power goes
==========================

The steady state of the Floquet-Markov rate equation gives the power the
driven transmon dumps into each bath. Here at a moderate drive and reduced
charge basis, so it runs in seconds.
"""

# %%
from floquet_loss import (
    DielectricBath,
    DriveParams,
    NumericalConfig,
    QpgBath,
    RadiativeBath,
    TransmonParams,
    predicted_kappa,
    run_pipeline,
)
from floquet_loss.units import ghz, mhz, to_mhz

params = TransmonParams.from_ghz(0.259, 14.24, n_g=0.25, dim=101)
drive = DriveParams(omega_q=ghz(20.0), omega_d=ghz(4.284))
cfg = NumericalConfig(dim=None, n_t=1201, n_big_t=4001, k_max=200)
baths = [RadiativeBath(), DielectricBath(e_c=params.e_c), QpgBath(e_j=params.e_j)]

comp = run_pipeline(params, drive, cfg, baths)
rep = comp.report
print("N_ch = %d, active modes = %d" % (rep.n_ch_used, comp.d_active))
for mech, rate in rep.photon_rate_by_mechanism().items():
    print("  %-5s %.3e drive photons per second" % (mech.value, rate))

# %%
# Expressed as extra resonator damping at the matching photon number.
n_r = (20.0 / (2 * 0.231)) ** 2
kappa = predicted_kappa(rep, n_r, drive.omega_d, kappa_o=mhz(16.82))
print("N_r = %.0f  ->  kappa/2pi = %.3f MHz" % (n_r, to_mhz(kappa)))

# %%
# Most of the population stays inside the chaotic layer.
p = rep.populations
print("populations of the first modes:", " ".join("%.3f" % x for x in p[:8]))
