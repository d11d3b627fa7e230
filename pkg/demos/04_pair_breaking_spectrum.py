"""
The pair-breaking spectrum
==========================

Quasiparticle generation needs at least twice the gap. Above threshold the
two branches S+ and S- approach the same linear growth.
"""

# %%
import numpy as np

from floquet_loss import QpgBath
from floquet_loss.spectra import j_qpg, qpg_conductance, s_minus, s_minus_threshold, s_plus, s_plus_threshold
from floquet_loss.units import HBAR, ghz, uev

print("below threshold: S+(1.5) = %g, S-(1.9) = %g" % (s_plus(1.5), s_minus(1.9)))
w = np.array([2.05, 2.2, 3.0, 5.0, 10.0, 40.0])
print("   w      S+       S-     S+ thr.  S- thr.")
for wi, sp, sm in zip(w, s_plus(w), s_minus(w)):
    print("%6.2f %8.4f %8.4f %8.4f %8.4f" % (wi, sp, sm, s_plus_threshold(wi), s_minus_threshold(wi)))

# %%
# Spectral density and conductance of the Q1 junction with a 17 GHz cutoff.
bath = QpgBath(e_j=ghz(14.24), delta_al=uev(180.0), omega_c=ghz(17.0))
print("threshold: %.2f GHz" % (bath.gap_frequency / (2 * np.pi * 1e9)))
for f in (80.0, 90.0, 200.0, 1000.0):
    om = ghz(f)
    print("%7.1f GHz  J+ = %.3e /s  sigma = %.3e S" % (f, j_qpg(om, bath), qpg_conductance(om, bath)))
