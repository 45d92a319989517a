"""
Kernels on a periodic grid
==========================

Compare the squared exponential and Matern-3/2 kernels with their periodic
versions built from discrete power spectra, and see how fast each spectrum
decays.
"""

import numpy as np

from gpscale import kernels
from gpscale.fourier import TruncatedBasis

n, ell = 128, 0.2
lags = np.arange(n) / n

se = kernels.se_spectrum_1d(n, sigma=1.0, ell=ell, period=1.0)
matern = kernels.matern_spectrum_1d(n, nu=1.5, sigma=1.0, ell=ell, period=1.0)

# The inverse real FFT of a spectrum is the first row of a circulant covariance.
se_row = kernels.periodic_kernel_row(se)
matern_row = kernels.periodic_kernel_row(matern)

print("lag     SE(periodic)  SE(exact)  Matern(periodic)  Matern(exact)")
for k in range(0, 33, 4):
    print(f"{lags[k]:.3f}   {se_row[k]:11.5f}  {kernels.se_cov(lags[k], 1.0, ell):9.5f}"
          f"  {matern_row[k]:16.5f}  {kernels.matern_cov(lags[k], 1.0, ell, 1.5):13.5f}")

# Most of the SE prior power sits in a handful of modes; Matern keeps a heavy tail.
for name, spectrum in [("SE", se), ("Matern-3/2", matern)]:
    print(f"{name}: tail ratio at frequency 32 {spectrum.values[32] / spectrum.values[0]:.2e}")

truncated = [
    ("SE", kernels.se_spectrum_1d(102, 1.0, ell, 1.0)),
    ("Matern-3/2", kernels.matern_spectrum_1d(102, 1.5, 1.0, ell, 1.0)),
]
for name, spectrum in truncated:
    print(f"{name}: power in the six lowest of 52 modes {TruncatedBasis(spectrum, 6).retained_power:.5f}")
