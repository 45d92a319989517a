"""
Counts on a masked grid
=======================

Simulate tree-density-like counts, hold out a fifth of the cells, and compare
the negative-binomial Fourier GP against the best Gaussian filter.
"""

import numpy as np

from gpscale.harness import gaussian_filter_estimate, masked_count_fit, simulate_count_grid, smse

train, test, counts, f = simulate_count_grid((20, 30), pad=8, length_scale=3.0, rng=0)
print(f"{train.n_observed} training cells, {test.sum()} held out")

fit = masked_count_fit(train, pad=8, rng=0)
for name, s in fit.hyper_summary().items():
    print(f"{name:>12}: {s['median']:.3f}  [{s['q05']:.3f}, {s['q95']:.3f}]")

gp = smse(counts[test], fit.median_f[test])
scales = np.arange(0.5, 5.01, 0.5)
filt = [smse(counts[test], np.log(gaussian_filter_estimate(train, s)[test])) for s in scales]
print(f"GP SMSE {gp:.3f}; best filter SMSE {min(filt):.3f} at scale {scales[np.argmin(filt)]}")
