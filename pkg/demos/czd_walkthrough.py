"""Decompose a spiky signal relative to a set of frequencies.

Run with ``python3 demos/czd_walkthrough.py``.
"""

import numpy as np

from mfcz import FrequencySet, SampledFunction, forward_transform, make_grid, mf_czd

grid = make_grid(12)
rng = np.random.default_rng(1)

# a few tall spikes over faint noise
values = 1e-2 * rng.standard_normal(grid.size)
values[rng.choice(grid.size, 5, replace=False)] = grid.size * rng.standard_normal(5)
f = SampledFunction(grid, values)
l1 = float(np.mean(np.abs(values)))

# at fixed lambda, more frequencies lower the stopping height lambda / sqrt(N)
# and the cubes around the spikes grow
for n in (1, 4, 16, 64):
    theta = FrequencySet(tuple(rng.choice(np.arange(-1000, 1000), n, replace=False)))
    d = mf_czd(f, 16 * l1, theta)
    rep = d.report
    print(f"N={n:3d}: {rep.n_cubes:3d} cubes of total length {d.cubes.measure:.4f}, packing {rep.packing_constant:.3f}, "
          f"mass {rep.per_cube_mass_constant:.3f}, good L2 {rep.good_l2_constant:.3f}, "
          f"overlap {rep.overlap_multiplicity}, cancellation {rep.cancellation_residual:.1e}")

# every bad part vanishes at every chosen frequency
q = next(iter(d.cubes))
coeffs = forward_transform(d.bad_part(q)).at(theta.as_array())
print("largest bad-part coefficient on theta:", float(np.max(np.abs(coeffs))))
print("f - g - sum b_Q:", float(np.max(np.abs(f.samples - d.good.samples - sum(d.bad_part(c).samples for c in d.cubes)))))
