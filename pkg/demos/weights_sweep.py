"""Power weights |x|^alpha: characteristics and the sparse weighted bound.

Run with ``python3 demos/weights_sweep.py``.
"""

import numpy as np

from mfcz import (
    DominationParams,
    ap_characteristic,
    make_grid,
    power_weight,
    random_multiplier_operator,
    rh_characteristic,
    sparse_dominate,
)
from mfcz.experiments import check_sparse_weighted, make_input

grid = make_grid(12)
rng = np.random.default_rng(2)
T = random_multiplier_operator(grid, 16, 2, rng)
f = make_input("noise", grid, rng)
S = sparse_dominate(T, f, DominationParams.for_operator(T, r=1.0))

# [w]_{A_2} blows up as alpha approaches 1; the normalized sparse ratio does not
for alpha in (-0.5, 0.0, 0.5, 0.8, 0.9, 0.95):
    w = power_weight(grid, alpha)
    out = check_sparse_weighted(S, f, w, p=2.0, r=1.0)
    print(f"alpha={alpha:5.2f}: [w]_A2 = {ap_characteristic(w, 2.0):8.3f}, "
          f"[w]_RH2 = {rh_characteristic(w, 2.0):6.3f}, normalized ratio {out.ratio:.3f}")
