"""Random sign multipliers on the Dirichlet polynomial: the N^(1/p - 1/2) growth.

Run with ``python3 demos/lower_bound.py``.
"""

from mfcz import make_grid
from mfcz.experiments import run_lower_bound_experiment

grid = make_grid(12)
p = 4 / 3
res = run_lower_bound_experiment(p, [8, 16, 32, 64, 128, 256], 20, seed=7, grid=grid)
for n, best, plus in zip(res.ns, res.statistic, res.extra["all_plus"]):
    print(f"N={n:4d}: best random signs {best:7.3f}, all plus {plus:.3f}")
print(f"fitted slope {res.slope:.3f} against 1/p - 1/2 = {1 / p - 0.5:.3f}")
