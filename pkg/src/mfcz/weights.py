"""Weights on the torus and their Muckenhoupt / reverse Hoelder characteristics.

Both characteristics are suprema over the intervals of the three shifted
dyadic lattices used throughout the package (see :mod:`mfcz.dyadic`), at
every resolvable level.
"""

from __future__ import annotations

import csv

import numpy as np

from .dyadic import dyadic_means, lattice_shifts
from .grid import ConfigurationError, Grid

__all__ = [
    "Weight",
    "ap_characteristic",
    "ap_characteristic_bruteforce",
    "rh_characteristic",
    "power_weight",
    "random_ap_weight",
    "write_weight_csv",
    "read_weight_csv",
]

# slack for the Jensen lower bound [w]_{A_p} >= 1 under rounding
_JENSEN_SLACK = 1e-12


class Weight:
    """A nonnegative, not identically zero function on a grid.

    Characteristics are cached per ``(class, exponent)`` on first use.
    """

    def __init__(self, grid: Grid, samples):
        values = np.array(samples, dtype=float, copy=True).reshape(-1)
        if values.shape[0] != grid.size:
            raise ConfigurationError(f"expected {grid.size} samples, got {values.shape[0]}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ConfigurationError("weight samples must be finite and nonnegative")
        if not np.any(values > 0):
            raise ConfigurationError("weight is identically zero")
        values.setflags(write=False)
        self.grid = grid
        self.samples = values
        self._cache: dict[tuple[str, float], float] = {}

    def __repr__(self):
        return f"Weight({self.grid}, min={self.samples.min():.3g}, max={self.samples.max():.3g})"

    def __mul__(self, c: float) -> "Weight":
        return Weight(self.grid, self.samples * float(c))

    __rmul__ = __mul__

    def characteristic(self, kind: str, p: float) -> float:
        key = (kind, float(p))
        if key not in self._cache:
            if kind == "A":
                value = _ap_scan(self.samples, p, lattice_shifts(self.grid))
            elif kind == "RH":
                value = _rh_scan(self.samples, p, lattice_shifts(self.grid))
            else:
                raise ConfigurationError(f"unknown weight class {kind!r}")
            self._cache[key] = value
        return self._cache[key]


def _ap_scan(w: np.ndarray, p: float, shifts) -> float:
    if p <= 1:
        raise ConfigurationError(f"A_p needs p > 1, got {p}")
    if np.any(w == 0):
        # the dual average of w**(1 - p') diverges on any interval meeting a zero
        return float("inf")
    dual = w ** (-1.0 / (p - 1.0))
    best = 0.0
    for shift in shifts:
        for mw, md in zip(dyadic_means(w, shift), dyadic_means(dual, shift)):
            best = max(best, float(np.max(mw * md ** (p - 1.0))))
    if best < 1.0 - _JENSEN_SLACK:
        raise ArithmeticError(f"A_{p} characteristic {best} violates Jensen's bound")
    return best


def _rh_scan(w: np.ndarray, p: float, shifts) -> float:
    if p <= 1:
        raise ConfigurationError(f"RH_p needs p > 1, got {p}")
    top = w / w.max()  # scale-free; avoids overflow in w**p
    powered = top**p
    best = 0.0
    for shift in shifts:
        for mp, m1 in zip(dyadic_means(powered, shift), dyadic_means(top, shift)):
            live = m1 > 0
            if np.any(live):
                best = max(best, float(np.max(mp[live] ** (1.0 / p) / m1[live])))
    return best


def ap_characteristic(w: Weight, p: float) -> float:
    """``[w]_{A_p} = sup_Q (avg_Q w) (avg_Q w**(1-p'))**(p-1)``.

    Returns ``inf`` when ``w`` vanishes at a grid point.
    """
    return w.characteristic("A", p)


def ap_characteristic_bruteforce(w: Weight, p: float) -> float:
    """Interval-by-interval evaluation of ``[w]_{A_p}`` for small grids.

    Walks every interval of the three lattices explicitly and averages
    with ``np.mean``; shares no code with the pyramid scan.
    """
    if p <= 1:
        raise ConfigurationError(f"A_p needs p > 1, got {p}")
    m = w.grid.size
    if m > 1024:
        raise ConfigurationError("brute-force scan is meant for small grids")
    values = w.samples
    if np.any(values == 0):
        return float("inf")
    best = 0.0
    for shift in lattice_shifts(w.grid):
        for level in range(w.grid.log2_size + 1):
            n = m >> level
            for k in range(1 << level):
                idx = (shift + k * n + np.arange(n)) % m
                block = values[idx]
                value = np.mean(block) * np.mean(block ** (-1.0 / (p - 1.0))) ** (p - 1.0)
                best = max(best, float(value))
    return best


def rh_characteristic(w: Weight, p: float) -> float:
    """``sup_Q (avg_Q w**p)**(1/p) / avg_Q w``."""
    return w.characteristic("RH", p)


def power_weight(grid: Grid, alpha: float) -> Weight:
    """``w(x) = d(x)**alpha`` with ``d`` the torus distance to 0.

    The singular sample at ``x = 0`` is replaced by the value at half the
    grid spacing.
    """
    if alpha <= -1:
        raise ConfigurationError(f"|x|**alpha is not locally integrable for alpha={alpha}")
    x = grid.points
    dist = np.minimum(x, 1.0 - x)
    dist[0] = 0.5 * grid.spacing
    return Weight(grid, dist**alpha)


def random_ap_weight(grid: Grid, roughness: float, seed: int, bandwidth: int = 16) -> Weight:
    """``exp(a * h)`` for a random smooth field ``h`` with ``max |h| = 1``.

    The log-amplitude ``a = 2 * roughness / (1 - roughness)`` vanishes at
    ``roughness = 0`` (giving ``w = 1``) and blows up as ``roughness -> 1``.
    ``h`` has random Fourier coefficients at ``|xi| <= bandwidth`` decaying
    like ``1 / (1 + |xi|)``.
    """
    if not 0 <= roughness < 1:
        raise ConfigurationError(f"roughness must lie in [0, 1), got {roughness}")
    if roughness == 0:
        return Weight(grid, np.ones(grid.size))
    rng = np.random.default_rng(seed)
    band = min(bandwidth, grid.size // 2 - 1)
    xi = np.arange(1, band + 1)
    amp = (rng.standard_normal(band) + 1j * rng.standard_normal(band)) / (1.0 + xi)
    field = np.real(np.exp(2j * np.pi * np.outer(grid.points, xi)) @ amp)
    field /= np.max(np.abs(field))
    scale = 2.0 * roughness / (1.0 - roughness)
    return Weight(grid, np.exp(scale * field))


def write_weight_csv(w: Weight, path) -> None:
    """Write ``index, x, w`` rows, full precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "x", "w"])
        for i, (x, v) in enumerate(zip(w.grid.points, w.samples)):
            writer.writerow([i, f"{x:.17e}", f"{v:.17e}"])


def read_weight_csv(path) -> Weight:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    values = np.array([float(r["w"]) for r in rows])
    size = values.size
    log2 = size.bit_length() - 1
    if size != 1 << log2:
        raise ConfigurationError(f"{path}: {size} rows is not a power of two")
    return Weight(Grid(log2), values)
