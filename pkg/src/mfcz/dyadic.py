"""Dyadic intervals on the torus, averages, stopping times and maximal functions.

Suprema over "all intervals" are taken over three dyadic lattices: the
standard one and its translates by (approximately, after rounding to the
grid) 1/3 and 2/3.  Every arc of length at most ``2**-l / 3`` lies inside an
interval of length ``2**-l`` from one of the three lattices, so the
three-lattice supremum controls the full one up to a fixed factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .grid import ConfigurationError, Grid, SampledFunction

__all__ = [
    "DyadicInterval",
    "Arc",
    "CubeSet",
    "lattice_shifts",
    "dyadic_means",
    "average",
    "arc_averages",
    "maximal_function",
    "stopping_cubes",
    "select_maximal",
]


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """``[k 2**-l, (k+1) 2**-l)`` with ``l = level`` and ``k = offset``."""

    level: int
    offset: int

    def __post_init__(self):
        if self.level < 0 or not 0 <= self.offset < (1 << self.level):
            raise ConfigurationError(f"invalid dyadic interval {self.level}/{self.offset}")

    @property
    def length(self) -> float:
        return 2.0 ** -self.level

    @property
    def start(self) -> float:
        return self.offset * self.length

    @property
    def end(self) -> float:
        return (self.offset + 1) * self.length

    @property
    def center(self) -> float:
        return (self.offset + 0.5) * self.length

    @property
    def parent(self) -> "DyadicInterval | None":
        if self.level == 0:
            return None
        return DyadicInterval(self.level - 1, self.offset >> 1)

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return (
            DyadicInterval(self.level + 1, 2 * self.offset),
            DyadicInterval(self.level + 1, 2 * self.offset + 1),
        )

    def contains(self, x: float) -> bool:
        return self.start <= (x % 1.0) < self.end

    def is_ancestor_of(self, other: "DyadicInterval") -> bool:
        """True when ``other`` is contained in ``self`` (including equality)."""
        if other.level < self.level:
            return False
        return (other.offset >> (other.level - self.level)) == self.offset

    def arc(self) -> "Arc":
        return Arc(self.start, self.length)

    def triple(self) -> "Arc":
        """3Q: same center, three times the length, reduced mod 1."""
        return Arc((self.start - self.length) % 1.0, 3 * self.length)

    def resolvable(self, grid: Grid) -> bool:
        return self.level <= grid.log2_size

    def _check(self, grid: Grid):
        if not self.resolvable(grid):
            raise ConfigurationError(
                f"interval at level {self.level} is below the resolution of {grid}"
            )

    def points(self, grid: Grid) -> int:
        self._check(grid)
        return 1 << (grid.log2_size - self.level)

    def indices(self, grid: Grid) -> np.ndarray:
        n = self.points(grid)
        return np.arange(self.offset * n, (self.offset + 1) * n)

    def triple_indices(self, grid: Grid) -> np.ndarray:
        """Sorted grid indices covered by 3Q (each index once)."""
        return self.triple().indices(grid)


@dataclass(frozen=True)
class Arc:
    """Periodic arc ``[start, start + length)``; ``length`` may exceed 1.

    Averages over an arc longer than the torus use the periodic extension
    of the integrand, so ``avg_{3Q}`` keeps its meaning for large cubes.
    """

    start: float
    length: float

    def __post_init__(self):
        if self.length <= 0:
            raise ConfigurationError(f"arc length must be positive, got {self.length}")
        object.__setattr__(self, "start", float(self.start) % 1.0)

    def span(self, grid: Grid) -> tuple[int, int]:
        """(first index, number of points) of the arc on ``grid``."""
        first = self.start * grid.size
        count = self.length * grid.size
        if first != round(first) or count != round(count) or count < 1:
            raise ConfigurationError(f"{self} is not aligned with {grid}")
        return int(round(first)), int(round(count))

    @property
    def measure(self) -> float:
        return self.length

    def covers_torus(self) -> bool:
        return self.length >= 1.0

    def indices(self, grid: Grid) -> np.ndarray:
        first, count = self.span(grid)
        if count >= grid.size:
            return np.arange(grid.size)
        return np.sort((first + np.arange(count)) % grid.size)

    def mask(self, grid: Grid) -> np.ndarray:
        out = np.zeros(grid.size, dtype=bool)
        out[self.indices(grid)] = True
        return out

    def contains_arc(self, other: "Arc") -> bool:
        if self.covers_torus():
            return True
        lead = (other.start - self.start) % 1.0
        return lead + other.length <= self.length


class CubeSet:
    """A finite collection of dyadic intervals."""

    def __init__(self, cubes=()):
        self.cubes = tuple(sorted(cubes))

    def __iter__(self):
        return iter(self.cubes)

    def __len__(self):
        return len(self.cubes)

    def __contains__(self, item):
        return item in self.cubes

    def __repr__(self):
        return f"CubeSet({len(self.cubes)} cubes, measure={self.measure:g})"

    @property
    def measure(self) -> float:
        """Sum of lengths (the measure of the union when disjoint)."""
        return float(sum(q.length for q in self.cubes))

    @cached_property
    def disjoint(self) -> bool:
        """Exact pairwise-disjointness test on lattice indices."""
        if len(self.cubes) < 2:
            return True
        depth = max(q.level for q in self.cubes)
        bounds = sorted(
            (q.offset << (depth - q.level), (q.offset + 1) << (depth - q.level))
            for q in self.cubes
        )
        return all(b[0] >= a[1] for a, b in zip(bounds, bounds[1:]))

    def union_mask(self, grid: Grid) -> np.ndarray:
        out = np.zeros(grid.size, dtype=bool)
        for q in self.cubes:
            n = q.points(grid)
            out[q.offset * n:(q.offset + 1) * n] = True
        return out


def lattice_shifts(grid: Grid) -> tuple[int, int, int]:
    """Grid offsets of the three lattices: 0, ~M/3, ~2M/3."""
    m = grid.size
    return (0, int(round(m / 3)), int(round(2 * m / 3)))


def dyadic_means(values: np.ndarray, shift: int = 0) -> list[np.ndarray]:
    """Means of ``values`` over every dyadic block, coarsest level first.

    ``values`` has length ``2**K``; entry ``l`` of the result holds the
    ``2**l`` block means of ``np.roll(values, -shift)``.
    """
    values = np.asarray(values)
    size = values.shape[-1]
    depth = size.bit_length() - 1
    if size != 1 << depth:
        raise ConfigurationError(f"length must be a power of two, got {size}")
    current = np.roll(values, -shift, axis=-1) if shift else values
    levels = [current]
    for _ in range(depth):
        current = 0.5 * (current[..., 0::2] + current[..., 1::2])
        levels.append(current)
    return levels[::-1]


def _coarse_to_fine_max(means: list[np.ndarray]) -> np.ndarray:
    running = means[0]
    for level in means[1:]:
        running = np.maximum(np.repeat(running, 2, axis=-1), level)
    return running


def average(f: SampledFunction, q: DyadicInterval | Arc, r: float = 1.0) -> float:
    """``(|Q|**-1 int_Q |f|**r)**(1/r)`` by grid quadrature."""
    if r <= 0:
        raise ConfigurationError(f"r must be positive, got {r}")
    arc = q.arc() if isinstance(q, DyadicInterval) else q
    if isinstance(q, DyadicInterval):
        q._check(f.grid)
    return float(arc_averages(np.abs(f.samples), [arc], r)[0])


def arc_averages(magnitudes: np.ndarray, arcs, r: float = 1.0) -> np.ndarray:
    """Vectorized r-averages of nonnegative grid values over many arcs."""
    magnitudes = np.asarray(magnitudes, dtype=float)
    size = magnitudes.size
    grid = Grid(size.bit_length() - 1)
    spans = np.array([a.span(grid) for a in arcs], dtype=np.int64).reshape(-1, 2)
    if len(spans) == 0:
        return np.zeros(0)
    powered = magnitudes**r
    reps = int(np.ceil(spans[:, 1].max() / size)) + 1
    csum = np.concatenate(([0.0], np.cumsum(np.tile(powered, reps))))
    totals = csum[spans[:, 0] + spans[:, 1]] - csum[spans[:, 0]]
    means = np.maximum(totals, 0.0) / spans[:, 1]
    return means ** (1.0 / r)


def maximal_function(
    f: SampledFunction, t: float = 1.0, shifts: tuple[int, ...] | None = None
) -> SampledFunction:
    """Dyadic Hardy-Littlewood maximal function ``M_t f = M(|f|**t)**(1/t)``.

    The supremum runs over every resolvable interval of the lattices given
    by ``shifts`` (default: the three shifted lattices).  ``t`` may be any
    positive exponent, which covers ``M(|Tf|**s)**(1/s)`` with ``s < 1``.
    """
    if t <= 0:
        raise ConfigurationError(f"t must be positive, got {t}")
    if shifts is None:
        shifts = lattice_shifts(f.grid)
    powered = np.abs(f.samples) ** t
    best = np.zeros(f.grid.size)
    for shift in shifts:
        local = _coarse_to_fine_max(dyadic_means(powered, shift))
        best = np.maximum(best, np.roll(local, shift))
    return SampledFunction(f.grid, best ** (1.0 / t))


def select_maximal(
    values: np.ndarray, threshold: float, level: int = 0, offset: int = 0
) -> list[DyadicInterval]:
    """Maximal dyadic blocks of ``values`` whose mean exceeds ``threshold``.

    ``values`` holds the samples of the root interval ``(level, offset)``
    (a power-of-two count); the search descends top-down from the root.
    """
    means = dyadic_means(np.asarray(values, dtype=float))
    chosen: list[DyadicInterval] = []
    alive = np.array([0])
    for depth, block_means in enumerate(means):
        if alive.size == 0:
            break
        hit = block_means[alive] > threshold
        for k in alive[hit]:
            chosen.append(DyadicInterval(level + depth, (offset << depth) + int(k)))
        rest = alive[~hit]
        alive = np.concatenate((2 * rest, 2 * rest + 1))
    return chosen


def stopping_cubes(
    f: SampledFunction, threshold: float, root: DyadicInterval | None = None
) -> CubeSet:
    """Maximal base-lattice intervals with ``average(f, Q, 1) > threshold``.

    With ``root`` the search is confined to the dyadic descendants of that
    interval (the root itself included).
    """
    if threshold <= 0:
        raise ConfigurationError(f"threshold must be positive, got {threshold}")
    mags = np.abs(f.samples)
    if root is None:
        return CubeSet(select_maximal(mags, threshold))
    idx = root.indices(f.grid)
    return CubeSet(select_maximal(mags[idx], threshold, root.level, root.offset))

