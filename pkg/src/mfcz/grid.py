"""Uniform periodic grids on the torus [0, 1).

Every signal in the package is a :class:`SampledFunction`: complex samples
at ``x_i = i / M`` with ``M = 2**K``.  Integrals are rectangle-rule sums,
``int f ~ spacing * sum(samples)``, which is exact for trigonometric
polynomials of degree below ``M / 2``.

Spectral normalization: :func:`forward_transform` returns coefficients
``c_xi`` with ``f(x) = sum_xi c_xi exp(2 pi i xi x)``, so ``c_xi`` is also
the Fourier transform ``int_0^1 f(x) exp(-2 pi i xi x) dx`` under the grid
quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConfigurationError",
    "GridMismatchError",
    "Grid",
    "SampledFunction",
    "Spectrum",
    "make_grid",
    "forward_transform",
    "inverse_transform",
    "lp_norm",
    "weak_l1_quasinorm",
    "indicator",
]

MIN_LOG2_SIZE = 4
MAX_LOG2_SIZE = 24


class ConfigurationError(ValueError):
    """Raised for out-of-range sizes, exponents and other bad parameters."""


class GridMismatchError(ValueError):
    """Raised when two objects living on different grids are combined."""


@dataclass(frozen=True)
class Grid:
    """``M = 2**log2_size`` equispaced points on the periodic interval [0, 1)."""

    log2_size: int

    def __post_init__(self):
        if not isinstance(self.log2_size, (int, np.integer)):
            raise ConfigurationError(f"log2_size must be an integer, got {self.log2_size!r}")
        if not MIN_LOG2_SIZE <= self.log2_size <= MAX_LOG2_SIZE:
            raise ConfigurationError(
                f"log2_size must lie in [{MIN_LOG2_SIZE}, {MAX_LOG2_SIZE}], got {self.log2_size}"
            )

    @property
    def size(self) -> int:
        return 1 << int(self.log2_size)

    @property
    def spacing(self) -> float:
        # exact: a power of two
        return 1.0 / self.size

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.size) * self.spacing

    @property
    def frequencies(self) -> np.ndarray:
        """Integer frequencies ``-M/2, ..., M/2 - 1`` in ascending order."""
        half = self.size // 2
        return np.arange(-half, half)

    def zeros(self) -> "SampledFunction":
        return SampledFunction(self, np.zeros(self.size, dtype=complex))

    def ones(self) -> "SampledFunction":
        return SampledFunction(self, np.ones(self.size, dtype=complex))

    def sample(self, func) -> "SampledFunction":
        """Evaluate a vectorized callable at the grid points."""
        return SampledFunction(self, np.asarray(func(self.points), dtype=complex))


def make_grid(log2_size: int) -> Grid:
    """Return the grid with ``2**log2_size`` points.

    >>> make_grid(4).size, make_grid(4).spacing
    (16, 0.0625)
    """
    return Grid(int(log2_size))


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Complex samples of a function on ``grid``; immutable."""

    grid: Grid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.samples, dtype=complex, copy=True).reshape(-1)
        if values.shape[0] != self.grid.size:
            raise GridMismatchError(
                f"expected {self.grid.size} samples, got {values.shape[0]}"
            )
        object.__setattr__(self, "samples", _frozen(values))

    def _check(self, other: "SampledFunction"):
        if other.grid != self.grid:
            raise GridMismatchError(f"grids differ: {self.grid} vs {other.grid}")

    def __add__(self, other):
        if isinstance(other, SampledFunction):
            self._check(other)
            return SampledFunction(self.grid, self.samples + other.samples)
        return SampledFunction(self.grid, self.samples + other)

    def __sub__(self, other):
        if isinstance(other, SampledFunction):
            self._check(other)
            return SampledFunction(self.grid, self.samples - other.samples)
        return SampledFunction(self.grid, self.samples - other)

    def __mul__(self, other):
        if isinstance(other, SampledFunction):
            self._check(other)
            return SampledFunction(self.grid, self.samples * other.samples)
        return SampledFunction(self.grid, self.samples * other)

    __rmul__ = __mul__

    def __neg__(self):
        return SampledFunction(self.grid, -self.samples)

    def abs(self) -> "SampledFunction":
        return SampledFunction(self.grid, np.abs(self.samples))

    def integral(self) -> complex:
        return self.grid.spacing * self.samples.sum()

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.samples)))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Fourier coefficients indexed by ``grid.frequencies`` (ascending)."""

    grid: Grid
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.coefficients, dtype=complex, copy=True).reshape(-1)
        if values.shape[0] != self.grid.size:
            raise GridMismatchError(
                f"expected {self.grid.size} coefficients, got {values.shape[0]}"
            )
        object.__setattr__(self, "coefficients", _frozen(values))

    def at(self, xi) -> np.ndarray | complex:
        """Coefficient(s) at integer frequency ``xi`` in ``[-M/2, M/2)``."""
        xi = np.asarray(xi)
        half = self.grid.size // 2
        if np.any((xi < -half) | (xi >= half)):
            raise ConfigurationError(f"frequency out of band [-{half}, {half})")
        out = self.coefficients[xi + half]
        return out.item() if out.ndim == 0 else out


def forward_transform(f: SampledFunction) -> Spectrum:
    """Coefficients ``c_xi = (1/M) sum_i f_i exp(-2 pi i xi x_i)``."""
    coeffs = np.fft.fftshift(np.fft.fft(f.samples)) / f.grid.size
    return Spectrum(f.grid, coeffs)


def inverse_transform(s: Spectrum) -> SampledFunction:
    """Synthesis ``f(x_i) = sum_xi c_xi exp(2 pi i xi x_i)``."""
    samples = np.fft.ifft(np.fft.ifftshift(s.coefficients)) * s.grid.size
    return SampledFunction(s.grid, samples)


def _weight_samples(w, grid: Grid) -> np.ndarray:
    w_grid = getattr(w, "grid", None)
    if w_grid is not None and w_grid != grid:
        raise GridMismatchError(f"weight lives on {w_grid}, function on {grid}")
    values = np.asarray(getattr(w, "samples", w), dtype=float)
    if values.shape != (grid.size,):
        raise GridMismatchError(f"weight has shape {values.shape}, expected ({grid.size},)")
    if np.any(values < 0):
        raise ConfigurationError("weights must be nonnegative")
    return values


def lp_norm(f: SampledFunction, p: float, w=None) -> float:
    """Weighted Lebesgue norm ``(spacing * sum |f_i|**p w_i)**(1/p)``.

    ``w`` is a :class:`~mfcz.weights.Weight`, a nonnegative array, or
    ``None`` for the unweighted norm.
    """
    if p < 1:
        raise ConfigurationError(f"p must be >= 1, got {p}")
    mags = np.abs(f.samples)
    if w is None:
        weights = 1.0
    else:
        weights = _weight_samples(w, f.grid)
    if np.isinf(p):
        return float(np.max(mags[np.broadcast_to(weights, mags.shape) > 0], initial=0.0))
    total = f.grid.spacing * np.sum(mags**p * weights)
    return float(total ** (1.0 / p))


def weak_l1_quasinorm(f: SampledFunction) -> float:
    """``sup_lambda lambda |{|f| > lambda}|`` over the grid.

    For a simple function the supremum is approached from below each
    attained level ``v``, where it equals ``v * |{|f| >= v}|``.
    """
    mags = np.sort(np.abs(f.samples))[::-1]
    # for the k-th largest value (0-based), at least k + 1 samples are >= it;
    # ties are resolved by taking the last occurrence of each value
    counts = np.arange(1, mags.size + 1)
    last_of_run = np.append(mags[1:] != mags[:-1], True)
    levels = mags[last_of_run] * counts[last_of_run] * f.grid.spacing
    return float(levels.max(initial=0.0))


def indicator(grid: Grid, start: float, stop: float) -> SampledFunction:
    """Indicator of the periodic arc ``[start, stop)``, wrapping mod 1."""
    x = grid.points
    length = stop - start
    if length >= 1:
        return grid.ones()
    shifted = np.mod(x - start, 1.0)
    return SampledFunction(grid, (shifted < length).astype(complex))
