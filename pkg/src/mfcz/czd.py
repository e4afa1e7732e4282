"""Calderon-Zygmund decomposition adapted to a finite set of frequencies.

``f = g + sum_Q b_Q`` where the ``Q`` are the maximal dyadic intervals on
which the mean of ``|f|`` exceeds ``lambda / sqrt(N)``.  Each bad part is

    b_Q = f chi_Q - p_Q,    p_Q = sum_k c_k exp(2 pi i xi_k x) chi_{3Q},

with ``p_Q`` the least-L^2 function on 3Q of that form whose Fourier
transform matches ``f chi_Q`` at every frequency of the set.  Then
``hat(b_Q)(xi_j) = 0`` for all ``j`` and ``b_Q`` lives on 3Q.

The moment system is solved through the SVD of the ``N x |3Q|`` moment
matrix with a relative singular-value cutoff; for clustered frequencies on
a short interval the exponentials are numerically dependent, and the
cutoff turns exact matching into least-squares matching.  The loss shows up
in ``cancellation_residual``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .dyadic import CubeSet, DyadicInterval, stopping_cubes
from .grid import ConfigurationError, SampledFunction
from .mfczo import FrequencySet

__all__ = [
    "BadPart",
    "PropertyReport",
    "CZDecomposition",
    "mf_czd",
    "verify_czd",
    "SINGULAR_CUTOFF",
]

SINGULAR_CUTOFF = 1e-10


@dataclass(frozen=True, eq=False)
class BadPart:
    """``b_Q`` stored sparsely on the grid indices of 3Q."""

    cube: DyadicInterval
    support: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    coefficients: np.ndarray = field(repr=False)
    rank: int

    def dense(self, size: int) -> np.ndarray:
        out = np.zeros(size, dtype=complex)
        out[self.support] = self.values
        return out


@dataclass
class PropertyReport:
    """Measured constants of the six decomposition properties, plus exact checks."""

    n_freq: int
    lam: float
    grid_size: int
    n_cubes: int
    overlap_multiplicity: int
    packing_constant: float
    good_l2_constant: float
    per_cube_mass_constant: float
    local_l2_constant: float
    cancellation_residual: float
    identity_error: float = 0.0
    support_violation: float = 0.0
    cubes_disjoint: bool = True
    off_cube_ratio: float = 0.0
    root_selected: bool = False

    def as_row(self) -> dict:
        return asdict(self)

    def finite(self) -> bool:
        values = [
            self.overlap_multiplicity,
            self.packing_constant,
            self.good_l2_constant,
            self.per_cube_mass_constant,
            self.local_l2_constant,
            self.cancellation_residual,
        ]
        return all(np.isfinite(v) and v >= 0 for v in values)


@dataclass(frozen=True, eq=False)
class CZDecomposition:
    f: SampledFunction
    lam: float
    theta: FrequencySet
    cubes: CubeSet
    bad_parts: dict
    good: SampledFunction
    report: PropertyReport

    @property
    def threshold(self) -> float:
        return self.lam / np.sqrt(len(self.theta))

    def bad_part(self, q: DyadicInterval) -> SampledFunction:
        return SampledFunction(self.f.grid, self.bad_parts[q].dense(self.f.grid.size))


def _moment_matrix(points: np.ndarray, freqs: np.ndarray, spacing: float) -> np.ndarray:
    """``A[j, i] = spacing * exp(-2 pi i xi_j x_i)``: Fourier coefficients as a map."""
    return spacing * np.exp(-2j * np.pi * np.outer(freqs, points))


def _solve_min_norm(A: np.ndarray, mu: np.ndarray, cutoff: float):
    u, s, vh = np.linalg.svd(A, full_matrices=False)
    keep = s > cutoff * s[0] if s.size else s.astype(bool)
    coeffs = (u[:, keep].conj().T @ mu) / s[keep]
    return vh[keep].conj().T @ coeffs, int(keep.sum())


def mf_czd(f: SampledFunction, lam: float, theta: FrequencySet | list) -> CZDecomposition:
    """Decompose ``f`` at height ``lam`` relative to the frequencies ``theta``.

    When ``lam / sqrt(N)`` is below the mean of ``|f|`` over the torus the
    whole circle is selected.  It has no parent, so the doubling bound on
    ``||f||_{L^1(Q)}`` does not apply to it; ``report.root_selected`` flags
    this case.
    """
    if lam <= 0:
        raise ConfigurationError(f"lambda must be positive, got {lam}")
    if not isinstance(theta, FrequencySet):
        theta = FrequencySet(tuple(theta))
    theta.check(f.grid)
    if not np.any(f.samples):
        raise ConfigurationError("f is identically zero")
    grid = f.grid
    n = len(theta)
    threshold = lam / np.sqrt(n)
    freqs = theta.as_array()
    x = grid.points
    cubes = stopping_cubes(f, threshold)

    bad_parts = {}
    bad_total = np.zeros(grid.size, dtype=complex)
    for q in cubes:
        inner = q.indices(grid)
        support = q.triple_indices(grid)
        A = _moment_matrix(x[support], freqs, grid.spacing)
        local = np.zeros(support.size, dtype=complex)
        local[np.searchsorted(support, inner)] = f.samples[inner]
        mu = A @ local
        p, rank = _solve_min_norm(A, mu, SINGULAR_CUTOFF)
        values = local - p
        values.setflags(write=False)
        bad_parts[q] = BadPart(q, support, values, p, rank)
        bad_total[support] += values

    good = SampledFunction(grid, f.samples - bad_total)
    decomposition = CZDecomposition(f, float(lam), theta, cubes, bad_parts, good, None)
    object.__setattr__(decomposition, "report", verify_czd(decomposition))
    return decomposition


def verify_czd(d: CZDecomposition) -> PropertyReport:
    """Recompute every property from the stored pieces.

    Fourier coefficients of the bad parts come from a full-length FFT,
    overlaps from explicit 3Q masks, and the identity from dense sums, so
    none of it reuses the moment solve.
    """
    grid = d.f.grid
    m = grid.size
    n = len(d.theta)
    lam = d.lam
    f = d.f.samples
    f_l1 = grid.spacing * np.sum(np.abs(f))
    threshold = lam / np.sqrt(n)
    freq_index = d.theta.as_array() % m

    overlap = np.zeros(m, dtype=np.int64)
    reconstructed = d.good.samples.copy()
    packing = 0.0
    mass_const = 0.0
    local_l2 = 0.0
    residual = 0.0
    support_violation = 0.0
    for q, part in d.bad_parts.items():
        dense = part.dense(m)
        triple = q.triple().mask(grid)
        overlap += triple
        reconstructed += dense
        support_violation = max(support_violation, float(np.max(np.abs(dense[~triple]), initial=0.0)))
        packing += q.length
        inside = q.indices(grid)
        mass = grid.spacing * np.sum(np.abs(f[inside]))
        mass_const = max(mass_const, mass / (q.length * threshold))
        rest = f[inside] - dense[inside]
        local_l2 = max(local_l2, np.sqrt(grid.spacing * np.sum(np.abs(rest) ** 2)) / (lam * np.sqrt(q.length)))
        coeffs = np.fft.fft(dense)[freq_index] / m
        residual = max(residual, float(np.max(np.abs(coeffs))))

    sup = np.max(np.abs(f))
    off = ~d.cubes.union_mask(grid)
    return PropertyReport(
        n_freq=n,
        lam=lam,
        grid_size=m,
        n_cubes=len(d.cubes),
        overlap_multiplicity=int(overlap.max(initial=0)),
        packing_constant=packing * threshold / f_l1,
        good_l2_constant=grid.spacing * np.sum(np.abs(d.good.samples) ** 2) / (f_l1 * lam * np.sqrt(n)),
        per_cube_mass_constant=mass_const,
        local_l2_constant=float(local_l2),
        cancellation_residual=residual / f_l1,
        identity_error=float(np.max(np.abs(f - reconstructed)) / sup),
        support_violation=support_violation,
        cubes_disjoint=d.cubes.disjoint,
        off_cube_ratio=float(np.max(np.abs(f[off]), initial=0.0) / threshold),
        root_selected=DyadicInterval(0, 0) in d.cubes,
    )
