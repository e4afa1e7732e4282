"""Sparse families, the grand maximal truncated operator and sparse domination.

The domination recursion works on a dyadic interval ``Q0``: it collects the
exceptional set ``E`` where ``|f|``, the local grand maximal function or
``|T(f chi_{3Q0})|`` is large compared with ``avg_{3Q0} |f|**r``, covers
``E`` by maximal dyadic intervals ``P_j`` in which ``E`` has density above
1/4, and recurses into each ``P_j``.  The level ``c`` defining ``E`` is the
smallest value (at least 1) for which ``|E| <= |Q0| / 8``; it is read off
the order statistics of the score, so the measure bound holds exactly.

Every visited interval ``Q`` contributes ``3Q`` to the family with witness
``Q minus the union of its children``, which has at least half the points
of ``Q`` and hence a sixth of ``|3Q|``.

On the torus a single root (the whole circle) suffices: ``3Q0`` already
contains the support of ``f`` and ``T(f chi_{3Q0}) = T f``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.signal import fftconvolve

from .dyadic import Arc, DyadicInterval, arc_averages, maximal_function, select_maximal
from .grid import ConfigurationError, Grid, SampledFunction
from .mfczo import MultiFrequencyOperator, apply

__all__ = [
    "SparseFamily",
    "NodeRecord",
    "DominationParams",
    "DominationError",
    "SparsityReport",
    "DominationReport",
    "MTBoundReport",
    "sparse_apply",
    "check_eta_sparse",
    "greedy_witnesses",
    "grand_maximal",
    "local_grand_maximal",
    "check_mt_pointwise_bound",
    "sparse_dominate",
    "check_domination",
    "n_exponent",
]

ETA = Fraction(1, 6)
EXCEPTIONAL_FRACTION = Fraction(1, 8)  # |E| <= |Q0| / 2**(n+2), n = 1
STOPPING_HEIGHT = 0.25  # 1 / 2**(n+1)
C_BRACKET = (1.0, 2.0**20)
_DIRECT_MAX = 32  # cube sizes up to this use an explicit Toeplitz product


class DominationError(RuntimeError):
    """The recursion could not honour its depth or measure guarantees."""


def n_exponent(r: float) -> float:
    """``|1/r - 1/2|``."""
    return abs(1.0 / r - 0.5)


@dataclass(frozen=True)
class DominationParams:
    r: float = 1.0
    s: float = 0.5
    c_T: float = 1.0
    max_depth: int | None = None

    def __post_init__(self):
        if self.r < 1:
            raise ConfigurationError(f"r must be >= 1, got {self.r}")
        if not 0 < self.s < 1:
            raise ConfigurationError(f"s must lie in (0, 1), got {self.s}")
        if self.c_T <= 0:
            raise ConfigurationError(f"C_T must be positive, got {self.c_T}")

    @classmethod
    def for_operator(cls, T: MultiFrequencyOperator, r: float = 1.0, s: float = 0.5):
        """``C_T = N**|1/r - 1/2| + ||omega||_Dini``; depth capped at the grid level count."""
        c_T = T.n_freq ** n_exponent(r) + T.modulus.dini_norm
        return cls(r=r, s=s, c_T=c_T, max_depth=T.grid.log2_size)


@dataclass(frozen=True)
class NodeRecord:
    cube: DyadicInterval
    depth: int
    c: float
    avg_r: float
    exceptional_points: int
    children_points: int
    n_children: int


@dataclass(eq=False)
class SparseFamily:
    """Arcs with pairwise disjoint witness sets (grid indices)."""

    grid: Grid
    cubes: list
    witnesses: list | None = None
    eta: Fraction = ETA
    base_cubes: list | None = None
    nodes: list = field(default_factory=list)

    def __len__(self):
        return len(self.cubes)

    @property
    def depth(self) -> int:
        return max((n.depth for n in self.nodes), default=0)

    @property
    def c_values(self) -> np.ndarray:
        return np.array([n.c for n in self.nodes])


def _accumulate(grid: Grid, arcs, values) -> np.ndarray:
    """``sum_k values[k] * chi_{arcs[k]}`` on the torus, via a difference array."""
    m = grid.size
    diff = np.zeros(m + 1)
    full = 0.0
    for arc, v in zip(arcs, values):
        first, count = arc.span(grid)
        if count >= m:
            full += v
            continue
        end = first + count
        diff[first] += v
        if end <= m:
            diff[end] -= v
        else:
            diff[m] -= v
            diff[0] += v
            diff[end - m] -= v
    return np.cumsum(diff[:m]) + full


def sparse_apply(S: SparseFamily, f: SampledFunction, r: float = 1.0) -> SampledFunction:
    """``A_{r,S} f = sum_{Q in S} (avg_Q |f|**r)**(1/r) chi_Q``."""
    if r < 1:
        raise ConfigurationError(f"r must be >= 1, got {r}")
    if len(S.cubes) == 0:
        return f.grid.zeros()
    avgs = arc_averages(np.abs(f.samples), S.cubes, r)
    return SampledFunction(f.grid, _accumulate(f.grid, S.cubes, avgs))


@dataclass
class SparsityReport:
    passed: bool
    disjoint: bool
    contained: bool
    worst_ratio: float
    eta: float


def check_eta_sparse(S: SparseFamily) -> SparsityReport:
    """Exact check of witness disjointness, containment and ``|E_Q| >= eta |Q|``."""
    if S.witnesses is None or len(S.witnesses) != len(S.cubes):
        raise ConfigurationError("sparsity verification needs one witness set per cube")
    eta = Fraction(S.eta).limit_denominator(10**6)
    allpts = np.concatenate([np.asarray(w, dtype=np.int64) for w in S.witnesses]) if S.witnesses else np.zeros(0, np.int64)
    disjoint = np.unique(allpts).size == allpts.size
    contained = True
    enough = True
    worst = np.inf
    for arc, wit in zip(S.cubes, S.witnesses):
        _, count = arc.span(S.grid)
        wit = np.asarray(wit, dtype=np.int64)
        if wit.size and not np.all(arc.mask(S.grid)[wit]):
            contained = False
        # exact rational comparison |E| / |Q| >= eta
        if Fraction(wit.size, count) < eta:
            enough = False
        worst = min(worst, wit.size / count)
    return SparsityReport(
        passed=bool(disjoint and contained and enough),
        disjoint=bool(disjoint),
        contained=contained,
        worst_ratio=float(worst) if np.isfinite(worst) else 1.0,
        eta=float(eta),
    )


def greedy_witnesses(grid: Grid, cubes, eta) -> list[np.ndarray]:
    """Assign witnesses smallest cube first, taking free points left to right.

    Sound only for rejection: a family it fails on may still be sparse,
    unless the total required witness measure already exceeds the room.
    """
    taken = np.zeros(grid.size, dtype=bool)
    order = sorted(range(len(cubes)), key=lambda k: cubes[k].length)
    out = [None] * len(cubes)
    for k in order:
        idx = cubes[k].indices(grid)
        free = idx[~taken[idx]]
        need = int(np.ceil(float(eta) * cubes[k].span(grid)[1]))
        pick = free[:need]
        taken[pick] = True
        out[k] = pick
    return out


def _segment_response(
    T: MultiFrequencyOperator, values: np.ndarray, starts: np.ndarray, n: int
) -> np.ndarray:
    """``T(f chi_{3Q})`` on ``Q`` for the intervals ``Q = [start, start + n)``.

    Requires ``3n < M``.  Row ``q`` holds the values at ``start_q + i``.
    """
    m = T.grid.size
    phi = T.kernel * T.grid.spacing
    seg = (starts[:, None] - n + np.arange(3 * n)[None, :]) % m
    F = values[seg]
    if n <= _DIRECT_MAX:
        lag = (np.arange(n)[:, None] + n - np.arange(3 * n)[None, :]) % m
        return F @ phi[lag].T
    taps = phi[(np.arange(4 * n - 1) - 2 * n + 1) % m]
    full = fftconvolve(F, taps[None, :], axes=1)
    return full[:, 3 * n - 1:4 * n - 1]


def local_grand_maximal(
    T: MultiFrequencyOperator,
    f: SampledFunction,
    root: DyadicInterval,
    inner: np.ndarray | None = None,
    full: np.ndarray | None = None,
):
    """``M_{T,Q0} f`` on the points of ``Q0 = root``.

    ``inner`` is ``T(f chi_{3Q0})`` on ``Q0`` and ``full`` is ``T f`` on the
    torus; both are computed when omitted.  Returns the maximal function on
    ``Q0`` (length ``|Q0|`` in points) and, per level below ``root``, the
    ess-sup over each subcube of ``|T(f chi_{3Q0 minus 3Q})|``.
    """
    grid = T.grid
    m = grid.size
    n0 = root.points(grid)
    start0 = root.offset * n0
    values = f.samples
    if full is None:
        full = apply(T, f).samples
    if inner is None:
        if 3 * n0 >= m:
            inner = full[start0:start0 + n0]
        else:
            inner = _segment_response(T, values, np.array([start0]), n0)[0]
    running = np.zeros(n0)
    per_level = []
    n = n0
    while n >= 1:
        count = n0 // n
        starts = start0 + n * np.arange(count)
        if 3 * n >= m:
            near = full[start0:start0 + n0].reshape(count, n)
        else:
            near = _segment_response(T, values, starts, n)
        sup = np.max(np.abs(inner.reshape(count, n) - near), axis=1)
        per_level.append(sup)
        running = np.maximum(running, np.repeat(sup, n))
        n //= 2
    return running, per_level


def grand_maximal(
    T: MultiFrequencyOperator,
    f: SampledFunction,
    Q0: DyadicInterval | None = None,
    params: DominationParams | None = None,
) -> SampledFunction:
    """Grand maximal truncated operator over base-lattice dyadic intervals.

    Global: ``sup_{Q ni x} max_{xi in Q} |T(f chi_{complement of 3Q})(xi)|``.
    Local (``Q0`` given): intervals ``Q`` inside ``Q0`` and truncation
    ``f chi_{3Q0 minus 3Q}``; the result vanishes outside ``Q0``.
    """
    root = DyadicInterval(0, 0) if Q0 is None else Q0
    local, _ = local_grand_maximal(T, f, root)
    out = np.zeros(T.grid.size)
    idx = root.indices(T.grid)
    out[idx] = local
    return SampledFunction(T.grid, out)


@dataclass
class MTBoundReport:
    max_ratio: float
    ceiling: float
    passed: bool
    worst_index: int
    r: float
    s: float


def check_mt_pointwise_bound(
    T: MultiFrequencyOperator, f: SampledFunction, params: DominationParams, ceiling: float = np.inf
) -> MTBoundReport:
    """Ratio of ``M_T f`` to ``(||omega||_Dini + N**|1/r-1/2|) M_r f + M(|Tf|**s)**(1/s)``."""
    lhs = grand_maximal(T, f).samples.real
    tf = apply(T, f)
    weight = T.modulus.dini_norm + T.n_freq ** n_exponent(params.r)
    rhs = weight * maximal_function(f, params.r).samples.real + maximal_function(tf, params.s).samples.real
    live = rhs > 0
    ratio = np.zeros_like(lhs)
    ratio[live] = lhs[live] / rhs[live]
    k = int(np.argmax(ratio))
    value = float(ratio[k])
    return MTBoundReport(value, ceiling, value <= ceiling, k, params.r, params.s)


def sparse_dominate(
    T: MultiFrequencyOperator, f: SampledFunction, params: DominationParams | None = None
) -> SparseFamily:
    """Sparse family ``S = {3Q : Q in F}`` dominating ``T f``.

    Guarantees, asserted at every node: ``|E| <= |Q0|/8``; children are
    disjoint with ``sum |P_j| <= |Q0|/2`` and ``|P_j cap E| <= |P_j|/2``;
    ``|T(f chi_{3Q0})| <= c C_T avg`` off the children; and
    ``max_{P_j} |T(f chi_{3Q0 minus 3P_j})| <= c C_T avg`` on each child.
    """
    if params is None:
        params = DominationParams.for_operator(T)
    grid = T.grid
    m = grid.size
    max_depth = grid.log2_size if params.max_depth is None else params.max_depth
    r = params.r
    mags = np.abs(f.samples)
    full = apply(T, f).samples

    cubes, witnesses, base, nodes = [], [], [], []
    queue = [(DyadicInterval(0, 0), 0)]
    while queue:
        q0, depth = queue.pop(0)
        if depth > max_depth:
            raise DominationError(f"recursion depth {depth} exceeds {max_depth}")
        n0 = q0.points(grid)
        idx = q0.indices(grid)
        triple = q0.triple()
        avg = float(arc_averages(mags, [triple], r)[0])
        if avg == 0.0:
            children, c, n_exc = [], C_BRACKET[0], 0
        else:
            if 3 * n0 >= m:
                inner = full[idx]
            else:
                inner = _segment_response(T, f.samples, np.array([idx[0]]), n0)[0]
            mt, per_level = local_grand_maximal(T, f, q0, inner=inner, full=full)
            level_c = params.c_T * avg
            score = np.maximum.reduce([mags[idx] / avg, mt / level_c, np.abs(inner) / level_c])
            allowed = int(n0 * EXCEPTIONAL_FRACTION)
            ranked = np.sort(score)[::-1]
            c = max(C_BRACKET[0], float(ranked[allowed]) if allowed < n0 else 0.0)
            if c > C_BRACKET[1]:
                raise DominationError(f"no admissible c in {C_BRACKET} at {q0}")
            exceptional = score > c
            n_exc = int(exceptional.sum())
            assert n_exc <= allowed
            children = select_maximal(exceptional.astype(float), STOPPING_HEIGHT, q0.level, q0.offset)
            covered = np.zeros(n0, dtype=bool)
            bound = c * level_c
            for p in children:
                k = p.points(grid)
                lo = p.offset * k - idx[0]
                covered[lo:lo + k] = True
                assert 2 * exceptional[lo:lo + k].sum() <= k
                sup = per_level[p.level - q0.level][p.offset - (q0.offset << (p.level - q0.level))]
                assert sup <= bound * (1 + 1e-12)
            assert not np.any(exceptional & ~covered)
            assert 2 * covered.sum() <= n0
            assert np.all(np.abs(inner[~covered]) <= bound * (1 + 1e-12))
        child_points = sum(p.points(grid) for p in children)
        own = np.ones(n0, dtype=bool)
        for p in children:
            k = p.points(grid)
            own[p.offset * k - idx[0]:p.offset * k - idx[0] + k] = False
        cubes.append(triple)
        witnesses.append(idx[own])
        base.append(q0)
        nodes.append(NodeRecord(q0, depth, c, avg, n_exc, child_points, len(children)))
        queue.extend((p, depth + 1) for p in children)

    return SparseFamily(grid, cubes, witnesses, ETA, base, nodes)


@dataclass
class DominationReport:
    constant: float
    ceiling: float
    passed: bool
    worst_index: int
    zero_set_ok: bool
    n_cubes: int
    depth: int
    r: float
    n_freq: int


def check_domination(
    T: MultiFrequencyOperator,
    f: SampledFunction,
    S: SparseFamily,
    r: float,
    N: int | None = None,
    ceiling: float = np.inf,
) -> DominationReport:
    """``max_x |Tf(x)| / (N**|1/r-1/2| A_{r,S}|f|(x))`` over points where the sparse sum is positive."""
    n = T.n_freq if N is None else N
    tf = np.abs(apply(T, f).samples)
    a = sparse_apply(S, f, r).samples.real
    live = a > 0
    zero_ok = bool(np.all(tf[~live] <= 1e-8 * max(f.sup_norm(), np.finfo(float).tiny)))
    ratio = np.zeros_like(tf)
    ratio[live] = tf[live] / (n ** n_exponent(r) * a[live])
    k = int(np.argmax(ratio)) if ratio.size else 0
    value = float(ratio[k]) if ratio.size else 0.0
    return DominationReport(
        constant=value,
        ceiling=ceiling,
        passed=bool(value <= ceiling and zero_ok),
        worst_index=k,
        zero_set_ok=zero_ok,
        n_cubes=len(S),
        depth=S.depth,
        r=r,
        n_freq=n,
    )
