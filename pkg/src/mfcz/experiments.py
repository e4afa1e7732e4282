"""Quantitative verification suites and log-log fitting.

Operator-norm ratios measured here are lower estimates (maxima over sampled
inputs).  Upper bounds are checked through the sparse route: build a sparse
family, check the pointwise domination, then check the weighted bound for
the sparse operator.

Every random draw comes from ``numpy.random.SeedSequence([seed, suite,
...])``, so each row can be replayed on its own and the output does not
depend on how trials are scheduled.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import RunConfig, Tolerances
from .czd import mf_czd
from .grid import ConfigurationError, Grid, SampledFunction, lp_norm, weak_l1_quasinorm
from .mfczo import (
    FrequencySet,
    MultiFrequencyOperator,
    apply,
    dirichlet_function,
    random_multiplier_operator,
    random_sign_operator,
)
from .reports import Report, emit_csv
from .sparse import (
    DominationParams,
    SparseFamily,
    check_domination,
    check_eta_sparse,
    check_mt_pointwise_bound,
    n_exponent,
    sparse_apply,
    sparse_dominate,
)
from .weights import (
    Weight,
    ap_characteristic,
    ap_characteristic_bruteforce,
    power_weight,
    random_ap_weight,
)

__all__ = [
    "ScalingResult",
    "fit_exponent",
    "make_input",
    "corpus_operator",
    "corpus_pair",
    "run_strong_experiment",
    "run_weak11_experiment",
    "run_lower_bound_experiment",
    "WeightedReport",
    "check_sparse_weighted",
    "MainTheoremReport",
    "check_main_theorem",
    "weighted_exponent",
    "CriterionResult",
    "VerificationBundle",
    "run_full_verification",
    "calibrate",
    "CALIBRATION_MARGIN",
    "INPUT_KINDS",
]

INPUT_KINDS = ("spikes", "noise", "comb")
OPERATOR_SHAPES = ("cosine-squared", "gaussian-truncated")

# suite tags for seed derivation
_CZD, _DOM, _WEAK, _LOWER, _WEIGHTS, _WEIGHTED, _MAIN, _STRONG = range(1, 9)


def _rng(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, tags)]))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("MFCZ_THREADS", "1")))
    except ValueError:
        raise ConfigurationError("MFCZ_THREADS must be an integer") from None


def _map(fn, items):
    """``list(map(fn, items))``, on up to MFCZ_THREADS threads."""
    items = list(items)
    threads = _threads()
    if threads == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def fit_exponent(xs, ys) -> tuple[float, float, float]:
    """Least squares ``log y = slope * log x + intercept``.

    Returns ``(slope, intercept, residual)`` with ``residual`` the root mean
    square of the fit residuals in log space.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.size < 3:
        raise ConfigurationError("fit needs at least 3 matching points")
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        raise ConfigurationError("fit needs finite positive data")
    lx, ly = np.log(x), np.log(y)
    design = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(design, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


@dataclass
class ScalingResult:
    """Per-N statistic with its log-log fit."""

    name: str
    ns: tuple
    statistic: tuple
    trials: int
    seed: int
    grid_log2: int
    slope: float = field(init=False)
    intercept: float = field(init=False)
    residual: float = field(init=False)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if list(self.ns) != sorted(set(self.ns)):
            raise ConfigurationError("N values must be strictly increasing")
        self.slope, self.intercept, self.residual = fit_exponent(self.ns, self.statistic)

    def report(self) -> Report:
        rep = Report("scaling")
        for n, value in zip(self.ns, self.statistic):
            rep.add(N=int(n), statistic=float(value), trials=self.trials, seed=self.seed)
        return rep


def make_input(kind: str, grid: Grid, rng: np.random.Generator, T: MultiFrequencyOperator | None = None):
    """Test inputs shared by the suites.

    ``spikes``: one to four grid spikes of Gaussian height ``M``;
    ``noise``: real white noise; ``comb``: ``sum_j exp(2 pi i c_j (x - s))``
    over the centers of ``T`` at a random shift ``s``, the frequency-set
    analogue of the Dirichlet kernel.
    """
    m = grid.size
    if kind == "spikes":
        values = np.zeros(m)
        k = int(rng.integers(1, 5))
        values[rng.choice(m, k, replace=False)] = rng.standard_normal(k) * m
        if not np.any(values):
            values[0] = m
        return SampledFunction(grid, values)
    if kind == "noise":
        return SampledFunction(grid, rng.standard_normal(m))
    if kind == "comb":
        if T is None:
            raise ConfigurationError("comb input needs an operator")
        shift = rng.random()
        phases = np.exp(2j * np.pi * np.outer(grid.points - shift, T.centers))
        return SampledFunction(grid, phases.sum(axis=1))
    raise ConfigurationError(f"unknown input kind {kind!r}")


def corpus_operator(grid: Grid, n_freq: int, rng: np.random.Generator, index: int) -> MultiFrequencyOperator:
    """Random operator of the corpus: half-width 1 to 3, shapes alternating.

    The half-width is capped so the cubes fill at most a quarter of the band.
    """
    h = int(rng.integers(1, 4))
    h = max(0, min(h, (grid.size // (4 * n_freq) - 1) // 2))
    return random_multiplier_operator(grid, n_freq, h, rng, OPERATOR_SHAPES[index % 2])


def corpus_pair(grid: Grid, n_freq: int, seed: int, trial: int):
    """``(T, input kind, f)`` for trial ``trial`` of the domination corpus."""
    rng = _rng(seed, _DOM, n_freq, trial)
    T = corpus_operator(grid, n_freq, rng, trial)
    kind = INPUT_KINDS[trial % len(INPUT_KINDS)]
    return T, kind, make_input(kind, grid, rng, T)


def describe_operator(T: MultiFrequencyOperator) -> str:
    """``shape:h=<halfwidth>:<centers>``, enough to rebuild ``T``."""
    centers = " ".join(str(int(c)) for c in T.centers)
    return f"{T.shape}:h={T.halfwidth}:{centers}"


def run_weak11_experiment(Ns, trials: int, seed: int, grid: Grid | None = None) -> ScalingResult:
    """Max over trials of ``||Tf||_{L^{1,inf}} / ||f||_1`` for spiky inputs."""
    grid = Grid(12) if grid is None else grid

    def one(args):
        n, t = args
        rng = _rng(seed, _WEAK, n, t)
        T = corpus_operator(grid, n, rng, t)
        f = make_input("spikes", grid, rng)
        return weak_l1_quasinorm(apply(T, f)) / lp_norm(f, 1)

    stats = []
    for n in Ns:
        stats.append(max(_map(one, [(n, t) for t in range(trials)])))
    return ScalingResult("weak11", tuple(Ns), tuple(stats), trials, seed, grid.log2_size)


def run_strong_experiment(p: float, Ns, trials: int, seed: int, grid: Grid | None = None) -> ScalingResult:
    """Max over trials of ``||Tf||_p / ||f||_p`` over the corpus inputs."""
    if p <= 1:
        raise ConfigurationError(f"p must exceed 1, got {p}")
    grid = Grid(12) if grid is None else grid

    def one(args):
        n, t = args
        rng = _rng(seed, _STRONG, n, t)
        T = corpus_operator(grid, n, rng, t)
        f = make_input(INPUT_KINDS[t % len(INPUT_KINDS)], grid, rng, T)
        return lp_norm(apply(T, f), p) / lp_norm(f, p)

    stats = [max(_map(one, [(n, t) for t in range(trials)])) for n in Ns]
    return ScalingResult("strong", tuple(Ns), tuple(stats), trials, seed, grid.log2_size)


def run_lower_bound_experiment(
    p: float, Ns, sign_trials: int, seed: int, grid: Grid | None = None
) -> ScalingResult:
    """Best-of-draws ``||T_eps f_N||_p / ||f_N||_p`` for random sign multipliers.

    ``f_N`` has unit coefficients at ``0..N-1`` and ``T_eps`` multiplies
    frequency ``k`` by ``eps_k``.  ``extra["all_plus"]`` holds the ratio for
    all signs ``+1`` (identically 1).
    """
    if not 1 < p < 2:
        raise ConfigurationError(f"p must lie in (1, 2), got {p}")
    grid = Grid(12) if grid is None else grid
    best, plus = [], []
    for n in Ns:
        f = dirichlet_function(grid, n - 1)
        norm = lp_norm(f, p)
        rng = _rng(seed, _LOWER, n)
        draws = rng.choice([-1.0, 1.0], size=(sign_trials, n))
        ratios = [lp_norm(apply(random_sign_operator(grid, n, eps), f), p) / norm for eps in draws]
        best.append(max(ratios))
        plus.append(lp_norm(apply(random_sign_operator(grid, n, np.ones(n)), f), p) / norm)
    return ScalingResult(
        "lower_bound", tuple(Ns), tuple(best), sign_trials, seed, grid.log2_size, extra={"all_plus": tuple(plus)}
    )


def weighted_exponent(p: float, r: float) -> float:
    """``max(1, 1 / (p - r))``."""
    return max(1.0, 1.0 / (p - r))


@dataclass
class WeightedReport:
    ratio: float
    characteristic: float
    exponent: float
    ceiling: float
    passed: bool


def check_sparse_weighted(
    S: SparseFamily, f: SampledFunction, w: Weight, p: float, r: float, ceiling: float = np.inf
) -> WeightedReport:
    """``||A_{r,S} f||_{L^p(w)} / ([w]_{A_{p/r}}**max(1, 1/(p-r)) ||f||_{L^p(w)})``."""
    if not 1 <= r < p:
        raise ConfigurationError(f"need 1 <= r < p, got p={p}, r={r}")
    if not check_eta_sparse(S).passed:
        raise ConfigurationError("family is not sparse with its stored witnesses")
    char = ap_characteristic(w, p / r)
    gamma = weighted_exponent(p, r)
    denom = char**gamma * lp_norm(f, p, w)
    ratio = 0.0 if denom == 0 else lp_norm(sparse_apply(S, f, r), p, w) / denom
    return WeightedReport(float(ratio), char, gamma, ceiling, bool(ratio <= ceiling))


@dataclass
class MainTheoremReport:
    ratio: float
    sparse_ratio: float
    domination_constant: float
    characteristic: float
    exponent: float
    ceiling: float
    passed: bool


def check_main_theorem(
    T: MultiFrequencyOperator,
    f: SampledFunction,
    w: Weight,
    p: float,
    r: float,
    ceiling: float = np.inf,
    family: SparseFamily | None = None,
) -> MainTheoremReport:
    """``||Tf||_{L^p(w)} / (N**|1/r-1/2| [w]_{A_{p/r}}**max(1, 1/(p-r)) ||f||_{L^p(w)})``.

    Also builds (or reuses) the sparse family for ``(T, f)`` and reports
    the sparse weighted ratio and the pointwise domination constant, the
    two links of the chain that proves the bound.
    """
    if not 1 <= r < p:
        raise ConfigurationError(f"need 1 <= r < p, got p={p}, r={r}")
    S = sparse_dominate(T, f, DominationParams.for_operator(T, r)) if family is None else family
    sparse = check_sparse_weighted(S, f, w, p, r)
    dom = check_domination(T, f, S, r)
    norm_f = lp_norm(f, p, w)
    scale = T.n_freq ** n_exponent(r) * sparse.characteristic**sparse.exponent
    ratio = 0.0 if norm_f == 0 else lp_norm(apply(T, f), p, w) / (scale * norm_f)
    return MainTheoremReport(
        float(ratio), sparse.ratio, dom.constant, sparse.characteristic, sparse.exponent, ceiling, bool(ratio <= ceiling)
    )


# ----------------------------------------------------------------------------
# full verification


@dataclass
class CriterionResult:
    number: int
    name: str
    statistic: float
    threshold: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} criterion {self.number:2d} {self.name}: {self.statistic:.6g} ({self.threshold}) {self.detail}".rstrip()


@dataclass
class VerificationBundle:
    config: RunConfig
    tolerances: Tolerances
    criteria: list = field(default_factory=list)
    reports: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    @property
    def status(self) -> int:
        return 0 if self.passed else 1

    def criterion(self, number: int) -> CriterionResult:
        return next(c for c in self.criteria if c.number == number)

    def summary(self) -> Report:
        rep = Report("summary")
        for c in self.criteria:
            rep.add(
                criterion=c.number,
                name=c.name,
                statistic=float(c.statistic),
                threshold=c.threshold,
                status="PASS" if c.passed else "FAIL",
                detail=c.detail,
            )
        return rep

    def write(self, out) -> list[Path]:
        out = Path(out)
        written = []
        for name, rep in sorted(self.reports.items()):
            emit_csv(rep, out / f"{name}.csv")
            written.append(out / f"{name}.csv")
        emit_csv(self.summary(), out / "summary.csv")
        written.append(out / "summary.csv")
        return written


def _czd_suite(cfg: RunConfig, tol: Tolerances, bundle: VerificationBundle):
    grid = Grid(cfg.grid)
    m = grid.size
    n_values = [1 << k for k in range(7) if (1 << k) < m // 8]
    rep = Report("czd")
    start = time.perf_counter()
    failures = []

    def one(trial):
        n = n_values[trial % len(n_values)]
        rng = _rng(cfg.seed, _CZD, trial)
        kind = ("spikes", "noise", "mixed")[trial % 3]
        if kind == "mixed":
            f = SampledFunction(
                grid, make_input("spikes", grid, rng).samples + 0.1 * make_input("noise", grid, rng).samples
            )
        else:
            f = make_input(kind, grid, rng)
        if (trial // len(n_values)) % 2:
            first = int(rng.integers(-m // 2 + 1, m // 2 - n))
            freqs = tuple(range(first, first + n))  # clustered
        else:
            freqs = tuple(int(v) for v in np.sort(rng.choice(m - 1, n, replace=False)) - m // 2 + 1)
        f_l1 = lp_norm(f, 1)
        # heights at or above sqrt(N) ||f||_1 keep the whole torus unselected
        lam = float(np.sqrt(n) * f_l1 * np.exp(rng.uniform(0.0, np.log(64.0))))
        d = mf_czd(f, lam, FrequencySet(freqs))
        return trial, n, lam, kind, freqs, f_l1, d

    results = _map(one, range(cfg.czd_triples))
    for trial, n, lam, kind, freqs, f_l1, d in results:
        q = d.report
        rep.add(
            seed=cfg.seed, grid=cfg.grid, trial=trial, n_freq=n, **{"lambda": lam}, input=kind,
            frequencies=" ".join(map(str, freqs)), n_cubes=q.n_cubes, root_selected=q.root_selected,
            packing_constant=q.packing_constant, good_l2_constant=q.good_l2_constant,
            per_cube_mass_constant=q.per_cube_mass_constant, local_l2_constant=q.local_l2_constant,
            overlap_multiplicity=q.overlap_multiplicity, cancellation_residual=q.cancellation_residual,
            identity_error=q.identity_error, support_violation=q.support_violation,
        )
        # "exact" bounds allow only rounding in the quadrature sums
        checks = [
            ("packing", q.packing_constant <= 1.0 + 1e-12),
            ("per-cube mass", q.per_cube_mass_constant <= 2.0 + 1e-12),
            ("support", q.support_violation == 0.0),
            ("cancellation", q.cancellation_residual <= tol.czd_cancellation),
            ("identity", q.identity_error <= tol.czd_identity),
            ("disjoint", q.cubes_disjoint),
        ]
        for name, ok in checks:
            if not ok:
                failures.append(f"trial {trial} (N={n}) {name}")
    bundle.timings["czd"] = time.perf_counter() - start
    bundle.reports["czd"] = rep
    rows = rep.rows
    worst_exact = max(
        max(r["packing_constant"] for r in rows),
        max(r["per_cube_mass_constant"] for r in rows) / 2.0,
    )
    bundle.criteria.append(
        CriterionResult(
            1, "czd exact properties", worst_exact, "packing <= 1, mass <= 2, support, cancellation, identity",
            not failures and len(rows) >= 50, failures[0] if failures else f"{len(rows)} triples",
        )
    )
    monitored = [
        ("good_l2_constant", tol.czd_good_l2),
        ("local_l2_constant", tol.czd_local_l2),
        ("overlap_multiplicity", tol.czd_overlap),
    ]
    over = []
    worst = 0.0
    for key, ceiling in monitored:
        value = max(r[key] for r in rows)
        worst = max(worst, value / ceiling if ceiling > 0 else np.inf)
        if value > ceiling:
            over.append(f"{key} = {value:.6g} > {ceiling:g}")
    bundle.criteria.append(
        CriterionResult(
            2, "czd monitored constants", worst, "max over constants of value / ceiling <= 1",
            not over, over[0] if over else "",
        )
    )
    bundle.data["czd_max"] = {key: max(r[key] for r in rows) for key, _ in monitored}


def _domination_suite(cfg: RunConfig, tol: Tolerances, bundle: VerificationBundle):
    grid = Grid(cfg.grid)
    dom = Report("domination")
    mt = Report("mt_bound")
    start = time.perf_counter()

    def one(args):
        n, trial = args
        T, kind, f = corpus_pair(grid, n, cfg.seed, trial)
        rows = []
        for r in cfg.domination_rs:
            params = DominationParams.for_operator(T, r)
            S = sparse_dominate(T, f, params)
            sp = check_eta_sparse(S)
            rep = check_domination(T, f, S, r)
            child = max((nd.children_points / nd.cube.points(grid) for nd in S.nodes), default=0.0)
            rows.append((r, rep, S, sp, child))
        mt_params = DominationParams.for_operator(T, cfg.mt_r, cfg.mt_s)
        mt_rep = check_mt_pointwise_bound(T, f, mt_params)
        return n, trial, kind, describe_operator(T), rows, mt_rep

    jobs = [(n, t) for n in cfg.domination_ns for t in range(cfg.domination_pairs)]
    failures3 = []
    per_r: dict[float, dict[int, float]] = {r: {} for r in cfg.domination_rs}
    for n, trial, kind, desc, rows, mt_rep in _map(one, jobs):
        for r, rep, S, sp, child in rows:
            dom.add(
                seed=cfg.seed, grid=cfg.grid, n_freq=n, r=r, trial=trial, input=kind, operator=desc,
                constant=rep.constant, n_cubes=rep.n_cubes, depth=rep.depth,
                c_max=float(S.c_values.max()), max_child_fraction=float(child),
                sparse=sp.passed, zero_set_ok=rep.zero_set_ok,
            )
            if not sp.passed or child > 0.5 or rep.depth > grid.log2_size or not rep.zero_set_ok:
                failures3.append(f"N={n} r={r} trial {trial}")
            per_r[r][n] = max(per_r[r].get(n, 0.0), rep.constant)
        mt.add(
            seed=cfg.seed, grid=cfg.grid, n_freq=n, r=cfg.mt_r, s=cfg.mt_s, trial=trial, input=kind,
            operator=desc, ratio=mt_rep.max_ratio,
        )
    bundle.timings["domination"] = time.perf_counter() - start
    bundle.reports["domination"] = dom
    bundle.reports["mt_bound"] = mt

    depth = max(r["depth"] for r in dom.rows)
    bundle.criteria.append(
        CriterionResult(
            3, "sparse construction", max(r["max_child_fraction"] for r in dom.rows),
            f"1/6-sparse, children <= 1/2 of parent, depth {depth} <= {grid.log2_size}",
            not failures3, failures3[0] if failures3 else f"{len(dom.rows)} families",
        )
    )
    fits = bundle.reports.setdefault("fits", Report("fit"))
    slopes = []
    detail = []
    for r in cfg.domination_rs:
        ns = sorted(per_r[r])
        values = [per_r[r][n] for n in ns]
        slope, intercept, resid = fit_exponent(ns, values)
        fits.add(experiment=f"domination r={r:g}", slope=slope, intercept=intercept, residual=resid, points=len(ns))
        slopes.append(slope)
        detail.append(f"r={r:g}: slope {slope:.4f}, max constants " + " ".join(f"{v:.4g}" for v in values))
    bundle.data["domination_max"] = per_r
    worst = max(slopes, key=lambda s: max(s - tol.domination_slope_max, tol.domination_slope_min - s))
    ok = all(tol.domination_slope_min <= s <= tol.domination_slope_max for s in slopes)
    bundle.criteria.append(
        CriterionResult(
            4, "pointwise domination N-uniform", worst,
            f"slope in [{tol.domination_slope_min:g}, {tol.domination_slope_max:g}]", ok, "; ".join(detail),
        )
    )
    worst_mt = max(r["ratio"] for r in mt.rows)
    bundle.criteria.append(
        CriterionResult(
            5, "grand maximal pointwise bound", worst_mt, f"<= {tol.mt_bound:g}", worst_mt <= tol.mt_bound,
            f"r={cfg.mt_r:g} s={cfg.mt_s:g}, {len(mt.rows)} pairs",
        )
    )


def _scaling_suite(cfg: RunConfig, tol: Tolerances, bundle: VerificationBundle):
    grid = Grid(cfg.grid)
    fits = bundle.reports.setdefault("fits", Report("fit"))
    weak = run_weak11_experiment(cfg.weak_ns, cfg.trials, cfg.seed, grid)
    bundle.reports["weak11"] = weak.report()
    fits.add(experiment="weak11", slope=weak.slope, intercept=weak.intercept, residual=weak.residual, points=len(weak.ns))
    bundle.criteria.append(
        CriterionResult(
            6, "weak (1,1) scaling", weak.slope, f"slope <= {tol.weak11_slope_max:g}",
            weak.slope <= tol.weak11_slope_max, "",
        )
    )
    lower = run_lower_bound_experiment(cfg.lower_p, cfg.lower_ns, cfg.trials, cfg.seed, grid)
    bundle.reports["lower_bound"] = lower.report()
    fits.add(experiment="lower_bound", slope=lower.slope, intercept=lower.intercept, residual=lower.residual, points=len(lower.ns))
    bundle.criteria.append(
        CriterionResult(
            7, "lower bound probe", lower.slope, f"slope >= {tol.lower_bound_slope_min:g}",
            lower.slope >= tol.lower_bound_slope_min, f"p={cfg.lower_p:.6g}",
        )
    )


def _weights_suite(cfg: RunConfig, tol: Tolerances, bundle: VerificationBundle):
    grid = Grid(cfg.grid)
    rep = Report("weights")
    problems = []
    worst = 0.0
    ones = Weight(grid, np.ones(grid.size))
    for p in (1.5, 2.0, 3.0):
        value = ap_characteristic(ones, p)
        rep.add(seed=cfg.seed, grid=cfg.grid, case="constant", p=p, parameter=1.0, characteristic=value, reference=1.0, difference=value - 1.0)
        if value != 1.0:
            problems.append(f"[1]_A{p:g} = {value!r}")
    for k, scale in enumerate((1e-3, 7.5, 1e3)):
        w = random_ap_weight(grid, 0.5, int(_rng(cfg.seed, _WEIGHTS, k).integers(2**31)))
        base = ap_characteristic(w, 2.0)
        scaled = ap_characteristic(w * scale, 2.0)
        rel = abs(scaled - base) / base
        worst = max(worst, rel / tol.weights_scale if tol.weights_scale > 0 else np.inf)
        rep.add(seed=cfg.seed, grid=cfg.grid, case="scale", p=2.0, parameter=scale, characteristic=scaled, reference=base, difference=rel)
        if rel > tol.weights_scale:
            problems.append(f"scale {scale:g}: relative change {rel:.3g}")
    small = Grid(6)
    for k in range(20):
        rng = _rng(cfg.seed, _WEIGHTS, 100 + k)
        w = Weight(small, np.exp(rng.normal(0.0, 1.0 + k / 10.0, small.size)))
        for p in (2.0, 3.0):
            fast = ap_characteristic(w, p)
            slow = ap_characteristic_bruteforce(w, p)
            rel = abs(fast - slow) / slow
            worst = max(worst, rel / tol.weights_oracle if tol.weights_oracle > 0 else np.inf)
            rep.add(seed=cfg.seed, grid=6, case="oracle", p=p, parameter=float(k), characteristic=fast, reference=slow, difference=rel)
            if rel > tol.weights_oracle:
                problems.append(f"oracle weight {k}, p={p:g}: relative difference {rel:.3g}")
    chars = []
    for alpha in (0.3, 0.6, 0.9):
        value = ap_characteristic(power_weight(grid, alpha), 2.0)
        chars.append(value)
        rep.add(seed=cfg.seed, grid=cfg.grid, case="power", p=2.0, parameter=alpha, characteristic=value, reference=None, difference=None)
    if not all(a < b for a, b in zip(chars, chars[1:])):
        problems.append("power-weight characteristic not increasing in alpha")
    bundle.reports["weights"] = rep
    bundle.criteria.append(
        CriterionResult(
            8, "weight characteristics", worst, "constant = 1, scale/oracle within tolerance, monotone in alpha",
            not problems, problems[0] if problems else "",
        )
    )


def _dual_input(grid: Grid, w: Weight, p: float) -> SampledFunction:
    """``w**(1 - p') chi_[0, 1/16)``: the classical test function for ``A_p``."""
    values = np.zeros(grid.size)
    n = grid.size // 16
    values[:n] = w.samples[:n] ** (-1.0 / (p - 1.0))
    return SampledFunction(grid, values)


def _weighted_input(k: int, grid: Grid, rng, T, w: Weight, p: float) -> tuple[str, SampledFunction]:
    kinds = INPUT_KINDS + ("dual",)
    kind = kinds[k % len(kinds)]
    if kind == "dual":
        return kind, _dual_input(grid, w, p)
    return kind, make_input(kind, grid, rng, T)


def _weighted_suite(cfg: RunConfig, tol: Tolerances, bundle: VerificationBundle):
    grid = Grid(cfg.grid)
    n_freq = min(16, grid.size // 16)
    rep = Report("weighted")
    fits = bundle.reports.setdefault("fits", Report("fit"))
    weights = {alpha: power_weight(grid, alpha) for alpha in sorted(set(cfg.weight_alphas + cfg.main_sweep_alphas + (cfg.main_alpha,)))}

    # sparse weighted bound
    maxima: dict[tuple, dict[float, tuple[float, float]]] = {}
    for p, r in cfg.weighted_pr:
        for alpha in cfg.weight_alphas:
            w = weights[alpha]

            def one(k, p=p, r=r, alpha=alpha, w=w):
                rng = _rng(cfg.seed, _WEIGHTED, int(1000 * p), int(1000 * r), k)
                T = corpus_operator(grid, n_freq, rng, k)
                kind, f = _weighted_input(k, grid, rng, T, w, p / r)
                S = sparse_dominate(T, f, DominationParams.for_operator(T, r))
                return k, kind, describe_operator(T), check_sparse_weighted(S, f, w, p, r)

            for k, kind, desc, out in _map(one, range(cfg.weighted_pairs)):
                rep.add(
                    seed=cfg.seed, grid=cfg.grid, suite="sparse", n_freq=n_freq, p=p, r=r, alpha=alpha,
                    characteristic=out.characteristic, exponent=out.exponent, trial=k, input=kind,
                    operator=desc, ratio=out.ratio,
                )
                prev = maxima.setdefault((p, r), {}).get(alpha, (0.0, out.characteristic))
                maxima[(p, r)][alpha] = (max(prev[0], out.ratio), out.characteristic)
    worst = 0.0
    problems = []
    slopes = []
    for (p, r), by_alpha in maxima.items():
        pairs = sorted((char, ratio) for ratio, char in by_alpha.values())
        slope, intercept, resid = fit_exponent([c for c, _ in pairs], [v for _, v in pairs])
        fits.add(experiment=f"sparse weighted p={p:g} r={r:g}", slope=slope, intercept=intercept, residual=resid, points=len(pairs))
        slopes.append(slope)
        top = max(v for _, v in pairs)
        worst = max(worst, top)
        if top > tol.sparse_weighted:
            problems.append(f"p={p:g} r={r:g}: ratio {top:.6g} > {tol.sparse_weighted:g}")
        if slope > tol.sparse_weighted_slope_max:
            problems.append(f"p={p:g} r={r:g}: slope vs [w] {slope:.4f} > {tol.sparse_weighted_slope_max:g}")
    bundle.data["sparse_weighted_max"] = worst
    bundle.criteria.append(
        CriterionResult(
            9, "sparse weighted bound", worst,
            f"ratio <= {tol.sparse_weighted:g}, slope vs [w] <= {tol.sparse_weighted_slope_max:g}",
            not problems, problems[0] if problems else "slopes " + " ".join(f"{s:.4f}" for s in slopes),
        )
    )

    # main theorem
    p, r = cfg.main_p, cfg.main_r

    def main_one(args):
        n, alpha, k = args
        rng = _rng(cfg.seed, _MAIN, n, int(round(1000 * alpha)) + 1000, k)
        T = corpus_operator(grid, n, rng, k)
        w = weights[alpha]
        kind, f = _weighted_input(k, grid, rng, T, w, p / r)
        return n, alpha, k, kind, describe_operator(T), check_main_theorem(T, f, w, p, r)

    jobs = [(n, cfg.main_alpha, k) for n in cfg.main_ns for k in range(cfg.weighted_pairs)]
    jobs += [(cfg.main_sweep_n, a, k) for a in cfg.main_sweep_alphas for k in range(cfg.weighted_pairs)]
    jobs = list(dict.fromkeys(jobs))  # the two sweeps may share points
    by_n: dict[int, float] = {}
    by_w: dict[float, tuple[float, float]] = {}
    for n, alpha, k, kind, desc, out in _map(main_one, jobs):
        rep.add(
            seed=cfg.seed, grid=cfg.grid, suite="main", n_freq=n, p=p, r=r, alpha=alpha,
            characteristic=out.characteristic, exponent=out.exponent, trial=k, input=kind,
            operator=desc, ratio=out.ratio,
        )
        if alpha == cfg.main_alpha and n in cfg.main_ns:
            by_n[n] = max(by_n.get(n, 0.0), out.ratio)
        if n == cfg.main_sweep_n and alpha in cfg.main_sweep_alphas:
            prev = by_w.get(alpha, (0.0, out.characteristic))
            by_w[alpha] = (max(prev[0], out.ratio), out.characteristic)
    ns = sorted(by_n)
    n_slope, n_int, n_res = fit_exponent(ns, [by_n[n] for n in ns])
    wpairs = sorted((c, v) for v, c in by_w.values())
    w_slope, w_int, w_res = fit_exponent([c for c, _ in wpairs], [v for _, v in wpairs])
    fits.add(experiment="main N-sweep", slope=n_slope, intercept=n_int, residual=n_res, points=len(ns))
    fits.add(experiment="main w-sweep", slope=w_slope, intercept=w_int, residual=w_res, points=len(wpairs))
    top = max(r_["ratio"] for r_ in rep.rows if r_["suite"] == "main")
    problems = []
    if n_slope > tol.main_n_slope_max:
        problems.append(f"N-sweep slope {n_slope:.4f} > {tol.main_n_slope_max:g}")
    if w_slope > tol.main_w_slope_max:
        problems.append(f"[w]-sweep slope {w_slope:.4f} > {tol.main_w_slope_max:g}")
    if top > tol.main_theorem:
        problems.append(f"ratio {top:.6g} > {tol.main_theorem:g}")
    bundle.data["main_max"] = top
    bundle.reports["weighted"] = rep
    bundle.criteria.append(
        CriterionResult(
            10, "main theorem composite", max(n_slope, w_slope),
            f"N slope <= {tol.main_n_slope_max:g}, [w] slope <= {tol.main_w_slope_max:g}, ratio <= {tol.main_theorem:g}",
            not problems, problems[0] if problems else f"N slope {n_slope:.4f}, [w] slope {w_slope:.4f}, max ratio {top:.4g}",
        )
    )


CALIBRATION_MARGIN = 1.25


def _round_up(value: float, digits: int = 2) -> float:
    if value <= 0:
        return 0.0
    exponent = int(np.floor(np.log10(value))) - digits + 1
    return float(f"{np.ceil(value / 10.0**exponent) * 10.0**exponent:.{digits}g}")


def calibrate(bundle: VerificationBundle) -> Tolerances:
    """Monitored ceilings from a full run: observed maximum times the margin.

    Only corpus-calibrated keys change; fixed tolerances and slope bounds
    are copied from the bundle's table.
    """
    d = bundle.data
    needed = ("czd_max", "sparse_weighted_max", "main_max")
    if any(k not in d for k in needed) or "mt_bound" not in bundle.reports:
        raise ConfigurationError("calibration needs a run of every suite")
    mt_max = max(row["ratio"] for row in bundle.reports["mt_bound"].rows)
    return replace(
        bundle.tolerances,
        czd_good_l2=_round_up(CALIBRATION_MARGIN * d["czd_max"]["good_l2_constant"]),
        czd_local_l2=_round_up(CALIBRATION_MARGIN * d["czd_max"]["local_l2_constant"]),
        czd_overlap=float(np.ceil(CALIBRATION_MARGIN * d["czd_max"]["overlap_multiplicity"])),
        mt_bound=_round_up(CALIBRATION_MARGIN * mt_max),
        sparse_weighted=_round_up(CALIBRATION_MARGIN * d["sparse_weighted_max"]),
        main_theorem=_round_up(CALIBRATION_MARGIN * d["main_max"]),
    )


SUITES = {
    "czd": _czd_suite,
    "domination": _domination_suite,
    "scaling": _scaling_suite,
    "weights": _weights_suite,
    "weighted": _weighted_suite,
}


def run_full_verification(
    config: RunConfig,
    tolerances: Tolerances | None = None,
    suites=None,
    write: bool = True,
) -> VerificationBundle:
    """Run the selected suites (all by default) and write the report bundle.

    The bundle's ``status`` is 0 when every criterion passes and 1 otherwise;
    the first violating datum of each failed criterion is in its ``detail``.
    Wall times go to ``bundle.timings`` only, so the CSV files depend on the
    configuration alone.
    """
    tol = config.load_tolerances() if tolerances is None else tolerances
    bundle = VerificationBundle(config, tol)
    start = time.perf_counter()
    for name in suites or SUITES:
        if name not in SUITES:
            raise ConfigurationError(f"unknown suite {name!r}")
        SUITES[name](config, tol, bundle)
    bundle.timings["total"] = time.perf_counter() - start
    bundle.criteria.sort(key=lambda c: c.number)
    if write:
        bundle.write(config.out)
    return bundle
