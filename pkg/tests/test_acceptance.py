"""Acceptance criteria on the reference configuration (grid 2**12, seed 7).

Each test prints one PASS/FAIL line; the lines are repeated in the pytest
terminal summary.  Fixed tolerances are pinned here; corpus ceilings come
from the packaged tolerance table, which is checked against these pins so
it cannot silently loosen a fixed bound.

Run as a script with ``python3 tests/test_acceptance.py``.
"""

import filecmp
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from mfcz.config import RunConfig, load_tolerances
from mfcz.experiments import run_full_verification

from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.slow

GRID, SEED = 12, 7
EXACT_SLACK = 1e-12  # rounding allowance of the quadrature sums in "exact" bounds

CANCELLATION = 1e-8
IDENTITY = 1e-10
CZD_SECONDS = 60.0
MIN_TRIPLES = 50
CZD_NS = {1, 2, 4, 8, 16, 32, 64}
DOMINATION_NS = {1, 4, 16, 64}
DOMINATION_RS = {1.0, 1.5}
MIN_PAIRS = 20
DOMINATION_SLOPE = (-0.1, 0.05)
DOMINATION_SECONDS = 600.0
WEAK11_SLOPE_MAX = 0.5 + 0.1
WEAK11_NS = [4, 8, 16, 32, 64, 128, 256]
LOWER_SLOPE_MIN = 0.25 - 0.08
LOWER_NS = [8, 16, 32, 64, 128, 256]
SCALE_INVARIANCE = 1e-12
ORACLE = 1e-12
WEIGHTED_SLOPE_MAX = 0.1
WEIGHTED_ALPHAS = {-0.5, 0.0, 0.5, 0.9}
WEIGHTED_PR = {(2.0, 1.0), (3.0, 1.5)}
MAIN_N_SLOPE_MAX = 0.05
MAIN_W_SLOPE_MAX = 0.1
TOTAL_SECONDS = 600.0


def record(number: int, name: str, passed: bool, detail: str) -> None:
    line = f"{'PASS' if passed else 'FAIL'} criterion {number:2d} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.fixture(scope="module")
def reference(tmp_path_factory):
    out = tmp_path_factory.mktemp("verify-inproc")
    bundle = run_full_verification(RunConfig(grid=GRID, seed=SEED, out=str(out)))
    return bundle, out


def fit(bundle, experiment):
    return next(r for r in bundle.reports["fits"].rows if r["experiment"] == experiment)


def test_packaged_tolerances_respect_pinned_bounds():
    tol = load_tolerances()
    assert tol.czd_cancellation <= CANCELLATION
    assert tol.czd_identity <= IDENTITY
    assert tol.czd_seconds <= CZD_SECONDS
    assert (tol.domination_slope_min, tol.domination_slope_max) == DOMINATION_SLOPE
    assert tol.domination_seconds <= DOMINATION_SECONDS
    assert tol.weak11_slope_max <= WEAK11_SLOPE_MAX + 1e-12
    assert tol.lower_bound_slope_min >= LOWER_SLOPE_MIN - 1e-12
    assert tol.weights_scale <= SCALE_INVARIANCE and tol.weights_oracle <= ORACLE
    assert tol.sparse_weighted_slope_max <= WEIGHTED_SLOPE_MAX
    assert tol.main_n_slope_max <= MAIN_N_SLOPE_MAX and tol.main_w_slope_max <= MAIN_W_SLOPE_MAX
    assert tol.verify_seconds <= TOTAL_SECONDS


def test_criterion_01_czd_exact_properties(reference):
    bundle, _ = reference
    rows = bundle.reports["czd"].rows
    ns = {r["n_freq"] for r in rows}
    seconds = bundle.timings["czd"]
    checks = {
        "triples": len(rows) >= MIN_TRIPLES,
        "N values": ns == CZD_NS,
        "packing": all(r["packing_constant"] <= 1 + EXACT_SLACK for r in rows),
        "per-cube mass": all(r["per_cube_mass_constant"] <= 2 + EXACT_SLACK for r in rows),
        "support": all(r["support_violation"] == 0.0 for r in rows),
        "cancellation": all(r["cancellation_residual"] <= CANCELLATION for r in rows),
        "identity": all(r["identity_error"] <= IDENTITY for r in rows),
        "runtime": seconds <= CZD_SECONDS,
    }
    passed = all(checks.values()) and bundle.criterion(1).passed
    detail = (
        f"{len(rows)} triples, max packing {max(r['packing_constant'] for r in rows):.6g} <= 1, "
        f"max mass {max(r['per_cube_mass_constant'] for r in rows):.6g} <= 2, "
        f"max residual {max(r['cancellation_residual'] for r in rows):.3g} <= {CANCELLATION:g}, "
        f"max identity {max(r['identity_error'] for r in rows):.3g} <= {IDENTITY:g}, {seconds:.1f} s <= {CZD_SECONDS:g} s"
    )
    record(1, "czd exact properties", passed, detail)
    assert passed, [k for k, ok in checks.items() if not ok]


def test_criterion_02_czd_monitored_constants(reference):
    bundle, _ = reference
    tol = load_tolerances()
    rows = bundle.reports["czd"].rows
    values = {
        "good_l2": (max(r["good_l2_constant"] for r in rows), tol.czd_good_l2),
        "local_l2": (max(r["local_l2_constant"] for r in rows), tol.czd_local_l2),
        "overlap": (max(r["overlap_multiplicity"] for r in rows), tol.czd_overlap),
    }
    passed = all(v <= c for v, c in values.values())
    detail = ", ".join(f"{k} {v:.6g} <= {c:g}" for k, (v, c) in values.items())
    record(2, "czd monitored constants", passed, detail)
    assert passed


def test_criterion_03_sparse_construction(reference):
    bundle, _ = reference
    rows = bundle.reports["domination"].rows
    checks = {
        "sparse": all(r["sparse"] for r in rows),
        "children": all(r["max_child_fraction"] <= 0.5 for r in rows),
        "depth": all(r["depth"] <= GRID for r in rows),
    }
    passed = all(checks.values()) and bundle.criterion(3).passed
    detail = (
        f"{len(rows)} families 1/6-sparse with witnesses, "
        f"max child fraction {max(r['max_child_fraction'] for r in rows):.4g} <= 0.5, "
        f"max depth {max(r['depth'] for r in rows)} <= {GRID}"
    )
    record(3, "sparse construction", passed, detail)
    assert passed, [k for k, ok in checks.items() if not ok]


def test_criterion_04_pointwise_domination_uniform_in_n(reference):
    bundle, _ = reference
    rows = bundle.reports["domination"].rows
    counts = {}
    for r in rows:
        counts[(r["n_freq"], r["r"])] = counts.get((r["n_freq"], r["r"]), 0) + 1
    corpus_ok = (
        {n for n, _ in counts} == DOMINATION_NS
        and {r for _, r in counts} == DOMINATION_RS
        and min(counts.values()) >= MIN_PAIRS
    )
    lo, hi = DOMINATION_SLOPE
    slopes = {r: fit(bundle, f"domination r={r:g}")["slope"] for r in sorted(DOMINATION_RS)}
    seconds = bundle.timings["domination"]
    passed = corpus_ok and all(lo <= s <= hi for s in slopes.values()) and seconds <= DOMINATION_SECONDS
    maxima = bundle.data["domination_max"]
    detail = "; ".join(
        f"r={r:g} slope {s:.4f} in [{lo:g}, {hi:g}] (max constants "
        + " ".join(f"{maxima[r][n]:.4g}" for n in sorted(maxima[r])) + ")"
        for r, s in slopes.items()
    ) + f"; {min(counts.values())} pairs per cell, {seconds:.1f} s"
    record(4, "pointwise domination N-uniform", passed, detail)
    assert corpus_ok
    assert seconds <= DOMINATION_SECONDS
    assert all(lo <= s <= hi for s in slopes.values()), slopes


def test_criterion_05_grand_maximal_bound(reference):
    bundle, _ = reference
    tol = load_tolerances()
    rows = bundle.reports["mt_bound"].rows
    worst = max(r["ratio"] for r in rows)
    params_ok = all(r["r"] == 2.0 and r["s"] == 0.5 for r in rows)
    passed = params_ok and worst <= tol.mt_bound
    record(5, "grand maximal pointwise bound", passed,
           f"max ratio {worst:.6g} <= {tol.mt_bound:g} over {len(rows)} pairs (r=2, s=1/2)")
    assert passed


def test_criterion_06_weak11_scaling(reference):
    bundle, _ = reference
    ns = [r["N"] for r in bundle.reports["weak11"].sorted_rows()]
    slope = fit(bundle, "weak11")["slope"]
    passed = ns == WEAK11_NS and slope <= WEAK11_SLOPE_MAX
    record(6, "weak (1,1) scaling", passed, f"slope {slope:.4f} <= {WEAK11_SLOPE_MAX:g} over N = {ns[0]}..{ns[-1]}")
    assert passed


def test_criterion_07_lower_bound(reference):
    bundle, _ = reference
    rows = bundle.reports["lower_bound"].sorted_rows()
    ns = [r["N"] for r in rows]
    slope = fit(bundle, "lower_bound")["slope"]
    passed = ns == LOWER_NS and all(r["trials"] == 20 for r in rows) and slope >= LOWER_SLOPE_MIN
    record(7, "lower bound probe", passed,
           f"slope {slope:.4f} >= {LOWER_SLOPE_MIN:g} (p = 4/3, best of 20 sign draws)")
    assert passed


def test_criterion_08_weight_characteristics(reference):
    bundle, _ = reference
    rows = bundle.reports["weights"].rows
    constant = [r for r in rows if r["case"] == "constant"]
    scale = [r["difference"] for r in rows if r["case"] == "scale"]
    oracle = [r for r in rows if r["case"] == "oracle"]
    power = sorted((r["parameter"], r["characteristic"]) for r in rows if r["case"] == "power")
    checks = {
        "unit weight": all(r["characteristic"] == 1.0 for r in constant),
        "scale": max(scale) <= SCALE_INVARIANCE,
        "oracle": len({r["parameter"] for r in oracle}) >= 20
        and all(r["grid"] <= 6 and r["difference"] <= ORACLE for r in oracle),
        "monotone": [a for a, _ in power] == [0.3, 0.6, 0.9]
        and all(x[1] < y[1] for x, y in zip(power, power[1:])),
    }
    passed = all(checks.values())
    detail = (
        f"[1]_Ap = 1, scale change {max(scale):.3g} <= {SCALE_INVARIANCE:g}, "
        f"oracle difference {max(r['difference'] for r in oracle):.3g} <= {ORACLE:g}, "
        "[|x|^a]_A2 = " + ", ".join(f"{c:.4g}" for _, c in power)
    )
    record(8, "weight characteristics", passed, detail)
    assert passed, [k for k, ok in checks.items() if not ok]


def test_criterion_09_sparse_weighted_bound(reference):
    bundle, _ = reference
    tol = load_tolerances()
    rows = [r for r in bundle.reports["weighted"].rows if r["suite"] == "sparse"]
    sweep_ok = {(r["p"], r["r"]) for r in rows} == WEIGHTED_PR and {r["alpha"] for r in rows} == WEIGHTED_ALPHAS
    worst = max(r["ratio"] for r in rows)
    slopes = {pr: fit(bundle, f"sparse weighted p={pr[0]:g} r={pr[1]:g}")["slope"] for pr in sorted(WEIGHTED_PR)}
    passed = sweep_ok and worst <= tol.sparse_weighted and all(s <= WEIGHTED_SLOPE_MAX for s in slopes.values())
    detail = f"max ratio {worst:.6g} <= {tol.sparse_weighted:g}; " + ", ".join(
        f"(p,r)=({p:g},{r:g}) slope vs log[w] {s:.4f} <= {WEIGHTED_SLOPE_MAX:g}" for (p, r), s in slopes.items()
    )
    record(9, "sparse weighted bound", passed, detail)
    assert passed


def test_criterion_10_main_theorem(reference):
    bundle, _ = reference
    n_slope = fit(bundle, "main N-sweep")["slope"]
    w_slope = fit(bundle, "main w-sweep")["slope"]
    rows = [r for r in bundle.reports["weighted"].rows if r["suite"] == "main"]
    params_ok = all(r["p"] == 2.0 and r["r"] == 1.0 for r in rows)
    passed = params_ok and n_slope <= MAIN_N_SLOPE_MAX and w_slope <= MAIN_W_SLOPE_MAX and bundle.criterion(10).passed
    record(10, "main theorem composite", passed,
           f"N-sweep slope {n_slope:.4f} <= {MAIN_N_SLOPE_MAX:g}, [w]-sweep slope {w_slope:.4f} <= {MAIN_W_SLOPE_MAX:g}, "
           f"max ratio {max(r['ratio'] for r in rows):.4g}")
    assert passed


def test_criterion_11_determinism_and_runtime(reference, tmp_path):
    bundle, first = reference
    second = tmp_path / "verify-cli"
    result = subprocess.run(
        [sys.executable, "-m", "mfcz", "verify", "--grid", str(GRID), "--seed", str(SEED), "--out", str(second)],
        capture_output=True, text=True,
    )
    names = sorted(p.name for p in Path(first).glob("*.csv"))
    same_set = names == sorted(p.name for p in second.glob("*.csv"))
    _, mismatch, errors = filecmp.cmpfiles(first, second, names, shallow=False)
    seconds = bundle.timings["total"]
    status_ok = result.returncode == bundle.status
    passed = same_set and not mismatch and not errors and seconds <= TOTAL_SECONDS and status_ok
    record(11, "determinism and runtime", passed,
           f"{len(names)} CSV files byte-identical across two runs ({'ok' if not mismatch else mismatch}), "
           f"exit status {result.returncode}, full suite {seconds:.1f} s <= {TOTAL_SECONDS:g} s")
    assert same_set and not mismatch and not errors, (mismatch, errors)
    assert status_ok, result.stderr
    assert seconds <= TOTAL_SECONDS


def test_zero_tolerances_fail(reference):
    """Non-vacuity: with every ceiling at zero the same run fails its monitored criteria."""
    bundle, _ = reference
    zero = run_full_verification(bundle.config, tolerances=load_tolerances().zero(), write=False)
    failing = sorted(c.number for c in zero.criteria if not c.passed)
    assert zero.status == 1
    assert failing == [1, 2, 4, 5, 6, 7, 8, 9, 10]
    assert math.isinf(load_tolerances().zero().lower_bound_slope_min)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
