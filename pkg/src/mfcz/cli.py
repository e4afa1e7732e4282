"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage
or configuration errors.  Every subcommand writes its CSV reports under
``--out``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_run_config, write_tolerances
from .czd import mf_czd
from .grid import ConfigurationError, Grid, SampledFunction
from .mfczo import FrequencySet, random_multiplier_operator
from .reports import Report, ReportError, emit_csv
from . import experiments as ex
from .sparse import (
    DominationParams,
    check_domination,
    check_eta_sparse,
    check_mt_pointwise_bound,
    sparse_dominate,
)
from .weights import Weight, ap_characteristic, power_weight, rh_characteristic

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be a u64, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", type=int, help="log2 of the grid size (default 12)")
    common.add_argument("--seed", type=_u64, help="random seed (default 7)")
    common.add_argument("--out", help="output directory (default mfcz-out)")
    common.add_argument("--tolerances", help="tolerance table (default: the packaged one)")
    common.add_argument("--config", help="run configuration file, flat key = value")

    parser = _Parser(prog="mfcz", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("czd", parents=[common], help="run and verify one decomposition")
    p.add_argument("--n-freq", type=int, default=16)
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--clustered", action="store_true", help="consecutive frequencies instead of random ones")

    p = sub.add_parser("dominate", parents=[common], help="build and check a sparse family")
    p.add_argument("--n-freq", type=int, default=16)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--input", choices=ex.INPUT_KINDS, default="spikes")
    p.add_argument("--halfwidth", type=int, default=2)

    p = sub.add_parser("mt-bound", parents=[common], help="grand maximal pointwise bound suite")
    p.add_argument("--n-freq", type=_int_list, default=(1, 4, 16, 64))
    p.add_argument("--r", type=float, default=2.0)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--trials", type=int, default=21)

    p = sub.add_parser("scaling", parents=[common], help="weak (1,1), strong (p,p) and lower-bound scaling")
    p.add_argument("--n-freq", type=_int_list, help="N values (default per experiment)")
    p.add_argument("--p", type=float, help="exponent of the lower-bound and strong runs (default 4/3)")
    p.add_argument("--trials", type=int)

    p = sub.add_parser("weights", parents=[common], help="weight characteristics and oracle check")
    p.add_argument("--alpha", type=_float_list, default=(-0.5, 0.0, 0.3, 0.6, 0.9))
    p.add_argument("--p", type=float, default=2.0)

    p = sub.add_parser("weighted", parents=[common], help="sparse weighted and main-theorem suites")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--alpha", type=_float_list)
    p.add_argument("--n-freq", type=_int_list)
    p.add_argument("--trials", type=int)

    p = sub.add_parser("verify", parents=[common], help="run every suite")
    p.add_argument("--trials", type=int)
    p.add_argument("--calibrate", action="store_true", help="also write recalibrated ceilings to OUT/tolerances.cfg")
    return parser


def _run_config(args, **extra) -> RunConfig:
    overrides = {
        "grid": args.grid,
        "seed": args.seed,
        "out": args.out,
        "tolerances": args.tolerances,
        **extra,
    }
    return load_run_config(args.config, overrides)


def _print_criteria(bundle) -> None:
    for c in bundle.criteria:
        print(c.line())


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigurationError(message)


def cmd_czd(args) -> int:
    cfg = _run_config(args)
    grid = Grid(cfg.grid)
    m = grid.size
    _require(1 <= args.n_freq < m // 2, f"--n-freq must lie in [1, {m // 2})")
    _require(args.lam > 0, "--lambda must be positive")
    tol = cfg.load_tolerances()
    rng = np.random.default_rng(cfg.seed)
    # spikes over faint noise, sup norm 1
    values = 1e-2 * rng.standard_normal(m)
    values[rng.choice(m, 4, replace=False)] = rng.choice([-1.0, 1.0], 4)
    values /= np.max(np.abs(values))
    f = SampledFunction(grid, values)
    if args.clustered:
        first = int(rng.integers(-m // 2 + 1, m // 2 - args.n_freq))
        freqs = tuple(range(first, first + args.n_freq))
    else:
        freqs = tuple(int(v) for v in np.sort(rng.choice(m - 1, args.n_freq, replace=False)) - m // 2 + 1)
    d = mf_czd(f, args.lam, FrequencySet(freqs))
    q = d.report
    rep = Report("czd")
    rep.add(
        seed=cfg.seed, grid=cfg.grid, trial=0, n_freq=args.n_freq, **{"lambda": args.lam}, input="spikes+noise",
        frequencies=" ".join(map(str, freqs)), n_cubes=q.n_cubes, root_selected=q.root_selected,
        packing_constant=q.packing_constant, good_l2_constant=q.good_l2_constant,
        per_cube_mass_constant=q.per_cube_mass_constant, local_l2_constant=q.local_l2_constant,
        overlap_multiplicity=q.overlap_multiplicity, cancellation_residual=q.cancellation_residual,
        identity_error=q.identity_error, support_violation=q.support_violation,
    )
    emit_csv(rep, Path(cfg.out) / "czd.csv")
    ok = (
        q.packing_constant <= 1 + 1e-12
        and q.per_cube_mass_constant <= 2 + 1e-12
        and q.support_violation == 0
        and q.cancellation_residual <= tol.czd_cancellation
        and q.identity_error <= tol.czd_identity
    )
    print(f"{q.n_cubes} cubes; packing {q.packing_constant:.4g}, good L2 {q.good_l2_constant:.4g}, "
          f"per-cube mass {q.per_cube_mass_constant:.4g}, local L2 {q.local_l2_constant:.4g}, "
          f"overlap {q.overlap_multiplicity}, cancellation {q.cancellation_residual:.3g}")
    if q.root_selected:
        print("note: lambda / sqrt(N) is below the mean of |f|; the whole torus was selected")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_dominate(args) -> int:
    cfg = _run_config(args)
    grid = Grid(cfg.grid)
    _require(args.r >= 1, "--r must be >= 1")
    _require(args.halfwidth >= 0, "--halfwidth must be >= 0")
    rng = np.random.default_rng(cfg.seed)
    T = random_multiplier_operator(grid, args.n_freq, args.halfwidth, rng)
    f = ex.make_input(args.input, grid, rng, T)
    S = sparse_dominate(T, f, DominationParams.for_operator(T, args.r))
    sp = check_eta_sparse(S)
    dom = check_domination(T, f, S, args.r)
    out = Path(cfg.out)
    family = Report("family")
    for k, (arc, q, wit) in enumerate(zip(S.cubes, S.base_cubes, S.witnesses)):
        family.add(cube=k, start=arc.start, length=arc.length, level=q.level, offset=q.offset,
                   witness_measure=len(wit) * grid.spacing)
    nodes = Report("nodes")
    for k, nd in enumerate(S.nodes):
        nodes.add(node=k, level=nd.cube.level, offset=nd.cube.offset, depth=nd.depth, c=nd.c, avg_r=nd.avg_r,
                  exceptional_points=nd.exceptional_points, children_points=nd.children_points,
                  n_children=nd.n_children)
    summary = Report("domination")
    child = max((nd.children_points / nd.cube.points(grid) for nd in S.nodes), default=0.0)
    summary.add(seed=cfg.seed, grid=cfg.grid, n_freq=args.n_freq, r=args.r, trial=0, input=args.input,
                operator=ex.describe_operator(T), constant=dom.constant, n_cubes=dom.n_cubes, depth=dom.depth,
                c_max=float(S.c_values.max()), max_child_fraction=float(child), sparse=sp.passed,
                zero_set_ok=dom.zero_set_ok)
    emit_csv(family, out / "family.csv")
    emit_csv(nodes, out / "nodes.csv")
    emit_csv(summary, out / "domination.csv")
    print(f"{len(S)} cubes, depth {S.depth}, sparse {sp.passed} (worst witness ratio {sp.worst_ratio:.4g}), "
          f"domination constant {dom.constant:.6g}")
    return EXIT_OK if sp.passed and dom.zero_set_ok else EXIT_FAIL


def cmd_mt_bound(args) -> int:
    cfg = _run_config(args)
    grid = Grid(cfg.grid)
    tol = cfg.load_tolerances()
    params_ok = 0 < args.s < 1 <= args.r
    _require(params_ok, "need 0 < s < 1 <= r")
    _require(args.trials >= 1, "--trials must be positive")
    _require(all(1 <= n < grid.size // 4 for n in args.n_freq), "--n-freq values out of range")
    rep = Report("mt_bound")
    for n in args.n_freq:
        for t in range(args.trials):
            T, kind, f = ex.corpus_pair(grid, n, cfg.seed, t)
            out = check_mt_pointwise_bound(T, f, DominationParams.for_operator(T, args.r, args.s))
            rep.add(seed=cfg.seed, grid=cfg.grid, n_freq=n, r=args.r, s=args.s, trial=t, input=kind,
                    operator=ex.describe_operator(T), ratio=out.max_ratio)
    emit_csv(rep, Path(cfg.out) / "mt_bound.csv")
    worst = max(r["ratio"] for r in rep.rows)
    print(f"max ratio {worst:.6g} (ceiling {tol.mt_bound:g})")
    return EXIT_OK if worst <= tol.mt_bound else EXIT_FAIL


def cmd_scaling(args) -> int:
    extra = {}
    if args.trials is not None:
        extra["trials"] = args.trials
    if args.p is not None:
        extra["lower_p"] = args.p
    if args.n_freq is not None:
        extra["weak_ns"] = args.n_freq
        extra["lower_ns"] = args.n_freq
    cfg = _run_config(args, **extra)
    bundle = ex.run_full_verification(cfg, suites=["scaling"], write=False)
    strong = ex.run_strong_experiment(cfg.lower_p, cfg.weak_ns, cfg.trials, cfg.seed, Grid(cfg.grid))
    bundle.reports["strong"] = strong.report()
    bundle.reports["fits"].add(experiment="strong", slope=strong.slope, intercept=strong.intercept,
                               residual=strong.residual, points=len(strong.ns))
    bundle.write(cfg.out)
    _print_criteria(bundle)
    print(f"strong (p,p) at p={cfg.lower_p:.6g}: slope {strong.slope:.4f} "
          f"(exponent |1/p - 1/2| = {abs(1 / cfg.lower_p - 0.5):.4f})")
    return bundle.status


def cmd_weights(args) -> int:
    cfg = _run_config(args)
    _require(args.p > 1, "--p must exceed 1")
    _require(all(-1 < a < 1 for a in args.alpha), "--alpha values must lie in (-1, 1)")
    grid = Grid(cfg.grid)
    bundle = ex.run_full_verification(cfg, suites=["weights"], write=False)
    rep = bundle.reports["weights"]
    for alpha in args.alpha:
        w = power_weight(grid, alpha)
        rep.add(seed=cfg.seed, grid=cfg.grid, case="power-A", p=args.p, parameter=alpha,
                characteristic=ap_characteristic(w, args.p), reference=None, difference=None)
        rep.add(seed=cfg.seed, grid=cfg.grid, case="power-RH", p=args.p, parameter=alpha,
                characteristic=rh_characteristic(w, args.p), reference=None, difference=None)
    rep.add(seed=cfg.seed, grid=cfg.grid, case="constant-RH", p=args.p, parameter=1.0,
            characteristic=rh_characteristic(Weight(grid, np.ones(grid.size)), args.p), reference=1.0,
            difference=None)
    bundle.write(cfg.out)
    _print_criteria(bundle)
    return bundle.status


def cmd_weighted(args) -> int:
    _require(1 <= args.r < args.p, "need 1 <= r < p")
    extra = {"weighted_pr": ((args.p, args.r),), "main_p": args.p, "main_r": args.r}
    if args.alpha is not None:
        extra["weight_alphas"] = args.alpha
        extra["main_sweep_alphas"] = args.alpha
    if args.n_freq is not None:
        extra["main_ns"] = args.n_freq
    if args.trials is not None:
        extra["weighted_pairs"] = args.trials
    cfg = _run_config(args, **extra)
    bundle = ex.run_full_verification(cfg, suites=["weighted"], write=True)
    _print_criteria(bundle)
    return bundle.status


def cmd_verify(args) -> int:
    extra = {} if args.trials is None else {"trials": args.trials}
    cfg = _run_config(args, **extra)
    bundle = ex.run_full_verification(cfg)
    _print_criteria(bundle)
    for name, seconds in bundle.timings.items():
        print(f"time {name}: {seconds:.1f} s")
    if args.calibrate:
        path = Path(cfg.out) / "tolerances.cfg"
        write_tolerances(
            ex.calibrate(bundle), path,
            header=f"Calibrated on grid 2^{cfg.grid}, seed {cfg.seed}; margin {ex.CALIBRATION_MARGIN}.",
        )
        print(f"calibrated tolerances written to {path}")
    return bundle.status


COMMANDS = {
    "czd": cmd_czd,
    "dominate": cmd_dominate,
    "mt-bound": cmd_mt_bound,
    "scaling": cmd_scaling,
    "weights": cmd_weights,
    "weighted": cmd_weighted,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"mfcz {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ReportError as exc:
        print(f"mfcz {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
