"""Flat ``key = value`` configuration files.

Two kinds of file use this format: the tolerance table (every PASS/FAIL
ceiling of the verification suites) and run configurations (grid, seed and
per-suite parameters).  Lines starting with ``#`` are comments; list
values are comma separated.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from importlib import resources
from pathlib import Path

from .grid import ConfigurationError

__all__ = [
    "parse_flat",
    "Tolerances",
    "load_tolerances",
    "RunConfig",
    "load_run_config",
    "TOLERANCE_KEYS",
    "write_tolerances",
]


def parse_flat(text: str, source: str = "<string>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigurationError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _read(path) -> tuple[str, str]:
    try:
        return Path(path).read_text(), str(path)
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc


@dataclass(frozen=True)
class Tolerances:
    """Every ceiling used by the verification suites.

    Attribute names map to file keys with ``_`` replaced by ``.`` after the
    first component, e.g. ``czd_good_l2`` is ``czd.good_l2``.
    """

    czd_cancellation: float
    czd_identity: float
    czd_good_l2: float
    czd_local_l2: float
    czd_overlap: float
    czd_seconds: float
    domination_slope_min: float
    domination_slope_max: float
    domination_seconds: float
    mt_bound: float
    weak11_slope_max: float
    lower_bound_slope_min: float
    weights_scale: float
    weights_oracle: float
    sparse_weighted: float
    sparse_weighted_slope_max: float
    main_theorem: float
    main_n_slope_max: float
    main_w_slope_max: float
    verify_seconds: float

    @staticmethod
    def key(name: str) -> str:
        head, _, tail = name.partition("_")
        return f"{head}.{tail}"

    def as_items(self) -> list[tuple[str, float]]:
        return [(self.key(f.name), getattr(self, f.name)) for f in fields(self)]

    def zero(self) -> "Tolerances":
        """Ceilings set to 0 and floors to infinity: a table no run can pass."""
        changes = {}
        for f in fields(self):
            if f.name.endswith("_seconds"):
                continue
            changes[f.name] = float("inf") if f.name.endswith("_min") else 0.0
        return replace(self, **changes)


TOLERANCE_KEYS = tuple(Tolerances.key(f.name) for f in fields(Tolerances))


def load_tolerances(path=None) -> Tolerances:
    """Read a tolerance table; ``None`` loads the committed default."""
    if path is None:
        text = resources.files("mfcz").joinpath("data/tolerances.cfg").read_text()
        source = "tolerances.cfg"
    else:
        text, source = _read(path)
    raw = parse_flat(text, source)
    missing = [k for k in TOLERANCE_KEYS if k not in raw]
    unknown = [k for k in raw if k not in TOLERANCE_KEYS]
    if missing or unknown:
        raise ConfigurationError(f"{source}: missing keys {missing}, unknown keys {unknown}")
    values = {}
    for f in fields(Tolerances):
        text_value = raw[Tolerances.key(f.name)]
        try:
            values[f.name] = float(text_value)
        except ValueError as exc:
            raise ConfigurationError(f"{source}: {Tolerances.key(f.name)} = {text_value!r}") from exc
    return Tolerances(**values)


def write_tolerances(tol: Tolerances, path, header: str = "") -> None:
    lines = [f"# {line}" for line in header.splitlines()]
    lines += [f"{key} = {value!r}" for key, value in tol.as_items()]
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise ConfigurationError(f"cannot write {path}: {exc}") from exc


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


# default N sweeps and the fraction of the grid size they may reach; unset
# sweeps keep the values that fit the chosen grid
_DEFAULT_NS = {
    "domination_ns": ((1, 4, 16, 64), 4),
    "weak_ns": ((4, 8, 16, 32, 64, 128, 256), 4),
    "lower_ns": ((8, 16, 32, 64, 128, 256), 2),
    "main_ns": ((1, 4, 16, 64), 4),
}


@dataclass(frozen=True)
class RunConfig:
    """Parameters of a run.  Validated on construction.

    N sweeps left at ``None`` take the standard values below a quarter of
    the grid size (half for the lower-bound sweep).
    """

    grid: int = 12
    seed: int = 7
    trials: int = 20
    czd_triples: int = 56
    domination_ns: tuple | None = None
    domination_rs: tuple = (1.0, 1.5)
    domination_pairs: int = 21
    mt_r: float = 2.0
    mt_s: float = 0.5
    weak_ns: tuple | None = None
    lower_p: float = 4.0 / 3.0
    lower_ns: tuple | None = None
    weight_alphas: tuple = (-0.5, 0.0, 0.5, 0.9)
    weighted_pr: tuple = ((2.0, 1.0), (3.0, 1.5))
    weighted_pairs: int = 6
    main_ns: tuple | None = None
    main_p: float = 2.0
    main_r: float = 1.0
    main_alpha: float = 0.5
    main_sweep_n: int = 16
    main_sweep_alphas: tuple = (0.0, 0.5, 0.8, 0.9, 0.95)
    tolerances: str | None = None
    out: str = "mfcz-out"

    def __post_init__(self):
        if not 6 <= self.grid <= 20:
            raise ConfigurationError(f"grid must lie in [6, 20], got {self.grid}")
        for name, (values, fraction) in _DEFAULT_NS.items():
            if getattr(self, name) is None:
                fitting = tuple(n for n in values if n < (1 << self.grid) // fraction)
                object.__setattr__(self, name, fitting)
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"seed must be a u64, got {self.seed}")
        for name in ("trials", "czd_triples", "domination_pairs", "weighted_pairs"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive")
        half = (1 << self.grid) // 2
        for name in ("domination_ns", "weak_ns", "lower_ns", "main_ns"):
            ns = getattr(self, name)
            if len(ns) < 2 or any(n < 1 or n >= half for n in ns) or list(ns) != sorted(set(ns)):
                raise ConfigurationError(f"{name} must be increasing and lie in [1, {half})")
        if any(r < 1 for r in self.domination_rs):
            raise ConfigurationError("domination r values must be >= 1")
        if not 0 < self.mt_s < 1 or self.mt_r < 1:
            raise ConfigurationError("need 0 < mt.s < 1 <= mt.r")
        if not 1 < self.lower_p < 2:
            raise ConfigurationError(f"lower-bound p must lie in (1, 2), got {self.lower_p}")
        for alpha in self.weight_alphas + self.main_sweep_alphas + (self.main_alpha,):
            if not -1 < alpha < 1:
                raise ConfigurationError(f"power-weight alpha must lie in (-1, 1), got {alpha}")
        for p, r in self.weighted_pr + ((self.main_p, self.main_r),):
            if not 1 <= r < p:
                raise ConfigurationError(f"need 1 <= r < p, got p={p}, r={r}")

    def load_tolerances(self) -> Tolerances:
        return load_tolerances(self.tolerances)


# file key -> (attribute, parser)
_RUN_KEYS = {
    "grid": ("grid", int),
    "seed": ("seed", int),
    "trials": ("trials", int),
    "czd.triples": ("czd_triples", int),
    "domination.ns": ("domination_ns", _ints),
    "domination.rs": ("domination_rs", _floats),
    "domination.pairs": ("domination_pairs", int),
    "mt.r": ("mt_r", float),
    "mt.s": ("mt_s", float),
    "weak.ns": ("weak_ns", _ints),
    "lower.p": ("lower_p", float),
    "lower.ns": ("lower_ns", _ints),
    "weights.alphas": ("weight_alphas", _floats),
    "weighted.pairs": ("weighted_pairs", int),
    "main.ns": ("main_ns", _ints),
    "main.p": ("main_p", float),
    "main.r": ("main_r", float),
    "main.alpha": ("main_alpha", float),
    "main.sweep_n": ("main_sweep_n", int),
    "main.sweep_alphas": ("main_sweep_alphas", _floats),
    "tolerances": ("tolerances", str),
    "out": ("out", str),
}


def load_run_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the file at ``path``, then ``overrides`` (attribute names)."""
    values: dict = {}
    if path is not None:
        text, source = _read(path)
        for key, value in parse_flat(text, source).items():
            if key not in _RUN_KEYS:
                raise ConfigurationError(f"{source}: unknown key {key!r}")
            attr, conv = _RUN_KEYS[key]
            try:
                values[attr] = conv(value)
            except ValueError as exc:
                raise ConfigurationError(f"{source}: {key} = {value!r}") from exc
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc
