"""CSV report schemas and emission.

Every report type has a fixed column list (``SCHEMAS``) and sort key, so a
rerun with the same seed writes the same bytes.  Floats are written with
``%.17e``, booleans as ``true``/``false``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["Report", "SCHEMAS", "emit_csv", "render_csv", "format_value", "ReportError"]

# column list per report type; rows are sorted by the columns named in the
# second entry
SCHEMAS: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "czd": (
        (
            "seed", "grid", "trial", "n_freq", "lambda", "input", "frequencies", "n_cubes",
            "root_selected", "packing_constant", "good_l2_constant", "per_cube_mass_constant",
            "local_l2_constant", "overlap_multiplicity", "cancellation_residual",
            "identity_error", "support_violation",
        ),
        ("n_freq", "trial"),
    ),
    "domination": (
        (
            "seed", "grid", "n_freq", "r", "trial", "input", "operator", "constant",
            "n_cubes", "depth", "c_max", "max_child_fraction", "sparse", "zero_set_ok",
        ),
        ("r", "n_freq", "trial"),
    ),
    "nodes": (
        ("node", "level", "offset", "depth", "c", "avg_r", "exceptional_points", "children_points", "n_children"),
        ("node",),
    ),
    "family": (
        ("cube", "start", "length", "level", "offset", "witness_measure"),
        ("cube",),
    ),
    "mt_bound": (
        ("seed", "grid", "n_freq", "r", "s", "trial", "input", "operator", "ratio"),
        ("n_freq", "trial"),
    ),
    "scaling": (("N", "statistic", "trials", "seed"), ("N",)),
    "fit": (("experiment", "slope", "intercept", "residual", "points"), ("experiment",)),
    "weights": (
        ("seed", "grid", "case", "p", "parameter", "characteristic", "reference", "difference"),
        ("case", "p", "parameter"),
    ),
    "weighted": (
        (
            "seed", "grid", "suite", "n_freq", "p", "r", "alpha", "characteristic", "exponent",
            "trial", "input", "operator", "ratio",
        ),
        ("suite", "p", "r", "alpha", "n_freq", "trial"),
    ),
    "summary": (
        ("criterion", "name", "statistic", "threshold", "status", "detail"),
        ("criterion",),
    ),
}


class ReportError(OSError):
    """Report could not be written; the message carries the path."""


@dataclass
class Report:
    kind: str
    rows: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in SCHEMAS:
            raise ValueError(f"unknown report type {self.kind!r}")

    @property
    def columns(self) -> tuple[str, ...]:
        return SCHEMAS[self.kind][0]

    def add(self, **row) -> None:
        unknown = set(row) - set(self.columns)
        if unknown:
            raise ValueError(f"{self.kind}: unknown columns {sorted(unknown)}")
        self.rows.append(row)

    def sorted_rows(self) -> list[dict]:
        keys = SCHEMAS[self.kind][1]
        return sorted(self.rows, key=lambda row: tuple(_sort_key(row.get(k)) for k in keys))


def _sort_key(value):
    # numbers before strings, None first
    if value is None:
        return (0, 0.0, "")
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return (1, float(value), "")
    return (2, 0.0, str(value))


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return f"{value:.17e}"
    if hasattr(value, "item"):  # numpy scalar
        return format_value(value.item())
    return str(value)


def render_csv(report: Report) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(report.columns)
    for row in report.sorted_rows():
        writer.writerow([format_value(row.get(c)) for c in report.columns])
    return buf.getvalue()


def emit_csv(report: Report, path) -> None:
    """Write ``report`` to ``path`` (an empty report gives the header only)."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(render_csv(report))
    except OSError as exc:
        raise ReportError(f"cannot write report {path}: {exc}") from exc
