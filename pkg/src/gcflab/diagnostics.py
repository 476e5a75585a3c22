"""Run reports and their CSV, JSON and SVG artifacts.

Every pass/fail verdict in a summary is derived from one CSV column and a
:class:`CheckSpec`, so it can be recomputed from the CSV alone with
:func:`recompute_checks`.  Output is deterministic: numbers are written with
17 significant digits (CSV) or as shortest round-trip strings (JSON), line
endings are LF, and no wall-clock time is serialized.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field, fields, is_dataclass

import numpy as np

from .errors import SinkUnavailable, UnknownSeries

BASE_COLUMNS = (
    "t", "N", "J", "D2", "harnack_slack", "mono_slack1", "mono_slack2", "concavity_dd",
    "min_ut", "max_ut", "inv_lambda_min", "osc",
)
#: extra columns appended after the fixed ones so every check has a source column
EXTRA_COLUMNS = (
    "first_deriv_rel", "mono2_rel", "dissipation_rel", "concavity_rel", "gb_err", "radius_err",
    "max_inv_nu", "cmp_lower", "cmp_upper", "cmp_ratio", "dissipation", "speed_err", "profile_err",
    "residual", "t_deviation",
)
COLUMNS = BASE_COLUMNS + EXTRA_COLUMNS
RULES = ("min_ge", "max_le", "abs_le", "last_le")


@dataclass(frozen=True)
class CheckSpec:
    """``rule`` applied to ``column`` with bound ``tolerance``.

    ``min_ge``  min of the column >= tolerance;
    ``max_le``  max <= tolerance;
    ``abs_le``  max of the absolute values <= tolerance;
    ``last_le`` absolute value in the last non-empty row <= tolerance.
    """

    name: str
    column: str
    rule: str
    tolerance: float

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.column not in COLUMNS:
            raise ValueError(f"unknown column {self.column!r}")


@dataclass(frozen=True)
class CheckSummary:
    name: str
    column: str
    rule: str
    min_slack: float
    max_slack: float
    tolerance: float
    passed: bool
    node: tuple | None = None


def evaluate_check(spec, values):
    """Summarize a check over the non-empty values of its column."""
    vals = [float(v) for v in values if v is not None and not (isinstance(v, float) and math.isnan(v))]
    if not vals:
        return CheckSummary(spec.name, spec.column, spec.rule, math.nan, math.nan, spec.tolerance, False)
    lo, hi = min(vals), max(vals)
    if spec.rule == "min_ge":
        ok = lo >= spec.tolerance
    elif spec.rule == "max_le":
        ok = hi <= spec.tolerance
    elif spec.rule == "abs_le":
        ok = max(abs(lo), abs(hi)) <= spec.tolerance
    else:
        ok = abs(vals[-1]) <= spec.tolerance
    return CheckSummary(spec.name, spec.column, spec.rule, lo, hi, spec.tolerance, bool(ok))


@dataclass
class RunReport:
    """Rows and check verdicts of one run.

    ``wall_seconds`` is kept for interactive use only; it is never written
    to an artifact.
    """

    run_id: str
    config: dict
    rows: list
    specs: list
    terminal_status: str
    steps: int = 0
    lambda_measured: float | None = None
    lambda_target: float | None = None
    wall_seconds: float | None = None
    notes: dict = field(default_factory=dict)

    @property
    def checks(self):
        out = {}
        for spec in self.specs:
            summary = evaluate_check(spec, [row.get(spec.column) for row in self.rows])
            node = self.notes.get(f"{spec.name}.node")
            if node is not None:
                summary = CheckSummary(**{**summary.__dict__, "node": node})
            out[spec.name] = summary
        return out

    @property
    def passed(self):
        return all(c.passed for c in self.checks.values())

    def series(self, column):
        if column not in COLUMNS:
            raise UnknownSeries(f"no series named {column!r}")
        pairs = [(r["t"], r.get(column)) for r in self.rows]
        pairs = [(t, v) for t, v in pairs if v is not None and np.isfinite(v)]
        if not pairs:
            raise UnknownSeries(f"series {column!r} is empty in run {self.run_id}")
        t, v = zip(*pairs)
        return np.array(t, dtype=float), np.array(v, dtype=float)


def config_echo(config):
    """Flat ``{key: str}`` view of a dataclass configuration, in field order."""
    if is_dataclass(config):
        items = [(f.name, getattr(config, f.name)) for f in fields(config)]
    else:
        items = list(config.items())
    return {k: _text(v) for k, v in items}


def _text(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (tuple, list)):
        return ",".join(_text(x) for x in v)
    return str(v)


def _cell(v):
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return ""
    return format(v, ".17g")


def _open(path):
    try:
        d = os.path.dirname(os.path.abspath(path))
        os.makedirs(d, exist_ok=True)
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise SinkUnavailable(f"cannot write {path}: {exc}") from exc


def series_text(report):
    if not report.rows:
        raise ValueError("report has no rows")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in report.rows:
        w.writerow([_cell(row.get(c)) for c in COLUMNS])
    return buf.getvalue()


def write_series(report, path):
    """CSV with the fixed column order; empty cells for absent values."""
    text = series_text(report)
    with _open(path) as fh:
        fh.write(text)
    return path


def read_series(path):
    """Rows of a series CSV as dicts of floats (``None`` for empty cells)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return [{k: (float(v) if v != "" else None) for k, v in row.items()} for row in reader]


def _num(v):
    if v is None:
        return None
    v = float(v)
    return "nan" if math.isnan(v) else repr(v)


def summary_dict(report):
    checks = {}
    for name, c in report.checks.items():
        entry = {
            "column": c.column,
            "rule": c.rule,
            "min_slack": _num(c.min_slack),
            "max_slack": _num(c.max_slack),
            "tolerance": _num(c.tolerance),
            "pass": c.passed,
        }
        if c.node is not None:
            entry["node"] = list(c.node)
        checks[name] = entry
    out = {
        "run_id": report.run_id,
        "config": report.config,
        "checks": checks,
        "terminal_status": report.terminal_status,
        "steps": report.steps,
        "rows": len(report.rows),
    }
    if report.lambda_measured is not None:
        out["lambda_measured"] = _num(report.lambda_measured)
    if report.lambda_target is not None:
        out["lambda_target"] = _num(report.lambda_target)
    if report.notes:
        out["notes"] = {k: (_num(v) if isinstance(v, (float, np.floating)) else v) for k, v in report.notes.items()}
    return out


def summary_text(report):
    return json.dumps(summary_dict(report), indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return repr(float(o))
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def write_summary(report, path):
    text = summary_text(report)
    with _open(path) as fh:
        fh.write(text)
    return path


def recompute_checks(rows, summary):
    """Re-derive every verdict in a summary from CSV rows; returns ``{name: pass}``."""
    out = {}
    for name, c in summary["checks"].items():
        spec = CheckSpec(name, c["column"], c["rule"], float(c["tolerance"]))
        out[name] = evaluate_check(spec, [r.get(spec.column) for r in rows]).passed
    return out


# ---------------------------------------------------------------- SVG


def _fmt(x):
    return f"{x:.2f}"


def _tick(v):
    return f"{v:.4g}"


def plot_text(report, which):
    """Standalone SVG line chart of one series against ``t``.

    When a check uses the series, its tolerance is drawn as a shaded band.
    """
    t, v = report.series(which)
    width, height, left, right, top, bottom = 640, 400, 80, 20, 30, 50
    band = None
    for spec in report.specs:
        if spec.column == which:
            tol = spec.tolerance
            band = {"min_ge": (tol, None), "max_le": (None, tol), "abs_le": (-tol, tol), "last_le": (-tol, tol)}[
                spec.rule
            ]
            break
    lo, hi = float(v.min()), float(v.max())
    if band is not None:
        lo = min([lo] + [b for b in band if b is not None])
        hi = max([hi] + [b for b in band if b is not None])
    if hi == lo:
        pad = abs(hi) * 0.05 or 1.0
        lo, hi = lo - pad, hi + pad
    t0, t1 = float(t.min()), float(t.max())
    if t1 == t0:
        t1 = t0 + 1.0

    def sx(x):
        return left + (x - t0) / (t1 - t0) * (width - left - right)

    def sy(y):
        return top + (hi - y) / (hi - lo) * (height - top - bottom)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="18" text-anchor="middle" font-family="sans-serif" font-size="14">'
        f"{report.run_id}: {which}</text>",
    ]
    if band is not None:
        b_lo = lo if band[0] is None else band[0]
        b_hi = hi if band[1] is None else band[1]
        parts.append(
            f'<rect x="{_fmt(sx(t0))}" y="{_fmt(sy(b_hi))}" width="{_fmt(sx(t1) - sx(t0))}" '
            f'height="{_fmt(sy(b_lo) - sy(b_hi))}" fill="#cfe8cf" stroke="none"/>'
        )
    x_axis, y_axis = height - bottom, left
    parts.append(f'<line x1="{left}" y1="{x_axis}" x2="{width - right}" y2="{x_axis}" stroke="black"/>')
    parts.append(f'<line x1="{y_axis}" y1="{top}" x2="{y_axis}" y2="{x_axis}" stroke="black"/>')
    for k in range(5):
        tv = t0 + (t1 - t0) * k / 4
        yv = lo + (hi - lo) * k / 4
        parts.append(
            f'<text x="{_fmt(sx(tv))}" y="{x_axis + 16}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="11">{_tick(tv)}</text>'
        )
        parts.append(
            f'<text x="{left - 6}" y="{_fmt(sy(yv) + 4)}" text-anchor="end" font-family="sans-serif" '
            f'font-size="11">{_tick(yv)}</text>'
        )
    parts.append(
        f'<text x="{(left + width - right) / 2:.0f}" y="{height - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">t</text>'
    )
    parts.append(
        f'<text x="16" y="{(top + x_axis) / 2:.0f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {(top + x_axis) / 2:.0f})">{which}</text>'
    )
    pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(t, v))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="#1f4e9a" stroke-width="1.5"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plot(report, which, path=None):
    """SVG text for ``which``; also written to ``path`` when given."""
    text = plot_text(report, which)
    if path is not None:
        with _open(path) as fh:
            fh.write(text)
    return text


def write_artifacts(report, directory, plots=()):
    """``series.csv``, ``summary.json`` and one SVG per requested series."""
    write_series(report, os.path.join(directory, "series.csv"))
    write_summary(report, os.path.join(directory, "summary.json"))
    for which in plots:
        emit_plot(report, which, os.path.join(directory, f"{which}.svg"))
    return directory
