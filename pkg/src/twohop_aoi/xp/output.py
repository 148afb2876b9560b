"""CSV and SVG emitters for sweep results.

Both writers are byte-deterministic: same rows and metadata, same file.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

from ..params import Scheme
from .experiment import SweepRow

CSV_COLUMNS = (
    "scheme", "p1", "p2", "analytic_aoi", "solver_aoi", "sim_aoi", "sim_std_error", "cycles",
)
AXES = ("vary_p1", "vary_p2", "diagonal")


class OutputError(OSError):
    pass


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _write(destination, text: str) -> None:
    try:
        with open(destination, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {destination}: {exc}") from exc


def csv_text(rows, metadata: dict | None = None) -> str:
    if not rows:
        raise ValueError("no rows to write")
    buf = io.StringIO()
    for key, value in (metadata or {}).items():
        buf.write(f"# {key}={value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in sorted(rows, key=SweepRow.sort_key):
        writer.writerow([
            str(r.scheme), _fmt(r.p1), _fmt(r.p2), _fmt(r.analytic_aoi), _fmt(r.solver_aoi),
            _fmt(r.sim_aoi), _fmt(r.sim_std_error), str(int(r.cycles)),
        ])
    return buf.getvalue()


def emit_csv(rows, destination, metadata: dict | None = None) -> Path:
    """Write rows sorted by (scheme, p1, p2), six significant digits.

    ``metadata`` entries become leading ``# key=value`` comment lines.
    """
    _write(destination, csv_text(rows, metadata))
    return Path(destination)


def read_csv(source) -> list[SweepRow]:
    with open(source, encoding="utf-8", newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    rows = []
    for rec in reader:
        rows.append(SweepRow(
            scheme=Scheme.parse(rec["scheme"]),
            p1=float(rec["p1"]),
            p2=float(rec["p2"]),
            analytic_aoi=float(rec["analytic_aoi"]),
            solver_aoi=float(rec["solver_aoi"]),
            sim_aoi=float(rec["sim_aoi"]),
            sim_std_error=float(rec["sim_std_error"]),
            cycles=int(rec["cycles"]),
        ))
    return rows


def read_metadata(source) -> dict:
    meta = {}
    with open(source, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
    return meta


@dataclass(frozen=True)
class Series:
    scheme: Scheme
    method: str  # "analytic" or "sim"
    points: tuple  # (x, y, error) triples, x ascending


def infer_axis(rows) -> str:
    p1s = {r.p1 for r in rows}
    p2s = {r.p2 for r in rows}
    if len(p1s) == 1 and len(p2s) > 1:
        return "vary_p2"
    if len(p2s) == 1 and len(p1s) > 1:
        return "vary_p1"
    if all(r.p1 == r.p2 for r in rows):
        return "diagonal"
    raise ValueError("rows do not lie on a single line of the (p1, p2) plane")


def plot_series(rows, axis: str) -> list[Series]:
    """Group rows into one analytic and one simulated series per scheme."""
    rows = [r for r in rows if r.error is None]
    if not rows:
        raise ValueError("no plottable rows")
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    if axis == "vary_p1":
        fixed = {r.p2 for r in rows}
        x_of = lambda r: r.p1  # noqa: E731
    elif axis == "vary_p2":
        fixed = {r.p1 for r in rows}
        x_of = lambda r: r.p2  # noqa: E731
    else:
        if any(r.p1 != r.p2 for r in rows):
            raise ValueError("diagonal axis needs rows with p1 == p2")
        fixed = {None}
        x_of = lambda r: r.p1  # noqa: E731
    if len(fixed) != 1:
        raise ValueError(f"rows mix fixed parameters for axis {axis}: {sorted(fixed)}")
    series = []
    for scheme in sorted({r.scheme for r in rows}, key=str):
        mine = sorted((r for r in rows if r.scheme == scheme), key=x_of)
        series.append(Series(scheme, "analytic", tuple((x_of(r), r.analytic_aoi, 0.0) for r in mine)))
        sim_pts = tuple(
            (x_of(r), r.sim_aoi, r.sim_std_error) for r in mine if not math.isnan(r.sim_aoi)
        )
        if sim_pts:
            series.append(Series(scheme, "sim", sim_pts))
    return series


_COLORS = {
    Scheme.TWO_NOARQ: "#d62728",
    Scheme.TWO_ARQ: "#1f77b4",
    Scheme.SINGLE_NOARQ: "#ff7f0e",
    Scheme.SINGLE_ARQ: "#2ca02c",
}
_LABELS = {
    Scheme.TWO_NOARQ: "two-hop, no ARQ",
    Scheme.TWO_ARQ: "two-hop, ARQ",
    Scheme.SINGLE_NOARQ: "one-hop, no ARQ",
    Scheme.SINGLE_ARQ: "one-hop, ARQ",
}


def _nice_step(span: float, target: int = 6) -> float:
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 2.5, 5, 10):
        if raw <= m * mag:
            return m * mag
    return 10 * mag


def _ticks(lo: float, hi: float):
    step = _nice_step(hi - lo)
    start = math.floor(lo / step) * step
    stop = math.ceil(hi / step) * step
    n = int(round((stop - start) / step))
    return [round(start + k * step, 10) for k in range(n + 1)]


def svg_text(rows, axis: str, metadata: dict | None = None, title: str | None = None) -> str:
    series = plot_series(rows, axis)
    width, height = 720, 440
    left, right, top, bottom = 70, 240, 40, 60
    pw, ph = width - left - right, height - top - bottom

    xs = [p[0] for s in series for p in s.points]
    ys = [v for s in series for (_, y, e) in s.points for v in (y - e, y + e) if math.isfinite(v)]
    x_ticks = _ticks(min(xs), max(xs)) if max(xs) > min(xs) else [min(xs) - 0.1, max(xs) + 0.1]
    y_ticks = _ticks(min(0.0, min(ys)), max(ys) * 1.05)
    x0, x1, y0, y1 = x_ticks[0], x_ticks[-1], y_ticks[0], y_ticks[-1]

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
    ]
    if metadata:
        desc = "; ".join(f"{k}={v}" for k, v in metadata.items())
        out.append(f"<desc>{escape(desc)}</desc>")
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')
    xlabel = {"vary_p1": "p1", "vary_p2": "p2", "diagonal": "p1 = p2"}[axis]
    if title is None:
        fixed = ""
        if axis == "vary_p1":
            fixed = f" (p2 = {_fmt(rows[0].p2)})"
        elif axis == "vary_p2":
            fixed = f" (p1 = {_fmt(rows[0].p1)})"
        title = f"Average AoI versus {xlabel}{fixed}"
    out.append(f'<text x="{left + pw / 2:.2f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')

    out.append('<g class="axes" stroke="#333" stroke-width="1">')
    out.append(f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}"/>')
    out.append("</g>")
    out.append('<g class="ticks" fill="#333">')
    for t in x_ticks:
        x = sx(t)
        out.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 5}" stroke="#333"/>')
        out.append(f'<text x="{x:.2f}" y="{top + ph + 18}" text-anchor="middle">{_fmt(t)}</text>')
    for t in y_ticks:
        y = sy(t)
        out.append(f'<line x1="{left - 5}" y1="{y:.2f}" x2="{left + pw}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
    out.append("</g>")
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 18}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + ph / 2:.2f})">average AoI (slots)</text>')

    for s in series:
        color = _COLORS[s.scheme]
        attrs = f'class="series" data-scheme={quoteattr(str(s.scheme))} data-method={quoteattr(s.method)}'
        out.append(f"<g {attrs}>")
        if s.method == "analytic":
            pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y, _ in s.points)
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        else:
            for x, y, e in s.points:
                cx, cy = sx(x), sy(y)
                if math.isfinite(e) and e > 0:
                    out.append(f'<line x1="{cx:.2f}" y1="{sy(y - e):.2f}" x2="{cx:.2f}" '
                               f'y2="{sy(y + e):.2f}" stroke="{color}"/>')
                out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="3.5" fill="none" stroke="{color}"/>')
        out.append("</g>")

    out.append('<g class="legend">')
    for k, s in enumerate(series):
        y = top + 10 + 20 * k
        lx = left + pw + 15
        color = _COLORS[s.scheme]
        if s.method == "analytic":
            out.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 24}" y2="{y}" stroke="{color}" stroke-width="1.8"/>')
        else:
            out.append(f'<circle cx="{lx + 12}" cy="{y}" r="3.5" fill="none" stroke="{color}"/>')
        label = f"{_LABELS[s.scheme]} ({'theory' if s.method == 'analytic' else 'simulation'})"
        out.append(f'<text x="{lx + 30}" y="{y + 4}">{escape(label)}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(rows, axis: str, destination, metadata: dict | None = None,
              title: str | None = None) -> Path:
    """Self-contained SVG line chart: closed-form curves plus simulated points with ±1 SE bars."""
    _write(destination, svg_text(rows, axis, metadata, title))
    return Path(destination)
