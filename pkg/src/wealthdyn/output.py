"""Atomic file output: trajectory CSV, JSON documents and SVG line charts."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .forward import Trajectory

DECIMALS = 6
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def atomic_write_text(path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see a partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, doc) -> None:
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


def trajectory_csv_text(trajectory: Trajectory) -> str:
    if len(trajectory) == 0:
        raise ValueError("cannot write an empty trajectory")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", *trajectory.config.names])
    for t, row in zip(trajectory.times, trajectory.wealth):
        writer.writerow([int(t), *(f"{v:.{DECIMALS}f}" for v in row)])
    return buf.getvalue()


def write_trajectory_csv(trajectory: Trajectory, path) -> None:
    atomic_write_text(path, trajectory_csv_text(trajectory))


def read_trajectory_csv(path) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Returns ``(category_names, times, wealth)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    times = np.array([int(r[0]) for r in body])
    wealth = np.array([[float(v) for v in r[1:]] for r in body])
    return header[1:], times, wealth


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    first = np.ceil(lo / step) * step
    return [float(v) for v in np.arange(first, hi + 0.5 * step, step)]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def svg_text(trajectory: Trajectory, title: str = "Wealth by category", width: int = 800, height: int = 480) -> str:
    """Static line chart: one polyline per category, time on the x axis."""
    if len(trajectory) == 0:
        raise ValueError("cannot plot an empty trajectory")
    left, right, top, bottom = 80, 170, 40, 50
    pw, ph = width - left - right, height - top - bottom
    t = trajectory.times.astype(float)
    w = trajectory.wealth
    t_lo, t_hi = float(t[0]), float(t[-1])
    y_lo = min(0.0, float(w.min()))
    y_hi = float(w.max())
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    t_span = (t_hi - t_lo) or 1.0

    def sx(v):
        return left + (v - t_lo) / t_span * pw

    def sy(v):
        return top + ph - (v - y_lo) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left}" y="{top - 15}" font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for v in _ticks(t_lo, t_hi):
        x = _fmt(sx(v))
        out.append(f'<line x1="{x}" y1="{top + ph}" x2="{x}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(
            f'<text x="{x}" y="{top + ph + 20}" font-family="sans-serif" font-size="11" text-anchor="middle">{v:g}</text>'
        )
    for v in _ticks(y_lo, y_hi):
        y = _fmt(sy(v))
        out.append(f'<line x1="{left - 5}" y1="{y}" x2="{left}" y2="{y}" stroke="black"/>')
        out.append(
            f'<text x="{left - 8}" y="{y}" font-family="sans-serif" font-size="11" text-anchor="end" dominant-baseline="middle">{v:g}</text>'
        )
    out.append(
        f'<text x="{left + pw / 2:.2f}" y="{height - 10}" font-family="sans-serif" font-size="12" text-anchor="middle">t</text>'
    )
    for k, name in enumerate(trajectory.config.names):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(t, w[:, k]))
        out.append(
            f'<polyline data-category="{escape(name)}" fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>'
        )
        ly = top + 10 + 20 * k
        out.append(f'<line x1="{left + pw + 15}" y1="{ly}" x2="{left + pw + 40}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(
            f'<text x="{left + pw + 45}" y="{ly}" font-family="sans-serif" font-size="12" dominant-baseline="middle">{escape(name)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svg(trajectory: Trajectory, path, title: str = "Wealth by category") -> None:
    atomic_write_text(path, svg_text(trajectory, title))


def histogram_csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bin_lower", "bin_upper", "count"])
    for lo, hi, c in rows:
        writer.writerow([f"{lo:.{DECIMALS}f}", f"{hi:.{DECIMALS}f}", c])
    return buf.getvalue()
