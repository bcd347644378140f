"""Self-contained SVG line plots of actual vs forecast demand."""

from __future__ import annotations

from html import escape
from pathlib import Path

import numpy as np

WIDTH, HEIGHT = 960, 400
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50
ACTUAL_STROKE = "#1f3b73"
FORECAST_STROKE = "#d9480f"
BAND_FILL = "#f08c00"


def _points(xs, ys) -> str:
    return " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))


def render_forecast_svg(dates, actual, predicted, band=None, title: str = "") -> str:
    actual = np.asarray(actual, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    series = [actual, predicted] + (list(band) if band is not None else [])
    lo = min(float(s.min()) for s in series)
    hi = max(float(s.max()) for s in series)
    if hi == lo:
        hi, lo = hi + 1.0, lo - 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    n = len(actual)
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B
    xs = MARGIN_L + np.arange(n) * (plot_w / max(n - 1, 1))

    def sy(v):
        return MARGIN_T + (hi - np.asarray(v)) / (hi - lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#888"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        value = lo + frac * (hi - lo)
        y = sy(value)
        parts.append(f'<line x1="{MARGIN_L}" y1="{y:.2f}" x2="{WIDTH - MARGIN_R}" y2="{y:.2f}" stroke="#eee"/>')
        parts.append(f'<text x="{MARGIN_L - 6}" y="{y + 4:.2f}" text-anchor="end">{value:.0f}</text>')
    if dates:
        for idx in sorted({0, n // 2, n - 1}):
            parts.append(
                f'<text x="{xs[idx]:.2f}" y="{HEIGHT - MARGIN_B + 18}" text-anchor="middle">'
                f"{dates[idx].isoformat()}</text>"
            )
    parts.append(f'<text x="16" y="{MARGIN_T + plot_h / 2:.0f}" transform="rotate(-90 16 '
                 f'{MARGIN_T + plot_h / 2:.0f})" text-anchor="middle">demand (MW)</text>')
    if band is not None:
        lower, upper = (np.asarray(b, dtype=np.float64) for b in band)
        outline = _points(xs, sy(upper)) + " " + _points(xs[::-1], sy(lower)[::-1])
        parts.append(f'<polygon points="{outline}" fill="{BAND_FILL}" fill-opacity="0.25" stroke="none"/>')
    parts.append(f'<polyline points="{_points(xs, sy(actual))}" fill="none" stroke="{ACTUAL_STROKE}" stroke-width="1.2"/>')
    parts.append(
        f'<polyline points="{_points(xs, sy(predicted))}" fill="none" stroke="{FORECAST_STROKE}" stroke-width="1.4"/>'
    )
    legend_y = HEIGHT - 14
    parts.append(f'<line x1="{MARGIN_L}" y1="{legend_y}" x2="{MARGIN_L + 24}" y2="{legend_y}" stroke="{ACTUAL_STROKE}" stroke-width="2"/>')
    parts.append(f'<text x="{MARGIN_L + 30}" y="{legend_y + 4}">actual</text>')
    parts.append(f'<line x1="{MARGIN_L + 90}" y1="{legend_y}" x2="{MARGIN_L + 114}" y2="{legend_y}" stroke="{FORECAST_STROKE}" stroke-width="2"/>')
    parts.append(f'<text x="{MARGIN_L + 120}" y="{legend_y + 4}">forecast</text>')
    if band is not None:
        parts.append(f'<rect x="{MARGIN_L + 190}" y="{legend_y - 6}" width="24" height="12" fill="{BAND_FILL}" fill-opacity="0.25"/>')
        parts.append(f'<text x="{MARGIN_L + 220}" y="{legend_y + 4}">q10-q90</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_forecast_svg(path, dates, actual, predicted, band=None, title: str = "") -> None:
    Path(path).write_text(render_forecast_svg(dates, actual, predicted, band=band, title=title))
