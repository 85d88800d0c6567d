"""Deterministic SVG rendering of empirical rate curves.

The SVG is assembled by hand so golden-file tests can diff raw bytes;
identical inputs always produce the identical document.  Canvas is fixed
at 800x500 with the horizon on a log-scaled x axis, one marker and error
bar per estimate (from its rate CI), and a dashed horizontal reference
line at the predicted rate.
"""

from __future__ import annotations

import math

_WIDTH, _HEIGHT = 800, 500
_LEFT, _RIGHT = 70.0, 760.0
_TOP, _BOTTOM = 40.0, 440.0
_N_YTICKS = 5


def _fmt(x: float) -> str:
    # fixed two-decimal pixel coordinates keep the byte layout stable
    return f"{x:.2f}"


def _label(x: float) -> str:
    return f"{x:g}"


def plot_rate_curve(results, predicted: float) -> str:
    """Render empirical_rate vs T for a list of EstimateResult as SVG text.

    Infinite rate CI ends (zero-hit lower bounds) are clipped to the top
    of the plot area.  Results are drawn in the given order; the rate
    curve producer emits them with T increasing.
    """
    if not results:
        raise ValueError("plot_rate_curve needs at least one result")
    if not math.isfinite(predicted):
        raise ValueError("predicted rate must be finite")

    log_ts = [math.log10(r.T) for r in results]
    x_lo, x_hi = min(log_ts), max(log_ts)
    if x_hi - x_lo < 1e-12:
        pad = math.log10(2.0)
        x_lo, x_hi = x_lo - pad, x_hi + pad

    ys = [predicted]
    for r in results:
        ys.append(r.empirical_rate)
        ys.extend(v for v in (r.rate_lo, r.rate_hi) if math.isfinite(v))
    y_lo, y_hi = min(ys), max(ys)
    pad = 0.08 * (y_hi - y_lo) if y_hi - y_lo > 1e-12 else 0.5
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def x_of(t: float) -> float:
        return _LEFT + (math.log10(t) - x_lo) / (x_hi - x_lo) * (_RIGHT - _LEFT)

    def y_of(v: float) -> float:
        v = min(max(v, y_lo), y_hi)
        return _BOTTOM - (v - y_lo) / (y_hi - y_lo) * (_BOTTOM - _TOP)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<rect x="{_fmt(_LEFT)}" y="{_fmt(_TOP)}" width="{_fmt(_RIGHT - _LEFT)}" '
        f'height="{_fmt(_BOTTOM - _TOP)}" fill="none" stroke="black" stroke-width="1"/>',
    ]

    for i in range(_N_YTICKS):
        v = y_lo + (y_hi - y_lo) * i / (_N_YTICKS - 1)
        y = y_of(v)
        parts.append(
            f'<line x1="{_fmt(_LEFT - 5)}" y1="{_fmt(y)}" x2="{_fmt(_LEFT)}" y2="{_fmt(y)}" '
            f'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(_LEFT - 9)}" y="{_fmt(y + 4)}" text-anchor="end" '
            f'font-family="monospace" font-size="12">{v:.3g}</text>'
        )
    for r in results:
        x = x_of(r.T)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{_fmt(_BOTTOM)}" x2="{_fmt(x)}" y2="{_fmt(_BOTTOM + 5)}" '
            f'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(_BOTTOM + 20)}" text-anchor="middle" '
            f'font-family="monospace" font-size="12">{_label(r.T)}</text>'
        )
    parts.append(
        f'<text x="{_fmt((_LEFT + _RIGHT) / 2)}" y="{_fmt(_HEIGHT - 12)}" text-anchor="middle" '
        f'font-family="monospace" font-size="13">T (log scale)</text>'
    )
    parts.append(
        f'<text x="18" y="{_fmt((_TOP + _BOTTOM) / 2)}" text-anchor="middle" '
        f'font-family="monospace" font-size="13" '
        f'transform="rotate(-90 18 {_fmt((_TOP + _BOTTOM) / 2)})">empirical rate</text>'
    )

    y_ref = y_of(predicted)
    parts.append(
        f'<line x1="{_fmt(_LEFT)}" y1="{_fmt(y_ref)}" x2="{_fmt(_RIGHT)}" y2="{_fmt(y_ref)}" '
        f'stroke="#888888" stroke-width="1.5" stroke-dasharray="6,4"/>'
    )
    parts.append(
        f'<text x="{_fmt(_RIGHT - 4)}" y="{_fmt(y_ref - 6)}" text-anchor="end" '
        f'font-family="monospace" font-size="12" fill="#555555">predicted {predicted:.4g}</text>'
    )

    for r in results:
        x = x_of(r.T)
        lo = y_of(r.rate_lo)
        hi = y_of(r.rate_hi if math.isfinite(r.rate_hi) else y_hi)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{_fmt(lo)}" x2="{_fmt(x)}" y2="{_fmt(hi)}" '
            f'stroke="#1f4e9c" stroke-width="1.5"/>'
        )
        for y_cap in (lo, hi):
            parts.append(
                f'<line x1="{_fmt(x - 5)}" y1="{_fmt(y_cap)}" x2="{_fmt(x + 5)}" '
                f'y2="{_fmt(y_cap)}" stroke="#1f4e9c" stroke-width="1.5"/>'
            )
    if len(results) > 1:
        pts = " ".join(f"{_fmt(x_of(r.T))},{_fmt(y_of(r.empirical_rate))}" for r in results)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#1f4e9c" stroke-width="1"/>')
    for r in results:
        parts.append(
            f'<circle cx="{_fmt(x_of(r.T))}" cy="{_fmt(y_of(r.empirical_rate))}" r="4" '
            f'fill="#1f4e9c"/>'
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
