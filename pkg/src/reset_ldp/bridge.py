"""Brownian-bridge survival factors for tube indicators.

Between its knots a simulated path is a Brownian motion, so conditioning
on the knot values makes each inter-knot interval an independent Brownian
bridge.  Multiplying the knot-level membership indicator by per-interval
barrier-survival probabilities yields a tube-hit indicator with no
discretization bias at any grid resolution: the expectation equals the
continuous-path tube probability exactly.

Slanted tube walls cost nothing: conditioning on both endpoints removes
drift, so subtracting the (linear) tube center from the endpoint values
reduces parallel slanted barriers to the constant pair (-eps, +eps).
That reduction is exact only when each interval lies inside a single
linear segment of the center, which is why estimators force the center
breakpoints and the window start into the simulation grid.
"""

from __future__ import annotations

import numpy as np

from .path_analysis import TargetPath, TubeSpec
from .process_core import SamplePath

__all__ = ["stay_probability", "tube_extra_knots", "tube_hit_matrix", "tube_hit_path"]

_TRUNCATION = 1e-17


def _images_series(z0, z1, d, var):
    """Method of images on barrier-relative endpoints, all strictly inside.

    Terms gain a factor exp(-2 (k-1)^2 d^2 / var) per image pair, so for
    var < 4 d^2 the series is float-exact long before the term cap.
    """

    def _e(expo):
        return np.exp(np.minimum(expo, 0.0))

    total = 1.0 - _e(-2.0 * z0 * z1 / var)
    dz = z1 - z0
    for k in range(1, 65):
        kd = k * d
        t_same = _e(-2.0 * kd * (kd + dz) / var) + _e(-2.0 * kd * (kd - dz) / var)
        t_cross = _e(-2.0 * (z0 + kd) * (z1 + kd) / var) + _e(
            -2.0 * (z0 - kd) * (z1 - kd) / var
        )
        total = total + t_same - t_cross
        if max(np.max(t_same, initial=0.0), np.max(t_cross, initial=0.0)) < _TRUNCATION:
            break
    return total


def _spectral_series(z0, z1, d, var):
    """Absorbed transition density over the free density, eigenbasis form.

    Converges in a handful of terms exactly where the image series is
    slow (var >= 4 d^2); there the combined exponent stays below 1/8, so
    nothing overflows.
    """
    dz2 = (z1 - z0) ** 2
    total = np.zeros_like(z0)
    for k in range(1, 9):
        expo = dz2 / (2.0 * var) - k * k * np.pi**2 * var / (2.0 * d * d)
        total = total + np.sin(k * np.pi * z0 / d) * np.sin(k * np.pi * z1 / d) * np.exp(expo)
    return (2.0 / d) * np.sqrt(2.0 * np.pi * var) * total


def stay_probability(y0, y1, half_width: float, var):
    """P(bridge from y0 to y1 with endpoint variance var stays in (-h, h)).

    y0, y1 are endpoint values relative to the tube center.  Two dual
    series cover all variances at float precision: the method of images
    for var below 4 (2h)^2 and the eigenfunction expansion of the
    absorbed kernel above.  Broadcasts over array inputs; endpoints on
    or outside the barriers give 0.
    """
    y0, y1, var = np.broadcast_arrays(
        np.asarray(y0, dtype=float), np.asarray(y1, dtype=float), np.asarray(var, dtype=float)
    )
    h = float(half_width)
    d = 2.0 * h
    z0 = y0 + h
    z1 = y1 + h
    inside = (z0 > 0.0) & (z0 < d) & (z1 > 0.0) & (z1 < d) & (var > 0.0)
    out = np.zeros(z0.shape)
    small = inside & (var < 4.0 * d * d)
    large = inside & ~small
    if np.any(small):
        out[small] = _images_series(z0[small], z1[small], d, var[small])
    if np.any(large):
        out[large] = _spectral_series(z0[large], z1[large], d, var[large])
    return np.clip(out, 0.0, 1.0)


def tube_extra_knots(tube: TubeSpec) -> np.ndarray:
    """Interior times the simulation grid must contain for exact factors."""
    pts = np.concatenate([tube.center.breakpoints, [tube.time_window[0]]])
    pts = np.unique(pts)
    return pts[(pts > 0.0) & (pts < 1.0)]


def _hit_from_relative(times, y_right, y_left, tube, uniforms, horizon_T):
    """Shared indicator logic on center-relative knot values.

    y_right: values minus center (matrix or vector, knots on columns).
    y_left: left limits minus center (equal to y_right without resets).
    Survival factors are only evaluated for rows that pass the knot
    check; the rest are already out of the tube.
    """
    a = tube.time_window[0]
    eps = tube.epsilon
    knot_in = times >= a
    left_in = times > a
    inside = np.all(np.abs(y_right[..., knot_in]) < eps, axis=-1) & np.all(
        np.abs(y_left[..., left_in]) < eps, axis=-1
    )
    seg = times[:-1] >= a  # window intervals; a is always a knot
    if not np.any(inside) or not np.any(seg):
        return inside
    var = np.diff(times)[seg] / horizon_T
    if y_right.ndim == 1:
        p = stay_probability(y_right[:-1][seg], y_left[1:][seg], eps, var)
        return inside & np.all(uniforms[seg] < p)
    rows = np.where(inside)[0]
    p = stay_probability(y_right[rows][:, :-1][:, seg], y_left[rows][:, 1:][:, seg], eps, var)
    out = inside.copy()
    out[rows] = np.all(uniforms[rows][:, seg] < p, axis=-1)
    return out


def tube_hit_matrix(times, values, tube: TubeSpec, uniforms, horizon_T: float):
    """Vector of continuous-tube indicators for reset-free path rows."""
    y = values - tube.center(times)
    return _hit_from_relative(times, y, y, tube, uniforms, horizon_T)


def tube_hit_path(path: SamplePath, tube: TubeSpec, uniforms, horizon_T: float) -> bool:
    """Continuous-tube indicator for one sampled path (resets allowed)."""
    center = tube.center(path.times)
    y_right = path.values - center
    y_left = path.left_limits() - center
    return bool(_hit_from_relative(path.times, y_right, y_left, tube, uniforms, horizon_T))
