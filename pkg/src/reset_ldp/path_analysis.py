"""Target paths, variation decomposition, rate functionals, tubes.

Target paths are piecewise linear with f(0) = 0, which makes every
functional here exact: the action integral is a finite sum of squared
slopes, the Jordan decomposition is a pair of cumulative clipped-increment
sums, and sup distances between two such paths are attained at merged
breakpoints.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .process_core import SamplePath

__all__ = [
    "TargetPath",
    "VariationPair",
    "TubeSpec",
    "StaircaseSchedule",
    "parse_path_spec",
    "jordan_decompose",
    "total_variation",
    "action_integral",
    "rate_positive",
    "rate_negative",
    "rate_mixed",
    "rate_deterministic_reset",
    "sup_distance",
    "in_tube",
    "staircase_schedule",
]


@dataclass(frozen=True)
class TargetPath:
    """Piecewise-linear f on [0, 1] with f(0) = 0."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "breakpoints", t)
        object.__setattr__(self, "values", v)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ValueError("breakpoints/values must be 1-d arrays of equal length >= 2")
        if t[0] != 0.0 or t[-1] != 1.0:
            raise ValueError("breakpoints must run from 0 to 1")
        if np.any(np.diff(t) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if v[0] != 0.0:
            raise ValueError("target paths start at f(0) = 0")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")

    def __call__(self, t):
        return np.interp(t, self.breakpoints, self.values)

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.breakpoints)

    @staticmethod
    def linear(v: float) -> "TargetPath":
        """f(t) = v*t."""
        return TargetPath(np.array([0.0, 1.0]), np.array([0.0, float(v)]))

    @staticmethod
    def tent(peak_time: float, peak_value: float) -> "TargetPath":
        """Rise linearly to (peak_time, peak_value), back to 0 at t = 1."""
        if not 0.0 < peak_time < 1.0:
            raise ValueError("tent peak_time must lie in (0, 1)")
        return TargetPath(
            np.array([0.0, float(peak_time), 1.0]),
            np.array([0.0, float(peak_value), 0.0]),
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "v"])
        for t, v in zip(self.breakpoints, self.values):
            w.writerow([repr(float(t)), repr(float(v))])
        return buf.getvalue()

    @staticmethod
    def from_csv(text: str) -> "TargetPath":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["t", "v"]:
            raise ValueError("path CSV needs a 't,v' header row")
        data = [(float(r[0]), float(r[1])) for r in rows[1:] if r]
        t, v = zip(*data)
        return TargetPath(np.array(t), np.array(v))


def parse_path_spec(spec: str) -> TargetPath:
    """Parse "linear:v", "tent:a,b", or a CSV file path."""
    if spec.startswith("linear:"):
        return TargetPath.linear(float(spec.split(":", 1)[1]))
    if spec.startswith("tent:"):
        parts = spec.split(":", 1)[1].split(",")
        if len(parts) != 2:
            raise ValueError("tent shorthand is tent:peak_time,peak_value")
        return TargetPath.tent(float(parts[0]), float(parts[1]))
    with open(spec, "r", encoding="utf-8") as fh:
        return TargetPath.from_csv(fh.read())


@dataclass(frozen=True)
class VariationPair:
    """Jordan decomposition f = f_plus - f_minus, both nondecreasing from 0."""

    f_plus: TargetPath
    f_minus: TargetPath


@dataclass(frozen=True)
class TubeSpec:
    """The set U_eps(center) = {g : sup_window |g - center| < eps}."""

    center: TargetPath
    epsilon: float
    time_window: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self) -> None:
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be > 0")
        a, b = self.time_window
        if not (0.0 <= a < 1.0 and b == 1.0):
            raise ValueError("time_window must be [a, 1] with 0 <= a < 1")


@dataclass(frozen=True)
class StaircaseSchedule:
    """Jump layout for the staircase importance-sampling strategy.

    knots are the times t_1 < ... < t_{n_eps} = 1 at which the cumulative
    descent f_plus - f hits k*M/n_eps; the forced pattern has no jumps on
    [0, t_1] and exactly one jump in each (t_{k-1}, t_k].  jump_windows
    holds per interior jump the target interval for zeta in physical
    scale as coefficients of T: (M/n_eps - 2*eps^3, M/n_eps - eps^3).
    A monotone center (M = 0) yields the empty schedule.
    """

    n_eps: int
    knots: np.ndarray
    jump_windows: tuple[tuple[float, float], ...]

    @property
    def empty(self) -> bool:
        return self.n_eps == 0


def jordan_decompose(f: TargetPath) -> VariationPair:
    """Exact decomposition: cumulative positive / negative increments."""
    dv = np.diff(f.values)
    up = np.concatenate([[0.0], np.cumsum(np.clip(dv, 0.0, None))])
    down = np.concatenate([[0.0], np.cumsum(np.clip(-dv, 0.0, None))])
    return VariationPair(
        f_plus=TargetPath(f.breakpoints.copy(), up),
        f_minus=TargetPath(f.breakpoints.copy(), down),
    )


def total_variation(f: TargetPath) -> float:
    return float(np.sum(np.abs(np.diff(f.values))))


def action_integral(g: TargetPath) -> float:
    """I_1(g) = 1/2 * integral of gdot^2, exact for piecewise-linear g."""
    return 0.5 * float(np.sum(g.slopes**2 * np.diff(g.breakpoints)))


def _check_sign(f: TargetPath, positive: bool, what: str) -> None:
    """Require f >= 0 (or <= 0) with zeros at isolated points only.

    For piecewise-linear paths the segment minima sit at breakpoints, so
    checking breakpoint values suffices.  Isolated boundary zeros (e.g. a
    tent returning to 0 at t = 1) are admitted; a segment that is
    identically zero is not.
    """
    v = f.values if positive else -f.values
    side = "positive" if positive else "negative"
    if np.any(v < 0.0):
        raise ValueError(f"{what} requires f {side} on (0, 1]")
    if np.any((v[:-1] == 0.0) & (v[1:] == 0.0)):
        raise ValueError(f"{what} rejects paths with a zero segment of positive length")


def _check_lam(lam: float) -> float:
    if not lam >= 0.0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    return lam


def rate_positive(f: TargetPath, lam: float) -> float:
    """lambda + 1/2 * integral of (fdot_plus)^2 for f in AC0 plus."""
    _check_sign(f, True, "rate_positive")
    return _check_lam(lam) + action_integral(jordan_decompose(f).f_plus)


def rate_negative(f: TargetPath, lam: float) -> float:
    """lambda + 1/2 * integral of (fdot_minus)^2 for f in AC0 minus."""
    _check_sign(f, False, "rate_negative")
    return _check_lam(lam) + action_integral(jordan_decompose(f).f_minus)


def _split_at_zero_crossings(f: TargetPath) -> TargetPath:
    t, v = [f.breakpoints[0]], [f.values[0]]
    for i in range(f.breakpoints.size - 1):
        a, b = f.values[i], f.values[i + 1]
        if a * b < 0.0:  # strict sign change inside this segment
            ta, tb = f.breakpoints[i], f.breakpoints[i + 1]
            cross = ta + (tb - ta) * a / (a - b)
            t.append(cross)
            v.append(0.0)
        t.append(f.breakpoints[i + 1])
        v.append(f.values[i + 1])
    return TargetPath(np.array(t), np.array(v))


def rate_mixed(f: TargetPath, lam: float) -> float:
    """lambda + 1/2 * integral of (fdot_plus 1{f>=0} + fdot_minus 1{f<0})^2.

    Valid when f vanishes at finitely many points; segments identically
    zero are rejected.  Zeros take the nonnegative branch, which only
    matters on a null set and leaves the integral unchanged.
    """
    if np.any((f.values[:-1] == 0.0) & (f.values[1:] == 0.0)):
        raise ValueError("rate_mixed rejects paths with a zero segment of positive length")
    g = _split_at_zero_crossings(f)
    dt = np.diff(g.breakpoints)
    slopes = g.slopes
    mid = 0.5 * (g.values[:-1] + g.values[1:])  # sign of f inside each piece
    pos_part = np.clip(slopes, 0.0, None)  # fdot_plus
    neg_part = np.clip(-slopes, 0.0, None)  # fdot_minus
    integrand = np.where(mid >= 0.0, pos_part, neg_part)
    return _check_lam(lam) + 0.5 * float(np.sum(integrand**2 * dt))


def rate_deterministic_reset(f: TargetPath, lam: float) -> float:
    """lambda + 1/2 * integral of fdot^2 (deterministic resetting to 0).

    f must keep one sign on (0, 1]; isolated zeros are allowed.
    """
    if np.any(f.values < 0.0) and np.any(f.values > 0.0):
        raise ValueError("rate_deterministic_reset requires f of one sign on (0, 1]")
    _check_sign(f, bool(np.all(f.values >= 0.0)), "rate_deterministic_reset")
    return _check_lam(lam) + action_integral(f)


def _knots_and_left_values(p) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(times, right values, extra left-limit values at reset knots)."""
    if isinstance(p, TargetPath):
        return p.breakpoints, p.values, np.empty((0, 2))
    if isinstance(p, SamplePath):
        extra = np.array([[p.times[m.index], m.pre_reset_value] for m in p.reset_marks])
        return p.times, p.values, extra.reshape(-1, 2)
    raise TypeError(f"expected TargetPath or SamplePath, got {type(p).__name__}")


def sup_distance(f, g, window: tuple[float, float] = (0.0, 1.0)) -> float:
    """sup |f - g| over the window, on the merged knot grid.

    Exact when both arguments are piecewise linear.  A SamplePath is
    evaluated by interpolation between its knots (the documented grid
    semantics) and contributes the left limits at its reset instants as
    extra comparison points.
    """
    a, b = window
    tf, vf, ef = _knots_and_left_values(f)
    tg, vg, eg = _knots_and_left_values(g)
    grid = np.concatenate([tf, tg, [a, b]])
    grid = grid[(grid >= a) & (grid <= b)]
    grid = np.unique(grid)
    diff = np.abs(np.interp(grid, tf, vf) - np.interp(grid, tg, vg))
    best = float(np.max(diff))
    for extra, other_t, other_v in ((ef, tg, vg), (eg, tf, vf)):
        for t, left in extra:
            if a <= t <= b:
                best = max(best, abs(left - float(np.interp(t, other_t, other_v))))
    return best


def in_tube(path, tube: TubeSpec) -> bool:
    """Whether sup_distance(path, center) < epsilon over the tube window."""
    return sup_distance(path, tube.center, tube.time_window) < tube.epsilon


def _leftmost_hit(t: np.ndarray, v: np.ndarray, target: float) -> float:
    """Leftmost time where the nondecreasing PL function (t, v) equals target."""
    j = int(np.searchsorted(v, target, side="left"))
    if j == 0:
        return float(t[0])
    j = min(j, v.size - 1)
    rise = v[j] - v[j - 1]
    return float(t[j - 1] + (t[j] - t[j - 1]) * (target - v[j - 1]) / rise)


def staircase_schedule(f: TargetPath, epsilon: float) -> StaircaseSchedule:
    """Knots and jump windows of the staircase strategy for a tube around f.

    M = f_plus(1) - f(1) is the total descent.  n_eps = min{n : M/n <=
    eps/8}; knot t_k is the leftmost solution of f_plus(t) - f(t) =
    k*M/n_eps for k < n_eps, and t_{n_eps} = 1 (the equation holds there
    by construction).  M = 0 gives the empty schedule: pure jump
    suppression.
    """
    if not epsilon > 0.0:
        raise ValueError("epsilon must be > 0")
    _check_sign(f, True, "staircase_schedule")
    dec = jordan_decompose(f)
    m_total = float(dec.f_minus.values[-1])
    if m_total == 0.0:
        return StaircaseSchedule(0, np.empty(0), ())
    n_eps = int(np.ceil(8.0 * m_total / epsilon))
    targets = m_total * np.arange(1, n_eps) / n_eps
    knots = [
        _leftmost_hit(dec.f_minus.breakpoints, dec.f_minus.values, y) for y in targets
    ]
    knots.append(1.0)
    width = m_total / n_eps
    window = (width - 2.0 * epsilon**3, width - epsilon**3)
    return StaircaseSchedule(n_eps, np.array(knots), tuple([window] * (n_eps - 1)))
