"""Exact simulation of a Wiener process with random resetting.

The process solves

    xi(t) = w(t) - sum_{tau_k <= t} zeta(nu(tau_k-), xi(tau_k-))

where w is a standard Wiener process, nu a Poisson process of rate lambda,
and zeta(n, x) the reset amount drawn by a kernel.  Everything here works
with the scaled path xi_T(t) = xi(T t)/T on [0, 1].

There is no time-stepping scheme: Poisson arrival times are drawn exactly
from exponential spacings, and Wiener increments between knots (uniform
grid union arrival times) are exact centered Gaussians.  The only
discretisation anywhere is that the path is *observed* at finitely many
knots.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "ProcessParams",
    "ResetMark",
    "SamplePath",
    "RngStream",
    "sample_event_times",
    "simulate_path",
    "sup_statistic",
]


@dataclass(frozen=True)
class ProcessParams:
    """Simulation parameters.

    lam is the Poisson resetting rate (events per unit physical time,
    lam = 0 gives a pure Wiener process), horizon_T the physical horizon,
    grid_points the number of uniform observation points on [0, 1] in
    scaled time.
    """

    lam: float
    horizon_T: float
    grid_points: int = 2048

    def __post_init__(self) -> None:
        if not (self.lam >= 0.0 and np.isfinite(self.lam)):
            raise ValueError(f"lam must be finite and >= 0, got {self.lam}")
        if not (self.horizon_T > 0.0 and np.isfinite(self.horizon_T)):
            raise ValueError(f"horizon_T must be finite and > 0, got {self.horizon_T}")
        if int(self.grid_points) != self.grid_points or self.grid_points < 2:
            raise ValueError(f"grid_points must be an integer >= 2, got {self.grid_points}")


class ResetMark(NamedTuple):
    """Bookkeeping for one reset event on a SamplePath."""

    index: int  # position in SamplePath.times
    pre_reset_value: float  # left limit xi_T(tau-)
    post_reset_value: float  # stored right limit xi_T(tau)
    reset_ordinal: int  # n = nu(tau-), indexes zeta(n, .)


@dataclass(frozen=True)
class SamplePath:
    """A simulated scaled trajectory observed at its knot times.

    times includes 0, 1, and every reset instant; values[i] is the right
    limit xi_T(times[i]) (cadlag convention: at a reset the stored value is
    the post-reset one, the left limit lives in the mark).
    """

    times: np.ndarray
    values: np.ndarray
    reset_marks: tuple[ResetMark, ...] = ()

    def __post_init__(self) -> None:
        t, v = self.times, self.values
        if t.shape != v.shape or t.ndim != 1 or t.size < 2:
            raise ValueError("times/values must be 1-d arrays of equal length >= 2")
        if t[0] != 0.0 or t[-1] != 1.0 or v[0] != 0.0:
            raise ValueError("path must start at (0, 0) and end at time 1")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        for m in self.reset_marks:
            if not 0 < m.index < t.size:
                raise ValueError(f"reset mark index {m.index} out of range")

    def left_limits(self) -> np.ndarray:
        """Values with each reset knot replaced by its pre-reset left limit."""
        out = self.values.copy()
        for m in self.reset_marks:
            out[m.index] = m.pre_reset_value
        return out

    def __call__(self, t):
        """Linear interpolation between knots (observation-level semantics)."""
        return np.interp(t, self.times, self.values)


@dataclass(frozen=True)
class RngStream:
    """A named, reproducible random stream.

    Distinct stream_index values under one master_seed give statistically
    independent generators (numpy seeds the underlying SeedSequence with
    the pair, the recommended recipe for parallel streams).  Replica r of
    an estimator uses stream_index base + r, so results never depend on
    scheduling or worker count.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must fit in 64 unsigned bits")
        if self.stream_index < 0:
            raise ValueError("stream_index must be >= 0")

    def generator(self) -> np.random.Generator:
        return np.random.default_rng([self.master_seed, self.stream_index])

    def generator_at(self, k: int) -> np.random.Generator:
        """Generator for offset(k), skipping the intermediate dataclass."""
        return np.random.default_rng([self.master_seed, self.stream_index + k])

    def offset(self, k: int) -> "RngStream":
        return RngStream(self.master_seed, self.stream_index + k)


def _standard_normals(gen: np.random.Generator, n: int) -> np.ndarray:
    # seam for degenerate zero-noise tests
    return gen.standard_normal(n)


def _arrival_times(params: ProcessParams, gen: np.random.Generator) -> np.ndarray:
    """Scaled Poisson arrival times in (0, 1), exact exponential spacings."""
    lam, T = params.lam, params.horizon_T
    if lam == 0.0:
        return np.empty(0)
    # draw spacings in chunks until the cumulative sum passes T
    expected = lam * T
    chunk = max(16, int(expected + 6.0 * np.sqrt(expected) + 16))
    total = 0.0
    times: list[np.ndarray] = []
    while True:
        gaps = gen.exponential(1.0 / lam, size=chunk)
        csum = total + np.cumsum(gaps)
        if csum[-1] >= T:
            times.append(csum[csum < T])
            break
        times.append(csum)
        total = csum[-1]
    phys = np.concatenate(times) if times else np.empty(0)
    return phys / T


def sample_event_times(params: ProcessParams, rng: RngStream) -> np.ndarray:
    """Scaled reset arrival times tau_k/T for all arrivals in (0, T)."""
    return _arrival_times(params, rng.generator())


def _knot_times(params: ProcessParams, arrivals: np.ndarray, extra_times=None) -> np.ndarray:
    parts = [np.linspace(0.0, 1.0, params.grid_points), arrivals]
    if extra_times is not None:
        extra = np.asarray(extra_times, dtype=float)
        if extra.size and not (np.all(extra >= 0.0) and np.all(extra <= 1.0)):
            raise ValueError("extra_times must lie in [0, 1]")
        parts.append(extra)
    return np.unique(np.concatenate(parts))


def _simulate_from_arrivals(
    params: ProcessParams,
    kernel,
    gen: np.random.Generator,
    arrivals: np.ndarray,
    extra_times=None,
) -> SamplePath:
    """Assemble a path given already-drawn arrival times (see simulate_path)."""
    times = _knot_times(params, arrivals, extra_times)
    T = params.horizon_T

    dt = np.diff(times)
    z = _standard_normals(gen, dt.size)
    # scaled Gaussian increment: N(0, T*dt)/T = sqrt(dt/T) * z
    wiener = np.concatenate([[0.0], np.cumsum(np.sqrt(dt / T) * z)])

    if arrivals.size == 0:
        return SamplePath(times=times, values=wiener)

    arrival_idx = np.searchsorted(times, arrivals)
    drops = np.zeros(times.size)
    marks = []
    offset = 0.0
    for ordinal, idx in enumerate(arrival_idx):
        pre = wiener[idx] + offset
        zeta = kernel.sample(ordinal, pre * T, gen)
        if not np.isfinite(zeta):
            raise ValueError(f"kernel returned non-finite reset amount {zeta!r}")
        drop = zeta / T
        drops[idx] -= drop  # accumulate: coincident arrivals both land here
        offset -= drop
        marks.append(ResetMark(int(idx), float(pre), float(pre - drop), ordinal))
    values = wiener + np.cumsum(drops)
    return SamplePath(times=times, values=values, reset_marks=tuple(marks))


def simulate_path(params: ProcessParams, kernel, rng: RngStream, extra_times=None) -> SamplePath:
    """Simulate one scaled path xi_T on the grid union the reset times.

    Wiener increments between consecutive knots are exact: the physical
    increment over dt_phys = T*dt is N(0, dt_phys), scaled by 1/T.  At a
    reset instant with scaled pre-value x the kernel is sampled at the
    physical value x*T and the path drops by zeta/T.  The reset ordinal
    passed to the kernel is nu(tau-), i.e. 0, 1, 2, ... in time order.

    extra_times forces additional interior observation knots (estimators
    align knots with tube geometry this way).  It changes where the path
    is observed, never its law.
    """
    gen = rng.generator()
    arrivals = _arrival_times(params, gen)
    return _simulate_from_arrivals(params, kernel, gen, arrivals, extra_times)


def sup_statistic(params: ProcessParams, kernel, phi_of_T: float, rng: RngStream) -> float:
    """sup_t |xi(Tt)| / (sqrt(T) * phi(T)) over the observation knots.

    Equals sup|xi_T| * sqrt(T) / phi(T); the sup includes the left limits
    at reset instants.  phi_of_T is the already-evaluated phi(T) > 0.
    """
    if not phi_of_T > 0.0:
        raise ValueError(f"phi_of_T must be > 0, got {phi_of_T}")
    path = simulate_path(params, kernel, rng)
    peak = float(np.max(np.abs(path.values)))
    if path.reset_marks:
        peak = max(peak, max(abs(m.pre_reset_value) for m in path.reset_marks))
    return peak * np.sqrt(params.horizon_T) / phi_of_T
