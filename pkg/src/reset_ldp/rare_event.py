"""Tube-probability estimation and rate extraction.

Two estimators of P(xi_T in U_eps(f)): plain Monte Carlo with exact
Clopper-Pearson intervals, and an importance sampler that tilts the
Wiener part toward the rising component f+ of the target.  Both use the
Brownian-bridge survival factors from the bridge module, so neither has
grid bias: the estimates are unbiased for the continuous-path tube
probability at any grid resolution.

The importance sampler is stratified on the arrival count.  The no-jump
stratum conditions on zero Poisson arrivals (weight factor e^{-lam T})
and carries the Girsanov likelihood ratio for the drift; it realizes the
dominant large-deviation strategy and its empirical rate converges to
lam + action(f+).  At a fixed tube width, though, paths with one or two
small resets carry a non-negligible share of the tube probability, so a
completion stratum simulates the physical dynamics conditioned on at
least one arrival (constant weight 1 - e^{-lam T}).  The sum of the two
stratum means is unbiased for the full tube probability, which is what
makes direct and importance confidence intervals comparable.

Also here: the empirical rate curve over a horizon grid, the Poisson
lower-tail bound checker, and the sup-statistic quantile experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy import special, stats

from .bridge import tube_extra_knots, tube_hit_matrix, tube_hit_path
from .path_analysis import (
    TargetPath,
    TubeSpec,
    _check_sign,
    jordan_decompose,
    rate_deterministic_reset,
    rate_mixed,
    rate_negative,
    rate_positive,
    staircase_schedule,
)
from .process_core import (
    ProcessParams,
    ResetMark,
    RngStream,
    SamplePath,
    _arrival_times,
    _knot_times,
    _simulate_from_arrivals,
    _standard_normals,
    sup_statistic,
)
from .reset_kernels import NoDensityError

__all__ = [
    "EstimationError",
    "EstimateResult",
    "BoundCheck",
    "SupLawRow",
    "CSV_FIELDS",
    "direct_mc_estimate",
    "is_estimate",
    "predicted_rate",
    "empirical_rate_curve",
    "poisson_tail_bound",
    "sup_law_experiment",
]

CSV_FIELDS = (
    "method",
    "T",
    "epsilon",
    "lambda",
    "kernel",
    "n_replicas",
    "estimate",
    "ci_low",
    "ci_high",
    "empirical_rate",
    "rate_lo",
    "rate_hi",
    "ess",
    "seed",
)

# cap on floats held in one simulation batch, keeps memory flat
_BATCH_SCALARS = 2_000_000


def _serial_map(fn, first: int, last: int) -> np.ndarray:
    """Default replica-range executor: run the whole range in-process.

    Estimators accept a mapper with this signature so the CLI harness can
    fan contiguous index ranges out to worker processes.  Any mapper must
    return exactly concatenate(fn(a, b) for consecutive chunks [a, b)),
    which equals fn(first, last) because replicas are keyed by stream
    index alone.
    """
    return fn(first, last)


class EstimationError(RuntimeError):
    """An estimator could not produce a valid result for this input."""


@dataclass(frozen=True)
class EstimateResult:
    """One estimation run.

    empirical_rate is -(1/T) ln(estimate); a zero-hit run reports the
    one-sided lower bound -(1/T) ln(ci_high) there instead, so the field
    is always finite and conservative.  rate_lo/rate_hi map the
    probability CI through the same transform (rate_hi is inf when
    ci_low = 0).  ess is the effective sample size (Sum w)^2 / Sum w^2 of
    the replica weights; for direct Monte Carlo it equals n_replicas.
    """

    method: str
    T: float
    epsilon: float
    lam: float
    kernel_name: str
    n_replicas: int
    estimate: float
    ci_low: float
    ci_high: float
    empirical_rate: float
    rate_lo: float
    rate_hi: float
    ess: float
    seed: int

    @property
    def rate_ci(self) -> tuple[float, float]:
        return (self.rate_lo, self.rate_hi)

    @property
    def low_ess(self) -> bool:
        """True when the weight spread makes the CI unreliable (ESS < 100)."""
        return self.ess < 100.0

    def to_csv_row(self) -> list:
        return [
            self.method,
            self.T,
            self.epsilon,
            self.lam,
            self.kernel_name,
            self.n_replicas,
            self.estimate,
            self.ci_low,
            self.ci_high,
            self.empirical_rate,
            self.rate_lo,
            self.rate_hi,
            self.ess,
            self.seed,
        ]

    def to_dict(self) -> dict:
        return dict(zip(CSV_FIELDS, self.to_csv_row()))


@dataclass(frozen=True)
class BoundCheck:
    """Both sides of the Poisson lower-tail inequality at one grid point."""

    lam: float
    delta: float
    c: float
    T: float
    exact_cdf: float
    bound: float
    holds: bool

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "delta": self.delta,
            "c": self.c,
            "T": self.T,
            "exact_cdf": self.exact_cdf,
            "bound": self.bound,
            "holds": self.holds,
        }


@dataclass(frozen=True)
class SupLawRow:
    """Quantiles of the normalized running maximum at one horizon."""

    T: float
    phi_value: float
    median: float
    q90: float

    def to_dict(self) -> dict:
        return {"T": self.T, "phi_value": self.phi_value, "median": self.median, "q90": self.q90}


def _clopper_pearson(hits: int, n: int, level: float = 0.95) -> tuple[float, float]:
    alpha = 1.0 - level
    lo = 0.0 if hits == 0 else float(stats.beta.ppf(alpha / 2.0, hits, n - hits + 1))
    hi = 1.0 if hits == n else float(stats.beta.ppf(1.0 - alpha / 2.0, hits + 1, n - hits))
    return lo, hi


def _rates(estimate: float, ci_low: float, ci_high: float, T: float) -> tuple[float, float, float]:
    """(empirical_rate, rate_lo, rate_hi) from a probability and its CI."""
    # + 0.0 turns the -0.0 of ci_high = 1 into a plain zero
    rate_lo = -math.log(ci_high) / T + 0.0 if ci_high > 0.0 else math.inf
    rate_hi = -math.log(ci_low) / T + 0.0 if ci_low > 0.0 else math.inf
    empirical = -math.log(estimate) / T + 0.0 if estimate > 0.0 else rate_lo
    return empirical, rate_lo, rate_hi


def _ess(weights: np.ndarray) -> float:
    s2 = float(np.sum(weights**2))
    if s2 == 0.0:
        return 0.0
    return float(np.sum(weights)) ** 2 / s2


# ---------------------------------------------------------------------------
# direct Monte Carlo


def _flush_reset_free(gens, times, tube, params) -> np.ndarray:
    """Vectorized tube indicators for replicas that drew no arrivals.

    Each deferred replica still owns its generator; draw order per
    generator (normals, then interval uniforms) matches the scalar route
    exactly, so batching never changes any replica's outcome.
    """
    m = times.size - 1
    dt = np.diff(times)
    z = np.empty((len(gens), m))
    for i, gen in enumerate(gens):
        z[i] = _standard_normals(gen, m)
    values = np.concatenate(
        [np.zeros((len(gens), 1)), np.cumsum(z * np.sqrt(dt / params.horizon_T), axis=1)],
        axis=1,
    )
    uniforms = np.empty((len(gens), m))
    for i, gen in enumerate(gens):
        uniforms[i] = gen.random(m)
    return tube_hit_matrix(times, values, tube, uniforms, params.horizon_T)


def _direct_hits(
    tube: TubeSpec,
    params: ProcessParams,
    kernel,
    rng: RngStream,
    first: int,
    last: int,
) -> np.ndarray:
    """Hit indicators for replicas first..last-1 (replica r = stream offset r)."""
    extra = tube_extra_knots(tube)
    base_times = _knot_times(params, np.empty(0), extra)
    flush_rows = max(1, _BATCH_SCALARS // base_times.size)

    hits = np.zeros(last - first, dtype=bool)
    deferred_gens: list = []
    deferred_pos: list[int] = []

    def flush() -> None:
        if deferred_gens:
            out = _flush_reset_free(deferred_gens, base_times, tube, params)
            hits[deferred_pos] = out
            deferred_gens.clear()
            deferred_pos.clear()

    for pos, r in enumerate(range(first, last)):
        gen = rng.generator_at(r)
        arrivals = _arrival_times(params, gen)
        if arrivals.size == 0:
            deferred_gens.append(gen)
            deferred_pos.append(pos)
            if len(deferred_gens) >= flush_rows:
                flush()
            continue
        path = _simulate_from_arrivals(params, kernel, gen, arrivals, extra)
        uniforms = gen.random(path.times.size - 1)
        hits[pos] = tube_hit_path(path, tube, uniforms, params.horizon_T)
    flush()
    return hits


def direct_mc_estimate(
    tube: TubeSpec,
    params: ProcessParams,
    kernel,
    n_replicas: int,
    rng: RngStream,
    mapper=None,
) -> EstimateResult:
    """Plain Monte Carlo tube probability with a Clopper-Pearson 95% CI.

    Replica r runs on rng.offset(r), so the result is bit-identical under
    any partition of the replica range, and the hit indicator of each
    replica is monotone in epsilon at a fixed seed.
    """
    if n_replicas < 1:
        raise ValueError("n_replicas must be >= 1")
    run = mapper or _serial_map
    hits = run(partial(_direct_hits, tube, params, kernel, rng), 0, n_replicas)
    return _finalize_direct(tube, params, kernel, n_replicas, rng, int(hits.sum()))


def _finalize_direct(tube, params, kernel, n_replicas, rng, n_hits) -> EstimateResult:
    estimate = n_hits / n_replicas
    ci_low, ci_high = _clopper_pearson(n_hits, n_replicas)
    empirical, rate_lo, rate_hi = _rates(estimate, ci_low, ci_high, params.horizon_T)
    return EstimateResult(
        method="direct",
        T=params.horizon_T,
        epsilon=tube.epsilon,
        lam=params.lam,
        kernel_name=kernel.name,
        n_replicas=n_replicas,
        estimate=estimate,
        ci_low=ci_low,
        ci_high=ci_high,
        empirical_rate=empirical,
        rate_lo=rate_lo,
        rate_hi=rate_hi,
        ess=float(n_replicas),
        seed=rng.master_seed,
    )


# ---------------------------------------------------------------------------
# importance sampling


def _drift_profile(tube: TubeSpec, params: ProcessParams):
    """(times, u) with u the slope of f+ on each inter-knot interval."""
    times = _knot_times(params, np.empty(0), tube_extra_knots(tube))
    f_plus = jordan_decompose(tube.center).f_plus
    u = np.diff(f_plus(times)) / np.diff(times)
    return times, u


def _nojump_weighted_hits(
    tube: TubeSpec,
    params: ProcessParams,
    rng: RngStream,
    first: int,
    last: int,
) -> np.ndarray:
    """Per-replica weight*hit for the zero-arrival stratum.

    The proposal adds drift u = d/dt f+ to the Wiener part and suppresses
    arrivals.  The weight is the exact likelihood ratio
    exp(-Sum u_i dW_i - (T/2) Int u^2 dt) * exp(-lam T) with dW the raw
    physical noise increments; u is piecewise constant on the knot
    intervals, so the stochastic integral is a finite sum with no
    quadrature error.
    """
    T = params.horizon_T
    times, u = _drift_profile(tube, params)
    dt = np.diff(times)
    m = dt.size
    drift = np.concatenate([[0.0], np.cumsum(u * dt)])  # equals f+(times)
    noise_coef = u * np.sqrt(T * dt)  # turns z into Sum u_i dW_i
    log_const = -params.lam * T - 0.5 * T * float(np.sum(u**2 * dt))

    out = np.empty(last - first)
    rows = max(1, _BATCH_SCALARS // times.size)
    for start in range(first, last, rows):
        stop = min(start + rows, last)
        gens = [rng.generator_at(r) for r in range(start, stop)]
        z = np.empty((len(gens), m))
        for i, gen in enumerate(gens):
            z[i] = _standard_normals(gen, m)
        values = np.concatenate(
            [np.zeros((len(gens), 1)), np.cumsum(z * np.sqrt(dt / T), axis=1)], axis=1
        )
        values += drift
        uniforms = np.empty((len(gens), m))
        for i, gen in enumerate(gens):
            uniforms[i] = gen.random(m)
        hit = tube_hit_matrix(times, values, tube, uniforms, T)
        log_w = log_const - z @ noise_coef
        out[start - first : stop - first] = np.where(hit, np.exp(log_w), 0.0)
    return out


def _max_log_nojump_weight(tube: TubeSpec, params: ProcessParams) -> float:
    """Analytic sup of the no-jump log weight over tube-hitting paths.

    Abel summation turns -Sum u_i dW_i into a linear functional of the
    knot values, which the tube confines to boxes; optimizing each
    coordinate at its box edge bounds the weight.  Knots left of the
    window are unconstrained: a nonzero coefficient there makes the
    bound infinite (the caller caps the resulting CI at 1).
    """
    T = params.horizon_T
    times, u = _drift_profile(tube, params)
    dt = np.diff(times)
    a = tube.time_window[0]
    center = tube.center(times)
    total = -params.lam * T + 0.5 * T * float(np.sum(u**2 * dt))
    # -Sum u_i (x_{i+1}-x_i) = Sum_k c_k x_k with x_0 = 0 fixed
    coef = np.zeros(times.size)
    coef[1:-1] = u[1:] - u[:-1]
    coef[-1] = -u[-1]
    for k in range(1, times.size):
        c = coef[k]
        if c == 0.0:
            continue
        if times[k] < a:
            return math.inf
        total += T * c * (center[k] + math.copysign(tube.epsilon, c))
    return total


def _conditioned_arrivals(params: ProcessParams, gen: np.random.Generator) -> np.ndarray:
    """Scaled arrival times conditioned on at least one arrival in (0, T)."""
    lam, T = params.lam, params.horizon_T
    p_any = -math.expm1(-lam * T)
    first = 0.0
    while first == 0.0:  # u = 0 would put the arrival at time 0 exactly
        first = -math.log1p(-gen.random() * p_any) / lam
    times = [first]
    total = first
    chunk = max(16, int(lam * T + 6.0 * math.sqrt(lam * T) + 16))
    while True:
        gaps = gen.exponential(1.0 / lam, size=chunk)
        csum = total + np.cumsum(gaps)
        if csum[-1] >= T:
            times.append(csum[csum < T])
            break
        times.append(csum)
        total = csum[-1]
    phys = np.concatenate([np.atleast_1d(t) for t in times])
    return phys / T


def _jump_stratum_hits(
    tube: TubeSpec,
    params: ProcessParams,
    kernel,
    rng: RngStream,
    first: int,
    last: int,
) -> np.ndarray:
    """Hit indicators under the physical dynamics given nu(T) >= 1."""
    extra = tube_extra_knots(tube)
    hits = np.zeros(last - first, dtype=bool)
    for pos, r in enumerate(range(first, last)):
        gen = rng.generator_at(r)
        arrivals = _conditioned_arrivals(params, gen)
        path = _simulate_from_arrivals(params, kernel, gen, arrivals, extra)
        uniforms = gen.random(path.times.size - 1)
        hits[pos] = tube_hit_path(path, tube, uniforms, params.horizon_T)
    return hits


def _lognormal_ci(sample: np.ndarray, n: int) -> tuple[float, float, float]:
    """(mean, lo, hi): multiplicative delta-method CI for a weighted mean.

    The upper end is clipped to 1 (the target is a probability), never
    below the point estimate itself.
    """
    est = float(np.sum(sample)) / n
    if est <= 0.0:
        return 0.0, 0.0, 0.0
    sd = float(np.std(sample, ddof=1)) if n > 1 else 0.0
    rel = 1.96 * sd / (math.sqrt(n) * est)
    return est, est * math.exp(-rel), min(est * math.exp(rel), max(1.0, est))


def is_estimate(
    tube: TubeSpec,
    params: ProcessParams,
    kernel,
    n_replicas: int,
    rng: RngStream,
    mode: str = "no-jump",
    mapper=None,
) -> EstimateResult:
    """Importance-sampling tube probability for a nondecreasing-plus center.

    Default mode "no-jump": Girsanov drift toward f+ with the arrival
    count stratified as described in the module docstring; unbiased for
    P(xi_T in U_eps(f)).  Mode "staircase" instead forces one arrival per
    schedule interval of staircase_schedule(center, eps) and weighs with
    exact Poisson interval probabilities and kernel densities; it targets
    the probability of the tube restricted to that jump layout (a lower
    bound), and falls back to "no-jump" when the center is nondecreasing.

    The CI is a log-normal (delta-method) interval on the weighted mean,
    unreliable when ess < 100; a zero-hit no-jump stratum contributes the
    analytic weight bound times the Clopper-Pearson zero-hit envelope.
    """
    if n_replicas < 1:
        raise ValueError("n_replicas must be >= 1")
    _check_sign(tube.center, True, "is_estimate")
    if mode == "staircase":
        return _staircase_estimate(tube, params, kernel, n_replicas, rng, mapper)
    if mode != "no-jump":
        raise ValueError(f"unknown importance-sampling mode {mode!r}")

    run = mapper or _serial_map
    T = params.horizon_T
    n_jump = n_replicas // 2 if params.lam > 0.0 else 0
    n_nojump = n_replicas - n_jump

    weighted = run(partial(_nojump_weighted_hits, tube, params, rng), 0, n_nojump)
    est1, lo1, hi1 = _lognormal_ci(weighted, n_nojump)
    if est1 == 0.0:
        hi1 = math.exp(min(_max_log_nojump_weight(tube, params), 700.0))
        hi1 *= _clopper_pearson(0, n_nojump)[1]

    if n_jump > 0:
        hits2 = run(partial(_jump_stratum_hits, tube, params, kernel, rng), n_nojump, n_replicas)
        scale = -math.expm1(-params.lam * T)
        h2 = int(hits2.sum())
        est2 = scale * h2 / n_jump
        lo2, hi2 = (scale * b for b in _clopper_pearson(h2, n_jump))
        jump_weights = np.full(h2, scale)
    else:
        est2 = lo2 = hi2 = 0.0
        jump_weights = np.empty(0)

    estimate = est1 + est2
    ci_low = lo1 + lo2
    ci_high = min(hi1 + hi2, 1.0)
    empirical, rate_lo, rate_hi = _rates(estimate, ci_low, ci_high, T)
    return EstimateResult(
        method="importance",
        T=T,
        epsilon=tube.epsilon,
        lam=params.lam,
        kernel_name=kernel.name,
        n_replicas=n_replicas,
        estimate=estimate,
        ci_low=ci_low,
        ci_high=ci_high,
        empirical_rate=empirical,
        rate_lo=rate_lo,
        rate_hi=rate_hi,
        ess=_ess(np.concatenate([weighted[weighted > 0.0], jump_weights])),
        seed=rng.master_seed,
    )


def _staircase_weighted_hits(
    tube: TubeSpec,
    params: ProcessParams,
    kernel,
    rng: RngStream,
    first: int,
    last: int,
) -> np.ndarray:
    """Per-replica weight*hit with one forced reset per schedule segment."""
    schedule = staircase_schedule(tube.center, tube.epsilon)
    T = params.horizon_T
    lam = params.lam
    extra = tube_extra_knots(tube)
    seg_left = schedule.knots[:-1]
    seg_len = np.diff(schedule.knots)
    w_lo, w_hi = np.array(schedule.jump_windows).T  # coefficients of T
    n_jumps = seg_len.size
    log_time_lr = float(np.sum(np.log(lam * T * seg_len))) - lam * T
    f_plus = jordan_decompose(tube.center).f_plus

    weighted = np.empty(last - first)
    for pos, r in enumerate(range(first, last)):
        gen = rng.generator_at(r)
        jump_times = seg_left + gen.random(n_jumps) * seg_len
        zetas = w_lo + gen.random(n_jumps) * (w_hi - w_lo)  # scaled drops
        times = _knot_times(params, jump_times, extra)
        dt = np.diff(times)
        z = _standard_normals(gen, dt.size)
        wiener = np.concatenate([[0.0], np.cumsum(np.sqrt(dt / T) * z)])
        fp = f_plus(times)
        values = wiener + fp
        u = np.diff(fp) / dt
        log_w = log_time_lr - float(np.sum(u * np.sqrt(T * dt) * z)) - 0.5 * T * float(
            np.sum(u**2 * dt)
        )
        idx = np.searchsorted(times, jump_times)
        marks = []
        ok = True
        for j, (i, zeta) in enumerate(zip(idx, zetas)):
            pre = values[i]
            try:
                dens = float(kernel.density(j, pre * T, zeta * T))
            except (NoDensityError, ValueError):
                ok = False
                break
            if dens <= 0.0:
                ok = False
                break
            # proposal density of the physical drop is 1/(T * window width)
            log_w += math.log(dens * (w_hi[j] - w_lo[j]) * T)
            values[i:] -= zeta
            marks.append(ResetMark(int(i), float(pre), float(pre - zeta), j))
        if not ok:
            weighted[pos] = 0.0
            continue
        path = SamplePath(times=times, values=values, reset_marks=tuple(marks))
        uniforms = gen.random(dt.size)
        hit = tube_hit_path(path, tube, uniforms, T)
        weighted[pos] = math.exp(log_w) if hit else 0.0
    return weighted


def _staircase_estimate(tube, params, kernel, n_replicas, rng, mapper=None) -> EstimateResult:
    schedule = staircase_schedule(tube.center, tube.epsilon)
    if schedule.empty:
        return is_estimate(tube, params, kernel, n_replicas, rng, mode="no-jump", mapper=mapper)
    if not kernel.has_density:
        raise EstimationError("staircase mode needs a reset kernel with a density")
    run = mapper or _serial_map
    T = params.horizon_T
    weighted = run(partial(_staircase_weighted_hits, tube, params, kernel, rng), 0, n_replicas)
    est, lo, hi = _lognormal_ci(weighted, n_replicas)
    if est == 0.0:
        hi = 1.0  # no analytic envelope in this mode; CI stays vacuous
    empirical, rate_lo, rate_hi = _rates(est, lo, hi, T)
    return EstimateResult(
        method="importance",
        T=T,
        epsilon=tube.epsilon,
        lam=params.lam,
        kernel_name=kernel.name,
        n_replicas=n_replicas,
        estimate=est,
        ci_low=lo,
        ci_high=hi,
        empirical_rate=empirical,
        rate_lo=rate_lo,
        rate_hi=rate_hi,
        ess=_ess(weighted[weighted > 0.0]),
        seed=rng.master_seed,
    )


# ---------------------------------------------------------------------------
# rate curve, tail bound, sup law


def predicted_rate(f: TargetPath, lam: float, kernel) -> float:
    """The closed-form asymptote matching f's sign pattern and the kernel."""
    if getattr(kernel, "support_kind", None) == "deterministic":
        return rate_deterministic_reset(f, lam)
    if np.all(f.values >= 0.0):
        return rate_positive(f, lam)
    if np.all(f.values <= 0.0):
        return rate_negative(f, lam)
    return rate_mixed(f, lam)


def empirical_rate_curve(
    f: TargetPath,
    lam: float,
    kernel,
    epsilon: float,
    T_grid,
    n_replicas: int,
    method: str,
    rng: RngStream,
    grid_points: int = 256,
    mode: str = "no-jump",
    mapper=None,
) -> list[EstimateResult]:
    """One tube estimate per horizon in T_grid (strictly increasing).

    Each horizon uses a disjoint block of replica streams, so runs are
    independent across rows.  The predicted asymptote for the summary
    row comes from predicted_rate(f, lam, kernel).
    """
    T_grid = [float(t) for t in T_grid]
    if any(b <= a for a, b in zip(T_grid, T_grid[1:])) or not T_grid:
        raise ValueError("T_grid must be nonempty and strictly increasing")
    if method not in ("direct", "importance"):
        raise ValueError(f"method must be 'direct' or 'importance', got {method!r}")
    tube = TubeSpec(f, epsilon)
    results = []
    for i, T in enumerate(T_grid):
        params = ProcessParams(lam, T, grid_points)
        block = rng.offset(i * n_replicas)
        if method == "direct":
            results.append(direct_mc_estimate(tube, params, kernel, n_replicas, block, mapper))
        else:
            results.append(
                is_estimate(tube, params, kernel, n_replicas, block, mode=mode, mapper=mapper)
            )
    return results


def poisson_tail_bound(lam: float, delta: float, c: float, T: float) -> BoundCheck:
    """Check P(nu(T) - nu(delta T) <= cT) <= exp{-lam(1-d)T + lam(1-d)cT - Tc ln c}.

    The left side is the Poisson(lam (1-delta) T) CDF at floor(cT),
    summed in log space; c ln c is extended by continuity to 0 at c = 0.
    """
    if lam < 0.0 or not 0.0 <= delta < 1.0 or c < 0.0 or T <= 0.0:
        raise ValueError("need lam >= 0, 0 <= delta < 1, c >= 0, T > 0")
    mu = lam * (1.0 - delta) * T
    k = math.floor(c * T)
    if mu == 0.0:
        exact = 1.0
    else:
        j = np.arange(k + 1)
        exact = float(np.exp(special.logsumexp(j * math.log(mu) - special.gammaln(j + 1)) - mu))
        exact = min(exact, 1.0)
    c_ln_c = c * math.log(c) if c > 0.0 else 0.0
    bound = math.exp(-mu + mu * c - T * c_ln_c)
    return BoundCheck(lam, delta, c, T, exact, bound, exact <= bound)


_PHI_CHOICES = {
    # named normalizations phi(T); each must outgrow sqrt(ln ln T)
    "log": lambda T: math.log(T),
    "sqrt_loglog_times_g": lambda T: math.log(math.log(T)) ** 1.5,
}


def sup_law_experiment(
    lam: float,
    kernel,
    phi: str,
    T_grid,
    n_replicas: int,
    rng: RngStream,
    grid_points: int = 2048,
) -> list[SupLawRow]:
    """Median and 0.9-quantile of sup|xi(Tt)|/(sqrt(T) phi(T)) per horizon.

    phi is a named choice; both built-ins grow strictly faster than
    sqrt(ln ln T), the hypothesis under which the normalized sup tends
    to 0.  Horizons must exceed e so the normalizations are positive.
    """
    if phi not in _PHI_CHOICES:
        raise ValueError(
            f"phi must be one of {sorted(_PHI_CHOICES)} (growth faster than sqrt(ln ln T)); "
            f"got {phi!r}"
        )
    phi_fn = _PHI_CHOICES[phi]
    rows = []
    for i, T in enumerate(T_grid):
        T = float(T)
        if T <= math.e:
            raise ValueError(f"horizons must exceed e for the named phi choices, got {T}")
        phi_value = phi_fn(T)
        params = ProcessParams(lam, T, grid_points)
        vals = np.empty(n_replicas)
        for r in range(n_replicas):
            vals[r] = sup_statistic(params, kernel, phi_value, rng.offset(i * n_replicas + r))
        rows.append(
            SupLawRow(
                T=T,
                phi_value=phi_value,
                median=float(np.quantile(vals, 0.5)),
                q90=float(np.quantile(vals, 0.9)),
            )
        )
    return rows
