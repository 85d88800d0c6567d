"""Experiment orchestration: configuration, worker pools, artifact output.

A run is described by an ExperimentConfig, built from an optional
key=value config file plus command-line overrides (flags win, and the
RESET_LDP_SEED environment variable beats both for the seed).  run()
dispatches to the library, writes whatever CSV/JSON/SVG outputs were
requested, and prints a short deterministic summary to stdout.

Replica-level parallelism partitions the index range [0, n) into
contiguous chunks, one per worker, and concatenates the per-replica
results in index order.  Replicas are keyed by stream index alone, so
artifacts are byte-identical for any worker count.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, fields

import numpy as np

from .path_analysis import (
    TargetPath,
    TubeSpec,
    action_integral,
    jordan_decompose,
    parse_path_spec,
    total_variation,
)
from .plotting import plot_rate_curve
from .process_core import ProcessParams, RngStream, simulate_path
from .rare_event import (
    CSV_FIELDS,
    direct_mc_estimate,
    empirical_rate_curve,
    is_estimate,
    poisson_tail_bound,
    predicted_rate,
    sup_law_experiment,
)
from .reset_kernels import (
    ResetKernel,
    deterministic_zero_kernel,
    power_kernel,
    uniform_kernel,
    validate_kernel,
)

__all__ = ["ConfigError", "ExperimentConfig", "parse_config_file", "build_config", "run"]

EXPERIMENTS = (
    "simulate",
    "estimate",
    "rate",
    "validate-kernel",
    "converge",
    "bound-check",
    "sup-law",
)

BOUND_FIELDS = ("lambda", "delta", "c", "T", "exact_cdf", "bound", "holds")
SUP_FIELDS = ("T", "phi_value", "median", "q90")


class ConfigError(ValueError):
    """The experiment configuration is malformed or incomplete."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One fully resolved experiment invocation.

    grid_points is resolved per experiment when left unset: estimators
    default to 256 knots, raw simulation and the sup-law experiment to
    2048.  T holds a single horizon; T_grid a strictly increasing list
    (the CLI accepts a comma list under the one flag and routes it here).
    """

    experiment: str
    kernel: str = "uniform"
    path: str | None = None
    lam: float = 0.0
    epsilon: float | None = None
    T: float | None = None
    T_grid: tuple[float, ...] | None = None
    n_replicas: int = 10_000
    grid_points: int | None = None
    master_seed: int = 0
    workers: int = 1
    method: str = "direct"
    is_mode: str = "no-jump"
    phi: str = "log"
    probes: tuple[float, ...] = (-10.0, -1.0, 1.0, 10.0)
    delta: float = 0.0
    c: float | None = None
    csv: str | None = None
    json: str | None = None
    svg: str | None = None

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.lam < 0.0:
            raise ConfigError("lambda must be >= 0")
        if self.epsilon is not None and not self.epsilon > 0.0:
            raise ConfigError("epsilon must be > 0")
        if self.T is not None and not self.T > 0.0:
            raise ConfigError("T must be > 0")
        if self.T_grid is not None:
            if not self.T_grid or any(b <= a for a, b in zip(self.T_grid, self.T_grid[1:])):
                raise ConfigError("T grid must be nonempty and strictly increasing")
            if self.T_grid[0] <= 0.0:
                raise ConfigError("T grid values must be > 0")
        if self.n_replicas < 1:
            raise ConfigError("n must be >= 1")
        if self.grid_points is not None and self.grid_points < 2:
            raise ConfigError("grid-points must be >= 2")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.method not in ("direct", "importance"):
            raise ConfigError("method must be 'direct' or 'importance'")
        if self.is_mode not in ("no-jump", "staircase"):
            raise ConfigError("is-mode must be 'no-jump' or 'staircase'")
        if not 0.0 <= self.delta < 1.0:
            raise ConfigError("delta must lie in [0, 1)")
        if self.c is not None and self.c < 0.0:
            raise ConfigError("c must be >= 0")
        if not self.probes:
            raise ConfigError("probes must be nonempty")


# external key -> config field; hyphenated forms are normalized first
_ALIASES = {"lambda": "lam", "seed": "master_seed", "n": "n_replicas"}
_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}


def parse_config_file(path: str) -> dict[str, str]:
    """Read `key = value` lines; '#' starts a comment, blank lines skipped."""
    values: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key or not value:
                raise ConfigError(f"{path}:{lineno}: empty key or value")
            values[key] = value
    return values


def _normalize_keys(values, source: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for key, value in values.items():
        name = _ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
        if name not in _FIELD_NAMES:
            raise ConfigError(f"unknown {source} key {key!r}")
        out[name] = value
    return out


def _parse_float_list(text: str, what: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(","))
    except ValueError:
        raise ConfigError(f"{what} must be a comma-separated list of numbers, got {text!r}")


def build_config(experiment: str, file_values=None, overrides=None) -> ExperimentConfig:
    """Resolve file values, flag overrides, and the seed env var to a config.

    Precedence: RESET_LDP_SEED > flags > config file > defaults.  All
    values arrive as strings; this is the single place they are parsed,
    so the file and the command line accept exactly the same syntax.
    """
    merged = _normalize_keys(file_values or {}, "config-file")
    merged.update(_normalize_keys(overrides or {}, "flag"))
    merged.pop("experiment", None)  # the subcommand always wins
    env_seed = os.environ.get("RESET_LDP_SEED")
    if env_seed is not None:
        merged["master_seed"] = env_seed

    kwargs: dict = {"experiment": experiment}
    for name, text in merged.items():
        try:
            if name == "T":
                if "," in text:
                    kwargs["T_grid"] = _parse_float_list(text, "T")
                else:
                    kwargs["T"] = float(text)
            elif name == "T_grid":
                kwargs["T_grid"] = _parse_float_list(text, "T")
            elif name in ("lam", "epsilon", "delta", "c"):
                kwargs[name] = float(text)
            elif name in ("n_replicas", "grid_points", "master_seed", "workers"):
                kwargs[name] = int(text)
            elif name == "probes":
                kwargs[name] = _parse_float_list(text, "probes")
            else:
                kwargs[name] = text
        except ConfigError:
            raise
        except ValueError:
            raise ConfigError(f"bad value for {name!r}: {text!r}")
    return ExperimentConfig(**kwargs)


def _kernel_from_spec(spec: str) -> ResetKernel:
    if spec == "uniform":
        return uniform_kernel()
    if spec == "deterministic":
        return deterministic_zero_kernel()
    if spec.startswith("power:"):
        try:
            alpha = float(spec.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad power kernel spec {spec!r}; use power:ALPHA")
        return power_kernel(alpha)
    raise ConfigError(f"unknown kernel {spec!r}; use uniform, deterministic, or power:ALPHA")


def _require(config: ExperimentConfig, *names: str):
    values = []
    for name in names:
        value = getattr(config, name)
        if value is None:
            flag = {"T_grid": "T (comma list)", "lam": "lambda"}.get(name, name)
            raise ConfigError(f"experiment {config.experiment!r} requires --{flag}")
        values.append(value)
    return values[0] if len(values) == 1 else values


def _reject_outputs(config: ExperimentConfig, *names: str) -> None:
    for name in names:
        if getattr(config, name) is not None:
            raise ConfigError(f"experiment {config.experiment!r} does not write --{name}")


def _grid_points(config: ExperimentConfig) -> int:
    if config.grid_points is not None:
        return config.grid_points
    return 2048 if config.experiment in ("simulate", "sup-law") else 256


def _t_grid(config: ExperimentConfig) -> tuple[float, ...]:
    # grid experiments accept a single horizon as a one-point grid
    if config.T_grid is not None:
        return config.T_grid
    if config.T is not None:
        return (config.T,)
    raise ConfigError(f"experiment {config.experiment!r} requires --T")


def _chunk_bounds(first: int, last: int, workers: int) -> list[tuple[int, int]]:
    n = last - first
    k = min(workers, n)
    size, rem = divmod(n, k)
    bounds = []
    start = first
    for i in range(k):
        stop = start + size + (1 if i < rem else 0)
        bounds.append((start, stop))
        start = stop
    return bounds


@contextmanager
def _replica_mapper(workers: int):
    """Yield a replica-range mapper backed by a process pool (None if serial).

    The mapper contract matches rare_event._serial_map: results must be
    the concatenation of contiguous chunks in index order, which equals
    the single-range result because replicas are keyed by stream index.
    """
    if workers <= 1:
        yield None
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:

        def mapper(fn, first: int, last: int) -> np.ndarray:
            if last - first < workers:
                return fn(first, last)
            bounds = _chunk_bounds(first, last, workers)
            parts = pool.map(fn, (b[0] for b in bounds), (b[1] for b in bounds))
            return np.concatenate(list(parts))

        yield mapper


# ---------------------------------------------------------------------------
# artifact writers


def _write_text(path: str, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _summary_row(results, predicted: float) -> list:
    """Trailing converge row: the predicted asymptote in the estimate column.

    The final horizon's rate fields ride along for the comparison; CI and
    ess columns stay empty since no single run produced this row.
    """
    final = results[-1]
    return [
        "summary",
        final.T,
        final.epsilon,
        final.lam,
        final.kernel_name,
        final.n_replicas,
        predicted,
        None,
        None,
        final.empirical_rate,
        final.rate_lo,
        final.rate_hi,
        None,
        final.seed,
    ]


# ---------------------------------------------------------------------------
# experiment dispatch


def _run_simulate(config: ExperimentConfig) -> None:
    _reject_outputs(config, "svg")
    T = _require(config, "T")
    kernel = _kernel_from_spec(config.kernel)
    params = ProcessParams(config.lam, T, _grid_points(config))
    path = simulate_path(params, kernel, RngStream(config.master_seed))
    if config.csv:
        rows = [[t, v] for t, v in zip(path.times, path.values)]
        _write_text(config.csv, _csv_text(("t", "v"), rows))
    if config.json:
        _write_text(
            config.json,
            _json_text(
                {
                    "T": T,
                    "lambda": config.lam,
                    "kernel": kernel.name,
                    "grid_points": params.grid_points,
                    "seed": config.master_seed,
                    "times": path.times.tolist(),
                    "values": path.values.tolist(),
                    "resets": [
                        {
                            "index": m.index,
                            "pre": m.pre_reset_value,
                            "post": m.post_reset_value,
                            "ordinal": m.reset_ordinal,
                        }
                        for m in path.reset_marks
                    ],
                }
            ),
        )
    print(
        f"knots={path.times.size} resets={len(path.reset_marks)} "
        f"final={float(path.values[-1])!r} sup={float(np.max(np.abs(path.values)))!r}"
    )


def _run_estimate(config: ExperimentConfig) -> None:
    spec, epsilon, T = _require(config, "path", "epsilon", "T")
    center = parse_path_spec(spec)
    kernel = _kernel_from_spec(config.kernel)
    tube = TubeSpec(center, epsilon)
    params = ProcessParams(config.lam, T, _grid_points(config))
    rng = RngStream(config.master_seed)
    with _replica_mapper(config.workers) as mapper:
        if config.method == "direct":
            result = direct_mc_estimate(tube, params, kernel, config.n_replicas, rng, mapper)
        else:
            result = is_estimate(
                tube, params, kernel, config.n_replicas, rng, mode=config.is_mode, mapper=mapper
            )
    predicted = predicted_rate(center, config.lam, kernel)
    if config.csv:
        _write_text(config.csv, _csv_text(CSV_FIELDS, [result.to_csv_row()]))
    if config.json:
        _write_text(config.json, _json_text({"predicted_rate": predicted, "rows": [result.to_dict()]}))
    if config.svg:
        _write_text(config.svg, plot_rate_curve([result], predicted))
    flag = " (low ess)" if result.low_ess else ""
    print(
        f"estimate={result.estimate!r} ci=[{result.ci_low!r}, {result.ci_high!r}] "
        f"empirical_rate={result.empirical_rate!r} ess={result.ess!r}{flag}"
    )


def _run_rate(config: ExperimentConfig) -> None:
    _reject_outputs(config, "csv", "svg")
    spec = _require(config, "path")
    center = parse_path_spec(spec)
    kernel = _kernel_from_spec(config.kernel)
    pair = jordan_decompose(center)
    predicted = predicted_rate(center, config.lam, kernel)
    payload = {
        "path": spec,
        "lambda": config.lam,
        "kernel": kernel.name,
        "predicted_rate": predicted,
        "action_f_plus": action_integral(pair.f_plus),
        "action_f_minus": action_integral(pair.f_minus),
        "total_variation": total_variation(center),
    }
    if config.json:
        _write_text(config.json, _json_text(payload))
    print(f"predicted_rate={predicted!r}")


def _run_validate_kernel(config: ExperimentConfig) -> None:
    _reject_outputs(config, "csv", "svg")
    kernel = _kernel_from_spec(config.kernel)
    report = validate_kernel(kernel, config.probes)
    payload = dict(report.to_dict(), all_pass=report.all_pass())
    if config.json:
        _write_text(config.json, _json_text(payload))
    print(f"all_pass={report.all_pass()} measured_delta={report.measured_delta_label!r}")


def _run_converge(config: ExperimentConfig) -> None:
    spec, epsilon = _require(config, "path", "epsilon")
    T_grid = _t_grid(config)
    center = parse_path_spec(spec)
    kernel = _kernel_from_spec(config.kernel)
    rng = RngStream(config.master_seed)
    with _replica_mapper(config.workers) as mapper:
        results = empirical_rate_curve(
            center,
            config.lam,
            kernel,
            epsilon,
            T_grid,
            config.n_replicas,
            config.method,
            rng,
            grid_points=_grid_points(config),
            mode=config.is_mode,
            mapper=mapper,
        )
    predicted = predicted_rate(center, config.lam, kernel)
    summary = _summary_row(results, predicted)
    if config.csv:
        rows = [r.to_csv_row() for r in results] + [summary]
        _write_text(config.csv, _csv_text(CSV_FIELDS, rows))
    if config.json:
        payload = {
            "predicted_rate": predicted,
            "rows": [r.to_dict() for r in results],
            "summary": dict(zip(CSV_FIELDS, summary)),
        }
        _write_text(config.json, _json_text(payload))
    if config.svg:
        _write_text(config.svg, plot_rate_curve(results, predicted))
    for r in results:
        print(f"T={r.T:g} estimate={r.estimate!r} empirical_rate={r.empirical_rate!r}")
    gap = abs(results[-1].empirical_rate - predicted)
    print(f"predicted_rate={predicted!r} final_gap={gap!r}")


def _run_bound_check(config: ExperimentConfig) -> None:
    _reject_outputs(config, "svg")
    c, T = _require(config, "c", "T")
    check = poisson_tail_bound(config.lam, config.delta, c, T)
    row = [check.lam, check.delta, check.c, check.T, check.exact_cdf, check.bound, check.holds]
    if config.csv:
        _write_text(config.csv, _csv_text(BOUND_FIELDS, [row]))
    if config.json:
        _write_text(config.json, _json_text(check.to_dict()))
    print(f"holds={check.holds} exact_cdf={check.exact_cdf!r} bound={check.bound!r}")


def _run_sup_law(config: ExperimentConfig) -> None:
    _reject_outputs(config, "svg")
    T_grid = _t_grid(config)
    kernel = _kernel_from_spec(config.kernel)
    rows = sup_law_experiment(
        config.lam,
        kernel,
        config.phi,
        T_grid,
        config.n_replicas,
        RngStream(config.master_seed),
        grid_points=_grid_points(config),
    )
    if config.csv:
        _write_text(
            config.csv, _csv_text(SUP_FIELDS, [[r.T, r.phi_value, r.median, r.q90] for r in rows])
        )
    if config.json:
        _write_text(config.json, _json_text({"phi": config.phi, "rows": [r.to_dict() for r in rows]}))
    for r in rows:
        print(f"T={r.T:g} median={r.median!r} q90={r.q90!r}")


_DISPATCH = {
    "simulate": _run_simulate,
    "estimate": _run_estimate,
    "rate": _run_rate,
    "validate-kernel": _run_validate_kernel,
    "converge": _run_converge,
    "bound-check": _run_bound_check,
    "sup-law": _run_sup_law,
}


def run(config: ExperimentConfig) -> int:
    """Execute one experiment; returns 0 and writes the requested artifacts.

    Raises ConfigError (or ValueError from the library's own domain
    checks) for bad configuration and EstimationError for runtime
    estimation failures; the CLI maps those to exit codes 2 and 3.
    Workers parallelize the replica loops of estimate and converge;
    every other experiment is cheap or deterministic, and no output
    ever depends on the worker count.
    """
    _DISPATCH[config.experiment](config)
    return 0
