"""Command-line front end.

Every subcommand takes string flags, optionally layered over a key=value
config file (flags win; the RESET_LDP_SEED environment variable beats
both for the seed).  Failures print one machine-readable JSON object to
stderr: configuration problems exit 2, runtime estimation failures
exit 3.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import ConfigError, build_config, parse_config_file, run
from .rare_event import EstimationError


class _Parser(argparse.ArgumentParser):
    # route argparse's own failures through the JSON error path
    def error(self, message):
        raise ConfigError(message)


_SEED = ("--seed", "master seed (env RESET_LDP_SEED overrides)")
_WORKERS = ("--workers", "worker processes for the replica loop (default 1)")
_KERNEL = ("--kernel", "reset kernel: uniform, deterministic, or power:ALPHA")
_PATH = ("--path", "target path: linear:V, tent:PEAK_T,PEAK_V, or a t,v CSV file")
_LAMBDA = ("--lambda", "reset rate lambda >= 0 (default 0)")
_EPSILON = ("--epsilon", "tube half-width epsilon > 0")
_T_ONE = ("--T", "horizon T > 0")
_T_MANY = ("--T", "horizon grid, comma list (single value allowed)")
_N = ("--n", "replica count (default 10000)")
_GRID = ("--grid-points", "uniform knots per path (default 256; 2048 for simulate/sup-law)")
_METHOD = ("--method", "estimator: direct or importance")
_IS_MODE = ("--is-mode", "importance proposal: no-jump (default) or staircase")
_CSV = ("--csv", "write result rows to this CSV path")
_JSON = ("--json", "write the JSON summary to this path")
_SVG = ("--svg", "write the rate-curve SVG to this path")

_SUBCOMMANDS = [
    (
        "simulate",
        "draw one trajectory and write its knots and reset marks",
        [_T_ONE, _LAMBDA, _KERNEL, _GRID, _SEED, _CSV, _JSON],
    ),
    (
        "estimate",
        "estimate the probability of staying in a tube around a target path",
        [
            _PATH,
            _EPSILON,
            _T_ONE,
            _LAMBDA,
            _KERNEL,
            _N,
            _METHOD,
            _IS_MODE,
            _GRID,
            _SEED,
            _WORKERS,
            _CSV,
            _JSON,
            _SVG,
        ],
    ),
    (
        "rate",
        "evaluate the closed-form decay rate for a target path",
        [_PATH, _LAMBDA, _KERNEL, _JSON],
    ),
    (
        "validate-kernel",
        "check the density and bounded-jump conditions on probe points",
        [_KERNEL, ("--probes", "nonzero pre-reset probe values, comma list"), _JSON],
    ),
    (
        "converge",
        "run the estimator over a horizon grid and compare against the predicted rate",
        [
            _PATH,
            _EPSILON,
            _T_MANY,
            _LAMBDA,
            _KERNEL,
            _N,
            _METHOD,
            _IS_MODE,
            _GRID,
            _SEED,
            _WORKERS,
            _CSV,
            _JSON,
            _SVG,
        ],
    ),
    (
        "bound-check",
        "compare the Poisson lower-tail probability with its exponential bound",
        [_LAMBDA, ("--delta", "window start fraction in [0, 1)"), ("--c", "tail slope c >= 0"), _T_ONE, _CSV, _JSON],
    ),
    (
        "sup-law",
        "quantiles of the normalized running maximum over a horizon grid",
        [_LAMBDA, _KERNEL, ("--phi", "normalization: log or sqrt_loglog_times_g"), _T_MANY, _N, _GRID, _SEED, _CSV, _JSON],
    ),
]


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="reset-ldp",
        description="Simulation and rare-event toolkit for Wiener processes with random resetting.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    for name, blurb, options in _SUBCOMMANDS:
        p = sub.add_parser(name, help=blurb, description=blurb)
        p.add_argument("--config", help="key=value config file; flags override its entries")
        for flag, text in options:
            p.add_argument(flag, type=str, help=text)
    return parser


def _print_error(code: int, exc: Exception) -> None:
    payload = {"error": {"exit_code": code, "type": type(exc).__name__, "message": str(exc)}}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def _merge_negative_values(argv: list[str]) -> list[str]:
    """Join `--flag -1,...` into `--flag=-1,...`.

    argparse reads a leading '-' as an option marker, which would reject
    probe lists like -1000,-1,1,1000; merging keeps them as values.
    """
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (
            tok.startswith("--")
            and "=" not in tok
            and nxt is not None
            and len(nxt) > 1
            and nxt[0] == "-"
            and (nxt[1].isdigit() or nxt[1] == ".")
        ):
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(_merge_negative_values(sys.argv[1:] if argv is None else list(argv)))
        file_values = parse_config_file(ns.config) if ns.config else {}
        overrides = {
            key: value
            for key, value in vars(ns).items()
            if key not in ("experiment", "config") and value is not None
        }
        return run(build_config(ns.experiment, file_values, overrides))
    except EstimationError as exc:
        _print_error(3, exc)
        return 3
    except (ConfigError, ValueError, OSError) as exc:
        _print_error(2, exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
