"""Resetting kernels zeta(n, x) and a numerical certifier of their conditions.

A kernel must keep every reset between the current position and the origin:
for x > 0 the reset amount lies in [0, x], for x < 0 in [x, 0], and
zeta(n, 0) = 0.  Kernels with a conditional density can additionally claim
a bound Delta >= 1 with

    1/(Delta |x|) <= density(y) <= Delta / |x|   for a.e. y in the support,

which validate_kernel checks numerically per probe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

__all__ = [
    "NoDensityError",
    "ResetKernel",
    "ValidationReport",
    "uniform_kernel",
    "deterministic_zero_kernel",
    "power_kernel",
    "validate_kernel",
]


class NoDensityError(ValueError):
    """Raised when a density is requested from a kernel that has none."""


class ResetKernel:
    """Base class; subclasses provide sample() and usually density().

    Attributes: name (short id used in CSV output), delta_bound (claimed
    Delta >= 1, or None when no bound is claimed), support_kind (one of
    "deterministic", "between-zero-and-x"), has_density.
    """

    name: str = "kernel"
    delta_bound: float | None = None
    support_kind: str = "between-zero-and-x"
    has_density: bool = True

    def density(self, n: int, x: float, y):
        raise NotImplementedError

    def sample(self, n: int, x: float, gen: np.random.Generator) -> float:
        raise NotImplementedError


class UniformResetKernel(ResetKernel):
    """zeta(n, x) uniform on the interval between 0 and x; Delta = 1."""

    name = "uniform"
    delta_bound = 1.0

    def density(self, n, x, y):
        y = np.asarray(y, dtype=float)
        if x == 0.0:
            raise ValueError("density undefined at x = 0 (point mass at 0)")
        lo, hi = min(0.0, x), max(0.0, x)
        return np.where((y >= lo) & (y <= hi), 1.0 / abs(x), 0.0)

    def sample(self, n, x, gen):
        return x * gen.random()


class DeterministicZeroKernel(ResetKernel):
    """Full reset to the origin: zeta(n, x) = x. No density exists."""

    name = "deterministic_zero"
    delta_bound = None
    support_kind = "deterministic"
    has_density = False

    def density(self, n, x, y):
        raise NoDensityError("deterministic kernel has no density")

    def sample(self, n, x, gen):
        return x


class PowerResetKernel(ResetKernel):
    """density(y) = (alpha+1) |y|^alpha / |x|^(alpha+1) on the support.

    alpha = 0 is the uniform kernel.  For alpha > 0 the density vanishes
    at y = 0 (lower B bound fails there); for alpha in (-1, 0) it blows up
    at y = 0 (upper bound fails).  The claimed delta_bound alpha + 1 for
    alpha >= 0 describes the top of the support only.
    """

    def __init__(self, alpha: float):
        if not (alpha > -1.0 and np.isfinite(alpha)):
            raise ValueError(f"power kernel needs alpha > -1, got {alpha}")
        self.alpha = float(alpha)
        self.name = f"power:{alpha:g}"
        self.delta_bound = alpha + 1.0 if alpha >= 0.0 else None

    def density(self, n, x, y):
        y = np.asarray(y, dtype=float)
        if x == 0.0:
            raise ValueError("density undefined at x = 0 (point mass at 0)")
        a = self.alpha
        lo, hi = min(0.0, x), max(0.0, x)
        inside = (y >= lo) & (y <= hi)
        with np.errstate(divide="ignore"):
            vals = (a + 1.0) * np.abs(y) ** a / abs(x) ** (a + 1.0)
        return np.where(inside, vals, 0.0)

    def sample(self, n, x, gen):
        # inverse CDF: |zeta/x| = U^(1/(alpha+1)), sign follows x
        return x * gen.random() ** (1.0 / (self.alpha + 1.0))


def uniform_kernel() -> ResetKernel:
    return UniformResetKernel()


def deterministic_zero_kernel() -> ResetKernel:
    return DeterministicZeroKernel()


def power_kernel(alpha: float) -> ResetKernel:
    return PowerResetKernel(alpha)


_PASS, _FAIL, _NA = "pass", "fail", "not_applicable"


@dataclass
class ValidationReport:
    """Outcome of validate_kernel; flags are "pass"/"fail"/"not_applicable".

    measured_delta is the smallest Delta that would satisfy both B bounds
    on the scanned grid (math.inf when no finite Delta works; rendered as
    "unbounded").  delta_upper and delta_lower are the one-sided versions,
    so e.g. a power kernel reports its finite top-of-support Delta even
    when the bound near y = 0 is hopeless.  worst_violation is
    (x, y, magnitude) for the largest excursion outside the claimed
    bounds, None when every claimed check passed.
    """

    kernel_name: str
    a0: str
    a_plus: str
    a_minus: str
    b_plus: str
    b_minus: str
    measured_delta: float
    delta_upper: float
    delta_lower: float
    worst_violation: tuple[float, float, float] | None
    quadrature_tolerance: float
    reasons: dict[str, str] = field(default_factory=dict)

    @property
    def measured_delta_label(self) -> str | float:
        return "unbounded" if math.isinf(self.measured_delta) else self.measured_delta

    def all_pass(self) -> bool:
        return all(
            flag in (_PASS, _NA)
            for flag in (self.a0, self.a_plus, self.a_minus, self.b_plus, self.b_minus)
        )

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel_name,
            "A0": self.a0,
            "A_plus": self.a_plus,
            "A_minus": self.a_minus,
            "B_plus": self.b_plus,
            "B_minus": self.b_minus,
            "measured_delta": self.measured_delta_label,
            "delta_upper": "unbounded" if math.isinf(self.delta_upper) else self.delta_upper,
            "delta_lower": "unbounded" if math.isinf(self.delta_lower) else self.delta_lower,
            "worst_violation": list(self.worst_violation) if self.worst_violation else None,
            "quadrature_tolerance": self.quadrature_tolerance,
            "reasons": self.reasons,
        }


def _integrates_to_one(kernel, n: int, x: float, tol: float) -> tuple[bool, float]:
    lo, hi = (0.0, x) if x > 0 else (x, 0.0)
    mid = 0.5 * (lo + hi)
    # split at the support midpoint; quad handles the endpoint singularity
    # of densities like |y|^alpha with alpha in (-1, 0)
    total = 0.0
    for a, b in ((lo, mid), (mid, hi)):
        val, _ = integrate.quad(
            lambda y: float(kernel.density(n, x, y)), a, b, epsabs=tol, epsrel=tol, limit=200
        )
        total += val
    # quadrature tolerance tol plus slack for the two-piece sum
    return abs(total - 1.0) <= max(10 * tol, 1e-12), total


def validate_kernel(
    kernel: ResetKernel,
    probe_xs,
    ns=(0, 1, 7),
    tol: float = 1e-9,
    scan_points: int = 10_000,
    n_samples: int = 10_000,
    rng=None,
) -> ValidationReport:
    """Numerically certify conditions A0, A+/-, B+/- on a probe set.

    For each probe (n, x): the density is integrated over the support to
    tolerance tol (A conditions), scanned on scan_points grid points plus
    the endpoints against the claimed Delta bounds (B conditions), and
    n_samples draws are checked for support containment.  Deterministic
    kernels skip density checks: A plus/minus hold by the sample-range
    check, B conditions fail with reason "no density".

    rng is an optional RngStream for the sampling checks; a fixed internal
    stream is used by default so reports are reproducible.
    """
    from .process_core import RngStream

    probe_xs = [float(x) for x in probe_xs]
    if not probe_xs:
        raise ValueError("probe_xs must be nonempty")
    if any(x == 0.0 for x in probe_xs):
        raise ValueError("probe_xs must be nonzero (x = 0 is the trivial point mass)")
    if not tol > 0.0:
        raise ValueError("tol must be > 0")
    gen = (rng or RngStream(0x5EED, 0)).generator()

    flags = {"a0": _PASS, "a_plus": _NA, "a_minus": _NA, "b_plus": _NA, "b_minus": _NA}
    reasons: dict[str, str] = {}
    worst: tuple[float, float, float] | None = None
    delta_upper = 0.0
    delta_lower = 0.0

    def fail(key: str, reason: str) -> None:
        flags[key] = _FAIL
        reasons.setdefault(key, reason)

    for n in ns:
        # A0: reset from the origin is exactly zero
        for _ in range(8):
            if kernel.sample(n, 0.0, gen) != 0.0:
                fail("a0", f"sample({n}, 0) != 0")
        for x in probe_xs:
            a_key = "a_plus" if x > 0 else "a_minus"
            b_key = "b_plus" if x > 0 else "b_minus"
            lo, hi = (0.0, x) if x > 0 else (x, 0.0)

            # sample containment (applies to every kernel)
            draws = np.array([kernel.sample(n, x, gen) for _ in range(n_samples)])
            if np.any(draws < lo) or np.any(draws > hi):
                fail(a_key, f"samples escape [{lo}, {hi}] at x={x}")
            elif flags[a_key] == _NA:
                flags[a_key] = _PASS

            if not kernel.has_density:
                fail(b_key, "no density")
                continue

            ok, total = _integrates_to_one(kernel, n, x, tol)
            if not ok:
                fail(a_key, f"density integrates to {total!r} at x={x}")

            grid = np.linspace(lo, hi, scan_points + 1)  # endpoints included
            with np.errstate(divide="ignore"):
                dens = np.asarray(kernel.density(n, x, grid), dtype=float)
            sup_d = float(np.max(dens))
            inf_d = float(np.min(dens))
            delta_upper = max(delta_upper, abs(x) * sup_d)
            delta_lower = max(delta_lower, math.inf if inf_d <= 0.0 else 1.0 / (abs(x) * inf_d))

            claimed = kernel.delta_bound
            if claimed is None:
                # no claim: the validator decides from the measured bound
                if not (np.all(np.isfinite(dens)) and inf_d > 0.0):
                    fail(b_key, f"unbounded near 0 at x={x}")
                elif flags[b_key] == _NA:
                    flags[b_key] = _PASS
                continue
            upper = claimed / abs(x)
            lower = 1.0 / (claimed * abs(x))
            slack = tol * max(upper, 1.0)
            over = dens - upper
            under = lower - dens
            viol = np.maximum(over, under)
            i = int(np.argmax(viol))
            if viol[i] > slack:
                mag = float(viol[i])
                side = "upper" if over[i] >= under[i] else "lower"
                fail(b_key, f"{side} bound violated at x={x}, y={grid[i]:.6g}")
                if worst is None or mag > worst[2]:
                    worst = (x, float(grid[i]), mag)
            elif flags[b_key] == _PASS or flags[b_key] == _NA:
                flags[b_key] = _PASS

    measured = max(delta_upper, delta_lower) if kernel.has_density else math.inf
    if not kernel.has_density:
        delta_upper = delta_lower = math.inf
    return ValidationReport(
        kernel_name=kernel.name,
        a0=flags["a0"],
        a_plus=flags["a_plus"],
        a_minus=flags["a_minus"],
        b_plus=flags["b_plus"],
        b_minus=flags["b_minus"],
        measured_delta=measured,
        delta_upper=delta_upper,
        delta_lower=delta_lower,
        worst_violation=worst,
        quadrature_tolerance=tol,
        reasons=reasons,
    )
