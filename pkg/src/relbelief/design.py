"""Smallest sample size that keeps both biases below chosen thresholds."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .binomial import BetaBinomial
from .locnorm import LocationNormal

FAMILIES = ("locnorm", "binomial")


@dataclass(frozen=True)
class DesignSpec:
    """What to control and how far.

    ``target`` is mu* for ``locnorm`` and theta* for ``binomial``. With
    ``family="binomial"`` and ``mode="max"`` (the default) the biases are the
    maxima over theta, which does not depend on ``target``. A threshold of
    ``None`` switches that bias off.
    """

    family: str
    params: dict = field(default_factory=dict)
    target: float = 0.0
    delta: float = 0.5
    max_against: float | None = 0.05
    max_favor: float | None = None
    n_max: int = 10_000
    mode: str = "max"
    grid: int = 401

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        for name in ("max_against", "max_favor"):
            t = getattr(self, name)
            if t is not None and not 0 < t <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {t}")
        if self.max_against is None and self.max_favor is None:
            raise ValueError("at least one threshold is required")
        if int(self.n_max) < 1:
            raise ValueError("n_max must be >= 1")
        if self.mode not in ("max", "pointwise"):
            raise ValueError("mode must be 'max' or 'pointwise'")
        if self.delta <= 0:
            raise ValueError("delta must be > 0")


@dataclass(frozen=True)
class DesignResult:
    n: int | None  # None when no n <= n_max meets the thresholds
    bias_against: float | None
    bias_favor: float | None
    evaluations: int

    @property
    def attainable(self) -> bool:
        return self.n is not None


def bias_functions(spec: DesignSpec) -> tuple[Callable[[int], float], Callable[[int], float]]:
    if spec.family == "locnorm":
        model = LocationNormal(**spec.params)
        return (lambda n: model.bias_against(spec.target, n)), (lambda n: model.bias_favor_delta(spec.target, spec.delta, n))
    model = BetaBinomial(**spec.params)
    if spec.mode == "pointwise":
        return (lambda n: model.bias_against(spec.target, n)), (lambda n: model.bias_favor(spec.target, spec.delta, n))
    return (
        lambda n: model.bias_against_curve(spec.grid, n).max,
        lambda n: model.bias_favor_curve(spec.delta, spec.grid, n).max,
    )


def find_min_n(spec: DesignSpec) -> DesignResult:
    """Forward doubling scan, bisection between the last failing and first passing
    sizes, then a downward walk until n - 1 fails.

    The bias curves are not assumed monotone in n: the answer is re-verified
    and n - 1 is always checked to fail.
    """
    against, favor = bias_functions(spec)
    cache: dict[int, tuple[float | None, float | None, bool]] = {}

    def check(n: int) -> bool:
        if n not in cache:
            a = float(against(n)) if spec.max_against is not None else None
            f = float(favor(n)) if spec.max_favor is not None else None
            ok = (a is None or a <= spec.max_against) and (f is None or f <= spec.max_favor)
            cache[n] = (a, f, ok)
        return cache[n][2]

    n_max = int(spec.n_max)
    lo, hi = 0, None  # lo fails (0 is a sentinel), hi passes
    n = 1
    while True:
        if check(n):
            hi = n
            break
        lo = n
        if n == n_max:
            break
        n = min(2 * n, n_max)
    if hi is None:
        return DesignResult(None, None, None, len(cache))
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if check(mid):
            hi = mid
        else:
            lo = mid
    while hi > 1 and check(hi - 1):
        hi -= 1
    assert check(hi) and (hi == 1 or not check(hi - 1))
    a, f, _ = cache[hi]
    return DesignResult(hi, a, f, len(cache))
