"""Confidence intervals from an m-out-of-n bootstrap distribution."""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Dataset, as_statistic, empirical_quantile, mboot, normal_quantile
from .errors import EmptyDistribution, InsufficientReplicates, InvalidSubsampleSize, NonpositiveRate
from .rng import derive_seed, resolve_seed

SLOW_RATE_EXPONENT = 0.01
ESTIMATED_TAU_NOTE = (
    "tau estimated from the data; supplying a known convergence rate is preferable"
)


@dataclass(frozen=True)
class ScalingRate:
    """Convergence rate ``tau(n)``: either ``n**beta`` or an arbitrary positive callable."""

    beta: Optional[float] = None
    func: Optional[Callable[[float], float]] = field(default=None, compare=False)
    provenance: str = "user-supplied"

    def __post_init__(self):
        if (self.beta is None) == (self.func is None):
            raise ValueError("give exactly one of beta or func")

    @classmethod
    def power(cls, beta, provenance="user-supplied"):
        return cls(beta=float(beta), provenance=provenance)

    @classmethod
    def coerce(cls, tau):
        if tau is None or isinstance(tau, ScalingRate):
            return tau
        if isinstance(tau, (int, float)):
            return cls.power(tau)
        if callable(tau):
            return cls(func=tau)
        raise TypeError(f"cannot interpret {tau!r} as a scaling rate")

    @property
    def parametric(self):
        return self.beta is not None

    def __call__(self, n):
        if self.beta is not None:
            return float(n) ** self.beta
        return float(self.func(n))

    def describe(self):
        if self.beta is not None:
            return f"n^{self.beta!r}"
        return getattr(self.func, "__name__", "callable")


@dataclass
class ConfidenceInterval:
    lower: float
    upper: float
    level: float
    method: str
    n: int
    m: int
    tau_description: str = ""
    warnings: list = field(default_factory=list)

    @property
    def length(self):
        return self.upper - self.lower

    def contains(self, theta):
        return self.lower <= theta <= self.upper


def _check_level(level):
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    return 1.0 - level


def slow_rate_warning(tau, n):
    """Diagnostic when ``tau`` decreases or grows slower than ``n**0.01``.

    Probed on the doubling ``n -> 2n``; for ``tau = n**beta`` this reduces
    to ``beta < 0.01``. Returns ``None`` when the rate looks sane.
    """
    tau = ScalingRate.coerce(tau)
    if tau.parametric:
        slow = tau.beta < SLOW_RATE_EXPONENT
        shown = f"beta = {tau.beta:.4g}"
    else:
        a, b = tau(n), tau(2 * n)
        slow = not (a > 0 and b / a >= 2.0**SLOW_RATE_EXPONENT)
        shown = f"tau(2n)/tau(n) = {b / a if a else float('nan'):.4g}"
    if not slow:
        return None
    return (
        f"scaling rate grows slower than n^{SLOW_RATE_EXPONENT} ({shown}); "
        "the estimator is probably inconsistent and the interval unreliable"
    )


def _rates(dist, tau):
    tau = ScalingRate.coerce(tau)
    tm, tn = tau(dist.m), tau(dist.n)
    if not (tm > 0 and tn > 0):
        raise NonpositiveRate(f"tau must be positive, got tau(m)={tm}, tau(n)={tn}")
    return tau, tm, tn


def _replicates(dist):
    reps = np.asarray(dist.replicates, dtype=np.float64)
    if reps.size == 0:
        raise EmptyDistribution("bootstrap distribution has no replicates")
    return reps


def _warnings(tau, n):
    w = slow_rate_warning(tau, n)
    out = [w] if w else []
    if tau.provenance == "estimated":
        out.append(ESTIMATED_TAU_NOTE)
    return out


def ci_basic(dist, tau, level=0.95):
    """Basic subsampling interval ``[T_n - q(1-a/2)/tau(n), T_n - q(a/2)/tau(n)]``.

    ``q`` are empirical quantiles of ``tau(m) * (T*_i - T_n)``.
    """
    alpha = _check_level(level)
    reps = _replicates(dist)
    tau, tm, tn = _rates(dist, tau)
    scaled = tm * (reps - dist.t_n)
    q_hi = empirical_quantile(scaled, 1.0 - alpha / 2.0)
    q_lo = empirical_quantile(scaled, alpha / 2.0)
    return ConfidenceInterval(
        lower=dist.t_n - q_hi / tn,
        upper=dist.t_n - q_lo / tn,
        level=level,
        method="basic",
        n=dist.n,
        m=dist.m,
        tau_description=tau.describe(),
        warnings=_warnings(tau, dist.n),
    )


def ci_norm(dist, tau, level=0.95):
    """Normal interval ``T_n +- z * (tau(m)/tau(n)) * sd(T*)`` (sd with ``R-1``)."""
    alpha = _check_level(level)
    reps = _replicates(dist)
    if reps.size < 2:
        raise InsufficientReplicates("the normal interval needs at least 2 replicates")
    tau, tm, tn = _rates(dist, tau)
    sigma = (tm / tn) * float(np.std(reps, ddof=1))
    half = normal_quantile(1.0 - alpha / 2.0) * sigma
    return ConfidenceInterval(
        lower=dist.t_n - half,
        upper=dist.t_n + half,
        level=level,
        method="norm",
        n=dist.n,
        m=dist.m,
        tau_description=tau.describe(),
        warnings=_warnings(tau, dist.n),
    )


def ci_sherman(data, statistic, m, R=1000, level=0.95, seed=None, **options):
    """Interval centred on the statistic of the first ``m`` rows, with no rate scaling.

    The centre ``t_first`` uses rows ``0..m-1`` in ingestion order, so
    reordering the data moves the interval. Endpoints are
    ``t_first - q(1-a/2)`` and ``t_first - q(a/2)`` with ``q`` the quantiles
    of ``T*_i - t_first``. No rate appears; the price is a longer interval.
    """
    alpha = _check_level(level)
    data = Dataset.coerce(data)
    stat = as_statistic(statistic)
    m = int(m)
    if not stat.min_m <= m <= data.n:
        raise InvalidSubsampleSize(f"need {stat.min_m} <= m <= {data.n}, got {m}")
    seed = resolve_seed(seed)
    t_first = stat.eval(data, np.arange(m), **options)
    dist = mboot(data, stat, m, R=R, replace=False, seed=seed, **options)
    diffs = dist.replicates - t_first
    return ConfidenceInterval(
        lower=t_first - empirical_quantile(diffs, 1.0 - alpha / 2.0),
        upper=t_first - empirical_quantile(diffs, alpha / 2.0),
        level=level,
        method="sherman",
        n=data.n,
        m=m,
        tau_description="none",
    )


CI_TYPES = ("basic", "norm")


def mboot_ci(dist, level=0.95, tau=None, types="all", tau_options=None):
    """Intervals of the requested ``types`` ("all", "basic", "norm" or a list).

    Without ``tau`` the rate is estimated from the distribution's data by
    :func:`mboot.rate.estimate_tau` with its defaults; the intervals then
    carry a note that a known rate should be preferred.
    """
    if types == "all":
        wanted = list(CI_TYPES)
    elif isinstance(types, str):
        wanted = [types]
    else:
        wanted = list(types)
    unknown = [t for t in wanted if t not in CI_TYPES]
    if unknown:
        raise ValueError(f"unknown interval type(s) {unknown}; choose from {CI_TYPES} or 'all'")

    tau = ScalingRate.coerce(tau)
    if tau is None:
        from .rate import estimate_tau

        if dist.data is None or dist.statistic is None:
            raise ValueError("estimating tau needs the data and statistic behind the distribution")
        opts = {"R": dist.R, "replace": dist.replace, "seed": derive_seed(dist.seed, 1)}
        opts.update(tau_options or {})
        est = estimate_tau(dist.data, dist.statistic, **opts, **dist.options)
        tau = ScalingRate.power(est.beta, provenance="estimated")

    builders = {"basic": ci_basic, "norm": ci_norm}
    return [builders[t](dist, tau, level) for t in wanted]
