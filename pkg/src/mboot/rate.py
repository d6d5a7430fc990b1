"""Data-driven estimate of the rate exponent ``beta`` in ``tau(n) = n**beta``.

Subsample variances at several ``m_i = n**gamma_i`` decay like
``m**(-2 beta)``, so ``beta`` is minus half the slope of log-variance on
log-m. Quantile ranges are on the scale of a standard deviation and decay
like ``m**(-beta)``; for them ``beta`` is minus the slope. The answer depends strongly on the gamma range and there is no
setting that works for every estimator: (0.2, 0.5) suits the mean, while
max and xicor need (0.4, 0.8). Prefer an analytically known rate.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, as_statistic, empirical_quantiles, linear_fit, mboot
from .errors import DegenerateStatistic, EmptyDistribution, InsufficientGrid
from .intervals import SLOW_RATE_EXPONENT
from .rng import derive_seed, resolve_seed

DEFAULT_GAMMA = tuple(np.linspace(0.2, 0.7, 5))

# alpha_high_j = 0.75 + 0.05 j, alpha_low_j = 0.25 - 0.05 j, j = 0..4
_Q_HIGH = tuple((75 + 5 * j) / 100 for j in range(5))
_Q_LOW = tuple((25 - 5 * j) / 100 for j in range(5))


# exponent k in dispersion ~ m**(-k * beta)
_DECAY_POWER = {"variance": 2.0, "quantile": 1.0}


@dataclass
class TauEstimate:
    """Fitted rate exponent plus the ``(gamma, m, dispersion)`` grid behind it."""

    beta: float
    log_V_intercept: float
    grid: list
    method: str
    warnings: list = field(default_factory=list)

    @property
    def slope(self):
        """Slope of log dispersion on log m."""
        return -_DECAY_POWER[self.method] * self.beta


def quantile_range_dispersion(replicates):
    """Mean of the five inter-quantile ranges q(0.75+0.05j) - q(0.25-0.05j), j = 0..4."""
    reps = np.asarray(replicates, dtype=np.float64)
    if reps.size == 0:
        raise EmptyDistribution("no replicates")
    hi = empirical_quantiles(reps, _Q_HIGH)
    lo = empirical_quantiles(reps, _Q_LOW)
    return float(np.mean(hi - lo))


def gamma_grid(low, high, count=5):
    return tuple(np.linspace(low, high, count))


def subsample_grid(n, gamma, min_m=3):
    """``(gamma_i, m_i)`` with ``m_i = max(min_m, round(n**gamma_i))``, deduplicated on m.

    Sorted by m; a size reached by several gammas keeps the first gamma.
    """
    seen = {}
    for g in gamma:
        if not 0.0 < g < 1.0:
            raise ValueError(f"gamma values must lie in (0, 1), got {g}")
        m = min(n, max(int(min_m), int(math.floor(n**g + 0.5))))
        seen.setdefault(m, float(g))
    return [(seen[m], m) for m in sorted(seen)]


def fit_rate(sizes, dispersions, method="variance"):
    """Fit ``log dispersion = -k beta log m + c``; ``k`` is 2 for variances, 1 for ranges.

    Returns ``(beta, intercept, warnings)``.
    """
    sizes = np.asarray(sizes, dtype=np.float64)
    disp = np.asarray(dispersions, dtype=np.float64)
    warnings = []
    if np.all(disp <= 0):
        raise DegenerateStatistic("every subsample dispersion is zero")
    keep = disp > 0
    if not keep.all():
        warnings.append(
            "zero dispersion at m = "
            + ", ".join(str(int(m)) for m in sizes[~keep])
            + "; those grid points were dropped"
        )
    if np.unique(sizes[keep]).size < 2:
        raise InsufficientGrid("fewer than 2 grid points with positive dispersion")
    slope, intercept = linear_fit(np.log(sizes[keep]), np.log(disp[keep]))
    beta = -slope / _DECAY_POWER[method]
    if beta < SLOW_RATE_EXPONENT:
        warnings.append(
            f"estimated beta = {beta:.4g} < {SLOW_RATE_EXPONENT}: tau grows suspiciously slowly, "
            "the estimator may be inconsistent"
        )
    return beta, intercept, warnings


def estimate_tau(
    data,
    statistic,
    R=1000,
    replace=False,
    min_m=3,
    gamma=DEFAULT_GAMMA,
    method="variance",
    seed=None,
    **options,
):
    """Estimate ``beta`` in ``tau(n) = n**beta`` from subsample dispersions.

    Parameters
    ----------
    gamma : sequence of float
        Exponents giving the trial sizes ``m_i = n**gamma_i``; the default is
        five equidistant values from 0.2 to 0.7.
    method : {"variance", "quantile"}
        Dispersion measure: replicate variance (``R-1`` denominator) or the
        averaged quantile ranges of :func:`quantile_range_dispersion`.
    seed : int, optional
        Each grid point draws from its own seed derived from this one.

    Returns
    -------
    TauEstimate
    """
    if method not in ("variance", "quantile"):
        raise ValueError(f"method must be 'variance' or 'quantile', got {method!r}")
    data = Dataset.coerce(data)
    stat = as_statistic(statistic)
    seed = resolve_seed(seed)
    sizes = subsample_grid(data.n, gamma, max(min_m, stat.min_m))
    if len(sizes) < 2:
        raise InsufficientGrid(f"gamma grid yields fewer than 2 distinct sizes for n = {data.n}: {sizes}")

    grid = []
    for g, m in sizes:
        dist = mboot(data, stat, m, R=R, replace=replace, seed=derive_seed(seed, m), **options)
        if method == "variance":
            disp = float(np.var(dist.replicates, ddof=1)) if dist.R > 1 else 0.0
        else:
            disp = quantile_range_dispersion(dist.replicates)
        grid.append((g, m, disp))

    beta, intercept, warnings = fit_rate([g[1] for g in grid], [g[2] for g in grid], method)
    return TauEstimate(beta=beta, log_V_intercept=intercept, grid=grid, method=method, warnings=warnings)
