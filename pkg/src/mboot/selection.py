"""Data-driven choice of the subsample size m.

Three selectors are provided:

* ``bickel``: Kolmogorov distance between scaled replicate sets on the
  geometric grid ``m_j = ceil(q**j * n)``; cheap, O(R n), and the
  recommended default.
* ``goetze``: Kolmogorov distance between m and m/2 over every even m;
  O(R n**2).
* ``politis``: minimum volatility of the basic interval endpoints over at
  most ``max_grid`` candidates below n/2. It tends to pick m proportional to
  n, which breaks ``m/n -> 0`` and gives undercoverage.

Tie rules: bickel prefers the larger m (more data per subsample), goetze
and politis prefer the smaller m (keeps m/n small).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, as_statistic, ks_distance, mboot
from .errors import InsufficientGrid
from .intervals import ScalingRate, ci_basic
from .rng import derive_seed, resolve_seed


@dataclass
class MSelection:
    m: int
    method: str
    curve: list
    params: dict = field(default_factory=dict)


class _Scaled:
    """Cache of scaled replicate sets ``tau(m) * (T*_m - T_n)`` keyed by (m, repeat)."""

    def __init__(self, data, stat, tau, R, replace, seed, options):
        self.data, self.stat, self.tau = data, stat, tau
        self.R, self.replace, self.seed, self.options = R, replace, seed, options
        self._cache = {}

    def __call__(self, m, repeat=0):
        key = (m, repeat)
        if key not in self._cache:
            seed = derive_seed(self.seed, m, repeat)
            dist = mboot(self.data, self.stat, m, R=self.R, replace=self.replace, seed=seed, **self.options)
            self._cache[key] = self.tau(m) * (dist.replicates - dist.t_n)
        return self._cache[key]


def _setup(data, statistic, tau, min_m, seed):
    data = Dataset.coerce(data)
    stat = as_statistic(statistic)
    tau = ScalingRate.coerce(tau)
    if tau is None:
        raise ValueError("a scaling rate tau is required")
    return data, stat, tau, max(int(min_m), stat.min_m), resolve_seed(seed)


def bickel_grid(n, q=0.75, min_m=3):
    """Strictly decreasing ``ceil(q**j * n)``, j = 0, 1, ..., stopping below ``min_m``."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    grid = []
    j = 0
    while True:
        m = math.ceil(q**j * n - 1e-9)
        if m < min_m:
            break
        if not grid or m < grid[-1]:
            grid.append(m)
        j += 1
    return grid


def estimate_m_bickel(data, statistic, tau, R=1000, replace=False, min_m=3, q=0.75, seed=None, **options):
    """Bickel-Sakov selector: ``m_j`` minimising the distance to ``m_{j+1}``."""
    data, stat, tau, min_m, seed = _setup(data, statistic, tau, min_m, seed)
    grid = bickel_grid(data.n, q, min_m)
    if len(grid) < 2:
        raise InsufficientGrid(f"n = {data.n} gives fewer than 2 grid sizes >= {min_m} for q = {q}")
    scaled = _Scaled(data, stat, tau, R, replace, seed, options)
    curve = [(grid[j], ks_distance(scaled(grid[j]), scaled(grid[j + 1]))) for j in range(len(grid) - 1)]
    # grid is decreasing, so the first minimum is the largest m
    best = int(np.argmin([d for _, d in curve]))
    return MSelection(m=curve[best][0], method="bickel", curve=curve, params={"q": q, "grid": grid})


def goetze_candidates(n, min_m=3):
    return list(range(2 * min_m, n, 2))


def estimate_m_goetze(data, statistic, tau, R=1000, replace=False, min_m=3, repeats=1, seed=None, **options):
    """Goetze-Rackauskas selector: exhaustive search of even m against m/2.

    Every even m in ``[2 min_m, n-1]`` is tried, which costs O(R n**2).
    With ``repeats > 1`` each distance is averaged over independent
    resamplings; this damps but does not remove the scatter of the curve.
    """
    data, stat, tau, min_m, seed = _setup(data, statistic, tau, min_m, seed)
    if data.n < 4 * min_m:
        raise InsufficientGrid(f"goetze needs n >= 4 * min_m = {4 * min_m}, got n = {data.n}")
    cands = goetze_candidates(data.n, min_m)
    if not cands:
        raise InsufficientGrid("no even candidate sizes")
    scaled = _Scaled(data, stat, tau, R, replace, seed, options)
    curve = []
    for m in cands:
        d = np.mean([ks_distance(scaled(m, r), scaled(m // 2, r)) for r in range(repeats)])
        curve.append((m, float(d)))
    best = int(np.argmin([d for _, d in curve]))
    return MSelection(m=curve[best][0], method="goetze", curve=curve, params={"repeats": repeats})


def volatility_candidates(n, min_m=3, max_grid=50):
    """At most ``max_grid`` equidistant integers in ``[min_m, floor(n/2))``."""
    hi = n // 2 - 1
    if hi < min_m:
        return []
    if hi - min_m + 1 <= max_grid:
        return list(range(min_m, hi + 1))
    return sorted(set(int(v) for v in np.round(np.linspace(min_m, hi, max_grid))))


def running_mean(x, h):
    """Centred moving average over windows of ``2h+1``; output has ``len(x) - 2h`` entries."""
    x = np.asarray(x, dtype=np.float64)
    w = 2 * h + 1
    if x.size < w:
        return np.empty(0)
    return np.convolve(x, np.full(w, 1.0 / w), mode="valid")


def running_sd(x, h):
    """Centred moving standard deviation (``ddof=1``) over windows of ``2h+1``."""
    x = np.asarray(x, dtype=np.float64)
    w = 2 * h + 1
    if x.size < w:
        return np.empty(0)
    windows = np.lib.stride_tricks.sliding_window_view(x, w)
    return windows.std(axis=1, ddof=1)


def estimate_m_volatility(
    data,
    statistic,
    tau,
    R=1000,
    replace=False,
    min_m=3,
    h_ci=2,
    h_sigma=2,
    level=0.95,
    max_grid=50,
    seed=None,
    **options,
):
    """Politis-Romano-Wolf minimum-volatility selector.

    For each candidate m the basic interval is computed; both endpoint
    sequences are smoothed by a running mean (half-width ``h_ci``), and the
    volatility at m is the running standard deviation (half-width
    ``h_sigma``) of the smoothed lower endpoints plus that of the upper
    ones. Candidates lie below n/2.
    """
    data, stat, tau, min_m, seed = _setup(data, statistic, tau, min_m, seed)
    cands = volatility_candidates(data.n, min_m, max_grid)
    edge = h_ci + h_sigma
    if len(cands) < 2 * edge + 1:
        raise InsufficientGrid(
            f"{len(cands)} candidate sizes in [{min_m}, {data.n // 2}) are too few for h_ci={h_ci}, h_sigma={h_sigma}"
        )
    lower, upper = [], []
    for m in cands:
        dist = mboot(data, stat, m, R=R, replace=replace, seed=derive_seed(seed, m), **options)
        ci = ci_basic(dist, tau, level)
        lower.append(ci.lower)
        upper.append(ci.upper)
    vol = running_sd(running_mean(lower, h_ci), h_sigma) + running_sd(running_mean(upper, h_ci), h_sigma)
    admissible = cands[edge : len(cands) - edge]
    curve = [(m, float(v)) for m, v in zip(admissible, vol)]
    best = int(np.argmin(vol))
    return MSelection(
        m=admissible[best],
        method="politis",
        curve=curve,
        params={"h_ci": h_ci, "h_sigma": h_sigma, "level": level, "max_grid": max_grid, "candidates": cands},
    )


METHODS = {
    "bickel": estimate_m_bickel,
    "goetze": estimate_m_goetze,
    "politis": estimate_m_volatility,
}


def estimate_m(data, statistic, tau, R=1000, replace=False, min_m=3, method="bickel", params=None, seed=None, **options):
    """Dispatch to one of the selectors; ``params`` holds method-specific settings (e.g. ``q``)."""
    try:
        fn = METHODS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}") from None
    return fn(data, statistic, tau, R=R, replace=replace, min_m=min_m, seed=seed, **(params or {}), **options)


def sherman_m_bounds(n):
    """Rule-of-thumb range ``(ceil(sqrt(n)), floor(n**(2/3)))`` for the Sherman interval.

    Computed in integer arithmetic. For n = 5 the range is empty, (3, 2);
    every other n >= 4 gives ``low <= high``.
    """
    if n < 4:
        raise ValueError("n must be at least 4")
    r = math.isqrt(n)
    low = r if r * r == n else r + 1
    high = round(n ** (2.0 / 3.0))
    while high**3 > n * n:
        high -= 1
    while (high + 1) ** 3 <= n * n:
        high += 1
    return low, high
