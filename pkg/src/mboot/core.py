"""Resampling core: data containers, seeded m-out-of-n draws, and numeric kernels.

Quantiles follow the left-continuous inverse ECDF: with sorted values
``v(1) <= ... <= v(R)`` the ``p``-quantile is ``v(ceil(p*R))`` for ``p > 0``
and ``v(1)`` for ``p = 0``. Interval endpoints depend on this choice at the
bit level.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Optional

import numpy as np

from . import _kernels
from .errors import (
    DegenerateDesign,
    DimensionError,
    DomainError,
    EmptyDistribution,
    InvalidSubsampleSize,
    StatisticError,
)
from .rng import RngStream, resolve_seed


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered observations; row ``i`` is one data point of width ``d``.

    Row order is kept exactly as ingested, since some procedures (the
    Sherman interval, the first-observation estimator) read rows by position.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, order="C", copy=True)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise DimensionError(f"expected 1-D or 2-D data, got {arr.ndim}-D")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise EmptyDistribution("a data set needs at least one row and one column")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def coerce(cls, data):
        return data if isinstance(data, Dataset) else cls(data)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def d(self):
        return self.values.shape[1]

    @property
    def rows(self):
        return [tuple(float(v) for v in row) for row in self.values]

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(np.all(self.values == other.values))

    def __hash__(self):
        return hash(self.values.tobytes())


@dataclass(frozen=True)
class Statistic:
    """A real-valued statistic evaluated on a subset of rows.

    ``func(values, indices, **options)`` receives the full ``(n, d)`` array and
    the selected row positions. ``min_m`` is the smallest subsample size for
    which the statistic is defined; ``dims`` the number of columns it reads.
    """

    func: Callable[..., float]
    min_m: int = 3
    name: str = "statistic"
    dims: int = 1
    kernel: Optional[int] = field(default=None, repr=False, compare=False)

    def eval(self, data, indices, **options):
        data = Dataset.coerce(data)
        indices = np.asarray(indices, dtype=np.int64)
        if indices.size < self.min_m:
            raise InvalidSubsampleSize(
                f"{self.name} needs at least {self.min_m} rows, got {indices.size}"
            )
        return float(self.func(data.values, indices, **options))

    def __call__(self, data, indices, **options):
        return self.eval(data, indices, **options)


def as_statistic(statistic, min_m=3):
    if isinstance(statistic, Statistic):
        return statistic
    if callable(statistic):
        return Statistic(func=statistic, min_m=min_m, name=getattr(statistic, "__name__", "statistic"))
    raise TypeError(f"not a statistic: {statistic!r}")


@dataclass
class BootstrapDistribution:
    replicates: np.ndarray
    n: int
    m: int
    replace: bool
    t_n: float
    seed: int
    statistic_id: str
    data: Optional[Dataset] = field(default=None, repr=False, compare=False)
    statistic: Optional[Statistic] = field(default=None, repr=False, compare=False)
    options: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def R(self):
        return self.replicates.size


def _check_size(n, m, replace):
    if m < 1:
        raise InvalidSubsampleSize(f"subsample size must be >= 1, got {m}")
    if not replace and m > n:
        raise InvalidSubsampleSize(f"cannot draw {m} of {n} rows without replacement")


def draw_indices(n, m, replace, rng):
    """Row positions of one m-out-of-n draw from the substream ``rng``.

    Without replacement this is a partial Fisher-Yates shuffle, so every
    size-``m`` subset is equally likely; with replacement the positions are
    i.i.d. uniform on ``[0, n)``.
    """
    _check_size(n, m, replace)
    if not isinstance(rng, RngStream):
        raise TypeError("rng must be an RngStream")
    return _kernels.draw_one(
        np.uint64(rng.seed & (2**64 - 1)), np.uint64(rng.stream_index & (2**64 - 1)), n, m, bool(replace)
    )


def _full_statistic(stat, data, seed, options):
    idx = np.arange(data.n, dtype=np.int64)
    if stat.kernel is not None:
        return float(
            _kernels.evaluate_indices(stat.kernel, data.values, idx, np.uint64(seed), _kernels.FULL_DATA_STREAM)
        )
    return stat.eval(data, idx, **options)


def mboot(data, statistic, m, R=1000, replace=False, seed=None, **options):
    """Simulate the m-out-of-n bootstrap distribution of ``statistic``.

    Replicate ``i`` evaluates the statistic on the rows drawn from substream
    ``(seed, i)``, so the result is reproducible bit-for-bit for a given
    seed regardless of how many worker threads run.

    Parameters
    ----------
    data : array-like or Dataset
        One observation per row.
    statistic : Statistic or callable
        Callables are wrapped with ``min_m = 3``.
    m : int
        Subsample size.
    R : int
        Number of bootstrap replicates.
    replace : bool
        Draw with replacement. Sampling without replacement (subsampling)
        needs weaker conditions and is the default.
    seed : int, optional
        Master seed; a fresh one is drawn and recorded when omitted.
    **options
        Forwarded to user-defined statistics.

    Returns
    -------
    BootstrapDistribution
    """
    data = Dataset.coerce(data)
    stat = as_statistic(statistic)
    m = int(m)
    R = int(R)
    if R < 1:
        raise ValueError("R must be >= 1")
    _check_size(data.n, m, replace)
    if m < stat.min_m:
        raise InvalidSubsampleSize(f"m = {m} is below the minimum {stat.min_m} for {stat.name}")
    if data.d < stat.dims:
        raise DimensionError(f"{stat.name} needs {stat.dims} columns, data has {data.d}")
    seed = resolve_seed(seed)
    useed = np.uint64(seed)

    if stat.kernel is not None:
        if _kernels.use_scan(stat.kernel, data.n, m):
            col = data.values[:, 0]
            order = np.argsort(col, kind="stable")
            rank = np.empty(data.n, np.int64)
            rank[order] = np.arange(data.n)
            reps = _kernels.replicates(
                stat.kernel, data.values, np.ascontiguousarray(col[order]), rank,
                m, bool(replace), useed, R, _kernels.n_blocks(R),
            )
        else:
            reps = _kernels.replicates(
                stat.kernel, data.values, np.empty(0), np.empty(0, np.int64),
                m, bool(replace), useed, R, _kernels.n_blocks(R),
            )
        bad = np.flatnonzero(~np.isfinite(reps))
        if bad.size:
            raise StatisticError(int(bad[0]), "non-finite value")
    else:
        idx = _kernels.draw_matrix(useed, data.n, m, bool(replace), R, _kernels.n_blocks(R))
        reps = np.empty(R)
        for i in range(R):
            try:
                v = stat.eval(data, idx[i], **options)
            except Exception as exc:
                raise StatisticError(i, repr(exc)) from exc
            if not math.isfinite(v):
                raise StatisticError(i, f"non-finite value {v}")
            reps[i] = v

    return BootstrapDistribution(
        replicates=reps,
        n=data.n,
        m=m,
        replace=bool(replace),
        t_n=_full_statistic(stat, data, seed, options),
        seed=seed,
        statistic_id=stat.name,
        data=data,
        statistic=stat,
        options=dict(options),
    )


def _order_index(p, size):
    # 1-based rank ceil(p*size); rounding p*size first keeps e.g. 0.8*100 at 80
    if p <= 0:
        return 1
    return min(size, max(1, math.ceil(round(p * size, 9))))


def empirical_quantile(values, p):
    """Left-continuous inverse-ECDF quantile ``v(ceil(p*R))`` (``v(1)`` at ``p = 0``)."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise EmptyDistribution("quantile of an empty sample")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {p}")
    k = _order_index(p, v.size)
    return float(np.partition(v, k - 1)[k - 1])


def empirical_quantiles(values, ps):
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if v.size == 0:
        raise EmptyDistribution("quantile of an empty sample")
    return np.array([v[_order_index(p, v.size) - 1] for p in ps])


def ks_distance(a, b):
    """Two-sample Kolmogorov distance ``sup_x |F_a(x) - F_b(x)|``.

    Both ECDFs are right-continuous step functions, so the supremum is
    attained at one of the pooled sample points. The difference is formed
    from integer counts and divided once, so the result is correctly rounded.
    """
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise EmptyDistribution("Kolmogorov distance needs two nonempty samples")
    pooled = np.concatenate([a, b])
    ca = np.searchsorted(a, pooled, side="right").astype(np.int64)
    cb = np.searchsorted(b, pooled, side="right").astype(np.int64)
    # |ca/na - cb/nb| = |ca*nb - cb*na| / (na*nb), exact in integers
    diff = int(np.max(np.abs(ca * b.size - cb * a.size)))
    return diff / (a.size * b.size)


def linear_fit(x, y):
    """Ordinary least squares ``y ~ intercept + slope * x``; returns ``(slope, intercept)``.

    The normal equations are solved in exact rational arithmetic (every
    float is a rational) and each coefficient is rounded once, so the result
    is the correctly rounded least-squares fit. The callers fit a handful of
    log-log points, where the cost is negligible.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size or x.size < 2:
        raise ValueError("need two equally long samples with at least 2 points")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("linear_fit needs finite values")
    if np.all(x == x[0]):
        raise DegenerateDesign("x is constant")
    xs = [Fraction(v) for v in x.tolist()]
    ys = [Fraction(v) for v in y.tolist()]
    k = len(xs)
    sx, sy = sum(xs), sum(ys)
    sxx = sum(v * v for v in xs)
    sxy = sum(a * b for a, b in zip(xs, ys))
    den = k * sxx - sx * sx
    slope = (k * sxy - sx * sy) / den
    intercept = (sxx * sy - sx * sxy) / den
    return float(slope), float(intercept)


# Wichura (1988), algorithm AS 241 (PPND16); relative accuracy about 1e-16.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coef, x):
    acc = 0.0
    for c in reversed(coef):
        acc = acc * x + c
    return acc


def normal_quantile(p):
    """Standard normal quantile function."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"normal quantile needs 0 < p < 1, got {p}")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly(_A, r) / _poly(_B, r)
    r = math.sqrt(-math.log(min(p, 1.0 - p)))
    if r <= 5.0:
        r -= 1.6
        val = _poly(_C, r) / _poly(_D, r)
    else:
        r -= 5.0
        val = _poly(_E, r) / _poly(_F, r)
    return -val if q < 0 else val
