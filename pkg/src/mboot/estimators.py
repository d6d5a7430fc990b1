"""Reference statistics and the data-generating models they are tested on.

Every built-in statistic has the ``(values, indices)`` calling convention and
is backed by a compiled kernel, so :func:`mboot.core.mboot` can evaluate
replicates without Python overhead.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import Dataset, Statistic
from .errors import DimensionError, DomainError, EmptyDistribution, InsufficientData


def _prepare(values, indices, need=1):
    values = Dataset.coerce(values).values if not isinstance(values, np.ndarray) else values
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    values = np.ascontiguousarray(values, dtype=np.float64)
    idx = np.ascontiguousarray(indices, dtype=np.int64).ravel()
    if idx.size < need:
        if need > 1:
            raise InsufficientData(f"needs at least {need} selected rows, got {idx.size}")
        raise EmptyDistribution("empty selection")
    return values, idx


def _run(code, values, idx, tie_seed=0):
    return float(_kernels.evaluate_indices(code, values, idx, np.uint64(tie_seed), np.uint64(0)))


def stat_max(values, indices):
    values, idx = _prepare(values, indices)
    return _run(_kernels.STAT_MAX, values, idx)


def stat_mean(values, indices):
    values, idx = _prepare(values, indices)
    return _run(_kernels.STAT_MEAN, values, idx)


def stat_shorth(values, indices):
    """Tukey's shorth: mean of the shortest window holding ``ceil(k/2)`` sorted values.

    Among equally short windows the leftmost one wins.
    """
    values, idx = _prepare(values, indices)
    return _run(_kernels.STAT_SHORTH, values, idx)


def stat_xicor(values, indices, tie_seed=0):
    """Chatterjee's rank correlation of column 1 on column 0 (original, not bias-reduced).

    Without ties this is ``1 - 3 * sum|r[i+1] - r[i]| / (k**2 - 1)`` with ``r``
    the y-ranks taken in x-order. Ties in x are broken uniformly at random
    from the stream seeded by ``tie_seed``; ties in y use the general
    max-rank form of the coefficient.
    """
    values, idx = _prepare(values, indices)
    if values.shape[1] < 2:
        raise DimensionError("xicor needs two columns (x, y)")
    if idx.size < 2:
        raise InsufficientData("xicor needs at least 2 points")
    return _run(_kernels.STAT_XICOR, values, idx, tie_seed)


def stat_mu1(values, indices):
    """Value of the first selected row: unbiased for the mean, but inconsistent."""
    values, idx = _prepare(values, indices)
    return _run(_kernels.STAT_MU1, values, idx)


def stat_lambda_pois(values, indices):
    """``sum(x) - sum((x - mean)**2)``, i.e. ``k*mean - (k-1)*S**2`` for ``k`` rows.

    Unbiased for a Poisson rate but inconsistent.
    """
    values, idx = _prepare(values, indices, need=2)
    return _run(_kernels.STAT_LAMBDA, values, idx)


MAX = Statistic(stat_max, min_m=1, name="max", kernel=_kernels.STAT_MAX)
MEAN = Statistic(stat_mean, min_m=1, name="mean", kernel=_kernels.STAT_MEAN)
SHORTH = Statistic(stat_shorth, min_m=3, name="shorth", kernel=_kernels.STAT_SHORTH)
XICOR = Statistic(stat_xicor, min_m=3, name="xicor", dims=2, kernel=_kernels.STAT_XICOR)
MU1 = Statistic(stat_mu1, min_m=1, name="mu1", kernel=_kernels.STAT_MU1)
LAMBDA_POIS = Statistic(stat_lambda_pois, min_m=2, name="lambda-pois", kernel=_kernels.STAT_LAMBDA)

STATISTICS = {s.name: s for s in (MAX, MEAN, SHORTH, XICOR, MU1, LAMBDA_POIS)}


def get_statistic(name):
    try:
        return STATISTICS[name]
    except KeyError:
        raise KeyError(f"unknown statistic {name!r}; known: {', '.join(STATISTICS)}") from None


# ---------------------------------------------------------------------------
# samplers


def _as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.Generator(np.random.PCG64(rng))


def rpower(count, k=2.0, a=0.0, b=1.0, rng=None):
    """Draws with density ``(k+1) (x-a)**k / (b-a)**(k+1)`` on ``[a, b]``.

    Uses the inverse CDF ``a + (b-a) * U**(1/(k+1))``.
    """
    if not (k >= 0 and a < b and math.isfinite(a) and math.isfinite(b)):
        raise DomainError(f"invalid power-law parameters k={k}, a={a}, b={b}")
    u = _as_generator(rng).random(int(count))
    return a + (b - a) * u ** (1.0 / (k + 1.0))


def rpoisson(count, lam, rng=None):
    """Poisson draws by sequential search on the CDF (suitable for small ``lam``)."""
    if not lam > 0:
        raise DomainError(f"Poisson rate must be positive, got {lam}")
    u = _as_generator(rng).random(int(count))
    out = np.zeros(u.size, dtype=np.float64)
    p = math.exp(-lam)
    cdf = np.full(u.size, p)
    active = u > cdf
    k = 0
    while active.any():
        k += 1
        p *= lam / k
        out[active] = k
        cdf[active] += p
        active &= u > cdf
        if p == 0.0:
            break
    return out


@dataclass(frozen=True)
class ModelSpec:
    """A data model with the parameter an estimator targets and its true rate exponent."""

    name: str
    statistic: str
    true_theta: float
    tau_beta: float
    params: dict = field(default_factory=dict)


MODELS = {
    m.name: m
    for m in (
        ModelSpec("unif-max", "max", 1.0, 1.0, {"low": 0.0, "high": 1.0}),
        ModelSpec("norm-shorth", "shorth", 0.0, 1.0 / 3.0, {"mean": 0.0, "sd": 1.0}),
        ModelSpec("xicor-linear", "xicor", 0.3818147, 0.5, {"low": -1.0, "high": 1.0, "noise_sd": 0.5}),
        ModelSpec("power-mean", "mean", 0.75, 0.5, {"k": 2.0, "a": 0.0, "b": 1.0}),
        ModelSpec("power-mu1", "mu1", 0.75, 0.0, {"k": 2.0, "a": 0.0, "b": 1.0}),
        ModelSpec("poisson-lambda", "lambda-pois", 3.0, -0.5, {"lam": 3.0}),
    )
}


def get_model(model, **overrides):
    if isinstance(model, ModelSpec):
        spec = model
    else:
        try:
            spec = MODELS[model]
        except KeyError:
            raise KeyError(f"unknown model {model!r}; known: {', '.join(MODELS)}") from None
    if not overrides:
        return spec
    params = {**spec.params, **overrides}
    theta = params["lam"] if spec.name == "poisson-lambda" else spec.true_theta
    return ModelSpec(spec.name, spec.statistic, theta, spec.tau_beta, params)


def generate(model, n, rng):
    """Draw ``n`` observations from a named model (or a ``ModelSpec``)."""
    spec = get_model(model)
    g = _as_generator(rng)
    p = spec.params
    if spec.name == "unif-max":
        x = g.uniform(p["low"], p["high"], n)
    elif spec.name == "norm-shorth":
        x = g.normal(p["mean"], p["sd"], n)
    elif spec.name == "xicor-linear":
        x = g.uniform(p["low"], p["high"], n)
        y = x + g.normal(0.0, p["noise_sd"], n)
        return Dataset(np.column_stack([x, y]))
    elif spec.name in ("power-mean", "power-mu1"):
        x = rpower(n, p["k"], p["a"], p["b"], g)
    elif spec.name == "poisson-lambda":
        x = rpoisson(n, p["lam"], g)
    else:
        raise KeyError(f"no generator for model {spec.name!r}")
    return Dataset(x)
