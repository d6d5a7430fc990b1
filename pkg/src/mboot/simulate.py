"""Monte Carlo harness for coverage probability and rate-estimation studies.

A study fixes a data model, a rule for m, an interval method and a rate,
then repeats data generation and interval construction ``N`` times per
sample size. Repetition ``r`` at sample size ``n`` draws everything from
seeds derived from ``(seed, n, r)``, so results do not depend on the order
in which repetitions run or on how many workers run them.
"""

import math
import multiprocessing
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Optional, Union

import numpy as np

from .core import linear_fit, mboot
from .errors import DegenerateDesign
from .estimators import generate, get_model, get_statistic
from .intervals import ScalingRate, ci_basic, ci_norm, ci_sherman
from .rate import estimate_tau, gamma_grid
from .rng import data_rng, derive_seed
from .selection import METHODS as SELECTORS

CI_METHODS = ("basic", "norm", "sherman")


@dataclass
class StudyConfig:
    """One simulation study.

    ``m_rule`` is one of ``{"fixed": {"beta": b, "c": c}}`` (``m = floor(c n**b)``),
    ``{"explicit": m}``, or a selector name ``"bickel" | "goetze" | "politis"``
    (optionally ``{"selector": name, "params": {...}}``). ``tau`` is ``None``
    for the model's true rate, a number ``beta`` for ``n**beta``, a string
    ``"n^beta"``, or ``"estimate"``. ``kind="tau"`` runs repeated rate
    estimations instead of coverage.
    """

    model: str
    n_grid: list
    statistic: Optional[str] = None
    kind: str = "coverage"
    m_rule: Any = field(default_factory=lambda: {"fixed": {"beta": 0.5, "c": 1.0}})
    ci_method: str = "basic"
    tau: Any = None
    level: float = 0.95
    N: int = 10000
    R: int = 1000
    replace: bool = False
    seed: int = 0
    model_params: dict = field(default_factory=dict)
    gamma: Any = (0.2, 0.7, 5)
    tau_method: str = "variance"
    min_m: int = 3
    label: str = ""

    def __post_init__(self):
        self.n_grid = [int(n) for n in self.n_grid]
        if not self.n_grid or self.n_grid != sorted(self.n_grid):
            raise ValueError("n_grid must be a nonempty ascending list")
        if self.N < 1 or self.R < 1:
            raise ValueError("N and R must be >= 1")
        if self.kind not in ("coverage", "tau"):
            raise ValueError(f"unknown study kind {self.kind!r}")
        if self.ci_method not in CI_METHODS:
            raise ValueError(f"unknown interval method {self.ci_method!r}")
        if self.statistic is None:
            self.statistic = get_model(self.model).statistic
        get_statistic(self.statistic)
        _parse_rule(self.m_rule)

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown study keys: {sorted(extra)}")
        return cls(**d)

    def to_dict(self):
        return asdict(self)

    @property
    def spec(self):
        return get_model(self.model, **self.model_params)


@dataclass
class StudyResult:
    config: StudyConfig
    rows: list
    fit: Optional[tuple] = None


def _parse_rule(rule):
    """Normalise an m rule to ``(kind, payload)``."""
    if isinstance(rule, str):
        if rule not in SELECTORS:
            raise ValueError(f"unknown m selector {rule!r}")
        return "selector", {"method": rule, "params": {}}
    if isinstance(rule, dict) and len(rule) >= 1:
        if "fixed" in rule:
            f = rule["fixed"]
            return "fixed", {"beta": float(f["beta"]), "c": float(f.get("c", 1.0))}
        if "explicit" in rule:
            return "explicit", {"m": rule["explicit"]}
        if "selector" in rule:
            if rule["selector"] not in SELECTORS:
                raise ValueError(f"unknown m selector {rule['selector']!r}")
            return "selector", {"method": rule["selector"], "params": dict(rule.get("params", {}))}
    raise ValueError(f"cannot interpret m rule {rule!r}")


def describe_rule(rule):
    kind, p = _parse_rule(rule)
    if kind == "fixed":
        return f"{p['c']:g}*n^{p['beta']:.6g}"
    if kind == "explicit":
        return f"m={p['m']}"
    return p["method"]


def fixed_m(n, beta, c=1.0, min_m=1):
    """``floor(c * n**beta)`` clamped to ``[min_m, n]``; exact powers do not round down."""
    return int(min(n, max(min_m, math.floor(c * n**beta + 1e-9))))


def parse_tau(tau, model_spec=None):
    """``None`` -> the model's true rate; number or ``"n^b"`` -> ``n**b``; ``"estimate"`` passes through."""
    if tau is None:
        if model_spec is None:
            raise ValueError("no rate given and no model to take it from")
        return ScalingRate.power(model_spec.tau_beta)
    if isinstance(tau, ScalingRate):
        return tau
    if isinstance(tau, str):
        t = tau.strip()
        if t == "estimate":
            return "estimate"
        if t.startswith("n^"):
            return ScalingRate.power(_parse_number(t[2:]))
        return ScalingRate.power(_parse_number(t))
    return ScalingRate.power(float(tau))


def _parse_number(text):
    text = text.strip().strip("()")
    if "/" in text:
        num, den = text.split("/")
        return float(num) / float(den)
    return float(text)


def _gamma(cfg):
    g = cfg.gamma
    if isinstance(g, (list, tuple)) and len(g) == 3 and isinstance(g[2], int):
        return gamma_grid(g[0], g[1], g[2])
    return tuple(float(v) for v in g)


# ---------------------------------------------------------------------------
# one repetition


def _coverage_rep(cfg, n, r):
    spec = cfg.spec
    stat = get_statistic(cfg.statistic)
    data = generate(spec, n, data_rng(cfg.seed, n, r))
    min_m = max(cfg.min_m, stat.min_m)

    tau = parse_tau(cfg.tau, spec)
    if tau == "estimate":
        est = estimate_tau(data, stat, R=cfg.R, replace=cfg.replace, min_m=min_m,
                           gamma=_gamma(cfg), method=cfg.tau_method, seed=derive_seed(cfg.seed, n, r, 3))
        tau = ScalingRate.power(est.beta, provenance="estimated")

    kind, p = _parse_rule(cfg.m_rule)
    if kind == "fixed":
        m = fixed_m(n, p["beta"], p["c"], min_m)
    elif kind == "explicit":
        m = n if p["m"] == "n" else int(p["m"])
    else:
        sel = SELECTORS[p["method"]](data, stat, tau, R=cfg.R, replace=cfg.replace, min_m=min_m,
                                      seed=derive_seed(cfg.seed, n, r, 2), **p["params"])
        m = sel.m

    boot_seed = derive_seed(cfg.seed, n, r, 1)
    if cfg.ci_method == "sherman":
        ci = ci_sherman(data, stat, m, R=cfg.R, level=cfg.level, seed=boot_seed)
    else:
        dist = mboot(data, stat, m, R=cfg.R, replace=cfg.replace, seed=boot_seed)
        build = ci_basic if cfg.ci_method == "basic" else ci_norm
        ci = build(dist, tau, cfg.level)
    return ci.lower, ci.upper, m


def _tau_rep(cfg, n, r):
    stat = get_statistic(cfg.statistic)
    data = generate(cfg.spec, n, data_rng(cfg.seed, n, r))
    est = estimate_tau(data, stat, R=cfg.R, replace=cfg.replace, min_m=max(cfg.min_m, stat.min_m),
                       gamma=_gamma(cfg), method=cfg.tau_method, seed=derive_seed(cfg.seed, n, r, 3))
    return est.beta, float(bool(est.warnings and est.beta < 0.01)), 0.0


def _run_chunk(args):
    cfg, n, reps = args
    fn = _coverage_rep if cfg.kind == "coverage" else _tau_rep
    out = []
    for r in reps:
        try:
            out.append(fn(cfg, n, r))
        except Exception as exc:
            raise RuntimeError(f"study {cfg.label or cfg.model!r} failed at n={n}, repetition {r}: {exc}") from exc
    return out


def worker_cap(requested):
    """Clamp a requested worker count to ``MOONBOOT_THREADS`` when that is set."""
    requested = max(1, int(requested))
    raw = os.environ.get("MOONBOOT_THREADS")
    try:
        return min(requested, max(1, int(raw))) if raw else requested
    except ValueError:
        return requested


def _single_threaded():
    import numba

    numba.set_num_threads(1)


def _repetitions(cfg, n, workers):
    reps = list(range(cfg.N))
    if workers <= 1 or cfg.N < 2:
        return _run_chunk((cfg, n, reps))
    chunks = [reps[i::workers] for i in range(workers)]
    # spawn, not fork: forking after the OpenMP runtime started is unsafe.
    # Each process runs its compiled kernels on one thread to avoid oversubscription.
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx, initializer=_single_threaded) as pool:
        parts = list(pool.map(_run_chunk, [(cfg, n, c) for c in chunks]))
    out = [None] * cfg.N
    for c, part in zip(chunks, parts):
        for r, res in zip(c, part):
            out[r] = res
    return out


def coverage_summary(covered, N):
    cov = covered / N
    return {"covered": int(covered), "coverage": cov, "half_width": 1.96 * math.sqrt(cov * (1.0 - cov) / N)}


def run_study(config, workers=1):
    """Run a :class:`StudyConfig`; one result row per sample size.

    ``workers > 1`` spreads repetitions over that many processes (capped by
    ``MOONBOOT_THREADS``); results are identical for every worker count.
    """
    cfg = config if isinstance(config, StudyConfig) else StudyConfig.from_dict(config)
    workers = worker_cap(workers)
    theta = cfg.spec.true_theta
    rows = []
    for n in cfg.n_grid:
        start = time.perf_counter()
        res = np.array(_repetitions(cfg, n, workers), dtype=np.float64)
        row = {"n": n, "N": cfg.N}
        if cfg.kind == "coverage":
            lower, upper, ms = res[:, 0], res[:, 1], res[:, 2]
            row.update(coverage_summary(int(np.sum((lower <= theta) & (theta <= upper))), cfg.N))
            row.update(mean_length=float(np.mean(upper - lower)), mean_m=float(np.mean(ms)),
                       sd_m=float(np.std(ms, ddof=1)) if cfg.N > 1 else 0.0)
        else:
            beta = res[:, 0]
            row.update(beta_mean=float(np.mean(beta)), beta_sd=float(np.std(beta, ddof=1)) if cfg.N > 1 else 0.0,
                       warn_fraction=float(np.mean(res[:, 1])))
        row["elapsed"] = time.perf_counter() - start
        rows.append(row)

    fit = None
    if cfg.kind == "coverage" and _parse_rule(cfg.m_rule)[0] == "selector" and len(set(cfg.n_grid)) >= 2:
        fit = fit_m_scaling([(r["n"], r["mean_m"]) for r in rows])
    return StudyResult(config=cfg, rows=rows, fit=fit)


def estimate_coverage(interval, theta, N, seed=0):
    """Coverage of an arbitrary interval procedure.

    ``interval(seed)`` returns ``(lower, upper)`` for one repetition; it is
    called with seeds derived from ``(seed, r)``. Closed intervals count
    endpoints as covered.
    """
    covered = 0
    for r in range(N):
        lo, hi = interval(derive_seed(seed, r))
        covered += lo <= theta <= hi
    return coverage_summary(covered, N)


def fit_m_scaling(pairs):
    """Least-squares fit ``log m = log c + beta log n``; returns ``(c, beta)``."""
    pairs = list(pairs)
    if len({n for n, _ in pairs}) < 2:
        raise DegenerateDesign("need at least 2 distinct n")
    n = np.array([p[0] for p in pairs], dtype=np.float64)
    m = np.array([p[1] for p in pairs], dtype=np.float64)
    slope, intercept = linear_fit(np.log(n), np.log(m))
    return math.exp(intercept), slope


# ---------------------------------------------------------------------------
# desk-scale presets regenerating the published experiments


def _cov(label, model, n_grid, m_rule, **kw):
    kw.setdefault("N", 2000)
    return StudyConfig(model=model, n_grid=n_grid, m_rule=m_rule, label=label, **kw)


def presets():
    """Named desk-scale study lists: N = 2000 for coverage studies, 1000 for Goetze."""
    fixed = lambda b: {"fixed": {"beta": b, "c": 1.0}}  # noqa: E731
    fig2 = [
        _cov(f"fig2-{model}-beta={name}", model, [100, 300, 1000, 3000], fixed(b), seed=2)
        for model in ("norm-shorth", "xicor-linear")
        for name, b in (("1/2", 0.5), ("1/3", 1.0 / 3.0), ("3/4", 0.75))
    ]
    fig3 = [
        _cov(f"fig3-{model}-{sel}", model, [100, 200, 500] if sel == "goetze" else [100, 200, 500, 1000, 2000],
             sel, seed=3, N=1000 if sel == "goetze" else 2000)
        for model in ("unif-max", "norm-shorth", "xicor-linear", "power-mean")
        for sel in ("bickel", "goetze", "politis")
    ]
    fig4 = [
        _cov("fig4-max-basic", "unif-max", [100, 1000, 10000], fixed(0.5), seed=4),
        _cov("fig4-mean-norm", "power-mean", [100, 1000, 10000], fixed(2.0 / 3.0), ci_method="norm", seed=4),
    ]
    fig5 = [
        _cov("fig5-mean-moon", "power-mean", [100, 200, 500, 1000, 2000], fixed(2.0 / 3.0), seed=5),
        _cov("fig5-mean-noon", "power-mean", [100, 200, 500, 1000, 2000], {"explicit": "n"}, replace=True, seed=5),
        _cov("fig5-mean-bickel", "power-mean", [100, 200, 500, 1000, 2000], "bickel", seed=5),
    ]
    table2 = [
        StudyConfig(model=model, n_grid=[100, 500], kind="tau", gamma=list(g) + [5], tau_method=meth,
                    N=100, seed=6, label=f"table2-{meth}-{model}-{g[0]}-{g[1]}")
        for meth in ("variance", "quantile")
        for model in ("power-mean", "unif-max", "xicor-linear")
        for g in ((0.2, 0.5), (0.4, 0.8))
    ]
    violation = [
        _cov("violation-mu1", "power-mu1", [100, 1000], fixed(0.5), seed=7),
        _cov("violation-lambda", "poisson-lambda", [200, 2000, 5000], fixed(0.5), seed=7),
        StudyConfig(model="power-mu1", n_grid=[100, 500], kind="tau", N=100, seed=7, label="violation-tau-mu1"),
        StudyConfig(model="poisson-lambda", n_grid=[100, 500], kind="tau", N=100, seed=7, label="violation-tau-lambda"),
    ]
    return {"fig2": fig2, "fig3": fig3, "fig4": fig4, "fig5": fig5, "table2": table2, "violation": violation}


def load_studies(doc):
    """Studies from a parsed config document: a study, a list of them,
    ``{"studies": [...]}`` or ``{"preset": name}``."""
    if isinstance(doc, dict) and "preset" in doc:
        table = presets()
        if doc["preset"] not in table:
            raise ValueError(f"unknown preset {doc['preset']!r}; known: {', '.join(table)}")
        return table[doc["preset"]]
    if isinstance(doc, dict) and "studies" in doc:
        doc = doc["studies"]
    if isinstance(doc, dict):
        doc = [doc]
    if not isinstance(doc, list) or not doc:
        raise ValueError("config holds no studies")
    return [StudyConfig.from_dict(d) for d in doc]
