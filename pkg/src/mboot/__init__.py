"""m-out-of-n bootstrap and subsampling confidence intervals.

Typical use::

    from mboot import mboot, mboot_ci, MEAN
    dist = mboot(x, MEAN, m=int(len(x) ** 0.5), seed=1)
    basic, norm = mboot_ci(dist, tau=0.5)
"""

from . import _kernels
from .core import (
    BootstrapDistribution,
    Dataset,
    Statistic,
    as_statistic,
    draw_indices,
    empirical_quantile,
    empirical_quantiles,
    ks_distance,
    linear_fit,
    mboot,
    normal_quantile,
)
from .errors import (
    DataFormatError,
    DegenerateDesign,
    DegenerateStatistic,
    DimensionError,
    DomainError,
    EmptyDistribution,
    InsufficientData,
    InsufficientGrid,
    InsufficientReplicates,
    InvalidSubsampleSize,
    MbootError,
    NonpositiveRate,
    StatisticError,
)
from .estimators import (
    LAMBDA_POIS,
    MAX,
    MEAN,
    MODELS,
    MU1,
    SHORTH,
    STATISTICS,
    XICOR,
    ModelSpec,
    generate,
    get_model,
    get_statistic,
    rpoisson,
    rpower,
    stat_lambda_pois,
    stat_max,
    stat_mean,
    stat_mu1,
    stat_shorth,
    stat_xicor,
)
from .intervals import ConfidenceInterval, ScalingRate, ci_basic, ci_norm, ci_sherman, mboot_ci, slow_rate_warning
from .rate import TauEstimate, estimate_tau
from .rng import RngStream, data_rng, derive_seed
from .selection import (
    MSelection,
    estimate_m,
    estimate_m_bickel,
    estimate_m_goetze,
    estimate_m_volatility,
    sherman_m_bounds,
)
from .simulate import StudyConfig, StudyResult, fit_m_scaling, run_study

_kernels.apply_thread_cap()

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
