"""Confidence procedures for the uniform (submarine) model and the normal-model t interval."""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import betainc

from coverage_forecast.constants import SD_HALF_WIDTH_FACTOR
from coverage_forecast.exceptions import UnboundedIntervalError
from coverage_forecast.model import Interval, UniformDesign

logger = logging.getLogger(__name__)

T_QUANTILE_TOLERANCE = 1e-10


@dataclass(frozen=True)
class SubmarineSample:
    """A pair of bubble positions from a uniform design."""

    x1: float
    x2: float
    design: UniformDesign

    def __post_init__(self):
        support = self.design.support()
        slack = 1e-12 * max(1.0, abs(self.design.theta) + self.design.half_width)
        for x in (self.x1, self.x2):
            if not support.lower - slack <= x <= support.upper + slack:
                raise ValueError(f"Sample {x} lies outside the design window {support}")

    @property
    def mean(self) -> float:
        """Sample mean x-bar."""
        return 0.5 * (self.x1 + self.x2)

    @property
    def spread(self) -> float:
        """Distance d between the two observations."""
        return abs(self.x1 - self.x2)


def np_bounds(x1: np.ndarray, x2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Endpoints of the interval spanned by the two observations."""
    return np.minimum(x1, x2), np.maximum(x1, x2)


def ump_bounds(x1: np.ndarray, x2: np.ndarray, half_width: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Endpoints of the shorter of the two 50% intervals.

    When d >= h the NP interval is clipped to the values consistent with both
    observations lying within h of the hatch, [X(2) - h, X(1) + h].
    """
    lower, upper = np_bounds(x1, x2)
    clipped = (upper - lower) >= half_width
    return np.where(clipped, upper - half_width, lower), np.where(clipped, lower + half_width, upper)


def sd_bounds(x1: np.ndarray, x2: np.ndarray, half_width: float) -> tuple[np.ndarray, np.ndarray]:
    """Endpoints of x-bar +/- h(1 - 1/sqrt(2))."""
    mean = 0.5 * (np.asarray(x1) + np.asarray(x2))
    reach = half_width * SD_HALF_WIDTH_FACTOR
    return mean - reach, mean + reach


def np_interval(sample: SubmarineSample) -> Interval:
    """Nonparametric interval [X(1), X(2)]."""
    lower, upper = np_bounds(sample.x1, sample.x2)
    return Interval(float(lower), float(upper))


def ump_interval(sample: SubmarineSample) -> Interval:
    """UMP interval; d == h takes the clipped branch."""
    lower, upper = ump_bounds(sample.x1, sample.x2, sample.design.half_width)
    return Interval(float(lower), float(upper))


def sd_interval(sample: SubmarineSample) -> Interval:
    """Sampling-distribution interval centred on the sample mean."""
    lower, upper = sd_bounds(sample.x1, sample.x2, sample.design.half_width)
    return Interval(float(lower), float(upper))


def trivial_interval() -> Interval:
    """The interval that always covers."""
    return Interval.unbounded()


def relative_width(interval: Interval, hull_width: float) -> float:
    """Interval length as a fraction of the support window."""
    if hull_width <= 0:
        raise ValueError(f"hull_width must be positive, got {hull_width}")
    if not interval.is_bounded:
        raise UnboundedIntervalError(f"Relative width is undefined for {interval}")
    ratio = interval.width() / hull_width
    if ratio > 1.0 + 1e-12:
        raise ValueError(f"Interval {interval} is wider than the support window {hull_width}")
    return min(ratio, 1.0)


def folded_width(d: "float | np.ndarray") -> "float | np.ndarray":
    """Fold a relative width onto [0, 1/2] as min(d, 1 - d)."""
    values = np.asarray(d, dtype=float)
    if ((values < 0.0) | (values > 1.0)).any():
        raise ValueError(f"Relative width must lie in [0, 1], got {d}")
    folded = np.minimum(values, 1.0 - values)
    return float(folded) if folded.ndim == 0 else folded


@dataclass(frozen=True)
class NormalSample:
    """Sample from a normal model with a simulation-known mean."""

    values: tuple[float, ...]
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) < 2:
            raise ValueError(f"A t interval needs at least 2 observations, got {len(self.values)}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


def t_cdf(t: float, df: float) -> float:
    """Student t distribution function through the regularized incomplete beta."""
    tail = 0.5 * float(betainc(0.5 * df, 0.5, df / (df + t * t)))
    return 1.0 - tail if t >= 0 else tail


def t_quantile(p: float, df: float, tol: float = T_QUANTILE_TOLERANCE) -> float:
    """Invert ``t_cdf`` by bisection to within ``tol``."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if df <= 0:
        raise ValueError(f"Degrees of freedom must be positive, got {df}")
    if p < 0.5:
        return -t_quantile(1.0 - p, df, tol)
    if p == 0.5:
        return 0.0
    lower, upper = 0.0, 1.0
    while t_cdf(upper, df) < p:
        lower, upper = upper, 2.0 * upper
    while upper - lower > tol:
        middle = 0.5 * (lower + upper)
        if t_cdf(middle, df) < p:
            lower = middle
        else:
            upper = middle
    return 0.5 * (lower + upper)


@lru_cache(maxsize=256)
def t_critical(df: int, alpha: float) -> float:
    """Two-sided critical value t_{1 - alpha/2, df}."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return t_quantile(1.0 - 0.5 * alpha, df)


def t_bounds(values: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise t intervals for a (trials, n) array of observations."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    n = values.shape[1]
    if n < 2:
        raise ValueError(f"A t interval needs at least 2 observations, got {n}")
    mean = values.mean(axis=1)
    half = t_critical(n - 1, alpha) * values.std(axis=1, ddof=1) / math.sqrt(n)
    return mean - half, mean + half


def t_interval(sample: NormalSample, alpha: float) -> Interval:
    """Sample mean +/- t_crit * s / sqrt(n), with s on n - 1 degrees of freedom."""
    lower, upper = t_bounds(np.array([sample.values]), alpha)
    interval = Interval(float(lower[0]), float(upper[0]))
    if interval.width() == 0.0:
        logger.debug(f"Zero sample variance; degenerate t interval at {interval.lower}")
    return interval
