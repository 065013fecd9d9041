"""
Analytic reference values for the submarine procedures.

Everything is expressed in relative units: the hull has width 1, the hatch sits
at its centre and D is the relative distance between the two bubbles, with
density 2(1 - d) on [0, 1]. Given D = d the sample mean is uniform on an
interval of length 1 - d around the hatch, so every procedure centred on the
mean covers with probability min(1, width / (1 - d)).
"""

import math
from collections.abc import Callable
from dataclasses import dataclass
from functools import lru_cache

from scipy.integrate import quad

from coverage_forecast.constants import SD_HALF_WIDTH_FACTOR

SD_RELATIVE_WIDTH = SD_HALF_WIDTH_FACTOR
KINKS = (SD_RELATIVE_WIDTH, 0.5, 1.0 - SD_RELATIVE_WIDTH)


def d_density(d: float) -> float:
    """Density of the relative spread D."""
    return 2.0 * (1.0 - d) if 0.0 <= d <= 1.0 else 0.0


def w_density(w: float) -> float:
    """Density of the folded width W = min(D, 1 - D): uniform on [0, 1/2]."""
    return 2.0 if 0.0 <= w <= 0.5 else 0.0


def _centred_coverage(width: float, d: float) -> float:
    if d >= 1.0:
        return 1.0
    return min(1.0, width / (1.0 - d))


def np_coverage_given_d(d: float) -> float:
    """d / (1 - d) for d <= 1/2, certain coverage above."""
    return _centred_coverage(d, d)


def ump_coverage_given_d(d: float) -> float:
    """The UMP interval covers exactly when the NP interval does at d <= 1/2, and always above."""
    return _centred_coverage(min(d, 1.0 - d), d)


def ump_coverage_given_w(w: float) -> float:
    """2w on [0, 1/2]."""
    return 2.0 * w


def sd_coverage_given_d(d: float) -> float:
    """Fixed-width interval: coverage grows as the mean's range shrinks."""
    return _centred_coverage(SD_RELATIVE_WIDTH, d)


def either_coverage_given_d(d: float) -> float:
    """The wider of the UMP and SD intervals covers."""
    return _centred_coverage(max(SD_RELATIVE_WIDTH, min(d, 1.0 - d)), d)


def both_coverage_given_d(d: float) -> float:
    """The narrower of the UMP and SD intervals covers."""
    return _centred_coverage(min(SD_RELATIVE_WIDTH, min(d, 1.0 - d)), d)


def sd_marginal_coverage(reach_fraction: float = SD_HALF_WIDTH_FACTOR) -> float:
    """Closed form 1 - (1 - c/h)^2 for the interval x-bar +/- c."""
    if not 0.0 <= reach_fraction <= 1.0:
        raise ValueError(f"reach_fraction must lie in [0, 1], got {reach_fraction}")
    return 1.0 - (1.0 - reach_fraction) ** 2


def _integrate(f: Callable[[float], float], lower: float = 0.0, upper: float = 1.0) -> float:
    points = [k for k in KINKS if lower < k < upper]
    value, _ = quad(f, lower, upper, points=points or None, limit=200)
    return value


def bin_average(curve: Callable[[float], float], density: Callable[[float], float], lower: float, upper: float) -> float:
    """Density-weighted mean of ``curve`` over one bin."""
    mass = _integrate(density, lower, upper)
    if mass <= 0.0:
        raise ValueError(f"Bin [{lower}, {upper}] carries no probability")
    return _integrate(lambda x: curve(x) * density(x), lower, upper) / mass


def expected_table_brier(curve: Callable[[float], float], density: Callable[[float], float], lower: float, upper: float) -> float:
    """Brier risk of forecasting with the exact conditional coverage, E[g (1 - g)]."""
    return _integrate(lambda x: curve(x) * (1.0 - curve(x)) * density(x), lower, upper)


def np_width_brier() -> float:
    """3/2 - 2 ln 2."""
    return 1.5 - 2.0 * math.log(2.0)


def ump_width_brier() -> float:
    """1/6."""
    return 1.0 / 6.0


@dataclass(frozen=True)
class CompositeOracle:
    """Design-level quantities of the UMP + SD composite."""

    p_joint: float
    p_both: float
    p_sd_inside_ump: float
    coverage_sd_inside_ump: float
    coverage_ump_inside_sd: float
    gap_sd_inside_ump: float
    gap_ump_inside_sd: float
    brier_constant_one: float
    brier_constant_joint: float
    brier_nesting: float
    brier_max_width: float


@lru_cache(maxsize=1)
def composite_oracle() -> CompositeOracle:
    """Integrate the composite's coverage over D; SD sits inside UMP exactly when W exceeds the SD width."""
    k = SD_RELATIVE_WIDTH

    def sd_inside(d: float) -> bool:
        return min(d, 1.0 - d) > k

    p_joint = _integrate(lambda d: either_coverage_given_d(d) * d_density(d))
    p_both = _integrate(lambda d: both_coverage_given_d(d) * d_density(d))
    p_sd_inside = _integrate(lambda d: d_density(d) if sd_inside(d) else 0.0)
    either_sd_inside = _integrate(lambda d: either_coverage_given_d(d) * d_density(d) if sd_inside(d) else 0.0)
    gap_sd_inside = _integrate(lambda d: (ump_coverage_given_d(d) - sd_coverage_given_d(d)) * d_density(d) if sd_inside(d) else 0.0)
    gap_ump_inside = _integrate(lambda d: 0.0 if sd_inside(d) else (sd_coverage_given_d(d) - ump_coverage_given_d(d)) * d_density(d))

    q_sd_inside = either_sd_inside / p_sd_inside
    q_ump_inside = (p_joint - either_sd_inside) / (1.0 - p_sd_inside)
    brier_ump_inside = (1.0 - p_sd_inside) * q_ump_inside * (1.0 - q_ump_inside)
    # within SD-inside-UMP the outer width is W and the composite covers as UMP does, 2W
    brier_outer = expected_table_brier(ump_coverage_given_w, w_density, k, 0.5)
    return CompositeOracle(
        p_joint=p_joint,
        p_both=p_both,
        p_sd_inside_ump=p_sd_inside,
        coverage_sd_inside_ump=q_sd_inside,
        coverage_ump_inside_sd=q_ump_inside,
        gap_sd_inside_ump=gap_sd_inside,
        gap_ump_inside_sd=gap_ump_inside,
        brier_constant_one=1.0 - p_joint,
        brier_constant_joint=p_joint * (1.0 - p_joint),
        brier_nesting=p_sd_inside * q_sd_inside * (1.0 - q_sd_inside) + brier_ump_inside,
        brier_max_width=brier_outer + brier_ump_inside,
    )
