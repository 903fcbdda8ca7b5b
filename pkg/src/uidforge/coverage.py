"""Pre-projection corrections to raw census counts: net-omission
inflation, dual-system (capture-recapture) totals, proration of
unknown-age records and inclusion of houseless segments.

Omission is read as the fraction of the true population the enumeration
missed, so the correction divides: true = enumerated / (1 - rate/1000).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .core import AgePyramid, Sex
from .errors import AllocationError, DomainError, UndefinedEstimateError


@dataclass(frozen=True)
class DualSystemCounts:
    """Two overlapping enumeration lists and their matched count."""

    first_list: int
    second_list: int
    matched: int

    def __post_init__(self):
        if self.first_list < 1 or self.second_list < 1:
            raise DomainError("both list sizes must be positive")
        if self.matched < 0:
            raise DomainError("matched count cannot be negative")


@dataclass(frozen=True)
class CoverageConfig:
    """Correction parameters for one region's raw counts."""

    omission_per_1000: float = 0.0
    houseless_rural: float = 0.0
    houseless_urban: float = 0.0
    unknown_age_counts: Mapping = None

    def __post_init__(self):
        if not 0.0 <= self.omission_per_1000 < 1000.0:
            raise DomainError("omission_per_1000 must lie in [0, 1000)")
        if self.houseless_rural < 0 or self.houseless_urban < 0:
            raise DomainError("houseless counts must be >= 0")
        unknowns = dict(self.unknown_age_counts or {})
        for sex, n in unknowns.items():
            if n < 0:
                raise DomainError(f"unknown-age count for {sex} must be >= 0")
        object.__setattr__(self, "unknown_age_counts", unknowns)

    def unknown(self, sex: Sex) -> float:
        return self.unknown_age_counts.get(sex, 0.0)


def dual_system_estimate(counts: DualSystemCounts, chapman: bool = False) -> float:
    """Total-population estimate from two partial lists.

    Standard dual-system form n1*n2/m; with ``chapman`` the
    small-sample-corrected (n1+1)(n2+1)/(m+1) - 1 is used instead.
    """
    n1, n2, m = counts.first_list, counts.second_list, counts.matched
    if m == 0:
        raise UndefinedEstimateError(
            "no overlap between the two lists; the estimate is undefined"
        )
    if m > min(n1, n2):
        raise DomainError(f"matched {m} exceeds the smaller list ({min(n1, n2)})")
    if chapman:
        return (n1 + 1) * (n2 + 1) / (m + 1) - 1.0
    return n1 * n2 / m


def apply_omission_adjustment(pyramid: AgePyramid, cfg: CoverageConfig) -> AgePyramid:
    """Inflate every cell for net enumeration omission."""
    rate = cfg.omission_per_1000
    if not 0.0 <= rate < 1000.0:
        raise DomainError("omission rate must lie in [0, 1000) per 1000")
    factor = 1.0 / (1.0 - rate / 1000.0)
    cells = {key: v * factor for key, v in pyramid.counts.items()}
    return pyramid.replace_counts(cells)


def allocate_unknown_age(pyramid: AgePyramid, cfg: CoverageConfig) -> AgePyramid:
    """Prorate each sex's unknown-age count across that sex's known age
    distribution, leaving every cell's share of the sex total unchanged."""
    cells = dict(pyramid.counts)
    for sex in Sex:
        unknown = cfg.unknown(sex)
        if unknown == 0.0:
            continue
        known = pyramid.total(sex)
        if known <= 0.0:
            raise AllocationError(
                f"cannot allocate {unknown} unknown-age {sex.value} records: "
                "no known-age counts to prorate over"
            )
        factor = (known + unknown) / known
        for key, v in pyramid.counts.items():
            if key[0] is sex:
                cells[key] = v * factor
    return pyramid.replace_counts(cells)


def add_enumeration_segments(
    pyramid: AgePyramid, cfg: CoverageConfig, segment_age_profile: Mapping
) -> AgePyramid:
    """Distribute the houseless segment totals over the pyramid by the
    supplied (sex, age) -> weight profile and add them cell-wise."""
    segment_total = cfg.houseless_rural + cfg.houseless_urban
    if segment_total == 0.0:
        return pyramid
    weight_sum = sum(segment_age_profile.values())
    if not math.isclose(weight_sum, 1.0, rel_tol=0.0, abs_tol=1e-9):
        raise DomainError(f"segment age profile weights sum to {weight_sum!r}, not 1")
    cells = dict(pyramid.counts)
    for key, w in segment_age_profile.items():
        if w < 0:
            raise DomainError(f"segment weight for {key} must be >= 0")
        cells[key] = cells.get(key, 0.0) + segment_total * w
    return pyramid.replace_counts(cells)
