"""Core demographic types: age axis, regions, population pyramids,
survival schedules and fertility configuration.

All types are immutable after construction and safe to share between
threads; every operation in this package is a pure function of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from .errors import DomainError

#: Ages treated as reproductive for fertility purposes (inclusive range).
REPRODUCTIVE_AGE_MIN = 15
REPRODUCTIVE_AGE_MAX = 49


class Sex(Enum):
    MALE = "M"
    FEMALE = "F"


class RegionLevel(Enum):
    COUNTRY = "country"
    STATE = "state"
    REGION = "region"
    BLOCK = "block"
    WARD = "ward"


@dataclass(frozen=True)
class AgeAxis:
    """Single-year age axis 0..max_age inclusive.

    ``max_age`` is the last age of life; anybody reaching it does not
    survive a further year. Source data with an open-ended top group
    should be collapsed into ``max_age`` before constructing pyramids.
    """

    max_age: int = 100

    def __post_init__(self):
        if not isinstance(self.max_age, int) or self.max_age < 1:
            raise DomainError(f"max_age must be an integer >= 1, got {self.max_age!r}")

    @property
    def n_ages(self) -> int:
        return self.max_age + 1

    def ages(self) -> range:
        return range(0, self.max_age + 1)

    def contains(self, age: int) -> bool:
        return 0 <= age <= self.max_age


@dataclass(frozen=True)
class RegionId:
    """Identifier for a node in the region hierarchy."""

    code: str
    level: RegionLevel = RegionLevel.REGION

    def __post_init__(self):
        if not self.code:
            raise DomainError("region code must be non-empty")


def _freeze_mapping(raw) -> Mapping:
    return MappingProxyType(dict(raw))


@dataclass(frozen=True, eq=True)
class AgePyramid:
    """Population counts by (sex, single-year age) for one region at one
    point in time.

    Counts are expected-value reals, not integers; rounding happens only
    at report time. The container is deliberately permissive (sparse or
    even invalid cells are representable) so that :func:`validate_pyramid`
    can report problems instead of the constructor hiding them. Missing
    cells read as 0.0 through :meth:`count`.
    """

    region: RegionId
    time_label: int
    axis: AgeAxis = field(default_factory=AgeAxis)
    counts: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "counts", _freeze_mapping(self.counts))

    def count(self, sex: Sex, age: int) -> float:
        return self.counts.get((sex, age), 0.0)

    def has_cell(self, sex: Sex, age: int) -> bool:
        return (sex, age) in self.counts

    def total(self, sex: Sex | None = None) -> float:
        if sex is None:
            return float(sum(self.counts.values()))
        return float(sum(v for (s, _), v in self.counts.items() if s is sex))

    def dense(self, sex: Sex) -> np.ndarray:
        """Counts for one sex as an array over ages 0..max_age (missing -> 0)."""
        out = np.zeros(self.axis.n_ages)
        for (s, age), v in self.counts.items():
            if s is sex and self.axis.contains(age):
                out[age] = v
        return out

    def densified(self) -> "AgePyramid":
        """Copy with every (sex, age) cell present, missing cells as 0.0."""
        cells = {(sex, age): self.count(sex, age) for sex in Sex for age in self.axis.ages()}
        return AgePyramid(self.region, self.time_label, self.axis, cells)

    def replace_counts(self, counts: Mapping, time_label: int | None = None) -> "AgePyramid":
        label = self.time_label if time_label is None else time_label
        return AgePyramid(self.region, label, self.axis, counts)

    @classmethod
    def from_dense(
        cls,
        region: RegionId,
        time_label: int,
        axis: AgeAxis,
        male: Iterable[float],
        female: Iterable[float],
    ) -> "AgePyramid":
        male = list(male)
        female = list(female)
        if len(male) != axis.n_ages or len(female) != axis.n_ages:
            raise DomainError(
                f"dense pyramid needs {axis.n_ages} entries per sex, "
                f"got {len(male)} male / {len(female)} female"
            )
        cells = {}
        for age in axis.ages():
            cells[(Sex.MALE, age)] = float(male[age])
            cells[(Sex.FEMALE, age)] = float(female[age])
        return cls(region, time_label, axis, cells)


@dataclass(frozen=True)
class SurvivalSchedule:
    """One-year survival probabilities by (sex, age) for a region.

    ``one_year[(sex, x)]`` is the chance that a person of age x lives to
    age x+1. The schedule is dense: every age 0..max_age must be present
    for both sexes, values lie in [0, 1], and the value at the last age
    of life is 0. Multi-year survival is always composed from these
    one-year factors (see :func:`multi_year_survival`), keeping a single
    source of truth.
    """

    region: RegionId
    axis: AgeAxis
    one_year: Mapping

    def __post_init__(self):
        cells = dict(self.one_year)
        for sex in Sex:
            for age in self.axis.ages():
                key = (sex, age)
                if key not in cells:
                    raise DomainError(f"survival schedule missing ({sex.value}, {age})")
                p = cells[key]
                if not (isinstance(p, (int, float)) and math.isfinite(p) and 0.0 <= p <= 1.0):
                    raise DomainError(
                        f"survival({sex.value}, {age}) = {p!r} is not a probability"
                    )
            if cells[(sex, self.axis.max_age)] != 0.0:
                raise DomainError(
                    f"survival at last age of life ({self.axis.max_age}) must be 0"
                )
        for (sex, age) in cells:
            if not self.axis.contains(age):
                raise DomainError(f"survival schedule has age {age} beyond axis")
        object.__setattr__(self, "one_year", _freeze_mapping(cells))

    def prob(self, sex: Sex, age: int) -> float:
        if not self.axis.contains(age):
            raise DomainError(f"age {age} outside axis 0..{self.axis.max_age}")
        return self.one_year[(sex, age)]

    def dense(self, sex: Sex) -> np.ndarray:
        return np.array([self.one_year[(sex, a)] for a in self.axis.ages()])

    @classmethod
    def flat(
        cls, region: RegionId, axis: AgeAxis, male: float, female: float | None = None
    ) -> "SurvivalSchedule":
        """Constant survival at every age (the last age of life stays 0)."""
        if female is None:
            female = male
        cells = {}
        for age in axis.ages():
            last = age == axis.max_age
            cells[(Sex.MALE, age)] = 0.0 if last else float(male)
            cells[(Sex.FEMALE, age)] = 0.0 if last else float(female)
        return cls(region, axis, cells)


@dataclass(frozen=True)
class FertilityConfig:
    """Age-specific fertility rates plus the scalars needed to turn them
    into sexed birth counts.

    rates
        births per woman per year by single-year age; nonzero only for
        ages 15..49.
    eligible_proportion
        fraction of women in the reproductive band counted as exposed to
        childbearing. Its real-world definition is an open data question,
        so it is a plain exogenous input here.
    sex_ratio_at_birth
        male births per female birth (> 0); no default is asserted.
    infant_mortality
        deaths before age one per 1000 live births, used only by the
        issue-at-age-one card policy.
    """

    rates: Mapping
    eligible_proportion: float
    sex_ratio_at_birth: float
    infant_mortality: float = 0.0

    def __post_init__(self):
        cells = {}
        for age, f in dict(self.rates).items():
            if not isinstance(age, int):
                raise DomainError(f"fertility age {age!r} must be an integer")
            if not (math.isfinite(f) and f >= 0.0):
                raise DomainError(f"fertility rate at age {age} must be finite and >= 0")
            if f != 0.0 and not (REPRODUCTIVE_AGE_MIN <= age <= REPRODUCTIVE_AGE_MAX):
                raise DomainError(
                    f"nonzero fertility at age {age} outside "
                    f"[{REPRODUCTIVE_AGE_MIN}, {REPRODUCTIVE_AGE_MAX}]"
                )
            cells[age] = float(f)
        object.__setattr__(self, "rates", _freeze_mapping(cells))
        if not 0.0 <= self.eligible_proportion <= 1.0:
            raise DomainError("eligible_proportion must lie in [0, 1]")
        if not (math.isfinite(self.sex_ratio_at_birth) and self.sex_ratio_at_birth > 0):
            raise DomainError("sex_ratio_at_birth must be > 0")
        if not 0.0 <= self.infant_mortality <= 1000.0:
            raise DomainError("infant_mortality must lie in [0, 1000] per 1000 births")

    def rate(self, age: int) -> float:
        return self.rates.get(age, 0.0)

    @property
    def male_share(self) -> float:
        r = self.sex_ratio_at_birth
        return r / (1.0 + r)

    @classmethod
    def flat(
        cls,
        rate: float,
        eligible_proportion: float,
        sex_ratio_at_birth: float,
        infant_mortality: float = 0.0,
    ) -> "FertilityConfig":
        rates = {age: rate for age in range(REPRODUCTIVE_AGE_MIN, REPRODUCTIVE_AGE_MAX + 1)}
        return cls(rates, eligible_proportion, sex_ratio_at_birth, infant_mortality)


def multi_year_survival(
    schedule: SurvivalSchedule, sex: Sex, age: int, span: int
) -> float:
    """Probability that a person of ``age`` survives ``span`` further years.

    Composed as the product of one-year factors
    s(age, age+1) * s(age+1, age+2) * ... * s(age+span-1, age+span).
    span = 0 is the empty product, 1.0.
    """
    axis = schedule.axis
    if span < 0:
        raise DomainError(f"span must be >= 0, got {span}")
    if not axis.contains(age):
        raise DomainError(f"age {age} outside axis 0..{axis.max_age}")
    if age + span > axis.max_age + 1:
        raise DomainError(
            f"age {age} + span {span} reaches past the last age of life ({axis.max_age})"
        )
    p = 1.0
    for x in range(age, age + span):
        p *= schedule.one_year[(sex, x)]
    return p


def validate_pyramid(pyramid: AgePyramid, axis: AgeAxis) -> list[str]:
    """List every invariant the pyramid violates against ``axis``.

    Returns an empty list iff the pyramid is valid: every (sex, age) cell
    for ages 0..max_age present, all counts finite and non-negative, and
    no cells outside the axis.
    """
    problems: list[str] = []
    for (sex, age), v in pyramid.counts.items():
        if not axis.contains(age):
            problems.append(f"age beyond axis: sex={sex.value} age={age}")
            continue
        if not math.isfinite(v):
            problems.append(f"non-finite count: sex={sex.value} age={age} value={v!r}")
        elif v < 0:
            problems.append(f"negative count: sex={sex.value} age={age} value={v!r}")
    for sex in Sex:
        for age in axis.ages():
            if not pyramid.has_cell(sex, age):
                problems.append(f"missing cell: sex={sex.value} age={age}")
    return problems
