"""Population projection: annual births, cohort survival and the
year-by-year projection loop.

Births in a year are

    B = sum over mother ages x = 15..49 of s(x, x+1) * P(x) * F(x) * K

with P(x) the female count at age x, F(x) the age-specific fertility
rate and K the eligible proportion; the survival factor applies to the
mothers before the rate does. Cohorts age through the difference
equation

    P[t+1](x+1) = P[t](x) * s(x, x+1)

and age groups are survived by summing the single-year cohorts of the
group (rectangle rule on single-year cells).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .core import (
    REPRODUCTIVE_AGE_MAX,
    REPRODUCTIVE_AGE_MIN,
    AgePyramid,
    FertilityConfig,
    Sex,
    SurvivalSchedule,
    multi_year_survival,
)
from .errors import DomainError


@dataclass(frozen=True)
class BirthCount:
    """Live births in one year, split by sex of the newborn."""

    total: float
    by_sex: Mapping

    def __post_init__(self):
        object.__setattr__(self, "by_sex", dict(self.by_sex))
        for sex in Sex:
            if self.by_sex.get(sex, 0.0) < 0:
                raise DomainError("birth counts must be non-negative")
        if self.total < 0:
            raise DomainError("birth counts must be non-negative")

    def sex_count(self, sex: Sex) -> float:
        return self.by_sex.get(sex, 0.0)

    @classmethod
    def split(cls, total: float, male_share: float) -> "BirthCount":
        male = total * male_share
        female = total - male
        return cls(total, {Sex.MALE: male, Sex.FEMALE: female})


@dataclass(frozen=True)
class ProjectionSeries:
    """Annual projection frames; frame 0 is the input pyramid."""

    horizon: int
    frames: tuple

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if len(self.frames) != self.horizon + 1:
            raise DomainError(
                f"series needs horizon+1 frames, got {len(self.frames)} for horizon {self.horizon}"
            )

    def frame(self, k: int) -> AgePyramid:
        return self.frames[k]


def _check_axes(pop: AgePyramid, survival: SurvivalSchedule):
    if pop.axis.max_age != survival.axis.max_age:
        raise DomainError(
            f"pyramid axis (max_age {pop.axis.max_age}) does not match "
            f"survival axis (max_age {survival.axis.max_age})"
        )


def project_births(
    pop: AgePyramid, survival: SurvivalSchedule, fert: FertilityConfig
) -> BirthCount:
    """Expected live births over one year from the female population.

    Requires a female count cell (possibly zero) at every reproductive
    age 15..49; a missing cell is a data error, not an implicit zero.
    """
    _check_axes(pop, survival)
    missing = [
        x
        for x in range(REPRODUCTIVE_AGE_MIN, REPRODUCTIVE_AGE_MAX + 1)
        if not pop.has_cell(Sex.FEMALE, x)
    ]
    if missing:
        raise DomainError(f"pyramid lacks female counts at reproductive ages {missing}")
    total = 0.0
    for x in range(REPRODUCTIVE_AGE_MIN, REPRODUCTIVE_AGE_MAX + 1):
        total += (
            survival.prob(Sex.FEMALE, x)
            * pop.count(Sex.FEMALE, x)
            * fert.rate(x)
            * fert.eligible_proportion
        )
    return BirthCount.split(total, fert.male_share)


def apply_infant_survival(births: BirthCount, fert: FertilityConfig) -> BirthCount:
    """Scale births down to the children who complete their first year.

    Used only when cards are issued at age one rather than at birth; the
    projection loop itself never removes infants.
    """
    factor = 1.0 - fert.infant_mortality / 1000.0
    male = births.sex_count(Sex.MALE) * factor
    female = births.sex_count(Sex.FEMALE) * factor
    return BirthCount(male + female, {Sex.MALE: male, Sex.FEMALE: female})


def survive_cohorts(
    pop: AgePyramid, survival: SurvivalSchedule, span: int
) -> AgePyramid:
    """Age every cohort forward ``span`` years under the survival schedule.

    Output count at age x+span is the input count at age x times the
    composed survival over the span; ages below ``span`` in the output
    are zero (no births here), and cohorts that would pass the last age
    of life are gone. The result is dense over the full axis.
    """
    _check_axes(pop, survival)
    omega = pop.axis.max_age
    if span < 1:
        raise DomainError(f"span must be >= 1, got {span}")
    if span > omega:
        raise DomainError(f"span {span} exceeds the age axis (max_age {omega})")
    cells = {}
    for sex in Sex:
        for age in pop.axis.ages():
            cells[(sex, age)] = 0.0
        for x in range(0, omega - span + 1):
            cells[(sex, x + span)] = pop.count(sex, x) * multi_year_survival(
                survival, sex, x, span
            )
    return AgePyramid(pop.region, pop.time_label + span, pop.axis, cells)


def age_group_survivors(
    pop: AgePyramid,
    survival: SurvivalSchedule,
    start_age: int,
    width: int,
    span: int,
    sex: Sex | None = None,
) -> float:
    """Survivors after ``span`` years out of the age group
    [start_age, start_age + width).

    Discretizes the group total with the rectangle rule on single-year
    cells: sum over t = 0..width-1 of p(start_age+t) * survival over the
    span. With ``sex`` None both sexes are summed. Equals the sum of the
    corresponding :func:`survive_cohorts` output cells by construction.
    """
    _check_axes(pop, survival)
    omega = pop.axis.max_age
    if width < 1:
        raise DomainError(f"width must be >= 1, got {width}")
    if span < 0:
        raise DomainError(f"span must be >= 0, got {span}")
    if start_age < 0 or start_age + width + span > omega + 1:
        raise DomainError(
            f"group [{start_age}, {start_age + width}) surviving {span} years "
            f"leaves the axis 0..{omega}"
        )
    sexes = list(Sex) if sex is None else [sex]
    total = 0.0
    for s in sexes:
        for t in range(width):
            x = start_age + t
            total += pop.count(s, x) * multi_year_survival(survival, s, x, span)
    return total


def project_population(
    pop: AgePyramid,
    survival: SurvivalSchedule,
    fert: FertilityConfig,
    horizon: int,
) -> ProjectionSeries:
    """Project ``horizon`` years forward, one year at a time.

    Each step survives all cohorts one year and fills age 0 of the next
    frame with that year's births split by sex. Infant deaths are not
    modelled inside the projection (newborns enter at their full birth
    count and first face mortality through s(0, 1) the following year).
    """
    if horizon < 0:
        raise DomainError(f"horizon must be >= 0, got {horizon}")
    frames = [pop]
    for _ in range(horizon):
        current = frames[-1]
        births = project_births(current, survival, fert)
        nxt = survive_cohorts(current, survival, 1)
        cells = dict(nxt.counts)
        cells[(Sex.MALE, 0)] = births.sex_count(Sex.MALE)
        cells[(Sex.FEMALE, 0)] = births.sex_count(Sex.FEMALE)
        frames.append(AgePyramid(nxt.region, nxt.time_label, nxt.axis, cells))
    return ProjectionSeries(horizon, tuple(frames))


def deaths_by_age(pop: AgePyramid, survival: SurvivalSchedule) -> dict:
    """Expected deaths during one year as a (sex, age-at-start) mapping."""
    _check_axes(pop, survival)
    out = {}
    for (sex, age), v in pop.counts.items():
        if v:
            out[(sex, age)] = v * (1.0 - survival.prob(sex, age))
    return out
