"""Synthetic populations and a career-swap simulation of a second time point.

:func:`simulate_second_timepoint` turns a cross-sectional dataset into a
:class:`~longcf.schema.LongitudinalPair`: some individuals move up one
education level, some copy the job block (hours, occupation, capital
fields) of another individual from their education class, and everyone
ages by a random whole number of years.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, SchemaMismatch
from .schema import CATEGORICAL, Dataset, FeatureSchema, FeatureSpec, LongitudinalPair

log = logging.getLogger(__name__)

ADULT_SWAP_FEATURES = ("hours_per_week", "occupation", "capital_gain", "capital_loss")


@dataclass(frozen=True)
class SimulationConfig:
    swap_features: tuple[str, ...] = ADULT_SWAP_FEATURES
    education_feature: str = "education"
    age_feature: str = "age"
    p_swap: float = 0.3
    p_edu_bump: float = 0.1
    age_increment: tuple[int, int] = (1, 10)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "swap_features", tuple(self.swap_features))
        object.__setattr__(self, "age_increment", tuple(int(a) for a in self.age_increment))
        for p in (self.p_swap, self.p_edu_bump):
            if not 0.0 <= p <= 1.0:
                raise ConfigError("probabilities must lie in [0, 1]")
        lo, hi = self.age_increment
        if lo < 1 or hi < lo:
            raise ConfigError("age increment range needs 1 <= low <= high")

    def resolve(self, schema: FeatureSchema):
        swap = [schema.index(n) for n in self.swap_features]
        edu = schema.index(self.education_feature)
        age = schema.index(self.age_feature)
        if not schema[edu].is_categorical:
            raise ConfigError("education feature must be categorical (levels in increasing order)")
        if schema[age].is_categorical:
            raise ConfigError("age feature must be continuous")
        touched = set(swap) | {edu, age}
        if len(touched) != len(swap) + 2:
            raise ConfigError("swap, education and age features must be distinct")
        bad = [schema[j].name for j in touched if schema[j].immutable]
        if bad:
            raise ConfigError(f"simulation would alter immutable features: {bad}")
        return np.array(swap, dtype=np.int64), edu, age


def simulate_second_timepoint(data: Dataset, config: SimulationConfig = SimulationConfig(),
                              return_donors: bool = False):
    """Simulate ``time2`` from ``time1 = data.X``.

    Individuals are processed in row order with three draws each (bump,
    swap, age) plus a donor draw when swapping. Donors come from the
    time-1 population and keep their own rows; the recipient copies the
    donor's time-1 job block. With ``return_donors`` the donor index of each
    row (``-1`` for none) is returned alongside the pair.
    """
    if len(data) == 0:
        raise SchemaMismatch("cannot simulate from an empty dataset")
    swap, edu, age = config.resolve(data.schema)
    A = np.asarray(data.X, dtype=float)
    B = A.copy()
    top = len(data.schema[edu].levels) - 1
    rng = np.random.default_rng(config.seed)
    lo, hi = config.age_increment
    edu1 = A[:, edu]
    donors = np.full(len(A), -1, dtype=np.int64)
    skipped = 0
    for i in range(len(A)):
        bump = rng.random() < config.p_edu_bump
        do_swap = rng.random() < config.p_swap
        B[i, age] = A[i, age] + rng.integers(lo, hi + 1)
        if bump:
            B[i, edu] = min(A[i, edu] + 1, top)
        if do_swap:
            pool = np.flatnonzero(edu1 == B[i, edu])
            pool = pool[pool != i]
            if len(pool) == 0:
                skipped += 1
                continue
            donor = int(pool[rng.integers(0, len(pool))])
            B[i, swap] = A[donor, swap]
            donors[i] = donor
    if skipped:
        log.warning("skipped %d swaps with no donor in the education class", skipped)
    pair = LongitudinalPair(data.schema, A, B)
    return (pair, donors) if return_donors else pair


# --- synthetic Adult-like population -----------------------------------------

_WORKCLASS = ("Private", "Self-emp", "Fed-gov", "State-gov", "Local-gov")
_EDUCATION = ("Dropout", "HS-grad", "Some-college", "Assoc", "Bachelors", "Masters", "Doctorate")
_MARITAL = ("Never-married", "Married", "Divorced", "Widowed")
_RELATIONSHIP = ("Not-in-family", "Husband", "Wife", "Own-child", "Unmarried")
_OCCUPATION = ("Admin", "Sales", "Exec", "Prof", "Craft", "Service", "Transport", "Tech",
               "Protective", "Farming")
_RACE = ("White", "Black", "Asian", "Other")
_SEX = ("Male", "Female")
_COUNTRY = ("US", "Mexico", "Other")


def adult_like_schema() -> FeatureSchema:
    cat = lambda name, levels, **kw: FeatureSpec(name, CATEGORICAL, levels, **kw)
    return FeatureSchema((
        FeatureSpec("age", monotone="nondecreasing"),
        cat("workclass", _WORKCLASS),
        cat("education", _EDUCATION, monotone="nondecreasing"),
        cat("marital_status", _MARITAL, immutable=True),
        cat("relationship", _RELATIONSHIP, immutable=True),
        cat("occupation", _OCCUPATION),
        cat("race", _RACE, immutable=True),
        cat("sex", _SEX, immutable=True),
        cat("native_country", _COUNTRY, immutable=True),
        FeatureSpec("hours_per_week"),
        FeatureSpec("capital_gain"),
        FeatureSpec("capital_loss"),
    ))


_EDU_EFFECT = np.array([-1.2, -0.4, 0.0, 0.3, 0.9, 1.3, 1.6])
_OCC_EFFECT = np.array([-0.2, 0.2, 1.0, 0.8, -0.1, -0.8, -0.4, 0.3, 0.1, -0.9])


def make_adult_like(n: int = 2000, seed: int = 0, positive_rate: float = 0.24) -> Dataset:
    """Cross-sectional population with an income label from a noisy linear rule.

    The rule rewards age, education, hours, occupation and capital gain and
    also leans on marital status, sex and race, so a search that may touch
    immutable features finds them useful. The top ``positive_rate`` share
    of scores is labeled 1.
    """
    rng = np.random.default_rng(seed)
    age = np.clip(np.round(rng.gamma(6.0, 6.5, n) + 17), 17, 90)
    edu = rng.choice(len(_EDUCATION), n, p=[0.12, 0.32, 0.22, 0.08, 0.16, 0.07, 0.03])
    marital = rng.choice(len(_MARITAL), n, p=[0.33, 0.46, 0.15, 0.06])
    sex = rng.choice(2, n, p=[0.67, 0.33])
    rel = np.where(marital == 1, np.where(sex == 0, 1, 2),
                   rng.choice([0, 3, 4], n, p=[0.5, 0.3, 0.2]))
    race = rng.choice(len(_RACE), n, p=[0.85, 0.1, 0.03, 0.02])
    country = rng.choice(len(_COUNTRY), n, p=[0.9, 0.05, 0.05])
    workclass = rng.choice(len(_WORKCLASS), n, p=[0.7, 0.1, 0.05, 0.07, 0.08])
    occ = rng.choice(len(_OCCUPATION), n)
    hours = np.clip(np.round(rng.normal(40, 10, n)), 1, 99)
    gain = np.where(rng.random(n) < 0.08, np.round(rng.lognormal(8.5, 1.0, n)), 0.0)
    loss = np.where(rng.random(n) < 0.05, np.round(rng.lognormal(7.4, 0.3, n)), 0.0)

    score = (0.05 * (age - 38) - 0.0008 * (age - 38) ** 2 + _EDU_EFFECT[edu] + _OCC_EFFECT[occ]
             + 0.04 * (hours - 40) + 1.4 * (marital == 1) + 0.6 * (sex == 0) + 0.4 * (race == 0)
             + 1.5 * (gain > 0) + rng.logistic(0.0, 0.6, n))
    cut = np.quantile(score, 1.0 - positive_rate)
    y = (score >= cut).astype(np.int64)
    X = np.column_stack([age, workclass, edu, marital, rel, occ, race, sex, country, hours, gain, loss])
    return Dataset(adult_like_schema(), X.astype(float), y)


# --- EHR-like drift fixture --------------------------------------------------

def make_drift_pair(n: int = 200, n_vitals: int = 5, n_static: int = 3, seed: int = 0,
                    drift_sd: float = 1.0):
    """Vital signs drift with Gaussian noise between two readings; static
    categorical fields (ward, religion analogues) never change.

    Returns ``(dataset_at_time1_with_labels, pair)``; the label is a noisy
    threshold on the first two vitals.
    """
    rng = np.random.default_rng(seed)
    specs = [FeatureSpec(f"vital_{i}") for i in range(n_vitals)]
    specs += [FeatureSpec(f"static_{i}", CATEGORICAL, ("a", "b", "c"), immutable=(i % 2 == 0))
              for i in range(n_static)]
    schema = FeatureSchema(tuple(specs))
    V1 = rng.normal(0.0, 3.0, (n, n_vitals))
    V2 = V1 + rng.normal(0.0, drift_sd, (n, n_vitals))
    S = rng.integers(0, 3, (n, n_static)).astype(float)
    A = np.hstack([V1, S])
    B = np.hstack([V2, S])
    y = ((V1[:, 0] + V1[:, min(1, n_vitals - 1)] + rng.normal(0, 1, n)) > 1.0).astype(np.int64)
    return Dataset(schema, A, y), LongitudinalPair(schema, A, B)
