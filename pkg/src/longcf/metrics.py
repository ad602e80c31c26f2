"""Normalization constants and the three counterfactual objectives.

Two kinds of profile exist and serve different objectives:

* a *longitudinal* profile, built from a :class:`~longcf.schema.DiffMatrix`,
  scales each feature by the dispersion of its observed changes (MAD or AAD
  of the deltas for continuous features, change rate for categoricals);
* a *cross-sectional* profile, built from a training :class:`Dataset`,
  scales continuous features by the MAD of their values for proximity.

Every divisor is ``scale + tolerance``. A feature that never changed has
scale 0, so altering it costs ``1 / tolerance`` per unit.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, EmptyInput, SchemaMismatch, STooLarge
from .schema import NO_CHANGE, Dataset, DiffMatrix, FeatureSchema, change_codes

MAD = "MAD"
AAD = "AAD"
CHANGE_RATE = "ChangeRate"
CROSS_MAD = "CrossSectionalMAD"
INDICATOR = "Indicator"

DEFAULT_TOLERANCE = 1e-5


def mad_of_column(values) -> float:
    """Median absolute deviation about the median."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise EmptyInput("MAD of an empty column")
    return float(np.median(np.abs(v - np.median(v))))


def aad_of_column(deltas) -> float:
    """Average absolute deviation about zero, ``mean(|delta|)``.

    Centring at zero makes a zero result equivalent to "this feature was
    never observed to change".
    """
    v = np.asarray(deltas, dtype=float)
    if v.size == 0:
        raise EmptyInput("AAD of an empty column")
    return float(np.mean(np.abs(v)))


def change_rate(transitions: Sequence[tuple[int, int]]) -> float:
    """Fraction of ``(from, to)`` transitions where the level changed."""
    if len(transitions) == 0:
        raise EmptyInput("change rate of an empty transition list")
    changed = sum(1 for a, b in transitions if a != b)
    return changed / len(transitions)


@dataclass(frozen=True)
class NormalizationProfile:
    """Per-feature scale constants plus the additive tolerance.

    ``transition_rates`` is only populated in per-transition mode; it maps a
    categorical feature index to ``{(from, to): rate}``.
    """

    kinds: tuple[str, ...]
    scales: np.ndarray
    categorical: np.ndarray
    tolerance: float = DEFAULT_TOLERANCE
    n_records: int = 0
    categorical_mode: str = "feature"
    transition_rates: dict = field(default_factory=dict)

    def __post_init__(self):
        scales = np.array(self.scales, dtype=float)
        if scales.shape != (len(self.kinds),) or np.any(scales < 0) or not np.all(np.isfinite(scales)):
            raise ConfigError("one finite, nonnegative scale is required per feature")
        if not self.tolerance >= 0:
            raise ConfigError("tolerance must be nonnegative")
        if self.categorical_mode not in ("feature", "transition"):
            raise ConfigError(f"unknown categorical rate mode {self.categorical_mode!r}")
        scales.flags.writeable = False
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "categorical", np.asarray(self.categorical, dtype=bool))

    @property
    def divisors(self) -> np.ndarray:
        return self.scales + self.tolerance

    def with_tolerance(self, tolerance: float) -> "NormalizationProfile":
        return NormalizationProfile(self.kinds, self.scales, self.categorical, tolerance,
                                    self.n_records, self.categorical_mode, self.transition_rates)


def build_profile(diffs: DiffMatrix, continuous_kind: str = MAD,
                  tolerance: float = DEFAULT_TOLERANCE,
                  categorical_mode: str = "feature") -> NormalizationProfile:
    """Longitudinal profile: dispersion of observed changes per feature."""
    if len(diffs) == 0:
        raise EmptyInput("no longitudinal records")
    if continuous_kind not in (MAD, AAD):
        raise ConfigError(f"continuous scaling must be MAD or AAD, got {continuous_kind!r}")
    column = mad_of_column if continuous_kind == MAD else aad_of_column
    kinds, scales, rates = [], [], {}
    for j, spec in enumerate(diffs.schema):
        if spec.is_categorical:
            trans = diffs.transitions(j)
            kinds.append(CHANGE_RATE)
            scales.append(change_rate(trans))
            if categorical_mode == "transition":
                n = len(trans)
                rates[j] = {t: c / n for t, c in Counter(t for t in trans if t[0] != t[1]).items()}
        else:
            kinds.append(continuous_kind)
            scales.append(column(diffs.delta[:, j]))
    return NormalizationProfile(tuple(kinds), np.array(scales), diffs.schema.categorical_mask,
                                tolerance, len(diffs), categorical_mode, rates)


def build_cross_profile(data: Dataset, tolerance: float = DEFAULT_TOLERANCE) -> NormalizationProfile:
    """Cross-sectional profile for proximity: MAD of each continuous column."""
    if len(data) == 0:
        raise EmptyInput("no training rows")
    kinds, scales = [], []
    for j, spec in enumerate(data.schema):
        if spec.is_categorical:
            kinds.append(INDICATOR)
            scales.append(1.0)
        else:
            kinds.append(CROSS_MAD)
            scales.append(mad_of_column(data.X[:, j]))
    return NormalizationProfile(tuple(kinds), np.array(scales), data.schema.categorical_mask,
                                tolerance, len(data))


@dataclass(frozen=True)
class LongitudinalConfig:
    s: int = 1
    norm: str = "l1"

    def __post_init__(self):
        if not isinstance(self.s, (int, np.integer)) or self.s < 1:
            raise ConfigError("s must be a positive integer")
        if self.norm not in ("l1", "l2"):
            raise ConfigError(f"norm must be 'l1' or 'l2', got {self.norm!r}")


def _safe_div(num, div):
    # 0/0 counts as agreement; only reachable with tolerance 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / div
    return np.where(num == 0, 0.0, out)


def _divisors(delta, profile: NormalizationProfile, origin):
    div = profile.divisors
    if profile.categorical_mode == "transition":
        if origin is None:
            raise ConfigError("per-transition rates need the subject's original levels")
        div = div.copy()
        for j, rates in profile.transition_rates.items():
            if delta[j] != NO_CHANGE:
                div[j] = rates.get((int(origin[j]), int(delta[j])), 0.0) + profile.tolerance
    return div


def row_distances(delta, codes, profile: NormalizationProfile, norm: str = "l1",
                  origin=None) -> np.ndarray:
    """Normalized distance from one proposed change to every observed change.

    ``delta`` and the rows of ``codes`` are change codes as produced by
    :func:`~longcf.schema.change_codes`.
    """
    delta = np.asarray(delta, dtype=float)
    codes = np.atleast_2d(codes)
    if delta.shape != (codes.shape[1],) or delta.shape[0] != len(profile.kinds):
        raise SchemaMismatch("proposed change, observed changes and profile disagree on width")
    cat = profile.categorical
    num = np.abs(codes - delta)
    num[:, cat] = (codes[:, cat] != delta[cat])
    contrib = _safe_div(num, _divisors(delta, profile, origin))
    if norm == "l1":
        return contrib.sum(axis=1)
    if norm == "l2":
        return np.sqrt((contrib * contrib).sum(axis=1))
    raise ConfigError(f"norm must be 'l1' or 'l2', got {norm!r}")


def normalized_delta_distance(delta, d_row, profile: NormalizationProfile,
                              norm: str = "l1", origin=None) -> float:
    """Distance between a proposed change and a single observed change."""
    return float(row_distances(delta, np.asarray(d_row, dtype=float)[None, :],
                               profile, norm, origin)[0])


def _check_width(schema: FeatureSchema, *vectors):
    for v in vectors:
        if np.shape(v)[-1] != len(schema):
            raise SchemaMismatch(f"expected {len(schema)} features, got {np.shape(v)[-1]}")


def longitudinal_distance(x, e, diffs: DiffMatrix, profile: NormalizationProfile,
                          config: LongitudinalConfig = LongitudinalConfig()) -> float:
    """Mean distance from ``e - x`` to its ``s`` nearest observed changes.

    Minimising the average over all size-``s`` index sets picks exactly the
    ``s`` smallest per-row distances, so no combinatorial search is needed.
    """
    _check_width(diffs.schema, x, e)
    n = len(diffs)
    if config.s > n:
        raise STooLarge(config.s, n)
    x = np.asarray(x, dtype=float)
    delta = change_codes(diffs.schema, x, e)
    dist = row_distances(delta, diffs.codes, profile, config.norm, origin=x)
    nearest = np.sort(dist)[:config.s]
    if not np.all(np.isfinite(nearest)):
        return math.fsum(nearest) / config.s
    # the mean is evaluated exactly and rounded once: the result is independent
    # of row order and never decreases as s grows, even across ties
    return float(sum(map(Fraction, nearest.tolist())) / config.s)


def longitudinal_distances(x, E, diffs, profile, config=LongitudinalConfig()) -> np.ndarray:
    """:func:`longitudinal_distance` for each row of ``E``."""
    return np.array([longitudinal_distance(x, e, diffs, profile, config) for e in np.atleast_2d(E)])


def proximity(x, e, cross_profile: NormalizationProfile) -> float:
    """MAD-weighted L1 over continuous features plus a count of changed categoricals."""
    return float(proximities(x, np.asarray(e, dtype=float)[None, :], cross_profile)[0])


def proximities(x, E, cross_profile: NormalizationProfile) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    E = np.atleast_2d(np.asarray(E, dtype=float))
    if x.shape[0] != len(cross_profile.kinds) or E.shape[1] != x.shape[0]:
        raise SchemaMismatch("vectors and profile disagree on width")
    cat = cross_profile.categorical
    num = np.abs(E - x)
    num[:, cat] = (E[:, cat] != x[cat])
    div = np.where(cat, 1.0, cross_profile.divisors)
    return _safe_div(num, div).sum(axis=1)


def sparsity(x, e) -> int:
    """Number of features whose value differs (exact comparison)."""
    x, e = np.asarray(x, dtype=float), np.asarray(e, dtype=float)
    if x.shape != e.shape:
        raise SchemaMismatch("vectors differ in length")
    return int(np.count_nonzero(x != e))


def sparsities(x, E) -> np.ndarray:
    E = np.atleast_2d(np.asarray(E, dtype=float))
    if E.shape[1] != np.shape(x)[0]:
        raise SchemaMismatch("vectors differ in length")
    return np.count_nonzero(E != np.asarray(x, dtype=float), axis=1)
