"""Post-hoc plausibility scoring, threshold curves and summary audits."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Sequence

import numpy as np

from .errors import EmptyInput, SchemaMismatch
from .generation import CounterfactualSet
from .metrics import DEFAULT_TOLERANCE, LongitudinalConfig, NormalizationProfile, longitudinal_distances
from .schema import DiffMatrix, FeatureSchema

# cost of a unit change to a never-changed feature, in the same floating
# point arithmetic the metric uses (1 / 1e-5 rounds just below 1e5)
BIG_DISTANCE = 1.0 / DEFAULT_TOLERANCE


def score_set(cset: CounterfactualSet, diffs: DiffMatrix, profile: NormalizationProfile,
              config: LongitudinalConfig = LongitudinalConfig()) -> CounterfactualSet:
    """Attach longitudinal distances and sort by them.

    Ties keep valid candidates first, then the incoming order (stable), so
    scoring an already scored set is a no-op.
    """
    if cset.candidates.shape[1] != len(diffs.schema):
        raise SchemaMismatch("counterfactual set and differences use different schemas")
    if len(cset) == 0:
        return cset
    dist = longitudinal_distances(cset.x, cset.candidates, diffs, profile, config)
    scored = replace(cset, longitudinal=dist)
    order = np.lexsort((np.arange(len(dist)), ~scored.valid.astype(bool), dist))
    return scored.reorder(order)


@dataclass(frozen=True)
class ThresholdCurve:
    thresholds: np.ndarray
    any_fraction: np.ndarray
    mean_fraction: np.ndarray
    reference: float

    def rows(self):
        return zip(self.thresholds.tolist(), self.any_fraction.tolist(), self.mean_fraction.tolist())


def threshold_curve(scores: Sequence, thresholds, reference: float = float("nan")) -> ThresholdCurve:
    """Share of subjects with at least one explanation at or below each threshold,
    and the mean per-subject share of explanations at or below it.

    ``scores`` holds one sequence of longitudinal distances per subject, or
    :class:`CounterfactualSet` objects. A subject without explanations
    counts as zero in both curves.
    """
    if len(scores) == 0:
        raise EmptyInput("threshold curve over no subjects")
    t = np.asarray(thresholds, dtype=float)
    if t.ndim != 1 or len(t) == 0 or np.any(np.diff(t) < 0):
        raise EmptyInput("thresholds must be a nonempty ascending sequence")
    any_hits = np.zeros(len(t))
    mean_hits = np.zeros(len(t))
    for s in scores:
        v = np.asarray(s.longitudinal if isinstance(s, CounterfactualSet) else s, dtype=float)
        if v.size == 0:
            continue
        below = v[None, :] <= t[:, None]
        any_hits += below.any(axis=1)
        mean_hits += below.mean(axis=1)
    n = len(scores)
    return ThresholdCurve(t, any_hits / n, mean_hits / n, float(reference))


def one_observation_threshold(diffs: DiffMatrix, profile: NormalizationProfile) -> float:
    """Cost of a unit change seen in exactly one of the ``n`` records.

    Such a change has scale ``1/n``, so the cost is ``1 / (1/n + tol)``,
    i.e. ``n / (1 + n * tol)``.
    """
    n = len(diffs)
    return n / (1.0 + n * profile.tolerance)


@dataclass(frozen=True)
class AuditSummary:
    mean_validity: float
    pct_validity_0: float
    pct_validity_1: float
    pct_immutable: float
    pct_big_distance: float
    mean_features_changed: float
    n_subjects: int = 0
    n_counterfactuals: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def audit(sets: Sequence[CounterfactualSet], schema: FeatureSchema,
          diffs: DiffMatrix | None = None, cutoff: float = BIG_DISTANCE) -> AuditSummary:
    """Validity, immutability and large-distance statistics over subjects.

    Per-subject validity is the share of the *requested* ``k`` that came
    back valid, so a search that found too few candidates is not rewarded.
    Immutability refers to the schema flag only; ``diffs`` is optional and
    only checked for schema agreement.
    """
    if diffs is not None and diffs.schema.fingerprint != schema.fingerprint:
        raise SchemaMismatch("audit schema differs from the differences' schema")
    if len(sets) == 0:
        raise EmptyInput("audit over no subjects")
    imm = schema.immutable_mask
    per_subject, zero, full = [], 0, 0
    n_cf = n_imm = n_big = 0
    changed = 0
    for s in sets:
        k = max(s.k_requested, 1)
        nv = s.n_valid
        per_subject.append(nv / k)
        zero += nv == 0
        full += nv >= s.k_requested
        if len(s):
            diff = s.candidates != s.x
            n_cf += len(s)
            n_imm += int(np.count_nonzero(diff[:, imm].any(axis=1)))
            n_big += int(np.count_nonzero(np.asarray(s.longitudinal) >= cutoff))
            changed += int(diff.sum())
    n = len(sets)
    pct = lambda a, b: 100.0 * a / b if b else 0.0
    return AuditSummary(
        mean_validity=float(np.mean(per_subject)),
        pct_validity_0=pct(zero, n),
        pct_validity_1=pct(full, n),
        pct_immutable=pct(n_imm, n_cf),
        pct_big_distance=pct(n_big, n_cf),
        mean_features_changed=changed / n_cf if n_cf else 0.0,
        n_subjects=n,
        n_counterfactuals=n_cf,
    )


def log_grid(lo: float = 1e-2, hi: float = 1e6, num: int = 33) -> np.ndarray:
    return np.logspace(np.log10(lo), np.log10(hi), num)
