"""How the longitudinal distance scores a proposed change.

Run with ``python3 demos/01_metric_walkthrough.py``.
"""
import numpy as np

from longcf import (FeatureSchema, FeatureSpec, LongitudinalConfig, LongitudinalPair, build_profile,
                    compute_diffs, longitudinal_distance)
from longcf.schema import CATEGORICAL

# %% A tiny panel: hours worked, a job title, and a field nobody ever changes.
schema = FeatureSchema((
    FeatureSpec("hours"),
    FeatureSpec("job", CATEGORICAL, ("clerk", "manager", "analyst")),
    FeatureSpec("birth_country", CATEGORICAL, ("here", "elsewhere"), immutable=True),
))
t1 = np.array([[40, 0, 0], [35, 0, 1], [45, 1, 0], [20, 2, 0], [40, 0, 0]], dtype=float)
t2 = np.array([[45, 1, 0], [35, 0, 1], [50, 1, 0], [30, 2, 0], [40, 2, 0]], dtype=float)
diffs = compute_diffs(LongitudinalPair(schema, t1, t2))
print("observed changes (categorical codes are destination levels, -1 = no change):")
print(diffs.codes)

# %% Every feature is divided by the spread of its own changes plus a small tolerance.
profile = build_profile(diffs, "MAD", tolerance=1e-5)
for spec, div in zip(schema, profile.divisors):
    print(f"  {spec.name:<14} divisor {div:.5g}")

# %% Three proposals for the same person.
x = np.array([40, 0, 0], dtype=float)
proposals = {
    "replay a seen change (+5 h, promoted)": [45, 1, 0],
    "an unusual jump (+25 h)": [65, 0, 0],
    "move birth country": [40, 0, 1],
}
for label, e in proposals.items():
    d1 = longitudinal_distance(x, np.array(e, float), diffs, profile)
    d3 = longitudinal_distance(x, np.array(e, float), diffs, profile, LongitudinalConfig(s=3))
    print(f"{label:<40} s=1: {d1:>12.4f}   s=3: {d3:>12.4f}")

# A change along a feature that never moved costs about 1/tolerance per unit,
# which is what makes it easy to flag in an audit.
