"""Genetic search with and without the longitudinal objective.

Immutable features are left searchable on purpose: only the objective
decides whether they move. Takes about ten seconds with four workers.
Run with ``python3 demos/03_default_vs_longitudinal.py``.
"""
import numpy as np

from longcf import (DEFAULT_FITNESS, LONGITUDINAL_FITNESS, GeneticParams, ScoringContext, SearchConstraints,
                    SimulationConfig, audit, build_cross_profile, build_profile, compute_diffs, explain_subjects,
                    make_adult_like, simulate_second_timepoint, train_forest)

full = make_adult_like(2000, seed=0)
test, train = full.subset(np.arange(200)), full.subset(np.arange(200, 2000))
diffs = compute_diffs(simulate_second_timepoint(train, SimulationConfig(seed=1)))
model = train_forest(train, n_trees=30, max_depth=6, seed=0)
ctx = ScoringContext(model, build_cross_profile(train), diffs, build_profile(diffs))
cons = SearchConstraints.from_data(train, 1, respect_immutable=False)
todo = np.flatnonzero(model.predict(test.X) == 0)[:50]
print(f"{len(todo)} subjects predicted below the income line")

print(f"{'objectives':<28}{'validity':>9}{'all valid':>11}{'immutable':>11}{'changed':>9}")
for name, config in (("proximity + sparsity", DEFAULT_FITNESS), ("proximity + longitudinal", LONGITUDINAL_FITNESS)):
    sets = explain_subjects(test.X[todo], todo, ctx, cons, "genetic", config, GeneticParams(k=10), seed=0, jobs=4)
    a = audit(sets, train.schema)
    print(f"{name:<28}{a.mean_validity:>9.2f}{a.pct_validity_1:>10.0f}%{a.pct_immutable:>10.1f}%"
          f"{a.mean_features_changed:>9.2f}")

# The sparse objective happily flips race or sex when that is the cheapest
# single edit; the longitudinal one never does, at some cost in validity.
