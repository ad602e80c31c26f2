import json

import numpy as np
import pytest

from longcf.schema import (CATEGORICAL, Dataset, FeatureSchema, FeatureSpec, LongitudinalPair,
                           save_schema)
from longcf.simulate import adult_like_schema


def mixed_schema(kinds, n_levels=3):
    """Schema from a string such as ``"ccx"``: c = continuous, x = categorical."""
    specs = []
    for j, k in enumerate(kinds):
        if k == "c":
            specs.append(FeatureSpec(f"f{j}"))
        else:
            specs.append(FeatureSpec(f"f{j}", CATEGORICAL, tuple(f"l{i}" for i in range(n_levels))))
    return FeatureSchema(tuple(specs))


def random_rows(schema, n, rng, integer=False):
    X = np.empty((n, len(schema)))
    for j, spec in enumerate(schema):
        if spec.is_categorical:
            X[:, j] = rng.integers(0, len(spec.levels), n)
        elif integer:
            X[:, j] = rng.integers(-3, 4, n)
        else:
            X[:, j] = rng.normal(0, 2, n)
    return X


def random_pair(schema, n, rng, p_change=0.5, integer=False):
    A = random_rows(schema, n, rng, integer)
    B = A.copy()
    fresh = random_rows(schema, n, rng, integer)
    move = rng.random(A.shape) < p_change
    B[move] = fresh[move]
    return LongitudinalPair(schema, A, B)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy_schema():
    return FeatureSchema((
        FeatureSpec("age", monotone="nondecreasing"),
        FeatureSpec("occupation", CATEGORICAL, ("Sales", "Exec", "Craft")),
        FeatureSpec("race", CATEGORICAL, ("a", "b"), immutable=True),
        FeatureSpec("hours"),
    ))


@pytest.fixture
def toy_data(toy_schema):
    rng = np.random.default_rng(3)
    n = 300
    age = rng.integers(20, 60, n).astype(float)
    occ = rng.integers(0, 3, n).astype(float)
    race = rng.integers(0, 2, n).astype(float)
    hours = rng.integers(20, 60, n).astype(float)
    y = ((hours - 40) / 10 + (occ == 1) + 0.5 * race + rng.normal(0, 0.3, n) > 0.8).astype(int)
    return Dataset(toy_schema, np.column_stack([age, occ, race, hours]), y)


def random_instance(rng, tol_choices=(0.0, 1e-5, 0.1), integer=None):
    """One random metric problem: (schema, pair, scaling, tol, s, x, e, norm).

    Up to 20 records over up to 5 mixed features with s <= 3. About a third
    of proposals replay an observed change.
    """
    d = int(rng.integers(1, 6))
    n = int(rng.integers(1, 21))
    kinds = "".join(rng.choice(["c", "x"], d))
    schema = mixed_schema(kinds, n_levels=3)
    if integer is None:
        integer = bool(rng.random() < 0.5)
    pair = random_pair(schema, n, rng, p_change=float(rng.uniform(0.1, 0.9)), integer=integer)
    kind = "MAD" if rng.random() < 0.5 else "AAD"
    tol = float(rng.choice(tol_choices))
    s = int(rng.integers(1, min(3, n) + 1))
    x = random_rows(schema, 1, rng, integer)[0]
    if rng.random() < 0.3:
        j = int(rng.integers(0, n))
        e = x + (pair.time2[j] - pair.time1[j])
        cat = schema.categorical_mask
        e[cat] = np.where(pair.time1[j, cat] == pair.time2[j, cat], x[cat], pair.time2[j, cat])
    else:
        e = random_rows(schema, 1, rng, integer)[0]
        keep = rng.random(d) < 0.4
        e[keep] = x[keep]
    norm = "l1" if rng.random() < 0.8 else "l2"
    return schema, pair, kind, tol, s, x, e, norm


def write_config(root, **overrides):
    save_schema(adult_like_schema(), root / "schema.json")
    doc = {
        "paths": {"schema": "schema.json", "data": "data/train.csv", "subjects": "data/test.csv",
                  "t1": "data/t1.csv", "t2": "data/t2.csv", "model": "out/model.json",
                  "counterfactuals": "out/counterfactuals.csv"},
        "label_column": "income",
        "simulation": {"seed": 1, "synthetic": {"n": 300, "seed": 0, "test_fraction": 0.2}},
        "model": {"variant": "forest", "n_trees": 8, "max_depth": 4, "seed": 0},
        "generation": {"method": "genetic", "k": 4, "seed": 0, "pop_size": 16, "max_generations": 30,
                       "max_subjects": 4,
                       "objectives": [{"kind": "proximity"}, {"kind": "longitudinal"}]},
        "metric": {"s": 1, "norm": "l1", "continuous_scaling": "MAD", "tolerance": 1e-5},
        "report": {"output_dir": "out", "thresholds": {"min": 0.01, "max": 1e6, "num": 9}},
    }
    for section, value in overrides.items():
        if isinstance(value, dict) and isinstance(doc.get(section), dict):
            doc[section] = {**doc[section], **value}
        else:
            doc[section] = value
    path = root / "run.json"
    path.write_text(json.dumps(doc))
    return path


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
