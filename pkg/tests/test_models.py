import json

import numpy as np
import pytest

from longcf.errors import DegenerateLabels, MalformedDocument, NoLabels, SchemaMismatch
from longcf.models import (LogisticModel, accuracy, load_model, model_from_dict, predict_class,
                           save_model, train_forest, train_logistic)
from longcf.schema import CATEGORICAL, Dataset, FeatureSchema, FeatureSpec

from conftest import mixed_schema, random_rows


def separable():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, (20, 2))
    X[:, 0] += np.where(X[:, 0] > 0, 0.3, -0.3)
    y = (X[:, 0] + 0.2 * X[:, 1] > 0).astype(int)
    return Dataset(mixed_schema("cc"), X, y)


def xor_set(n=200):
    rng = np.random.default_rng(1)
    X = rng.uniform(-1, 1, (n, 2))
    X += np.sign(X) * 0.1
    y = ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(int)
    return Dataset(mixed_schema("cc"), X, y)


def test_logistic_separable():
    assert accuracy(train_logistic(separable(), epochs=2000, learning_rate=1.0, seed=0), separable()) == 1.0


def test_logistic_label_errors():
    data = separable()
    with pytest.raises(DegenerateLabels):
        train_logistic(Dataset(data.schema, data.X, np.ones(len(data), dtype=int)))
    with pytest.raises(NoLabels):
        train_logistic(Dataset(data.schema, data.X))
    with pytest.raises(NoLabels):
        train_forest(Dataset(data.schema, data.X))


def test_logistic_determinism():
    a = train_logistic(separable(), seed=3)
    b = train_logistic(separable(), seed=3)
    assert a.to_dict() == b.to_dict()


def test_forest_xor():
    data = xor_set()
    model = train_forest(data, n_trees=50, max_depth=3, seed=0)
    assert accuracy(model, data) >= 0.95


def test_stump():
    rng = np.random.default_rng(2)
    X = rng.uniform(0, 10, (40, 2))
    y = (X[:, 1] > 5).astype(int)
    data = Dataset(mixed_schema("cc"), X, y)
    model = train_forest(data, n_trees=1, max_depth=1, seed=0, max_features=None, bootstrap=False)
    assert accuracy(model, data) == 1.0


def test_categorical_split():
    schema = FeatureSchema((FeatureSpec("c", CATEGORICAL, ("a", "b", "c")), FeatureSpec("v")))
    rng = np.random.default_rng(4)
    X = np.column_stack([rng.integers(0, 3, 90), rng.normal(size=90)]).astype(float)
    y = (X[:, 0] == 1).astype(int)
    model = train_forest(Dataset(schema, X, y), n_trees=1, max_depth=1, seed=0,
                         max_features=None, bootstrap=False)
    assert accuracy(model, Dataset(schema, X, y)) == 1.0


def test_forest_determinism(toy_data):
    a = train_forest(toy_data, n_trees=5, seed=11)
    b = train_forest(toy_data, n_trees=5, seed=11)
    assert a.to_dict() == b.to_dict()
    assert np.array_equal(a.predict_proba(toy_data.X), b.predict_proba(toy_data.X))
    c = train_forest(toy_data, n_trees=5, seed=12)
    assert a.to_dict() != c.to_dict()


def test_single_tree_aggregation(toy_data):
    model = train_forest(toy_data, n_trees=1, max_depth=4, seed=0)
    tree = model.trees[0]
    assert np.array_equal(model.predict_proba(toy_data.X), tree.predict_proba(toy_data.X))


@pytest.mark.parametrize("trainer", [lambda d: train_forest(d, n_trees=10, seed=0),
                                     lambda d: train_logistic(d, seed=0)])
def test_probability_bounds(toy_data, trainer):
    model = trainer(toy_data)
    rng = np.random.default_rng(0)
    X = random_rows(toy_data.schema, 10_000, rng)
    X[:, [0, 3]] = rng.uniform(-1e4, 1e4, (10_000, 2))
    p = model.predict_proba(X)
    assert p.shape == (10_000,)
    assert np.all((p >= 0) & (p <= 1))


class Fixed(LogisticModel):
    def __init__(self, schema, p):
        super().__init__(schema, np.zeros(1), 0.0, np.zeros(len(schema)), np.ones(len(schema)))
        self.p = p

    def _proba(self, X):
        return np.full(len(X), self.p)


@pytest.mark.parametrize("p,expected", [(0.7, 1), (0.5, 1), (0.2, 0)])
def test_predict_class_threshold(p, expected):
    schema = mixed_schema("c")
    assert predict_class(Fixed(schema, p), [0.0]) == expected


def test_predict_class_width():
    with pytest.raises(SchemaMismatch):
        predict_class(Fixed(mixed_schema("c"), 0.5), [0.0, 1.0])


@pytest.mark.parametrize("trainer", [lambda d: train_forest(d, n_trees=4, seed=0),
                                     lambda d: train_logistic(d, seed=0)])
def test_save_load_round_trip(tmp_path, toy_data, trainer):
    model = trainer(toy_data)
    save_model(model, tmp_path / "m.json")
    again = load_model(tmp_path / "m.json", toy_data.schema)
    assert np.array_equal(again.predict_proba(toy_data.X), model.predict_proba(toy_data.X))
    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["schema_fingerprint"] == toy_data.schema.fingerprint
    assert {"format_version", "variant", "hyperparameters"} <= set(doc)


def test_load_against_other_schema(tmp_path, toy_data):
    save_model(train_logistic(toy_data, seed=0), tmp_path / "m.json")
    with pytest.raises(SchemaMismatch):
        load_model(tmp_path / "m.json", mixed_schema("cxcc"))
    doc = json.loads((tmp_path / "m.json").read_text())
    doc["format_version"] = 99
    with pytest.raises(MalformedDocument):
        model_from_dict(doc, toy_data.schema)
