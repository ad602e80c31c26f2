import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from longcf.errors import (AlignmentError, BadLabel, DuplicateFeatureName, EmptyLevelList,
                           MalformedDocument, MissingColumn, MissingFile, MissingValue,
                           NonFiniteValue, RowCountMismatch, UnknownLevel)
from longcf.schema import (CATEGORICAL, NO_CHANGE, Dataset, FeatureSchema, FeatureSpec,
                           LongitudinalPair, compute_diffs, load_dataset, load_longitudinal,
                           load_schema, save_schema, write_dataset)

from conftest import mixed_schema, random_rows


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return path


def write_csv(path, rows):
    with path.open("w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    return path


def occupation_levels():
    return [f"occ{i}" for i in range(14)]


# --- schema files --------------------------------------------------------------

def test_load_schema_three_features(tmp_path):
    doc = {"features": [
        {"name": "age", "kind": "continuous"},
        {"name": "occupation", "kind": {"categorical": occupation_levels()}},
        {"name": "race", "kind": {"categorical": list("abcde")}, "immutable": True},
    ]}
    schema = load_schema(write_json(tmp_path / "s.json", doc))
    assert schema.names == ["age", "occupation", "race"]
    assert schema["race"].immutable and not schema["occupation"].immutable
    assert len(schema["occupation"].levels) == 14


def test_duplicate_feature_name(tmp_path):
    doc = {"features": [{"name": "age", "kind": "continuous"}, {"name": "age", "kind": "continuous"}]}
    with pytest.raises(DuplicateFeatureName) as exc:
        load_schema(write_json(tmp_path / "s.json", doc))
    assert "age" in str(exc.value)


def test_single_level_categorical(tmp_path):
    doc = {"features": [{"name": "flag", "kind": {"categorical": ["only"]}}]}
    with pytest.raises(EmptyLevelList) as exc:
        load_schema(write_json(tmp_path / "s.json", doc))
    assert "flag" in str(exc.value)


def test_missing_and_malformed_schema(tmp_path):
    with pytest.raises(MissingFile):
        load_schema(tmp_path / "nope.json")
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(MalformedDocument):
        load_schema(tmp_path / "bad.json")
    with pytest.raises(MalformedDocument):
        load_schema(write_json(tmp_path / "k.json", {"features": [{"name": "a", "kind": "weird"}]}))


def test_schema_round_trip(tmp_path, toy_schema):
    save_schema(toy_schema, tmp_path / "s.json")
    again = load_schema(tmp_path / "s.json")
    assert again == toy_schema
    assert again.fingerprint == toy_schema.fingerprint


# --- data files ----------------------------------------------------------------

def two_feature_schema():
    return FeatureSchema((FeatureSpec("age"),
                          FeatureSpec("occupation", CATEGORICAL, ("Sales", "Exec", "Craft"))))


def test_load_dataset_three_rows(tmp_path):
    p = write_csv(tmp_path / "d.csv", [["age", "occupation", "y"], ["30", "Sales", "0"],
                                       ["41.5", "Exec", "1"], ["22", "Craft", "1"]])
    data = load_dataset(p, two_feature_schema(), "y")
    assert len(data) == 3
    assert data.X[1].tolist() == [41.5, 1.0]
    assert data.labels.tolist() == [0, 1, 1]


@pytest.mark.parametrize("rows,err", [
    ([["age", "occupation"], ["30", "Astronaut"]], UnknownLevel),
    ([["age", "occupation"], ["inf", "Sales"]], NonFiniteValue),
    ([["age", "occupation"], ["nan", "Sales"]], NonFiniteValue),
    ([["age"], ["30"]], MissingColumn),
    ([["age", "occupation"], ["", "Sales"]], MissingValue),
])
def test_load_dataset_errors(tmp_path, rows, err):
    with pytest.raises(err):
        load_dataset(write_csv(tmp_path / "d.csv", rows), two_feature_schema())


def test_bad_label(tmp_path):
    p = write_csv(tmp_path / "d.csv", [["age", "occupation", "y"], ["30", "Sales", "2"]])
    with pytest.raises(BadLabel):
        load_dataset(p, two_feature_schema(), "y")


def test_unknown_level_names_row_and_value(tmp_path):
    p = write_csv(tmp_path / "d.csv", [["age", "occupation"], ["30", "Sales"], ["31", "Astronaut"]])
    with pytest.raises(UnknownLevel) as exc:
        load_dataset(p, two_feature_schema())
    assert "Astronaut" in str(exc.value) and "occupation" in str(exc.value)


def test_dataset_csv_round_trip(tmp_path, rng):
    schema = mixed_schema("cxcx")
    X = random_rows(schema, 50, rng)
    X[0, 0] = 0.1 + 0.2          # not representable in short decimal
    X[1, 2] = -1e-300
    data = Dataset(schema, X, rng.integers(0, 2, 50))
    write_dataset(data, tmp_path / "d.csv", "y")
    again = load_dataset(tmp_path / "d.csv", schema, "y")
    assert np.array_equal(again.X, data.X)
    assert np.array_equal(again.labels, data.labels)
    with (tmp_path / "d.csv").open() as fh:
        first = next(csv.DictReader(fh))
    assert first["f1"].startswith("l")


# --- longitudinal pairs --------------------------------------------------------

def rows_for(n, offset=0):
    return [["age", "occupation"]] + [[str(20 + i + offset), "Sales"] for i in range(n)]


def test_load_longitudinal(tmp_path):
    pair = load_longitudinal(write_csv(tmp_path / "a.csv", rows_for(5)),
                             write_csv(tmp_path / "b.csv", rows_for(5, 1)), two_feature_schema())
    assert len(pair) == 5


def test_row_count_mismatch(tmp_path):
    with pytest.raises(RowCountMismatch) as exc:
        load_longitudinal(write_csv(tmp_path / "a.csv", rows_for(5)),
                          write_csv(tmp_path / "b.csv", rows_for(6)), two_feature_schema())
    assert "5" in str(exc.value) and "6" in str(exc.value)


def test_empty_second_file(tmp_path):
    with pytest.raises(RowCountMismatch):
        load_longitudinal(write_csv(tmp_path / "a.csv", rows_for(5)),
                          write_csv(tmp_path / "b.csv", rows_for(0)), two_feature_schema())


def test_id_alignment(tmp_path):
    schema = FeatureSchema((FeatureSpec("age"),), id_column="pid")
    a = write_csv(tmp_path / "a.csv", [["pid", "age"], ["p1", "3"], ["p2", "4"]])
    b = write_csv(tmp_path / "b.csv", [["pid", "age"], ["p1", "5"], ["p3", "4"]])
    with pytest.raises(AlignmentError):
        load_longitudinal(a, b, schema)
    ok = write_csv(tmp_path / "c.csv", [["pid", "age"], ["p1", "5"], ["p2", "4"]])
    assert len(load_longitudinal(a, ok, schema)) == 2


# --- differences ---------------------------------------------------------------

def test_diff_examples():
    schema = two_feature_schema()
    d = compute_diffs(LongitudinalPair(schema, [[30, 0]], [[33, 1]]))
    assert d.delta[0, 0] == 3
    assert d.transitions(1) == [(0, 1)]
    assert d.codes[0].tolist() == [3.0, 1.0]

    one = FeatureSchema((FeatureSpec("v"),))
    d = compute_diffs(LongitudinalPair(one, [[10], [20]], [[12], [19]]))
    assert d.delta[:, 0].tolist() == [2.0, -1.0]


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**31 - 1))
def test_self_difference_is_null(n, seed):
    rng = np.random.default_rng(seed)
    schema = mixed_schema("cxcx")
    A = random_rows(schema, n, rng)
    d = compute_diffs(LongitudinalPair(schema, A, A))
    assert np.all(d.delta == 0)
    for j in (1, 3):
        assert all(a == b for a, b in d.transitions(j))
        assert np.all(d.codes[:, j] == NO_CHANGE)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 20), st.floats(-1e3, 1e3, allow_nan=False), st.integers(0, 2**31 - 1))
def test_shift_adds_constant(n, c, seed):
    rng = np.random.default_rng(seed)
    schema = mixed_schema("cc")
    A = np.round(random_rows(schema, n, rng), 3)
    B = np.round(random_rows(schema, n, rng), 3)
    base = compute_diffs(LongitudinalPair(schema, A, B)).delta
    B2 = B.copy()
    B2[:, 0] += c
    shifted = compute_diffs(LongitudinalPair(schema, A, B2)).delta
    # exact in the sense of the arithmetic performed: (b + c) - a
    assert np.array_equal(shifted[:, 0], (B[:, 0] + c) - A[:, 0])
    assert np.allclose(shifted[:, 0] - base[:, 0], c, atol=1e-9)
    assert np.array_equal(shifted[:, 1], base[:, 1])


def test_arrays_are_read_only(toy_data):
    with pytest.raises(ValueError):
        toy_data.X[0, 0] = 1.0
