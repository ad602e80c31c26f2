"""Feature schemas, tabular datasets and longitudinal pairs.

Feature vectors are plain ``float64`` numpy arrays laid out in schema order.
Continuous features hold their value; categorical features hold the index
of their level in the schema's level list. A dataset is an ``(n, d)`` array
of such rows.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AlignmentError,
    BadLabel,
    DuplicateFeatureName,
    EmptyLevelList,
    MalformedDocument,
    MissingColumn,
    MissingFile,
    MissingValue,
    NonFiniteValue,
    RowCountMismatch,
    SchemaMismatch,
    UnknownLevel,
)

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"

MONOTONE = ("none", "nondecreasing", "nonincreasing")

FeatureVector = np.ndarray


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str = CONTINUOUS
    levels: tuple[str, ...] = ()
    immutable: bool = False
    monotone: str = "none"

    def __post_init__(self):
        if not self.name:
            raise MalformedDocument("name", "feature names must be nonempty")
        if self.kind not in (CONTINUOUS, CATEGORICAL):
            raise MalformedDocument(self.name, f"unknown kind {self.kind!r}")
        if self.monotone not in MONOTONE:
            raise MalformedDocument(self.name, f"monotone must be one of {MONOTONE}")
        if self.kind == CATEGORICAL:
            if len(set(self.levels)) < 2:
                raise EmptyLevelList(self.name)
            if len(set(self.levels)) != len(self.levels):
                raise MalformedDocument(self.name, "repeated categorical level")
        elif self.levels:
            raise MalformedDocument(self.name, "continuous features take no levels")

    @property
    def is_categorical(self) -> bool:
        return self.kind == CATEGORICAL

    def level_index(self, value: str) -> int:
        return self.levels.index(value)


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered collection of :class:`FeatureSpec`.

    ``id_column`` optionally names a CSV column that identifies individuals;
    it is not a feature.
    """

    features: tuple[FeatureSpec, ...]
    id_column: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        if not self.features:
            raise MalformedDocument("features", "at least one feature is required")
        seen = set()
        for spec in self.features:
            if spec.name in seen:
                raise DuplicateFeatureName(spec.name)
            seen.add(spec.name)

    def __len__(self):
        return len(self.features)

    def __iter__(self):
        return iter(self.features)

    def __getitem__(self, i):
        if isinstance(i, str):
            i = self.index(i)
        return self.features[i]

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def index(self, name: str) -> int:
        for i, spec in enumerate(self.features):
            if spec.name == name:
                return i
        raise SchemaMismatch(f"no feature named {name!r}")

    @cached_property
    def categorical_mask(self) -> np.ndarray:
        return np.array([f.is_categorical for f in self.features])

    @cached_property
    def immutable_mask(self) -> np.ndarray:
        return np.array([f.immutable for f in self.features])

    @cached_property
    def n_levels(self) -> np.ndarray:
        return np.array([len(f.levels) for f in self.features])

    def to_dict(self) -> dict:
        feats = []
        for f in self.features:
            kind = CONTINUOUS if not f.is_categorical else {CATEGORICAL: list(f.levels)}
            feats.append({"name": f.name, "kind": kind,
                          "immutable": f.immutable, "monotone": f.monotone})
        doc = {"features": feats}
        if self.id_column is not None:
            doc["id_column"] = self.id_column
        return doc

    @cached_property
    def fingerprint(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def validate_vector(self, v) -> np.ndarray:
        """Return ``v`` as a float array after checking it against the schema."""
        v = np.asarray(v, dtype=float)
        if v.ndim != 1 or v.shape[0] != len(self):
            raise SchemaMismatch(f"expected a vector of {len(self)} features, got shape {v.shape}")
        self._check_values(v[None, :])
        return v

    def validate_rows(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self):
            raise SchemaMismatch(f"expected rows of {len(self)} features, got shape {X.shape}")
        self._check_values(X)
        return X

    def _check_values(self, X):
        if not np.all(np.isfinite(X)):
            raise SchemaMismatch("feature values must be finite")
        cat = self.categorical_mask
        if cat.any():
            C = X[:, cat]
            if np.any(C != np.round(C)) or np.any(C < 0) or np.any(C >= self.n_levels[cat]):
                raise SchemaMismatch("categorical entries must be valid level indices")

    def format_value(self, j: int, value: float) -> str:
        spec = self.features[j]
        if spec.is_categorical:
            return spec.levels[int(value)]
        return repr(float(value))


def _parse_feature(i, doc) -> FeatureSpec:
    where = f"features[{i}]"
    if not isinstance(doc, dict):
        raise MalformedDocument(where, "feature entries must be objects")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise MalformedDocument(f"{where}.name", "must be a nonempty string")
    kind = doc.get("kind")
    levels: tuple[str, ...] = ()
    if kind == CONTINUOUS:
        pass
    elif isinstance(kind, dict) and set(kind) == {CATEGORICAL}:
        raw = kind[CATEGORICAL]
        if not isinstance(raw, list) or not all(isinstance(l, str) for l in raw):
            raise MalformedDocument(f"{where}.kind", "categorical levels must be a list of strings")
        levels = tuple(raw)
        if len(set(levels)) < 2:
            raise EmptyLevelList(name)
        kind = CATEGORICAL
    else:
        raise MalformedDocument(f"{where}.kind", 'expected "continuous" or {"categorical": [...]}')
    immutable = doc.get("immutable", False)
    if not isinstance(immutable, bool):
        raise MalformedDocument(f"{where}.immutable", "must be a boolean")
    monotone = doc.get("monotone", "none")
    if monotone not in MONOTONE:
        raise MalformedDocument(f"{where}.monotone", f"must be one of {MONOTONE}")
    return FeatureSpec(name, kind, levels, immutable, monotone)


def schema_from_dict(doc) -> FeatureSchema:
    if not isinstance(doc, dict) or not isinstance(doc.get("features"), list):
        raise MalformedDocument("features", "expected an object with a 'features' list")
    if not doc["features"]:
        raise MalformedDocument("features", "at least one feature is required")
    specs = [_parse_feature(i, f) for i, f in enumerate(doc["features"])]
    id_column = doc.get("id_column")
    if id_column is not None and not isinstance(id_column, str):
        raise MalformedDocument("id_column", "must be a string")
    return FeatureSchema(tuple(specs), id_column)


def load_schema(path) -> FeatureSchema:
    """Read a JSON schema file.

    Raises :class:`MissingFile`, :class:`MalformedDocument`,
    :class:`DuplicateFeatureName` or :class:`EmptyLevelList`.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedDocument("<root>", str(exc)) from None
    return schema_from_dict(doc)


def save_schema(schema: FeatureSchema, path) -> None:
    Path(path).write_text(json.dumps(schema.to_dict(), indent=2) + "\n", encoding="utf-8")


def _readonly(a):
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    schema: FeatureSchema
    X: np.ndarray
    labels: Optional[np.ndarray] = None
    ids: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.size == 0:
            X = X.reshape(0, len(self.schema))
        X = self.schema.validate_rows(X)
        object.__setattr__(self, "X", _readonly(X))
        if self.labels is not None:
            y = np.asarray(self.labels)
            if y.shape != (X.shape[0],) or not np.all((y == 0) | (y == 1)):
                raise SchemaMismatch("labels must hold one 0/1 entry per row")
            object.__setattr__(self, "labels", _readonly(y.astype(np.int64)))
        if self.ids is not None:
            if len(self.ids) != X.shape[0]:
                raise SchemaMismatch("ids must hold one entry per row")
            object.__setattr__(self, "ids", tuple(self.ids))

    def __len__(self):
        return self.X.shape[0]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.schema, self.X[idx],
                       None if self.labels is None else self.labels[idx],
                       None if self.ids is None else tuple(self.ids[i] for i in idx))


def load_dataset(path, schema: FeatureSchema, label_column: Optional[str] = None) -> Dataset:
    """Parse a CSV file with a header row into a :class:`Dataset`.

    Extra columns are ignored. Empty cells are rejected.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise MalformedDocument(str(path), "missing header row")
        body = list(reader)
    col = {name: i for i, name in enumerate(header)}
    wanted = schema.names + ([label_column] if label_column else [])
    if schema.id_column:
        wanted.append(schema.id_column)
    for name in wanted:
        if name not in col:
            raise MissingColumn(name)

    X = np.empty((len(body), len(schema)))
    y = np.empty(len(body), dtype=np.int64) if label_column else None
    ids = [] if schema.id_column else None
    for r, cells in enumerate(body):
        if len(cells) != len(header):
            raise MalformedDocument(f"{path}:row {r}", f"expected {len(header)} cells, got {len(cells)}")
        for j, spec in enumerate(schema):
            raw = cells[col[spec.name]]
            if raw == "":
                raise MissingValue(r, spec.name)
            if spec.is_categorical:
                if raw not in spec.levels:
                    raise UnknownLevel(r, spec.name, raw)
                X[r, j] = spec.levels.index(raw)
            else:
                try:
                    value = float(raw)
                except ValueError:
                    raise NonFiniteValue(r, spec.name) from None
                if not math.isfinite(value):
                    raise NonFiniteValue(r, spec.name)
                X[r, j] = value
        if label_column:
            raw = cells[col[label_column]].strip()
            if raw not in ("0", "1", "0.0", "1.0"):
                raise BadLabel(r)
            y[r] = int(float(raw))
        if ids is not None:
            ids.append(cells[col[schema.id_column]])
    return Dataset(schema, X, y, None if ids is None else tuple(ids))


def write_dataset(data: Dataset, path, label_column: Optional[str] = None) -> None:
    """Write ``data`` as CSV; categoricals by level name, continuous via ``repr``."""
    schema = data.schema
    header = ([schema.id_column] if data.ids is not None else []) + schema.names
    if label_column and data.labels is not None:
        header.append(label_column)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, row in enumerate(data.X):
            cells = [data.ids[i]] if data.ids is not None else []
            cells += [schema.format_value(j, v) for j, v in enumerate(row)]
            if label_column and data.labels is not None:
                cells.append(str(int(data.labels[i])))
            w.writerow(cells)


@dataclass(frozen=True)
class LongitudinalPair:
    schema: FeatureSchema
    time1: np.ndarray
    time2: np.ndarray

    def __post_init__(self):
        A = self.schema.validate_rows(self.time1)
        B = self.schema.validate_rows(self.time2)
        if A.shape[0] != B.shape[0] or A.shape[0] == 0:
            raise RowCountMismatch(A.shape[0], B.shape[0])
        object.__setattr__(self, "time1", _readonly(A))
        object.__setattr__(self, "time2", _readonly(B))

    def __len__(self):
        return self.time1.shape[0]


def load_longitudinal(path_t1, path_t2, schema: FeatureSchema) -> LongitudinalPair:
    """Load two row-aligned CSV snapshots of the same individuals."""
    a = load_dataset(path_t1, schema)
    b = load_dataset(path_t2, schema)
    if len(a) != len(b) or len(a) == 0:
        raise RowCountMismatch(len(a), len(b))
    if a.ids is not None:
        for r, (i1, i2) in enumerate(zip(a.ids, b.ids)):
            if i1 != i2:
                raise AlignmentError(r, i1, i2)
    return LongitudinalPair(schema, a.X, b.X)


NO_CHANGE = -1.0


@dataclass(frozen=True)
class DiffMatrix:
    """Observed changes ``B - A`` between two time points.

    Continuous columns of :attr:`delta` are real differences. Categorical
    changes are kept as explicit transitions: :attr:`source` and
    :attr:`target` hold the level at each time point.
    """

    schema: FeatureSchema
    source: np.ndarray
    target: np.ndarray

    def __len__(self):
        return self.source.shape[0]

    @cached_property
    def delta(self) -> np.ndarray:
        d = self.target - self.source
        d[:, self.schema.categorical_mask] = 0.0
        d.flags.writeable = False
        return d

    @cached_property
    def codes(self) -> np.ndarray:
        """Change codes: real delta for continuous, to-level or ``NO_CHANGE`` for categorical."""
        return change_codes(self.schema, self.source, self.target)

    def transitions(self, j: int) -> list[tuple[int, int]]:
        if not self.schema[j].is_categorical:
            raise SchemaMismatch(f"feature {self.schema[j].name!r} is not categorical")
        return [(int(a), int(b)) for a, b in zip(self.source[:, j], self.target[:, j])]

    def permuted(self, order) -> "DiffMatrix":
        order = np.asarray(order)
        return DiffMatrix(self.schema, _readonly(self.source[order]), _readonly(self.target[order]))


def change_codes(schema: FeatureSchema, start, end) -> np.ndarray:
    """Encode the change from ``start`` to ``end`` (vectors or row arrays).

    Continuous entries become ``end - start``. Categorical entries become the
    destination level index, or ``NO_CHANGE`` when the level is unchanged.
    """
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    codes = end - start
    cat = schema.categorical_mask
    if cat.any():
        s, e = start[..., cat], end[..., cat]
        codes[..., cat] = np.where(s == e, NO_CHANGE, e)
    if codes.ndim > 1:
        codes.flags.writeable = False
    return codes


def compute_diffs(pair: LongitudinalPair) -> DiffMatrix:
    return DiffMatrix(pair.schema, pair.time1, pair.time2)
