"""Counterfactual CSV files.

One row per (subject, candidate)::

    subject_id, candidate_rank, method, valid, proximity, sparsity,
    longitudinal_distance, fitness, [longitudinal_rank,] <features...>

``candidate_rank`` is the 1-based position in the generator's fitness
ordering and never changes. ``longitudinal_rank`` appears once a file has
been re-ranked; rows are then ordered by it within each subject.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import MalformedDocument, MissingColumn, MissingFile, SchemaMismatch, UnknownLevel
from .generation import CounterfactualSet
from .schema import FeatureSchema

SCORE_COLUMNS = ["subject_id", "candidate_rank", "method", "valid", "proximity", "sparsity",
                 "longitudinal_distance", "fitness"]
LONG_RANK = "longitudinal_rank"


def _fmt(v: float) -> str:
    return repr(float(v))


def write_counterfactuals(sets: Sequence[CounterfactualSet], schema: FeatureSchema, path,
                          with_longitudinal_rank: bool = False) -> None:
    header = SCORE_COLUMNS + ([LONG_RANK] if with_longitudinal_rank else []) + schema.names
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for s in sets:
            for r in range(len(s)):
                row = [str(s.subject_id), str(int(s.fitness_rank[r]) + 1), s.method,
                       str(int(bool(s.valid[r]))), _fmt(s.proximity[r]), str(int(s.sparsity[r])),
                       _fmt(s.longitudinal[r]), _fmt(s.fitness[r])]
                if with_longitudinal_rank:
                    row.append(str(r + 1))
                row += [schema.format_value(j, v) for j, v in enumerate(s.candidates[r])]
                w.writerow(row)


def read_counterfactuals(path, schema: FeatureSchema, subjects: np.ndarray,
                         k: int = 10) -> list[CounterfactualSet]:
    """Rebuild :class:`CounterfactualSet` objects, grouped by subject in file order.

    ``subjects`` is the array of subject rows that ``subject_id`` indexes.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise MalformedDocument(str(path), "missing header row")
        for name in SCORE_COLUMNS + schema.names:
            if name not in reader.fieldnames:
                raise MissingColumn(name)
        rows = list(reader)

    groups: dict[int, list] = {}
    for r, row in enumerate(rows):
        try:
            sid = int(row["subject_id"])
        except ValueError:
            raise MalformedDocument(f"{path}:row {r}", "subject_id must be an integer") from None
        groups.setdefault(sid, []).append(row)

    out = []
    for sid, grp in groups.items():
        if not 0 <= sid < len(subjects):
            raise SchemaMismatch(f"subject_id {sid} has no matching subject row")
        E = np.empty((len(grp), len(schema)))
        for i, row in enumerate(grp):
            for j, spec in enumerate(schema):
                raw = row[spec.name]
                if spec.is_categorical:
                    if raw not in spec.levels:
                        raise UnknownLevel(i, spec.name, raw)
                    E[i, j] = spec.levels.index(raw)
                else:
                    E[i, j] = float(raw)
        col = lambda key, cast=float: np.array([cast(row[key]) for row in grp])
        out.append(CounterfactualSet(
            x=np.asarray(subjects[sid], dtype=float), candidates=E,
            valid=col("valid", int).astype(bool), proximity=col("proximity"),
            sparsity=col("sparsity", int), longitudinal=col("longitudinal_distance"),
            fitness=col("fitness"), method=grp[0]["method"], k_requested=k, subject_id=sid,
            fitness_rank=col("candidate_rank", int) - 1))
    return out
