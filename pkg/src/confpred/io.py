"""CSV ingestion of datasets and plot-ready CSV output."""

from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core import ClassAlphabet, DataError, Dataset, RealLine


@dataclass(frozen=True)
class CsvSchema:
    """How to read a dataset file.

    By default the last column is the label and every other column is a
    feature, in file order. ``label_kind`` is ``"class"`` or ``"real"``.
    Without an explicit ``alphabet`` the sorted distinct labels are used.
    """

    label_kind: str = "class"
    alphabet: tuple | None = None
    feature_columns: tuple | None = None
    label_column: str | None = None

    def __post_init__(self):
        if self.label_kind not in ("class", "real"):
            raise ValueError(f"label kind must be 'class' or 'real', got {self.label_kind!r}")


def _parse_real(cell: str, what: str, line: int, path) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"{path}, line {line}: non-numeric {what} {cell!r}") from None
    if not math.isfinite(value):
        raise DataError(f"{path}, line {line}: non-finite {what} {cell!r}")
    return value


def read_table(path, schema: CsvSchema, require_label: bool = True):
    """Parse a CSV into (features, raw labels or None, feature names, label column name)."""
    path = Path(path)
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        label_col = schema.label_column or header[-1]
        if schema.feature_columns is not None:
            features = list(schema.feature_columns)
        else:
            features = [h for h in header if h != label_col]
        missing = [c for c in features if c not in header]
        if missing:
            raise DataError(f"{path}: feature columns {missing} not in header")
        has_label = label_col in header
        if require_label and not has_label:
            raise DataError(f"{path}: label column {label_col!r} not in header")
        if not features:
            raise DataError(f"{path}: no feature columns")
        f_idx = [header.index(c) for c in features]
        l_idx = header.index(label_col) if has_label else None

        rows, labels = [], []
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}, line {line}: ragged row with {len(row)} cells, expected {len(header)}"
                )
            if any(not c.strip() for c in row):
                raise DataError(f"{path}, line {line}: ragged row with a missing cell")
            rows.append([_parse_real(row[i], f"feature {header[i]!r}", line, path) for i in f_idx])
            if has_label:
                labels.append((line, row[l_idx].strip()))
    X = np.array(rows, dtype=np.float64).reshape(-1, len(features))
    return X, (labels if has_label else None), features, label_col


def _to_dataset(X, labels, schema: CsvSchema, path, alphabet=None) -> Dataset:
    if schema.label_kind == "real":
        y = [_parse_real(v, "label", line, path) for line, v in labels]
        return Dataset(X, y, RealLine(), dim=X.shape[1])
    symbols = alphabet or schema.alphabet or tuple(sorted({v for _, v in labels}))
    try:
        space = ClassAlphabet(tuple(symbols))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None
    for line, v in labels:
        if v not in space:
            raise DataError(f"{path}, line {line}: unknown class label {v!r}")
    return Dataset(X, [v for _, v in labels], space, dim=X.shape[1])


def load_csv(path, schema: CsvSchema = CsvSchema()) -> Dataset:
    """Read a labelled dataset: header row, feature columns, one label column."""
    X, labels, _, _ = read_table(path, schema)
    return _to_dataset(X, labels, schema, path)


def _format(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def write_table(columns: Mapping[str, Sequence], path) -> Path:
    """Write columns as CSV atomically (nothing is left behind on failure)."""
    names = list(columns)
    if not names:
        raise ValueError("nothing to write")
    lengths = {len(columns[c]) for c in names}
    if len(lengths) != 1:
        raise ValueError(f"columns have unequal lengths {sorted(lengths)}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(names)
            for row in zip(*(columns[c] for c in names)):
                writer.writerow([_format(v) for v in row])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def emit_curves(series: Mapping[str, Sequence], path) -> Path:
    """Numeric series as CSV: x column first, one row per x value, 12 significant digits."""
    if not series:
        raise ValueError("no series to write")
    for name, values in series.items():
        if len(values) == 0:
            raise ValueError(f"series {name!r} is empty")
    return write_table(series, path)
