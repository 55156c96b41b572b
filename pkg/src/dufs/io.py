"""Reading datasets and writing results (CSV, JSON, flat config files).

All writers go through a temporary file and ``os.replace`` so a crashed run
never leaves a truncated artifact behind.  Floats are written with ``repr``
so identical runs produce byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidInputError

LABEL_COLUMN = "label"


@dataclass
class Dataset:
    X: np.ndarray
    feature_names: list
    labels: Optional[np.ndarray] = None


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    atomic_write_text(path, buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path, payload) -> None:
    atomic_write_text(path, json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def read_csv_dataset(path) -> Dataset:
    """Header row, an optional ``label`` column, numeric feature columns."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc.strerror}") from exc
    if not rows:
        raise InvalidInputError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    if not body:
        raise InvalidInputError(f"{path}: no data rows")
    label_idx = header.index(LABEL_COLUMN) if LABEL_COLUMN in header else None
    feat_idx = [j for j in range(len(header)) if j != label_idx]
    if not feat_idx:
        raise InvalidInputError(f"{path}: no feature columns")

    X = np.empty((len(body), len(feat_idx)))
    labels = [] if label_idx is not None else None
    for i, row in enumerate(body):
        line = i + 2
        if len(row) != len(header):
            raise InvalidInputError(
                f"{path}: row {line} has {len(row)} fields, expected {len(header)}")
        for out_j, j in enumerate(feat_idx):
            try:
                X[i, out_j] = float(row[j])
            except ValueError:
                raise InvalidInputError(
                    f"{path}: row {line}, column {j + 1} ({header[j]!r}): "
                    f"not a number: {row[j]!r}") from None
        if labels is not None:
            labels.append(row[label_idx].strip())
    if not np.all(np.isfinite(X)):
        bad = np.argwhere(~np.isfinite(X))[0]
        raise InvalidInputError(
            f"{path}: row {bad[0] + 2}, column {feat_idx[bad[1]] + 1}: non-finite value")
    if labels is not None:
        _, labels = np.unique(np.array(labels), return_inverse=True)
    return Dataset(X, [header[j] for j in feat_idx], labels)


def write_csv_dataset(path, X, feature_names=None, labels=None) -> None:
    X = np.asarray(X)
    names = list(feature_names) if feature_names else [f"f{j}" for j in range(X.shape[1])]
    header = names + ([LABEL_COLUMN] if labels is not None else [])
    rows = (list(X[i]) + ([int(labels[i])] if labels is not None else []) for i in range(len(X)))
    write_csv(path, header, rows)


def parse_value(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("", "none", "null"):
        return None
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc.strerror}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = parse_value(value)
    return out


def write_config(path, values: dict) -> None:
    lines = [f"{k} = {_fmt(v) if v is not None else 'none'}" for k, v in sorted(values.items())]
    atomic_write_text(path, "\n".join(lines) + "\n")
