"""Readers and writers for the two on-disk formats.

Model files are JSON::

    {"K": 2, "classes": [{"weight": 0.5, "probs": [0.2475, 0.2475]}, ...]}

Table files are CSV with header ``pattern,count``, one row per observable
pattern (a K-character '0'/'1' string in source order); rows may appear in
any order but every pattern must appear exactly once.

Readers validate every invariant and report the first violation with its
path (e.g. ``classes[1].probs[0]``).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InvalidModelError, InvalidTableError
from .model import ContingencyTable, LatentClassModel
from .patterns import MAX_SOURCES, MIN_SOURCES, PatternOrder


def parse_model(doc: Any, *, require_distinct: bool = True) -> LatentClassModel:
    """Build a model from a decoded JSON document, validating as we go."""
    if not isinstance(doc, dict):
        raise InvalidModelError("document must be a JSON object", path="$")
    if "K" not in doc:
        raise InvalidModelError("missing field", path="K")
    k = doc["K"]
    if not isinstance(k, int) or isinstance(k, bool):
        raise InvalidModelError(f"must be an integer, got {k!r}", path="K")
    if not MIN_SOURCES <= k <= MAX_SOURCES:
        raise InvalidModelError(
            f"must be in [{MIN_SOURCES}, {MAX_SOURCES}], got {k}", path="K"
        )
    if "classes" not in doc:
        raise InvalidModelError("missing field", path="classes")
    classes = doc["classes"]
    if not isinstance(classes, list) or not classes:
        raise InvalidModelError("must be a non-empty array", path="classes")

    weights: list[float] = []
    rows: list[list[float]] = []
    for j, cls in enumerate(classes):
        base = f"classes[{j}]"
        if not isinstance(cls, dict):
            raise InvalidModelError("must be an object", path=base)
        if "weight" not in cls:
            raise InvalidModelError("missing field", path=f"{base}.weight")
        w = cls["weight"]
        if not isinstance(w, (int, float)) or isinstance(w, bool):
            raise InvalidModelError(f"must be a number, got {w!r}", path=f"{base}.weight")
        if not np.isfinite(w) or w < 0:
            raise InvalidModelError(f"must be >= 0 and finite, got {w}", path=f"{base}.weight")
        if "probs" not in cls:
            raise InvalidModelError("missing field", path=f"{base}.probs")
        probs = cls["probs"]
        if not isinstance(probs, list) or len(probs) != k:
            raise InvalidModelError(
                f"must be an array of {k} numbers", path=f"{base}.probs"
            )
        for i, p in enumerate(probs):
            if not isinstance(p, (int, float)) or isinstance(p, bool):
                raise InvalidModelError(
                    f"must be a number, got {p!r}", path=f"{base}.probs[{i}]"
                )
            if not np.isfinite(p) or p <= 0 or p > 1:
                raise InvalidModelError(
                    f"must be in (0, 1], got {p}", path=f"{base}.probs[{i}]"
                )
        weights.append(float(w))
        rows.append([float(p) for p in probs])

    total = sum(weights)
    if abs(total - 1.0) > 1e-12:
        raise InvalidModelError(f"weights sum to {total!r}, not 1", path="classes")
    try:
        return LatentClassModel(
            np.array(weights), np.array(rows), require_distinct=require_distinct
        )
    except InvalidModelError as exc:
        raise InvalidModelError(str(exc), path="classes") from exc


def model_to_dict(model: LatentClassModel) -> dict[str, Any]:
    return {
        "K": model.k,
        "classes": [
            {"weight": float(model.weights[j]), "probs": [float(x) for x in model.lambdas[j]]}
            for j in range(model.n_classes)
        ],
    }


def read_model(path: str | Path, *, require_distinct: bool = True) -> LatentClassModel:
    raw = Path(path).read_text()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InvalidModelError(f"not valid JSON: {exc}", path="$") from exc
    return parse_model(doc, require_distinct=require_distinct)


def write_model(model: LatentClassModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")


def parse_table_rows(rows: list[tuple[str, Any]]) -> ContingencyTable:
    """Build a table from (pattern, count) pairs, validating completeness."""
    if not rows:
        raise InvalidTableError("table has no rows")
    k = len(rows[0][0])
    if not MIN_SOURCES <= k <= MAX_SOURCES:
        raise InvalidTableError(
            f"pattern {rows[0][0]!r} implies K={k}, outside [{MIN_SOURCES}, {MAX_SOURCES}]"
        )
    expected = 2**k - 1
    counts = np.zeros(expected, dtype=np.int64)
    seen: set[int] = set()
    for line_no, (pattern, count) in enumerate(rows, start=2):
        if len(pattern) != k or set(pattern) - {"0", "1"}:
            raise InvalidTableError(
                f"row {line_no}: pattern {pattern!r} is not a {k}-character '0'/'1' string"
            )
        index = int(pattern, 2)
        if index == 0:
            raise InvalidTableError(
                f"row {line_no}: the all-zero pattern has no observable count"
            )
        if index in seen:
            raise InvalidTableError(f"row {line_no}: duplicate pattern {pattern!r}")
        seen.add(index)
        try:
            value = int(str(count))
        except ValueError:
            raise InvalidTableError(
                f"row {line_no}: count {count!r} is not an integer"
            ) from None
        if value < 0:
            raise InvalidTableError(f"row {line_no}: count {value} is negative")
        counts[index - 1] = value
    if len(seen) != expected:
        missing = next(
            format(i, f"0{k}b") for i in range(1, expected + 1) if i not in seen
        )
        raise InvalidTableError(
            f"table has {len(seen)} of {expected} patterns; first missing: {missing}"
        )
    return ContingencyTable(k, counts)


def read_table(path: str | Path) -> ContingencyTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidTableError("empty table file") from None
        if [c.strip() for c in header] != ["pattern", "count"]:
            raise InvalidTableError(
                f"header must be 'pattern,count', got {','.join(header)!r}"
            )
        rows: list[tuple[str, Any]] = []
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise InvalidTableError(f"malformed row: {row!r}")
            rows.append((row[0].strip(), row[1].strip()))
    return parse_table_rows(rows)


def write_table(table: ContingencyTable, path: str | Path) -> None:
    order = PatternOrder(table.k)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pattern", "count"])
        for bits, count in zip(order.bitstrings(), table.counts):
            writer.writerow([bits, int(count)])


def table_to_dict(table: ContingencyTable) -> dict[str, Any]:
    """JSON-friendly form used by the service layer: bitstring -> count."""
    order = PatternOrder(table.k)
    return {
        "K": table.k,
        "counts": {b: int(c) for b, c in zip(order.bitstrings(), table.counts)},
    }


def parse_table_dict(doc: dict[str, Any]) -> ContingencyTable:
    if not isinstance(doc, dict) or "K" not in doc or "counts" not in doc:
        raise InvalidTableError("table document needs fields 'K' and 'counts'")
    k = doc["K"]
    if not isinstance(k, int) or isinstance(k, bool):
        raise InvalidTableError(f"K must be an integer, got {k!r}")
    counts = doc["counts"]
    if not isinstance(counts, dict):
        raise InvalidTableError("counts must be an object mapping pattern -> count")
    rows = [(str(p), c) for p, c in counts.items()]
    for pattern, _ in rows:
        if len(pattern) != k:
            raise InvalidTableError(
                f"pattern {pattern!r} does not have K={k} characters"
            )
    return parse_table_rows(rows)
