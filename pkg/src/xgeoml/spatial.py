"""Observation points, planar distances and nearest-neighbour queries."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np


class DatasetError(ValueError):
    """Raised when tabular input cannot be turned into a valid dataset."""


class UndefinedCorrelationError(ValueError):
    """Raised when a correlation is requested for a zero-variance vector."""


@dataclass(frozen=True)
class Schema:
    """Column-name mapping for tabular input.

    ``features=None`` means every column not claimed by id/cx/cy/response,
    in header order.
    """

    id: str = "id"
    cx: str = "cx"
    cy: str = "cy"
    response: str = "y"
    features: tuple[str, ...] | None = None


@dataclass(frozen=True, eq=False)
class SpatialDataset:
    ids: tuple[str, ...]
    coords: np.ndarray
    features: np.ndarray
    feature_names: tuple[str, ...]
    response: np.ndarray

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float)
        features = np.array(self.features, dtype=float)
        response = np.array(self.response, dtype=float).ravel()
        if features.ndim == 1:
            features = features[:, None]
        n = len(self.ids)
        if n < 2:
            raise DatasetError(f"need at least 2 points, got {n}")
        if coords.shape != (n, 2):
            raise DatasetError(f"coords must have shape ({n}, 2), got {coords.shape}")
        if features.shape[0] != n or features.shape[1] < 1:
            raise DatasetError(f"features must have shape ({n}, d>=1), got {features.shape}")
        if response.shape != (n,):
            raise DatasetError(f"response must have {n} entries, got {response.shape}")
        if len(self.feature_names) != features.shape[1]:
            raise DatasetError("feature_names length does not match feature columns")
        if len(set(self.ids)) != n:
            raise DatasetError("point ids are not unique")
        for name, arr in (("coords", coords), ("features", features), ("response", response)):
            if not np.all(np.isfinite(arr)):
                row = int(np.argwhere(~np.isfinite(arr))[0][0])
                raise DatasetError(f"non-finite value in {name} at row {row} (id {self.ids[row]})")
        for arr in (coords, features, response):
            arr.setflags(write=False)
        object.__setattr__(self, "ids", tuple(str(i) for i in self.ids))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "response", response)

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def with_response(self, response) -> "SpatialDataset":
        return SpatialDataset(self.ids, self.coords, self.features, self.feature_names, response)


def _parse_float(text: str, row: int, column: str) -> float:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise DatasetError(f"row {row}, column {column!r}: non-numeric value {text!r}") from None
    if not math.isfinite(value):
        raise DatasetError(f"row {row}, column {column!r}: non-finite value {text!r}")
    return value


def load_dataset(source, schema: Schema | None = None, delimiter: str = ",") -> SpatialDataset:
    """Read a dataset from a CSV path, an open text stream, or an iterable of row dicts.

    Row order is preserved. Rows are numbered from 1 (first data row) in
    diagnostics.
    """
    schema = schema or Schema()
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            return load_dataset(fh, schema, delimiter)
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        reader = csv.DictReader(source, delimiter=delimiter)
        header = list(reader.fieldnames or [])
        rows: Iterable[Mapping[str, str]] = reader
    else:
        rows = list(source)
        header = list(rows[0].keys()) if rows else []

    reserved = [schema.id, schema.cx, schema.cy, schema.response]
    for col in reserved:
        if col not in header:
            raise DatasetError(f"missing column {col!r}")
    if schema.features is None:
        feature_cols = [c for c in header if c not in reserved]
    else:
        feature_cols = list(schema.features)
        for col in feature_cols:
            if col not in header:
                raise DatasetError(f"missing column {col!r}")
    if not feature_cols:
        raise DatasetError("no feature columns")

    ids, coords, feats, resp = [], [], [], []
    for r, rec in enumerate(rows, start=1):
        ids.append(str(rec[schema.id]))
        coords.append((_parse_float(rec[schema.cx], r, schema.cx),
                       _parse_float(rec[schema.cy], r, schema.cy)))
        feats.append([_parse_float(rec[c], r, c) for c in feature_cols])
        resp.append(_parse_float(rec[schema.response], r, schema.response))
    if len(ids) < 2:
        raise DatasetError(f"need at least 2 rows, got {len(ids)}")
    seen: dict[str, int] = {}
    for r, pid in enumerate(ids, start=1):
        if pid in seen:
            raise DatasetError(f"row {r}, column {schema.id!r}: duplicate id {pid!r} (first at row {seen[pid]})")
        seen[pid] = r
    return SpatialDataset(tuple(ids), np.array(coords), np.array(feats), tuple(feature_cols), np.array(resp))


def write_dataset(ds: SpatialDataset, path, response_name: str = "y") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "cx", "cy", *ds.feature_names, response_name])
        for i in range(ds.n):
            w.writerow([ds.ids[i], *map(repr, ds.coords[i].tolist()),
                        *map(repr, ds.features[i].tolist()), repr(float(ds.response[i]))])


@dataclass(frozen=True, eq=False)
class DistanceIndex:
    """Brute-force distance table with a stable neighbour ordering.

    ``order[i]`` lists all point indices by nondecreasing distance from ``i``,
    ties broken by ascending index.
    """

    dataset: SpatialDataset
    dist: np.ndarray = field(repr=False)
    order: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def distance(self, i: int, j: int) -> float:
        return float(self.dist[i, j])

    def knn(self, i: int, k: int) -> tuple[np.ndarray, np.ndarray]:
        if not 1 <= k <= self.n:
            raise ValueError(f"k must be in [1, {self.n}], got {k}")
        idx = self.order[i, :k]
        return idx, self.dist[i, idx]

    def kth_distance(self, i: int, k: int) -> float:
        """Distance from ``i`` to its k-th nearest point, counting ``i`` itself as first."""
        if not 1 <= k <= self.n:
            raise ValueError(f"k must be in [1, {self.n}], got {k}")
        return float(self.dist[i, self.order[i, k - 1]])


def pairwise_distances(coords: np.ndarray) -> np.ndarray:
    coords = np.asarray(coords, dtype=float)
    dx = coords[:, 0][:, None] - coords[:, 0][None, :]
    dy = coords[:, 1][:, None] - coords[:, 1][None, :]
    return np.hypot(dx, dy)


def build_index(ds: SpatialDataset) -> DistanceIndex:
    dist = pairwise_distances(ds.coords)
    order = np.argsort(dist, axis=1, kind="stable")
    dist.setflags(write=False)
    order.setflags(write=False)
    return DistanceIndex(ds, dist, order)


def pearson_correlation(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape or a.size < 2:
        raise ValueError("inputs must have equal length >= 2")
    if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a zero-variance input")
    da = a - a.mean()
    db = b - b.mean()
    sa = math.sqrt(float(da @ da))
    sb = math.sqrt(float(db @ db))
    if sa == 0.0 or sb == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a zero-variance input")
    r = float(da @ db) / (sa * sb)
    return max(-1.0, min(1.0, r))
