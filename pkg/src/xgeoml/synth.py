"""Synthetic grid benchmark: four coefficient surfaces, random features, noisy responses.

Points sit on an ``m x m`` unit-spaced grid in row-major order: point
``v*m + u`` has coordinates ``(u, v)``.  Features and noise come from two
independent child streams of one ``SeedSequence`` so that changing
``noise_sd`` never moves the feature draws.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .spatial import SpatialDataset

SURFACES = ("linear", "circular", "cosine", "polycentric")
BETA_MAX = 5.0


@dataclass(frozen=True)
class SynthSpec:
    grid_side: int = 30
    seed: int = 42
    noise_sd: float = 0.5
    response_form: str = "linear"
    noise_in_nonlinear: bool = True
    cosine_periods: float = 2.0
    cosine_axis: str = "x"
    poly_centers: tuple[tuple[float, float], ...] | None = None  # grid units; None -> scaled defaults
    poly_sigma: float | None = None

    def __post_init__(self):
        if int(self.grid_side) != self.grid_side or self.grid_side < 2:
            raise ValueError(f"grid_side must be an integer >= 2, got {self.grid_side}")
        if not self.noise_sd >= 0:
            raise ValueError(f"noise_sd must be >= 0, got {self.noise_sd}")
        if self.response_form not in ("linear", "nonlinear"):
            raise ValueError(f"response_form must be 'linear' or 'nonlinear', got {self.response_form!r}")
        if self.cosine_axis not in ("x", "y"):
            raise ValueError("cosine_axis must be 'x' or 'y'")

    @property
    def n(self) -> int:
        return self.grid_side * self.grid_side

    def centers(self) -> tuple[tuple[float, float], ...]:
        m = self.grid_side
        if self.poly_centers is not None:
            return tuple(self.poly_centers)
        return ((0.25 * m, 0.25 * m), (0.75 * m, 0.25 * m), (0.5 * m, 0.75 * m))

    def sigma_c(self) -> float:
        return self.poly_sigma if self.poly_sigma is not None else self.grid_side / 7.5


@dataclass(frozen=True)
class GroundTruth:
    """The four coefficient surfaces, aligned with the dataset's point order."""

    linear: np.ndarray
    circular: np.ndarray
    cosine: np.ndarray
    polycentric: np.ndarray
    params: dict = field(default_factory=dict, compare=False)

    def matrix(self) -> np.ndarray:
        return np.column_stack([self.linear, self.circular, self.cosine, self.polycentric])

    @property
    def n(self) -> int:
        return self.linear.size


def grid_coords(m: int) -> np.ndarray:
    v, u = np.divmod(np.arange(m * m), m)
    return np.column_stack([u, v]).astype(float)


def minmax(values: np.ndarray, top: float = BETA_MAX) -> np.ndarray:
    """Stretch ``values`` onto ``[0, top]``; a constant input maps to zeros."""
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.zeros_like(values, dtype=float)
    out = (values - lo) / (hi - lo) * top
    # pin the extremes so min/max are exact after rounding
    out[values == lo] = 0.0
    out[values == hi] = top
    return out


def make_gradients(spec: SynthSpec) -> GroundTruth:
    m = spec.grid_side
    xy = grid_coords(m)
    u, v = xy[:, 0], xy[:, 1]
    mid = (m - 1) / 2.0

    linear = u + v
    circular = -np.hypot(u - mid, v - mid)
    axis = u if spec.cosine_axis == "x" else v
    cosine = np.cos(2.0 * np.pi * spec.cosine_periods * axis / (m - 1))
    s2 = 2.0 * spec.sigma_c() ** 2
    poly = np.zeros(m * m)
    for cx, cy in spec.centers():
        poly += np.exp(-((u - cx) ** 2 + (v - cy) ** 2) / s2)

    return GroundTruth(
        minmax(linear), minmax(circular), minmax(cosine), minmax(poly),
        params={
            "cosine_periods": spec.cosine_periods,
            "cosine_axis": spec.cosine_axis,
            "poly_centers": spec.centers(),
            "poly_sigma": spec.sigma_c(),
        },
    )


def compose_response(features: np.ndarray, betas: np.ndarray, form: str,
                     noise: np.ndarray | None = None) -> np.ndarray:
    """Combine coefficient columns with features.

    ``form='nonlinear'`` squares the third feature and cubes the fourth
    before multiplying by their coefficients.
    """
    X = np.asarray(features, dtype=float)
    B = np.asarray(betas, dtype=float)
    if form == "nonlinear":
        X = X.copy()
        X[:, 2] = X[:, 2] ** 2
        X[:, 3] = X[:, 3] ** 3
    elif form != "linear":
        raise ValueError(f"unknown response form {form!r}")
    y = np.sum(B * X, axis=1)
    if noise is not None:
        y = y + noise
    return y


def generate(spec: SynthSpec) -> tuple[SpatialDataset, GroundTruth]:
    truth = make_gradients(spec)
    feat_seq, noise_seq = np.random.SeedSequence(spec.seed).spawn(2)
    X = np.random.Generator(np.random.PCG64(feat_seq)).standard_normal((spec.n, 4))
    eps = np.random.Generator(np.random.PCG64(noise_seq)).standard_normal(spec.n) * spec.noise_sd
    if spec.response_form == "nonlinear" and not spec.noise_in_nonlinear:
        eps = None
    y = compose_response(X, truth.matrix(), spec.response_form, eps)
    ds = SpatialDataset(
        ids=tuple(str(i) for i in range(spec.n)),
        coords=grid_coords(spec.grid_side),
        features=X,
        feature_names=("x1", "x2", "x3", "x4"),
        response=y,
    )
    return ds, truth


def write_truth(truth: GroundTruth, ids, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + [f"beta_{s}" for s in SURFACES])
        for i, pid in enumerate(ids):
            w.writerow([pid] + [repr(float(getattr(truth, s)[i])) for s in SURFACES])


def read_truth(path, ids=None) -> GroundTruth:
    """Load a truth CSV; when ``ids`` is given, rows are reordered to match it."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if ids is not None:
        by_id = {r["id"]: r for r in rows}
        missing = [pid for pid in ids if pid not in by_id]
        if missing:
            raise ValueError(f"truth file lacks ids: {missing[:5]}")
        rows = [by_id[pid] for pid in ids]
    cols = {s: np.array([float(r[f"beta_{s}"]) for r in rows]) for s in SURFACES}
    return GroundTruth(**cols)
