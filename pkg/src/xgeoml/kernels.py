"""Spatial weight vectors for a target point.

The effective radius ``r`` is the fixed distance ``b`` or, in adaptive mode,
the distance to the k-th nearest point (the target itself counts as the
first).  Gaussian uses ``sigma = r`` without truncation; gaussian_binary
uses ``sigma = r / 3`` and zeroes everything outside the neighbour set.
Both sigmas are further scaled by ``sigma_multiplier``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spatial import DistanceIndex

KINDS = ("gaussian", "binary", "gaussian_binary")
MODES = ("fixed", "adaptive")


class DegenerateNeighborhoodError(ValueError):
    """Fewer than two observations carry nonzero weight."""


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "binary"
    mode: str = "adaptive"
    bandwidth: float = 150
    sigma_multiplier: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        if self.mode not in MODES:
            raise ValueError(f"unknown bandwidth mode {self.mode!r}; expected one of {MODES}")
        if self.mode == "fixed":
            if not self.bandwidth > 0:
                raise ValueError(f"fixed bandwidth must be > 0, got {self.bandwidth}")
        else:
            if int(self.bandwidth) != self.bandwidth or self.bandwidth < 2:
                raise ValueError(f"adaptive bandwidth must be an integer >= 2, got {self.bandwidth}")
            object.__setattr__(self, "bandwidth", int(self.bandwidth))
        if not self.sigma_multiplier > 0:
            raise ValueError("sigma_multiplier must be > 0")

    @classmethod
    def fixed(cls, kind: str, b: float, sigma_multiplier: float = 1.0) -> "KernelSpec":
        return cls(kind, "fixed", float(b), sigma_multiplier)

    @classmethod
    def adaptive(cls, kind: str, k: int, sigma_multiplier: float = 1.0) -> "KernelSpec":
        return cls(kind, "adaptive", int(k), sigma_multiplier)

    def with_bandwidth(self, bandwidth) -> "KernelSpec":
        return KernelSpec(self.kind, self.mode, bandwidth, self.sigma_multiplier)

    def label(self) -> str:
        return f"{self.kind}/{self.mode}"


def _gauss(d: np.ndarray, sigma: float) -> np.ndarray:
    return np.exp(-(d * d) / (2.0 * sigma * sigma))


def weights_for(index: DistanceIndex, spec: KernelSpec, i: int) -> np.ndarray:
    """Weights of all ``n`` observations relative to target ``i``; the target gets 1."""
    n = index.n
    d = index.dist[i]
    if spec.mode == "adaptive":
        k = spec.bandwidth
        if k > n:
            raise ValueError(f"adaptive bandwidth k={k} exceeds n={n}")
        nbrs = index.order[i, :k]
        r = float(d[nbrs[-1]])
        inside = np.zeros(n, dtype=bool)
        inside[nbrs] = True
    else:
        r = float(spec.bandwidth)
        inside = d <= r

    if spec.kind == "binary":
        w = inside.astype(float)
    elif spec.kind == "gaussian":
        sigma = r * spec.sigma_multiplier
        w = _gauss(d, sigma) if sigma > 0 else (d == 0).astype(float)
    else:
        sigma = r / 3.0 * spec.sigma_multiplier
        w = np.zeros(n)
        if sigma > 0:
            w[inside] = _gauss(d[inside], sigma)
        else:
            w[inside & (d == 0)] = 1.0
    w[i] = 1.0

    if spec.mode == "fixed" and np.count_nonzero(w) < 2:
        raise DegenerateNeighborhoodError(
            f"point {i}: fixed bandwidth {spec.bandwidth} leaves fewer than 2 weighted observations")
    return w


def weight_matrix(index: DistanceIndex, spec: KernelSpec) -> np.ndarray:
    """Stack ``weights_for`` over every target; row ``i`` belongs to target ``i``."""
    return np.vstack([weights_for(index, spec, i) for i in range(index.n)])
