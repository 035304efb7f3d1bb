"""k-means vector quantization: codebook training and frame-to-symbol mapping.

All randomness comes from numpy's PCG64 via inverse-CDF draws on
`Generator.random()`, so a seed pins the codebook bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, TooFewPoints
from .features import FeatureMatrix

MAX_ITERS = 100


@dataclass(frozen=True)
class Codebook:
    centroids: np.ndarray  # k x dim
    training_distortion: float = 0.0

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


@dataclass(frozen=True)
class SymbolSequence:
    symbols: np.ndarray  # int array, values in [0, k)

    def __len__(self) -> int:
        return len(self.symbols)


def categorical_draw(weights: np.ndarray, u: float) -> int:
    """Inverse-CDF draw: smallest index i with cumsum(w)[i] > u * sum(w)."""
    cum = np.cumsum(weights)
    return min(int(np.searchsorted(cum, u * cum[-1], side="right")), len(weights) - 1)


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """n x k matrix of squared Euclidean distances, computed as direct
    (x - c)^2 sums so exact ties are preserved. Blocked to bound the
    n x k x d intermediate."""
    n = len(points)
    out = np.empty((n, len(centroids)))
    block = 8192
    for lo in range(0, n, block):
        diff = points[lo : lo + block, None, :] - centroids[None, :, :]
        out[lo : lo + block] = np.einsum("nkd,nkd->nk", diff, diff)
    return out


def _seed_centroids(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: first center uniform, rest weighted by squared
    distance to the nearest already-chosen center."""
    n = len(points)
    first = categorical_draw(np.ones(n), rng.random())
    chosen = [first]
    d2 = _sq_dists(points, points[[first]])[:, 0]
    while len(chosen) < k:
        if d2.sum() == 0.0:
            # all remaining points coincide with a center; fall back to uniform
            idx = categorical_draw(np.ones(n), rng.random())
        else:
            idx = categorical_draw(d2, rng.random())
        chosen.append(idx)
        d2 = np.minimum(d2, _sq_dists(points, points[[idx]])[:, 0])
    return points[chosen].copy()


def train_codebook(frames: np.ndarray, k: int, seed: int) -> Codebook:
    """Lloyd's k-means to an assignment fixpoint (<= 100 iterations).

    Empty clusters are re-seeded to the training point farthest from its
    current centroid. Distortion (mean squared distance) is checked to be
    non-increasing every iteration.
    """
    points = np.asarray(frames, dtype=np.float64)
    if points.ndim != 2:
        raise DimensionMismatch(f"expected 2-D frame pool, got shape {points.shape}")
    if len(points) < k:
        raise TooFewPoints(f"{len(points)} frames < k={k}")

    rng = np.random.Generator(np.random.PCG64(seed))
    centroids = _seed_centroids(points, k, rng)

    prev_assign = None
    prev_distortion = np.inf
    distortion = np.inf
    for _ in range(MAX_ITERS):
        d2 = _sq_dists(points, centroids)
        assign = d2.argmin(axis=1)
        distortion = float(d2[np.arange(len(points)), assign].mean())
        if distortion > prev_distortion * (1 + 1e-12) + 1e-300:
            raise AssertionError(
                f"k-means distortion increased: {prev_distortion} -> {distortion}"
            )
        prev_distortion = distortion
        if prev_assign is not None and np.array_equal(assign, prev_assign):
            break

        counts = np.bincount(assign, minlength=k)
        for j in range(k):
            if counts[j] > 0:
                centroids[j] = points[assign == j].mean(axis=0)
        empties = np.flatnonzero(counts == 0)
        if len(empties) > 0:
            point_d2 = d2[np.arange(len(points)), assign].copy()
            for j in empties:
                far = int(point_d2.argmax())
                centroids[j] = points[far]
                assign[far] = j
                point_d2[far] = 0.0
        prev_assign = assign

    return Codebook(centroids=centroids, training_distortion=distortion)


def quantize(cb: Codebook, fm: FeatureMatrix | np.ndarray) -> SymbolSequence:
    """Map each frame to its nearest centroid; ties go to the lowest index."""
    frames = fm.frames if isinstance(fm, FeatureMatrix) else np.asarray(fm, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[1] != cb.dim:
        raise DimensionMismatch(
            f"frame dim {frames.shape[1] if frames.ndim == 2 else frames.shape} "
            f"!= codebook dim {cb.dim}"
        )
    return SymbolSequence(symbols=_sq_dists(frames, cb.centroids).argmin(axis=1))
