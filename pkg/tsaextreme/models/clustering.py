#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Clustering Model for tsaextreme

Multi-start k-means over daily periods. Each period is flattened to an
attribute-major vector of length N_d * N_t.
"""

from typing import Dict, Any, List, Optional, Sequence, Tuple, Union
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from tsaextreme.exceptions import DimensionMismatch, TooFewPeriods
from tsaextreme.models.timeseries import Period

logger = logging.getLogger(__name__)


class KMeansConfig(BaseModel):
    """Settings of one multi-start k-means run."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    k: int = Field(5, ge=1)
    n_init: int = Field(10000, ge=1)
    seed: int = 0
    max_iter: int = Field(300, ge=1)
    tol: float = Field(1e-8, ge=0.0)
    workers: int = Field(1, ge=1)


@dataclass
class LloydRun:
    """Outcome of a single Lloyd run."""
    centroids: np.ndarray
    assignments: np.ndarray
    ssd: float
    history: List[float] = field(default_factory=list)
    n_iter: int = 0


@dataclass
class ClusterResult:
    """Best-of-restarts clustering of a period set."""
    centroids: np.ndarray
    assignments: np.ndarray
    counts: np.ndarray
    weights: np.ndarray
    ssd: float
    config: KMeansConfig
    day_indices: Tuple[int, ...] = ()
    best_restart: int = 0
    restart_ssd: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])

    @property
    def n_periods(self) -> int:
        return int(self.assignments.shape[0])

    def members(self, j: int) -> List[int]:
        """Day indices assigned to cluster ``j``."""
        return [self.day_indices[i] for i in np.flatnonzero(self.assignments == j)]

    def centroid_matrix(self, j: int, n_attributes: int) -> np.ndarray:
        """Centroid ``j`` reshaped to (N_d, N_t)."""
        return self.centroids[j].reshape(n_attributes, -1)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON-serializable dictionary."""
        return {
            "k": self.k,
            "ssd": float(self.ssd),
            "counts": [int(c) for c in self.counts],
            "weights": [float(w) for w in self.weights],
            "assignments": {int(d): int(a) for d, a in zip(self.day_indices, self.assignments)},
            "best_restart": int(self.best_restart),
            "n_init": self.config.n_init,
            "seed": self.config.seed,
        }


def _as_points(points: Union[np.ndarray, Sequence[Period]]) -> Tuple[np.ndarray, Tuple[int, ...]]:
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=float)
        if arr.ndim != 2:
            raise DimensionMismatch(f"points must be 2-D, got shape {arr.shape}")
        return arr, tuple(range(arr.shape[0]))
    periods = list(points)
    if not periods:
        return np.zeros((0, 0)), ()
    arr = np.stack([p.vector() for p in periods]).astype(float)
    return arr, tuple(int(p.day_index) for p in periods)


def squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, shape (n_points, n_centroids)."""
    points = np.asarray(points, dtype=float)
    centroids = np.asarray(centroids, dtype=float)
    if points.ndim != 2 or centroids.ndim != 2 or points.shape[1] != centroids.shape[1]:
        raise DimensionMismatch(
            f"points {points.shape} and centroids {centroids.shape} have different dimensions")
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def assign(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Map each point to its nearest centroid.

    Args:
        points: Array of shape (n, dim)
        centroids: Array of shape (k, dim)

    Returns:
        Cluster index per point; ties go to the lowest centroid index

    Raises:
        DimensionMismatch: If the dimensions differ
    """
    return np.argmin(squared_distances(points, centroids), axis=1)


def update_centroids(points: np.ndarray, assignments: np.ndarray, k: int,
                     previous: Optional[np.ndarray] = None) -> np.ndarray:
    """Recompute centroids as member means.

    An empty cluster is re-seeded with the point farthest from its current
    centroid. With several empty clusters, successive farthest points are used,
    skipping points that already coincide with a centroid.

    Args:
        points: Array of shape (n, dim)
        assignments: Cluster index per point
        k: Number of clusters
        previous: Centroids before the update, kept for empty clusters
            when no re-seed point is available

    Returns:
        Array of shape (k, dim)
    """
    points = np.asarray(points, dtype=float)
    assignments = np.asarray(assignments, dtype=int)
    dim = points.shape[1]
    counts = np.bincount(assignments, minlength=k)
    sums = np.zeros((k, dim))
    np.add.at(sums, assignments, points)

    centroids = np.array(previous, dtype=float) if previous is not None else np.zeros((k, dim))
    filled = counts > 0
    centroids[filled] = sums[filled] / counts[filled, None]

    empty = np.flatnonzero(~filled)
    if empty.size == 0:
        return centroids

    own = centroids[assignments]
    dist = np.einsum("ij,ij->i", points - own, points - own)
    # stable sort keeps the lowest index first among equal distances
    order = np.argsort(-dist, kind="stable")
    taken = [centroids[j] for j in np.flatnonzero(filled)]
    cursor = 0
    for j in empty:
        while cursor < order.size and any(np.array_equal(points[order[cursor]], c) for c in taken):
            cursor += 1
        if cursor == order.size:
            break
        centroids[j] = points[order[cursor]]
        taken.append(centroids[j])
        cursor += 1
    return centroids


def compute_ssd(points: np.ndarray, centroids: np.ndarray, assignments: np.ndarray) -> float:
    """Sum of squared distances of each point to its assigned centroid."""
    points = np.asarray(points, dtype=float)
    centroids = np.asarray(centroids, dtype=float)
    if points.shape[1] != centroids.shape[1]:
        raise DimensionMismatch(
            f"points {points.shape} and centroids {centroids.shape} have different dimensions")
    diff = points - centroids[np.asarray(assignments, dtype=int)]
    return float(np.einsum("ij,ij->", diff, diff))


def _fill_empty_clusters(points: np.ndarray, assignments: np.ndarray, k: int) -> np.ndarray:
    """Move single points out of multi-member clusters into empty ones."""
    assignments = np.array(assignments, dtype=int)
    counts = np.bincount(assignments, minlength=k)
    for j in np.flatnonzero(counts == 0):
        donor = int(np.flatnonzero(counts >= 2)[0])
        member = int(np.flatnonzero(assignments == donor)[-1])
        assignments[member] = j
        counts[donor] -= 1
        counts[j] += 1
    return assignments


def run_lloyd(points: np.ndarray, initial: np.ndarray, max_iter: int = 300, tol: float = 1e-8) -> LloydRun:
    """Run Lloyd iterations from the given initial centroids.

    The SSD is recorded after every assignment step; the history is
    non-increasing.

    Args:
        points: Array of shape (n, dim)
        initial: Initial centroids, shape (k, dim)
        max_iter: Iteration cap
        tol: Stop once the largest centroid coordinate shift is below this

    Returns:
        LloydRun with final centroids (exact member means), assignments and SSD
    """
    k = initial.shape[0]
    centroids = np.array(initial, dtype=float)
    assignments = assign(points, centroids)
    history = [compute_ssd(points, centroids, assignments)]

    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        updated = update_centroids(points, assignments, k, previous=centroids)
        shift = float(np.max(np.abs(updated - centroids))) if updated.size else 0.0
        centroids = updated
        assignments = assign(points, centroids)
        history.append(compute_ssd(points, centroids, assignments))
        if shift < tol:
            break

    assignments = _fill_empty_clusters(points, assignments, k)
    centroids = update_centroids(points, assignments, k, previous=centroids)
    return LloydRun(centroids, assignments, compute_ssd(points, centroids, assignments), history, n_iter)


def forgy_init(points: np.ndarray, k: int, seed: int, restart: int) -> np.ndarray:
    """Pick k distinct periods as initial centroids from the stream (seed, restart)."""
    rng = np.random.default_rng([seed, restart])
    return points[rng.choice(points.shape[0], size=k, replace=False)].copy()


def _run_restarts(points: np.ndarray, k: int, seed: int, start: int, stop: int,
                  max_iter: int, tol: float) -> Tuple[List[float], Optional[LloydRun], int]:
    """Run restarts [start, stop) and keep the best; used by worker processes."""
    ssds: List[float] = []
    best: Optional[LloydRun] = None
    best_r = start
    for r in range(start, stop):
        run = run_lloyd(points, forgy_init(points, k, seed, r), max_iter, tol)
        ssds.append(run.ssd)
        if best is None or run.ssd < best.ssd:
            best, best_r = run, r
    return ssds, best, best_r


def kmeans_multistart(periods: Union[np.ndarray, Sequence[Period]], config: KMeansConfig) -> ClusterResult:
    """Cluster periods with n_init Forgy-initialized Lloyd runs.

    The restart with the lowest SSD wins; ties go to the lowest restart index.
    Restart r draws from the seed stream (seed, r), so results do not depend
    on the number of workers.

    Args:
        periods: Normalized periods, or an (n, dim) array of period vectors
        config: k-means settings

    Returns:
        ClusterResult

    Raises:
        TooFewPeriods: If fewer periods than clusters are given
    """
    points, day_indices = _as_points(periods)
    n = points.shape[0]
    if n < config.k:
        raise TooFewPeriods(f"{n} periods cannot form {config.k} clusters")

    workers = min(config.workers, config.n_init)
    if workers > 1:
        bounds = np.linspace(0, config.n_init, workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as executor:
            chunks = list(executor.map(
                _run_restarts,
                [points] * workers, [config.k] * workers, [config.seed] * workers,
                bounds[:-1].tolist(), bounds[1:].tolist(),
                [config.max_iter] * workers, [config.tol] * workers))
    else:
        chunks = [_run_restarts(points, config.k, config.seed, 0, config.n_init, config.max_iter, config.tol)]

    restart_ssd: List[float] = []
    best: Optional[LloydRun] = None
    best_r = 0
    # chunks arrive in restart order
    for ssds, run, r in chunks:
        restart_ssd.extend(ssds)
        if run is not None and (best is None or run.ssd < best.ssd):
            best, best_r = run, r

    counts = np.bincount(best.assignments, minlength=config.k)
    result = ClusterResult(
        centroids=best.centroids,
        assignments=best.assignments,
        counts=counts,
        weights=counts / float(n),
        ssd=best.ssd,
        config=config,
        day_indices=day_indices,
        best_restart=best_r,
        restart_ssd=np.array(restart_ssd),
    )
    logger.info(f"k-means k={config.k} over {n} periods: best SSD {best.ssd:.6g} "
                f"at restart {best_r} of {config.n_init}")
    return result
