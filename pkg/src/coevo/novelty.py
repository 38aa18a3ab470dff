"""k-nearest-neighbour novelty and the archive of past novel behaviours.

Scores are averaged with :func:`math.fsum`, which rounds the exact sum once.
That makes a score independent of the order candidates are supplied in, down
to the last bit, and lets the batch path agree exactly with the scalar one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_K = 15

__all__ = ["DEFAULT_K", "NoveltyArchive", "knn_novelty", "population_novelty", "archive_update"]


def _as_points(points, dim=None) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        return np.empty((0, dim if dim is not None else 0))
    return arr.reshape(len(arr), -1)


def _distances(p: np.ndarray, cands: np.ndarray) -> np.ndarray:
    diff = cands - p
    return np.sqrt((diff * diff).sum(axis=1))


def _mean_of_smallest(d: np.ndarray, k: int) -> float:
    m = min(k, d.shape[0])
    if m == 0:
        return math.inf
    if m < d.shape[0]:
        d = np.partition(d, m - 1)[:m]
    return math.fsum(d.tolist()) / m


@dataclass(frozen=True)
class NoveltyArchive:
    """Append-only set of behaviour points, scored with a fixed ``k``."""

    points: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    k: int = DEFAULT_K

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        pts = _as_points(self.points, 2)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @classmethod
    def empty(cls, dim: int = 2, k: int = DEFAULT_K) -> "NoveltyArchive":
        return cls(np.empty((0, dim)), k)

    def __len__(self) -> int:
        return self.points.shape[0]


def knn_novelty(p, cohort, archive: NoveltyArchive | None, k: int = DEFAULT_K) -> float:
    """Mean Euclidean distance from ``p`` to its ``k`` nearest candidates.

    Candidates are ``cohort`` plus the archive points; the caller must leave
    ``p`` itself out of ``cohort``. With fewer than ``k`` candidates the mean
    runs over all of them, and with none at all the result is ``math.inf``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    p = np.asarray(p, dtype=float).ravel()
    parts = [_as_points(cohort, p.size)]
    if archive is not None and len(archive):
        parts.append(archive.points)
    cands = np.concatenate(parts) if len(parts) > 1 else parts[0]
    if cands.shape[0] == 0:
        return math.inf
    return _mean_of_smallest(_distances(p, cands), k)


def population_novelty(points, archive: NoveltyArchive | None, k: int = DEFAULT_K) -> np.ndarray:
    """Novelty of every point against the rest of ``points`` plus the archive.

    Same values as calling :func:`knn_novelty` once per point with that point
    removed from the cohort.
    """
    pts = _as_points(points)
    n = pts.shape[0]
    if n == 0:
        return np.empty(0)
    arch = archive.points if archive is not None and len(archive) else np.empty((0, pts.shape[1]))
    cands = np.concatenate([pts, arch])
    diff = pts[:, None, :] - cands[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    m = min(k, cands.shape[0] - 1)
    if m == 0:
        return np.full(n, math.inf)
    dist[np.arange(n), np.arange(n)] = math.inf  # leave each point out of its own cohort
    # the inf self-distance sorts last, so the m smallest are all genuine neighbours
    near = np.partition(dist, m - 1, axis=1)[:, :m]
    return np.array([math.fsum(row) / m for row in near.tolist()])


def archive_update(archive: NoveltyArchive, points, novelty) -> NoveltyArchive:
    """Return a new archive with the generation's single most novel point added.

    Ties go to the lowest index; an empty generation leaves the archive as is.
    """
    pts = _as_points(points)
    nov = np.asarray(novelty, dtype=float)
    if pts.shape[0] == 0:
        return archive
    if nov.shape[0] != pts.shape[0]:
        raise ValueError("one novelty value per point is required")
    best = int(np.argmax(nov))
    return NoveltyArchive(np.concatenate([archive.points.reshape(-1, pts.shape[1]), pts[best : best + 1]]), archive.k)
