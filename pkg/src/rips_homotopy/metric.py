"""Finite metric spaces, Hausdorff predicates and point-cloud ingestion."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

TOL = 1e-9


@dataclass(frozen=True)
class MetricPoints:
    """A finite (pseudo)metric space with labelled points.

    Distinct labels may sit at distance zero; the triangle inequality is
    checked on construction with absolute tolerance ``tol``.
    """

    labels: tuple
    dist: np.ndarray
    tol: float = TOL

    def __post_init__(self):
        dist = np.array(self.dist, dtype=float)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise ValidationError(f"distance matrix must be square, got shape {dist.shape}")
        n = dist.shape[0]
        labels = tuple(self.labels) if self.labels is not None else tuple(range(n))
        if len(labels) != n:
            raise ValidationError(f"{len(labels)} labels for {n} points")
        if not np.all(np.isfinite(dist)):
            raise ValidationError("distance matrix has non-finite entries")
        if np.any(np.abs(np.diag(dist)) > self.tol):
            raise ValidationError("distance matrix must have a zero diagonal")
        if np.any(dist < -self.tol):
            raise ValidationError("distances must be non-negative")
        if np.any(np.abs(dist - dist.T) > self.tol):
            raise ValidationError("distance matrix must be symmetric")
        for j in range(n):
            # d(i,k) <= d(i,j) + d(j,k) for every i, k through the pivot j
            slack = dist[:, j, None] + dist[None, j, :] - dist
            if slack.min() < -self.tol:
                i, k = np.unravel_index(np.argmin(slack), slack.shape)
                raise ValidationError(
                    f"triangle inequality fails: d({i},{k})={dist[i, k]:.12g} > "
                    f"d({i},{j})+d({j},{k})={dist[i, j] + dist[j, k]:.12g}")
        dist = np.clip((dist + dist.T) / 2.0, 0.0, None)
        np.fill_diagonal(dist, 0.0)
        dist.setflags(write=False)
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def __len__(self):
        return self.n

    def subspace(self, indices: Sequence[int]) -> "MetricPoints":
        idx = np.asarray(indices, dtype=int)
        return MetricPoints(tuple(self.labels[i] for i in idx),
                            self.dist[np.ix_(idx, idx)], self.tol)


def from_euclidean(coords, labels=None, tol: float = TOL) -> MetricPoints:
    rows = [list(map(float, row)) for row in coords]
    if not rows:
        raise ValidationError("no points given")
    dim = len(rows[0])
    if any(len(row) != dim for row in rows):
        raise ValidationError("ragged coordinates: points have different dimensions")
    pts = np.array(rows, dtype=float).reshape(len(rows), dim)
    if not np.all(np.isfinite(pts)):
        raise ValidationError("non-finite coordinate")
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=-1))
    return MetricPoints(tuple(labels) if labels is not None else tuple(range(len(rows))), dist, tol)


def from_distance_matrix(dist, labels=None, tol: float = TOL) -> MetricPoints:
    dist = np.asarray(dist, dtype=float)
    return MetricPoints(tuple(labels) if labels is not None else tuple(range(len(dist))), dist, tol)


@dataclass(frozen=True)
class SubsetPair:
    """An inclusion X ⊂ Y, with X given as indices into the ambient Y."""

    ambient: MetricPoints
    member_indices: tuple = field(default=())

    def __post_init__(self):
        idx = tuple(int(i) for i in self.member_indices)
        if not idx:
            raise ValidationError("subset must be non-empty")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValidationError("subset indices must be strictly increasing")
        if idx[0] < 0 or idx[-1] >= self.ambient.n:
            raise ValidationError("subset index out of range")
        object.__setattr__(self, "member_indices", idx)

    @property
    def members(self) -> tuple:
        return self.member_indices

    @property
    def is_full(self) -> bool:
        return len(self.member_indices) == self.ambient.n

    def member_mask(self) -> np.ndarray:
        mask = np.zeros(self.ambient.n, dtype=bool)
        mask[list(self.member_indices)] = True
        return mask


def _index_array(indices: Iterable[int], ambient: MetricPoints, name: str) -> np.ndarray:
    idx = np.array(sorted(set(int(i) for i in indices)), dtype=int)
    if idx.size == 0:
        raise ValidationError(f"Hausdorff distance of an empty set ({name})")
    if idx[0] < 0 or idx[-1] >= ambient.n:
        raise ValidationError(f"index out of range in {name}")
    return idx


def hausdorff(X: Iterable[int], Y: Iterable[int], ambient: MetricPoints) -> float:
    """Exact Hausdorff distance between two index sets of ``ambient``."""
    xi = _index_array(X, ambient, "X")
    yi = _index_array(Y, ambient, "Y")
    block = ambient.dist[np.ix_(xi, yi)]
    return float(max(block.min(axis=1).max(), block.min(axis=0).max()))


def cross_hausdorff(cross_dist) -> float:
    """Hausdorff distance from a |X| x |Y| block of cross distances."""
    block = np.asarray(cross_dist, dtype=float)
    if block.size == 0:
        raise ValidationError("Hausdorff distance of an empty set")
    return float(max(block.min(axis=1).max(), block.min(axis=0).max()))


def _augment(u: int, adj: list, match_right: dict, seen: set) -> bool:
    for v in adj[u]:
        if v in seen:
            continue
        seen.add(v)
        if v not in match_right or _augment(match_right[v], adj, match_right, seen):
            match_right[v] = u
            return True
    return False


def has_saturating_matching(adj: Sequence[Sequence[int]], forbidden: Iterable = ()) -> bool:
    """True if every left vertex can be matched to a distinct right vertex.

    ``adj[u]`` lists admissible right vertices of left vertex ``u``; right
    vertices in ``forbidden`` are unavailable. Augmenting paths, one per
    left vertex.
    """
    blocked = set(forbidden)
    adj = [[v for v in row if v not in blocked] for row in adj]
    match_right: dict = {}
    for u in range(len(adj)):
        if not _augment(u, adj, match_right, set()):
            return False
    return True


def config_hausdorff_lt(pair: SubsetPair, k: int, r: float) -> bool:
    """Decide d_H(X^{k+1}_dis, Y^{k+1}_dis) < r under the max product metric.

    For X ⊂ Y only the Y-to-X direction is non-trivial: each (k+1)-subset of
    Y needs a system of distinct X representatives at distance < r.
    """
    if r <= 0:
        raise ValidationError("r must be positive")
    if k < 0:
        raise ValidationError("k must be non-negative")
    n = pair.ambient.n
    size = k + 1
    members = pair.member_indices
    if n < size:
        # both configuration sets are empty
        return True
    if len(members) < size:
        return False
    close = pair.ambient.dist[:, list(members)] < r
    adj = [list(np.flatnonzero(row)) for row in close]
    if any(not row for row in adj):
        return False
    for subset in combinations(range(n), size):
        if not has_saturating_matching([adj[y] for y in subset]):
            return False
    return True


def lemma3_check(X: Iterable[int], Y: Iterable[int], ambient: MetricPoints, r: float) -> bool:
    """Value of d_H(Y, X ∪ Y) < r; only meaningful when X ∩ Y is non-empty."""
    xs, ys = set(X), set(Y)
    if not xs & ys:
        raise ValidationError("X and Y must intersect")
    return hausdorff(ys, xs | ys, ambient) < r


def load_metric(path, tol: float = TOL) -> MetricPoints:
    """Read a point cloud (CSV or JSON ``points``) or a JSON distance matrix."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
        if "dist" in payload:
            return from_distance_matrix(payload["dist"], payload.get("labels"), tol)
        if "points" in payload:
            return from_euclidean(payload["points"], payload.get("labels"), tol)
        raise ValidationError(f"{path}: expected a 'points' or 'dist' key")
    rows = [row for row in csv.reader(text.splitlines()) if row and any(c.strip() for c in row)]
    if not rows:
        raise ValidationError(f"{path}: no points")
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        rows = rows[1:]  # header line
    try:
        coords = [[float(c) for c in row] for row in rows]
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric entry ({exc})") from exc
    return from_euclidean(coords, tol=tol)
