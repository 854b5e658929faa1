"""Vietoris-Rips and degree-Rips simplex posets stored as birth values.

A :class:`BifilteredComplex` keeps every simplex of size at most
``dim_cap + 1`` together with its Rips birth (the diameter) and, per
degree ``k``, the least scale at which every vertex has ``k`` distinct
neighbours. Slices at fixed ``(s, k)`` are :class:`ComplexSlice` objects.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

import numpy as np

from . import budget
from .errors import ValidationError
from .metric import TOL, MetricPoints


def simplex_key(simplex: tuple) -> tuple:
    return (len(simplex), simplex)


def make_simplex(vertices: Iterable[int]) -> tuple:
    """Validated simplex: a non-empty, strictly increasing vertex tuple."""
    simplex = tuple(int(v) for v in vertices)
    if not simplex:
        raise ValidationError("a simplex needs at least one vertex")
    if any(b <= a for a, b in zip(simplex, simplex[1:])):
        raise ValidationError(f"simplex vertices must be strictly increasing: {simplex}")
    return simplex


def faces(simplex: tuple) -> list:
    """Codimension-one faces, in the order of the deleted vertex."""
    return [simplex[:i] + simplex[i + 1:] for i in range(len(simplex))]


class ComplexSlice:
    """A downward-closed finite set of simplices (an abstract simplicial complex).

    ``dim_cap`` records the truncation dimension of the complex it was cut
    from; homology is only trustworthy strictly below it. ``None`` means the
    slice is complete.
    """

    __slots__ = ("simplices", "dim_cap", "_index")

    def __init__(self, simplices: Iterable[Sequence[int]], dim_cap: int | None = None,
                 *, check: bool = True):
        if check:
            simps = sorted({make_simplex(s) for s in simplices}, key=simplex_key)
            present = set(simps)
            for simplex in simps:
                if len(simplex) > 1:
                    for face in faces(simplex):
                        if face not in present:
                            raise ValidationError(
                                f"not downward closed: face {face} of {simplex} missing")
        else:
            simps = list(simplices)
        self.simplices = tuple(simps)
        self.dim_cap = dim_cap
        self._index = None

    def __len__(self):
        return len(self.simplices)

    def __iter__(self):
        return iter(self.simplices)

    def __contains__(self, simplex):
        return tuple(simplex) in self.index

    def __eq__(self, other):
        return isinstance(other, ComplexSlice) and self.simplices == other.simplices

    def __repr__(self):
        return f"ComplexSlice({len(self.simplices)} simplices, dim_cap={self.dim_cap})"

    @property
    def index(self) -> dict:
        if self._index is None:
            self._index = {s: i for i, s in enumerate(self.simplices)}
        return self._index

    @property
    def vertices(self) -> list:
        return [s[0] for s in self.simplices if len(s) == 1]

    @property
    def vertex_count(self) -> int:
        return sum(1 for s in self.simplices if len(s) == 1)

    @property
    def dimension(self) -> int:
        return max((len(s) - 1 for s in self.simplices), default=-1)

    def of_dim(self, q: int) -> list:
        return [s for s in self.simplices if len(s) == q + 1]

    def restrict(self, vertices: Iterable[int]) -> "ComplexSlice":
        keep = set(vertices)
        return ComplexSlice([s for s in self.simplices if keep.issuperset(s)],
                            self.dim_cap, check=False)

    def relabel(self, mapping: Sequence[int] | dict) -> "ComplexSlice":
        """Rename vertices through an injective map (old vertex -> new vertex)."""
        simps = [tuple(sorted(mapping[v] for v in s)) for s in self.simplices]
        if any(len(set(s)) != len(s) for s in simps):
            raise ValidationError("relabelling is not injective")
        return ComplexSlice(sorted(simps, key=simplex_key), self.dim_cap, check=False)


@dataclass(frozen=True)
class PhaseGrid:
    """Sorted parameter values at which a filtration can change."""

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals or vals[0] != 0.0:
            raise ValidationError("a phase grid starts at 0")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValidationError("phase grid must be strictly increasing")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def floor_index(self, t: float, tol: float = TOL) -> int:
        """Index of the largest grid value ≤ t (within tolerance)."""
        i = int(np.searchsorted(self.values, t + tol, side="right")) - 1
        return max(i, 0)

    def gaps(self) -> list:
        return [b - a for a, b in zip(self.values, self.values[1:])]


def dedup_values(values: Iterable[float], tol: float = TOL) -> tuple:
    out: list = []
    for v in sorted(float(x) for x in values):
        if not out or v - out[-1] > tol:
            out.append(v)
    return tuple(out)


def phase_grid(points: MetricPoints, tol: float = TOL) -> PhaseGrid:
    vals = dedup_values([0.0, *points.dist[np.triu_indices(points.n, 1)]], tol)
    return PhaseGrid((0.0,) + tuple(v for v in vals if v > tol))


def merge_grids(*grids, tol: float = TOL) -> PhaseGrid:
    vals = dedup_values([0.0, *(v for g in grids for v in g)], tol)
    return PhaseGrid((0.0,) + tuple(v for v in vals if v > tol))


def neighbour_radii(dist: np.ndarray, kmax: int, members: Sequence[int] | None = None) -> np.ndarray:
    """``out[x, k]``: distance from x to its k-th nearest other point.

    Neighbours are drawn from ``members`` (all points by default) and must be
    distinct from x itself. Entries are NaN where fewer than k candidates
    exist; column 0 is zero.
    """
    n = dist.shape[0]
    pool = np.arange(n) if members is None else np.asarray(members, dtype=int)
    out = np.full((n, kmax + 1), np.nan)
    out[:, 0] = 0.0
    for x in range(n):
        others = pool[pool != x]
        row = np.sort(dist[x, others])
        m = min(kmax, row.size)
        out[x, 1:m + 1] = row[:m]
    return out


def set_births(dist: np.ndarray, radii: np.ndarray | None, vertex_rows: np.ndarray) -> np.ndarray:
    """Births of vertex sets given as rows of indices (repeats allowed).

    With ``radii`` (one column of :func:`neighbour_radii`) the degree birth
    ``max(diam, max radius)`` is returned, infinite when some radius is NaN.
    """
    rows = np.asarray(vertex_rows, dtype=int)
    if rows.ndim == 1:
        rows = rows[None, :]
    if rows.shape[1] == 1:
        diam = np.zeros(rows.shape[0])
    else:
        diam = dist[rows[:, :, None], rows[:, None, :]].max(axis=(1, 2))
    if radii is None:
        return diam
    rad = radii[rows]
    rad = np.where(np.isnan(rad), np.inf, rad).max(axis=1)
    return np.maximum(diam, rad)


@dataclass(frozen=True)
class FilteredComplex:
    """Simplices with one birth value each; NaN marks a simplex that never appears."""

    simplices: tuple
    births: np.ndarray
    dim_cap: int | None = None
    tol: float = TOL

    def __post_init__(self):
        births = np.asarray(self.births, dtype=float)
        if births.shape != (len(self.simplices),):
            raise ValidationError("one birth per simplex required")
        object.__setattr__(self, "births", births)

    def slice_at(self, s: float) -> ComplexSlice:
        keep = self.births <= s + self.tol
        return ComplexSlice([self.simplices[i] for i in np.flatnonzero(keep)],
                            self.dim_cap, check=False)

    def birth_values(self) -> tuple:
        return dedup_values(self.births[~np.isnan(self.births)], self.tol)

    def birth_of(self, simplex) -> float | None:
        try:
            i = self.simplices.index(tuple(simplex))
        except ValueError:
            return None
        b = self.births[i]
        return None if np.isnan(b) else float(b)

    def births_by_simplex(self) -> dict:
        return {s: float(b) for s, b in zip(self.simplices, self.births) if not np.isnan(b)}


class BifilteredComplex:
    """Rips simplices of ``points`` up to dimension ``dim_cap`` with Rips and degree births."""

    def __init__(self, points: MetricPoints, dim_cap: int, simplices: tuple,
                 rips: np.ndarray, deg_cap: int | None = None,
                 degree: np.ndarray | None = None):
        self.points = points
        self.dim_cap = dim_cap
        self.simplices = simplices
        self.rips = rips
        self.deg_cap = deg_cap
        self.degree = degree
        self.index = {s: i for i, s in enumerate(simplices)}
        width = dim_cap + 1
        pad = np.empty((len(simplices), width), dtype=int)
        for i, s in enumerate(simplices):
            pad[i, :len(s)] = s
            pad[i, len(s):] = s[-1]
        # repeated vertices leave diameters and degree births unchanged
        self.padded = pad
        self.sizes = np.fromiter((len(s) for s in simplices), dtype=int, count=len(simplices))

    def __len__(self):
        return len(self.simplices)

    def births(self, k: int = 0) -> np.ndarray:
        if k == 0:
            return self.rips
        if self.degree is None or self.deg_cap is None:
            raise ValidationError("degree births have not been filled")
        if k > self.deg_cap:
            raise ValidationError(f"k={k} exceeds deg_cap={self.deg_cap}")
        return self.degree[:, k]

    def degree_birth(self, simplex, k: int) -> float | None:
        b = self.births(k)[self.index[tuple(simplex)]]
        return None if np.isnan(b) else float(b)

    def filtered(self, k: int = 0) -> FilteredComplex:
        return FilteredComplex(self.simplices, self.births(k), self.dim_cap, self.points.tol)

    def to_json(self) -> dict:
        deg_cap = self.deg_cap
        out = []
        for i, s in enumerate(self.simplices):
            entry = {"v": list(s), "rips": float(self.rips[i])}
            if self.degree is not None:
                entry["deg"] = [None if np.isnan(b) else float(b) for b in self.degree[i]]
            out.append(entry)
        return {"dim_cap": self.dim_cap, "deg_cap": deg_cap, "simplices": out}

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def count_simplices(n: int, dim_cap: int) -> int:
    return sum(comb(n, q) for q in range(1, min(n, dim_cap + 1) + 1))


def build_rips(points: MetricPoints, dim_cap: int = 2) -> BifilteredComplex:
    """All subsets of size ≤ dim_cap + 1 with their diameters as Rips births."""
    if dim_cap < 0:
        raise ValidationError("dim_cap must be non-negative")
    n = points.n
    budget.check(count_simplices(n, dim_cap), budget.current_budget().max_simplices,
                 "Rips complex simplices")
    simplices: list = []
    births: list = []
    for size in range(1, min(n, dim_cap + 1) + 1):
        combos = list(combinations(range(n), size))
        simplices.extend(combos)
        births.append(set_births(points.dist, None, np.array(combos, dtype=int)))
    rips = np.concatenate(births) if births else np.zeros(0)
    return BifilteredComplex(points, dim_cap, tuple(simplices), rips)


def fill_degree_births(complex_: BifilteredComplex, deg_cap: int = 3) -> BifilteredComplex:
    """Attach degree births for k = 0..deg_cap (neighbours exclude the vertex itself)."""
    if deg_cap < 0:
        raise ValidationError("deg_cap must be non-negative")
    dist = complex_.points.dist
    radii = neighbour_radii(dist, deg_cap)
    degree = np.empty((len(complex_), deg_cap + 1))
    degree[:, 0] = complex_.rips
    for k in range(1, deg_cap + 1):
        rad = radii[:, k][complex_.padded]
        rad = np.where(np.isnan(rad), np.inf, rad).max(axis=1)
        col = np.maximum(complex_.rips, rad)
        col[np.isinf(col)] = np.nan
        degree[:, k] = col
    return BifilteredComplex(complex_.points, complex_.dim_cap, complex_.simplices,
                             complex_.rips, deg_cap, degree)


def build_bifiltered(points: MetricPoints, dim_cap: int = 2, deg_cap: int = 3) -> BifilteredComplex:
    return fill_degree_births(build_rips(points, dim_cap), deg_cap)


def poset_at(complex_: BifilteredComplex, s: float, k: int = 0) -> ComplexSlice:
    """Simplices of the degree-Rips poset at scale ``s`` and degree ``k``."""
    births = complex_.births(k)
    keep = np.flatnonzero(births <= s + complex_.points.tol)
    return ComplexSlice([complex_.simplices[i] for i in keep], complex_.dim_cap, check=False)
