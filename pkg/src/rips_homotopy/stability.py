"""Retractions onto a subset and finite certificates for homotopy interleavings.

For X ⊂ Y with d_H(X, Y) < r the nearest-point retraction θ: Y → X sends
P_s(Y) into P_{s+2r}(X); the certificate checks this, the commuting upper
triangle, and that τ ∪ θ(τ) is a simplex of P_{s+2r}(Y), at every phase
value of Y. The degree-Rips variant picks θ(y) from a matched tuple of
distinct points. Blumberg-Lesnick maps and the phase-gap equivalence are
verified through homology, π_0 and abelianized π_1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import budget
from .errors import BudgetExceeded, HypothesisError, InconsistencyError, ValidationError
from .filtration import (PhaseGrid, build_bifiltered, build_rips, neighbour_radii, phase_grid,
                         poset_at, set_births)
from .invariants import (SliceHomology, abelianized_pi1, component_map, groupoid_presentation,
                         induced_map, pi0)
from .linalg import inverse, matmul, rank
from .metric import (MetricPoints, SubsetPair, config_hausdorff_lt, cross_hausdorff,
                     has_saturating_matching, hausdorff)

TIE_BREAKS = ("least", "greatest")


@dataclass(frozen=True)
class Retraction:
    """θ as a table ambient index -> member index (partial for degree retractions)."""

    pair: SubsetPair
    r: float
    map: dict

    def __call__(self, y: int) -> int:
        return self.map[y]

    def as_array(self) -> np.ndarray:
        out = np.full(self.pair.ambient.n, -1, dtype=int)
        for y, x in self.map.items():
            out[y] = x
        return out


def _order_key(tie_break: str):
    if tie_break not in TIE_BREAKS:
        raise ValidationError(f"tie_break must be one of {TIE_BREAKS}")
    sign = 1 if tie_break == "least" else -1
    return lambda d, x: (d, sign * x)


def _require_hausdorff(pair: SubsetPair, r: float) -> None:
    d = hausdorff(pair.members, range(pair.ambient.n), pair.ambient)
    if not d < r:
        raise HypothesisError(f"hypothesis d_H < r fails: d_H = {d:.12g}, r = {r:.12g}")


def _require_config(pair: SubsetPair, k: int, r: float) -> None:
    if r <= 0:
        raise HypothesisError("hypothesis d_H < r fails: r must be positive")
    if k == 0:
        _require_hausdorff(pair, r)
    elif not config_hausdorff_lt(pair, k, r):
        raise HypothesisError(
            f"hypothesis d_H(X^{k + 1}_dis, Y^{k + 1}_dis) < r fails for r = {r:.12g}")


def build_retraction(pair: SubsetPair, r: float, tie_break: str = "least") -> Retraction:
    """Nearest-point retraction Y → X fixing X; ties by least (or greatest) index."""
    _require_hausdorff(pair, r)
    key = _order_key(tie_break)
    dist = pair.ambient.dist
    members = pair.members
    mask = pair.member_mask()
    table = {}
    for y in range(pair.ambient.n):
        if mask[y]:
            table[y] = y
        else:
            table[y] = min(members, key=lambda x: key(dist[y, x], x))
    return Retraction(pair, r, table)


def _nearest_others(dist: np.ndarray, y: int, k: int) -> list:
    others = [z for z in range(dist.shape[0]) if z != y]
    others.sort(key=lambda z: (dist[y, z], z))
    return others[:k]


def matched_tuple(dist: np.ndarray, positions: Sequence[int], members: Sequence[int],
                  r: float, tie_break: str = "least") -> tuple | None:
    """Lexicographically least tuple of distinct members with d(positions[j], x_j) < r.

    Candidates at each position are ordered by (distance, index) under the
    chosen tie rule. Returns None when no such tuple exists.
    """
    key = _order_key(tie_break)
    cands = [sorted((x for x in members if dist[y, x] < r), key=lambda x, y=y: key(dist[y, x], x))
             for y in positions]
    chosen: list = []
    for j in range(len(positions)):
        for x in cands[j]:
            if x in chosen:
                continue
            if has_saturating_matching(cands[j + 1:], forbidden=chosen + [x]):
                chosen.append(x)
                break
        else:
            return None
    return tuple(chosen)


class _DegreeRetraction:
    """θ for degree k: fixed on vertices of P_{s,k}(X), matched-tuple target elsewhere."""

    def __init__(self, pair: SubsetPair, k: int, r: float, tie_break: str):
        dist = pair.ambient.dist
        n = pair.ambient.n
        self.pair, self.k, self.r = pair, k, r
        self.mask = pair.member_mask()
        self.radii_y = neighbour_radii(dist, k)[:, k]
        radii_x = neighbour_radii(dist, k, pair.members)[:, k]
        radii_x[~self.mask] = np.nan
        self.radii_x = radii_x
        self.target = np.full(n, -1, dtype=int)
        self.tuples: dict = {}
        for y in range(n):
            if np.isnan(self.radii_y[y]):
                continue  # never a vertex of P_{s,k}(Y)
            positions = [y] + _nearest_others(dist, y, k)
            tup = matched_tuple(dist, positions, pair.members, r, tie_break)
            if tup is None:
                raise InconsistencyError(
                    f"no matched tuple for vertex {y} although the configuration hypothesis holds")
            self.tuples[y] = tup
            self.target[y] = tup[0]

    def at(self, s: float, tol: float) -> np.ndarray:
        theta = self.target.copy()
        fixed = self.mask & (self.radii_x <= s + tol)
        theta[fixed] = np.flatnonzero(fixed)
        return theta


def build_degree_retraction(pair: SubsetPair, k: int, s: float, r: float,
                            tie_break: str = "least") -> Retraction:
    """θ on the vertices of P_{s,k}(Y), landing in vertices of P_{s+2r,k}(X)."""
    _require_config(pair, k, r)
    data = _DegreeRetraction(pair, k, r, tie_break)
    tol = pair.ambient.tol
    theta = data.at(s, tol)
    verts = np.flatnonzero(data.radii_y <= s + tol)
    return Retraction(pair, r, {int(y): int(theta[y]) for y in verts})


@dataclass(frozen=True)
class GridCheck:
    s: float
    theta_lands: bool
    upper_commutes: bool
    union_witness: bool

    @property
    def ok(self) -> bool:
        return self.theta_lands and self.upper_commutes and self.union_witness

    def to_json(self) -> dict:
        return {"s": self.s, "theta_lands": self.theta_lands, "upper": self.upper_commutes,
                "union": self.union_witness}


@dataclass(frozen=True)
class InterleavingCertificate:
    pair: SubsetPair
    r: float
    k: int
    grid: PhaseGrid
    checks: tuple
    overall: bool

    def to_json(self) -> dict:
        return {"r": self.r, "k": self.k, "hypothesis": "ok",
                "grid": [c.to_json() for c in self.checks], "overall": self.overall}


def verify_interleaving(pair: SubsetPair, r: float, k: int = 0, dim_cap: int = 2,
                        tie_break: str = "least") -> InterleavingCertificate:
    """Check the shifted retraction diagram for X ⊂ Y at every phase value of Y.

    Raises :class:`HypothesisError` when d_H (configuration version for
    k ≥ 1) is not below r; a failed check is reported in the certificate.
    """
    _require_config(pair, k, r)
    pts = pair.ambient
    dist, tol = pts.dist, pts.tol
    cx = build_bifiltered(pts, dim_cap, k) if k else build_rips(pts, dim_cap)
    births_y = cx.births(k)
    pad = cx.padded
    if k == 0:
        theta_fixed = build_retraction(pair, r, tie_break).as_array()
        radii_y = radii_x = None
        at = lambda s: theta_fixed  # noqa: E731
    else:
        data = _DegreeRetraction(pair, k, r, tie_break)
        radii_y, radii_x = data.radii_y, data.radii_x
        at = lambda s: data.at(s, tol)  # noqa: E731
    mask = pair.member_mask()
    all_in_x = mask[pad].all(axis=1)
    births_x = np.full(len(cx), np.inf)
    if all_in_x.any():
        births_x[all_in_x] = set_births(dist, radii_x, pad[all_in_x])
    grid = phase_grid(pts)
    checks = []
    for s in grid:
        theta = at(s)
        rows = pad[births_y <= s + tol]
        img = theta[rows]
        if (img < 0).any():
            raise InconsistencyError(f"θ undefined on a vertex of P_{{{s},{k}}}(Y)")
        top = s + 2 * r + tol
        lands = bool((set_births(dist, radii_x, img) <= top).all()) if len(rows) else True
        union = (bool((set_births(dist, radii_y, np.hstack([rows, img])) <= top).all())
                 if len(rows) else True)
        xrows = pad[births_x <= s + tol]
        upper = bool((theta[xrows] == xrows).all())
        checks.append(GridCheck(float(s), lands, upper, union))
    return InterleavingCertificate(pair, r, k, grid, tuple(checks), all(c.ok for c in checks))


# -- Blumberg-Lesnick maps ------------------------------------------------------------

@dataclass
class BLVerdict:
    """Per homology degree: projection isomorphisms and ψφ = σ."""

    p: int
    s: float
    r: float
    degrees: dict = field(default_factory=dict)
    swapped: "BLVerdict | None" = None

    @property
    def passed(self) -> bool:
        own = all(d["projections_iso"] and d["composite_equals_sigma"]
                  for d in self.degrees.values())
        return own and (self.swapped is None or self.swapped.passed)

    def to_json(self) -> dict:
        out = {"p": self.p, "s": self.s, "r": self.r,
               "degrees": {str(q): d for q, d in self.degrees.items()}, "passed": self.passed}
        if self.swapped is not None:
            out["swapped"] = self.swapped.to_json()
        return out


def _is_iso(M: np.ndarray, p: int) -> bool:
    return M.shape[0] == M.shape[1] and rank(M, p) == M.shape[0]


def blumberg_lesnick(X: MetricPoints, Y: MetricPoints, cross_dist, r: float, s: float,
                     dim_cap: int = 2, p: int = 2, symmetric: bool = False,
                     max_points: int | None = None) -> BLVerdict:
    """Verify the interleaving maps φ, ψ built through the pair space U in homology.

    ``cross_dist[x, y]`` is d(x, y) in a common metric space; X and Y need
    not be nested.
    """
    cross = np.asarray(cross_dist, dtype=float)
    nx, ny = X.n, Y.n
    if cross.shape != (nx, ny):
        raise ValidationError(f"cross distances must have shape {(nx, ny)}, got {cross.shape}")
    limit = budget.current_budget().max_points_bl if max_points is None else max_points
    if max(nx, ny) > limit:
        raise BudgetExceeded(f"pair-space construction limited to {limit} points per side")
    if dim_cap > 2 and max_points is None:
        raise BudgetExceeded("pair-space construction limited to dim_cap ≤ 2")
    block = np.block([[X.dist, cross], [cross.T, Y.dist]])
    MetricPoints(tuple(range(nx + ny)), block, X.tol)  # the joint metric must be valid
    d = cross_hausdorff(cross)
    if not d < r:
        raise HypothesisError(f"hypothesis d_H < r fails: d_H = {d:.12g}, r = {r:.12g}")
    tol = X.tol
    pairs = [(x, y) for x in range(nx) for y in range(ny) if cross[x, y] < r]
    ux = np.array([x for x, _ in pairs], dtype=int)
    uy = np.array([y for _, y in pairs], dtype=int)
    ux_pts = MetricPoints(tuple(pairs), X.dist[np.ix_(ux, ux)], tol)
    uy_pts = MetricPoints(tuple(pairs), Y.dist[np.ix_(uy, uy)], tol)
    cx_u = build_rips(ux_pts, dim_cap)
    cy_u = build_rips(uy_pts, dim_cap)
    cx, cy = build_rips(X, dim_cap), build_rips(Y, dim_cap)
    max_k = dim_cap - 1

    def hom(c, t):
        return SliceHomology(poset_at(c, t), p, max_k)

    a0, u0 = hom(cx, s), hom(cx_u, s)
    b1, u1 = hom(cy, s + 2 * r), hom(cy_u, s + 2 * r)
    a2, u2 = hom(cx, s + 4 * r), hom(cx_u, s + 4 * r)
    proj_x, proj_y = ux.tolist(), uy.tolist()
    verdict = BLVerdict(p, float(s), float(r))
    for q in range(max_k + 1):
        px0 = induced_map(u0, a0, q, proj_x)
        py1 = induced_map(u1, b1, q, proj_y)
        px2 = induced_map(u2, a2, q, proj_x)
        iso = _is_iso(px0, p) and _is_iso(py1, p) and _is_iso(px2, p)
        equal = False
        if iso:
            incl1 = induced_map(u0, u1, q)
            incl2 = induced_map(u1, u2, q)
            phi = matmul(py1, matmul(incl1, inverse(px0, p), p), p)
            psi = matmul(px2, matmul(incl2, inverse(py1, p), p), p)
            sigma = induced_map(a0, a2, q)
            equal = bool(np.array_equal(matmul(psi, phi, p), sigma))
        verdict.degrees[q] = {"projections_iso": bool(iso), "composite_equals_sigma": equal,
                              "betti_source": a0.betti[q], "betti_target": a2.betti[q]}
    if symmetric:
        verdict.swapped = blumberg_lesnick(Y, X, cross.T, r, s, dim_cap, p, False, max_points)
    return verdict


# -- phase-gap equivalence ---------------------------------------------------------------

@dataclass(frozen=True)
class PhaseGapReport:
    s: float
    pi0_bijection: bool
    homology_iso: dict
    pi1_equal: bool

    @property
    def passed(self) -> bool:
        return self.pi0_bijection and all(self.homology_iso.values()) and self.pi1_equal


def phase_gap_report(pair: SubsetPair, k: int, r: float, i: int, dim_cap: int = 2,
                     primes: Sequence[int] = (2, 3)) -> PhaseGapReport:
    _require_config(pair, k, r)
    grid = phase_grid(pair.ambient)
    if not 0 <= i < len(grid):
        raise ValidationError(f"grid index {i} out of range")
    gap = grid[i + 1] - grid[i] if i + 1 < len(grid) else np.inf
    if not 2 * r < gap:
        raise HypothesisError(f"gap hypothesis fails: 2r = {2 * r:.12g} ≥ {gap:.12g}")
    s = grid[i]
    members = pair.members
    sub = pair.ambient.subspace(members)
    cx_x = build_bifiltered(sub, dim_cap, k) if k else build_rips(sub, dim_cap)
    cx_y = build_bifiltered(pair.ambient, dim_cap, k) if k else build_rips(pair.ambient, dim_cap)
    slice_x = poset_at(cx_x, s, k).relabel(members)
    slice_y = poset_at(cx_y, s, k)
    if any(simplex not in slice_y.index for simplex in slice_x):
        raise InconsistencyError("P_{s,k}(X) is not contained in P_{s,k}(Y)")

    comp_y = component_map(slice_y)
    classes_x = pi0(slice_x)
    images = [comp_y[c[0]] for c in classes_x]
    bijection = len(set(images)) == len(images) == len(pi0(slice_y))

    max_k = dim_cap - 1
    homology = {}
    for p in primes:
        hx, hy = SliceHomology(slice_x, p, max_k), SliceHomology(slice_y, p, max_k)
        for q in range(max_k + 1):
            homology[f"p{p}_H{q}"] = _is_iso(induced_map(hx, hy, q), p)

    pi1_equal = True
    if dim_cap >= 2:
        for c in classes_x:
            ab_x = abelianized_pi1(groupoid_presentation(slice_x, c[0]))
            ab_y = abelianized_pi1(groupoid_presentation(slice_y, c[0]))
            pi1_equal = pi1_equal and ab_x == ab_y
    return PhaseGapReport(float(s), bijection, homology, pi1_equal)


def phase_gap_check(pair: SubsetPair, k: int, r: float, i: int, dim_cap: int = 2,
                    primes: Sequence[int] = (2, 3)) -> bool:
    """Whether P_{s_i,k}(X) → P_{s_i,k}(Y) is an isomorphism on π_0, H_*(GF(p)) and π_1^ab."""
    return phase_gap_report(pair, k, r, i, dim_cap, primes).passed
