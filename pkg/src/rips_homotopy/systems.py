"""Systems over a finite phase grid and the shifted mono/epi calculus.

A system is stored at the grid values only and is constant on each
half-open interval [g_i, g_{i+1}) and beyond the last value. Shifting a
parameter s by r therefore lands at the largest grid value ≤ s + r.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from .errors import InconsistencyError, ValidationError
from .filtration import FilteredComplex, PhaseGrid, merge_grids, simplex_key
from .invariants import SliceHomology, component_map, induced_map
from .linalg import column_space_contains, matmul, nullspace, require_prime
from .metric import TOL


def shift_index(grid: PhaseGrid, s_index: int, r: float, tol: float = TOL) -> int:
    """Grid index holding the system value at parameter grid[s_index] + r."""
    if r < 0:
        raise ValidationError("shift must be non-negative")
    return grid.floor_index(grid[s_index] + r, tol)


@dataclass
class SetSystem:
    """Finite sets per grid value with functions between consecutive values."""

    grid: PhaseGrid
    sets: list
    transitions: list

    def __post_init__(self):
        self.sets = [tuple(s) for s in self.sets]
        self.transitions = [dict(t) for t in self.transitions]
        if len(self.sets) != len(self.grid) or len(self.transitions) != len(self.grid) - 1:
            raise ValidationError("a system needs one set per grid value and one map per step")
        for i, t in enumerate(self.transitions):
            here, there = set(self.sets[i]), set(self.sets[i + 1])
            if set(t) != here or not set(t.values()) <= there:
                raise ValidationError(f"transition {i} is not a function sets[{i}] -> sets[{i + 1}]")

    def push(self, i: int, j: int, a):
        for step in range(i, j):
            a = self.transitions[step][a]
        return a

    def transition(self, i: int, j: int) -> dict:
        return {a: self.push(i, j, a) for a in self.sets[i]}

    def to_json(self) -> dict:
        return {"grid": list(self.grid), "sets": [list(s) for s in self.sets],
                "transitions": [[[a, b] for a, b in t.items()] for t in self.transitions]}

    @classmethod
    def from_json(cls, payload: dict) -> "SetSystem":
        return cls(PhaseGrid(tuple(payload["grid"])), payload["sets"],
                   [{_hashable(a): _hashable(b) for a, b in t} for t in payload["transitions"]])


def _hashable(x):
    return tuple(_hashable(v) for v in x) if isinstance(x, list) else x


@dataclass
class VecSystem:
    """GF(p) vector spaces per grid value; ``transitions[i]`` is dims[i+1] x dims[i]."""

    grid: PhaseGrid
    p: int
    dims: list
    transitions: list

    def __post_init__(self):
        require_prime(self.p)
        self.dims = [int(d) for d in self.dims]
        if len(self.dims) != len(self.grid) or len(self.transitions) != len(self.grid) - 1:
            raise ValidationError("a system needs one space per grid value and one map per step")
        mats = []
        for i, t in enumerate(self.transitions):
            m = np.asarray(t, dtype=np.int64).reshape(self.dims[i + 1], self.dims[i]) % self.p
            mats.append(m)
        self.transitions = mats

    def transition(self, i: int, j: int) -> np.ndarray:
        out = np.eye(self.dims[i], dtype=np.int64)
        for step in range(i, j):
            out = matmul(self.transitions[step], out, self.p)
        return out

    def to_json(self) -> dict:
        return {"grid": list(self.grid), "p": self.p, "dims": self.dims,
                "transitions": [t.tolist() for t in self.transitions]}

    @classmethod
    def from_json(cls, payload: dict) -> "VecSystem":
        return cls(PhaseGrid(tuple(payload["grid"])), payload["p"], payload["dims"],
                   payload["transitions"])


def _same_grid(a: PhaseGrid, b: PhaseGrid, tol: float = TOL) -> bool:
    return len(a) == len(b) and all(abs(x - y) <= tol for x, y in zip(a, b))


@dataclass
class SystemMap:
    """A natural transformation between two systems on the same grid."""

    source: Any
    target: Any
    components: list

    def __post_init__(self):
        if type(self.source) is not type(self.target):
            raise ValidationError("source and target must be systems of the same kind")
        if not _same_grid(self.source.grid, self.target.grid):
            raise ValidationError("grids differ; refine both systems to a common grid first")
        if len(self.components) != len(self.source.grid):
            raise ValidationError("one component per grid value required")
        if self.is_set:
            self.components = [dict(c) for c in self.components]
            for i, c in enumerate(self.components):
                if set(c) != set(self.source.sets[i]) or not set(c.values()) <= set(self.target.sets[i]):
                    raise ValidationError(f"component {i} is not a function A_{i} -> B_{i}")
        else:
            if self.source.p != self.target.p:
                raise ValidationError("vector systems over different fields")
            self.components = [np.asarray(c, dtype=np.int64).reshape(
                self.target.dims[i], self.source.dims[i]) % self.p
                for i, c in enumerate(self.components)]
        self._check_natural()

    @property
    def is_set(self) -> bool:
        return isinstance(self.source, SetSystem)

    @property
    def p(self) -> int:
        return self.source.p

    @property
    def grid(self) -> PhaseGrid:
        return self.source.grid

    def _check_natural(self) -> None:
        A, B = self.source, self.target
        for i in range(len(self.grid) - 1):
            if self.is_set:
                fi, fj = self.components[i], self.components[i + 1]
                for a in A.sets[i]:
                    if fj[A.transitions[i][a]] != B.transitions[i][fi[a]]:
                        raise ValidationError(f"naturality fails at step {i} for element {a!r}")
            else:
                left = matmul(self.components[i + 1], A.transitions[i], self.p)
                right = matmul(B.transitions[i], self.components[i], self.p)
                if not np.array_equal(left, right):
                    raise ValidationError(f"naturality fails at step {i}")


def identity_map(system) -> SystemMap:
    if isinstance(system, SetSystem):
        return SystemMap(system, system, [{a: a for a in s} for s in system.sets])
    return SystemMap(system, system, [np.eye(d, dtype=np.int64) for d in system.dims])


def compose(f: SystemMap, g: SystemMap) -> SystemMap:
    """g ∘ f."""
    if g.source is not f.target and not _same_grid(f.grid, g.grid):
        raise ValidationError("maps are not composable")
    if f.is_set != g.is_set:
        raise ValidationError("maps are not composable")
    if f.is_set:
        if any(set(fc.values()) - set(gc) for fc, gc in zip(f.components, g.components)):
            raise ValidationError("maps are not composable")
        comps = [{a: gc[b] for a, b in fc.items()} for fc, gc in zip(f.components, g.components)]
    else:
        if f.target.dims != g.source.dims:
            raise ValidationError("maps are not composable")
        comps = [matmul(gc, fc, f.p) for fc, gc in zip(f.components, g.components)]
    return SystemMap(f.source, g.target, comps)


def refine(system, grid: PhaseGrid, tol: float = TOL):
    """Re-express a system on a finer grid; new values repeat the preceding level."""
    old = system.grid
    idx = [old.floor_index(t, tol) for t in grid]
    missing = [v for v in old if all(abs(v - t) > tol for t in grid)]
    if missing:
        raise ValidationError("target grid does not refine the system's grid")
    if isinstance(system, SetSystem):
        trans = []
        for a, b in zip(idx, idx[1:]):
            trans.append(system.transition(a, b))
        return SetSystem(grid, [system.sets[i] for i in idx], trans)
    trans = [system.transition(a, b) for a, b in zip(idx, idx[1:])]
    return VecSystem(grid, system.p, [system.dims[i] for i in idx], trans)


def refine_map(f: SystemMap, grid: PhaseGrid, tol: float = TOL) -> SystemMap:
    idx = [f.grid.floor_index(t, tol) for t in grid]
    return SystemMap(refine(f.source, grid, tol), refine(f.target, grid, tol),
                     [f.components[i] for i in idx])


# -- shifted mono / epi ----------------------------------------------------------

@dataclass
class Verdict:
    r: float
    mono: bool
    epi: bool
    witness_failure: dict | None = None

    @property
    def iso(self) -> bool:
        return self.mono and self.epi

    def to_json(self) -> dict:
        out = {"r": self.r, "mono": self.mono, "epi": self.epi}
        if self.witness_failure is not None:
            out["witness_failure"] = self.witness_failure
        return out


def _mono_witness(f: SystemMap, r: float):
    A, grid = f.source, f.grid
    for i in range(len(grid)):
        j = shift_index(grid, i, r)
        if f.is_set:
            seen: dict = {}
            for a in A.sets[i]:
                b = f.components[i][a]
                if b in seen:
                    a0 = seen[b]
                    if A.push(i, j, a0) != A.push(i, j, a):
                        return {"s": grid[i], "kind": "mono", "elements": [a0, a]}
                else:
                    seen[b] = a
        else:
            K = nullspace(f.components[i], f.p)
            if K.shape[1]:
                image = matmul(A.transition(i, j), K, f.p)
                bad = np.flatnonzero(image.any(axis=0))
                if bad.size:
                    return {"s": grid[i], "kind": "mono", "elements": [K[:, bad[0]].tolist()]}
    return None


def _epi_witness(f: SystemMap, r: float):
    B, grid = f.target, f.grid
    for i in range(len(grid)):
        j = shift_index(grid, i, r)
        if f.is_set:
            image = set(f.components[j].values())
            for b in B.sets[i]:
                if B.push(i, j, b) not in image:
                    return {"s": grid[i], "kind": "epi", "elements": [b]}
        else:
            pushed = B.transition(i, j)
            fj = f.components[j]
            if not column_space_contains(fj, pushed, f.p):
                for c in range(pushed.shape[1]):
                    if not column_space_contains(fj, pushed[:, c:c + 1], f.p):
                        return {"s": grid[i], "kind": "epi", "elements": [np.eye(
                            B.dims[i], dtype=np.int64)[:, c].tolist()]}
    return None


def is_r_mono(f: SystemMap, r: float) -> bool:
    return _mono_witness(f, r) is None


def is_r_epi(f: SystemMap, r: float) -> bool:
    return _epi_witness(f, r) is None


def is_r_iso(f: SystemMap, r: float) -> bool:
    return is_r_mono(f, r) and is_r_epi(f, r)


def check_r_iso(f: SystemMap, r: float) -> Verdict:
    mono = _mono_witness(f, r)
    epi = _epi_witness(f, r)
    return Verdict(r, mono is None, epi is None, mono or epi)


def candidate_radii(grid: PhaseGrid, tol: float = TOL) -> list:
    vals = list(grid)
    diffs = {0.0}
    for i, a in enumerate(vals):
        for b in vals[i + 1:]:
            diffs.add(b - a)
    out: list = []
    for d in sorted(diffs):
        if not out or d - out[-1] > tol:
            out.append(d)
    return out


def controlled_equivalence_radius(bundle: Sequence[SystemMap]) -> float | None:
    """Least r on the grid for which every map in the bundle is an r-isomorphism.

    Returns None when no shift works (the bundle is not a controlled
    equivalence within the grid).
    """
    if not bundle:
        raise ValidationError("empty bundle")
    grid = bundle[0].grid
    if any(not _same_grid(f.grid, grid) for f in bundle):
        raise ValidationError("bundle maps live on different grids")
    cands = candidate_radii(grid)

    def ok(r):
        return all(is_r_iso(f, r) for f in bundle)

    if not ok(cands[-1]):
        return None
    lo, hi = 0, len(cands) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(cands[mid]):
            hi = mid
        else:
            lo = mid + 1
    return cands[lo]


CASES = ("fg", "hg", "fh")


def compose_bound_check(f: SystemMap, g: SystemMap, r: float, s: float, case: str = "fg") -> bool:
    """Triangle bound for h = g∘f: two maps with bounds r and s force r + s on the third.

    ``case`` names the two maps carrying the bounds, in order: "fg" (f r-iso,
    g s-iso ⟹ h), "hg" (h r-iso, g s-iso ⟹ f), "fh" (f r-iso, h s-iso ⟹ g).
    Returns True when the premise fails.
    """
    if case not in CASES:
        raise ValidationError(f"case must be one of {CASES}")
    h = compose(f, g)
    maps = {"f": f, "g": g, "h": h}
    first, second = maps[case[0]], maps[case[1]]
    third = maps[({"f", "g", "h"} - set(case)).pop()]
    if not (is_r_iso(first, r) and is_r_iso(second, s)):
        return True
    return is_r_iso(third, r + s)


# -- pushouts -----------------------------------------------------------------------

def pushout_set_systems(f: SystemMap, g: SystemMap):
    """Levelwise pushout D = B ⊔_A C of f: A → B and g: A → C.

    Returns ``(D, B→D, C→D)``; elements of D_i are 0..|D_i|-1 ordered by the
    first B- then C-element of each class.
    """
    if f.source is not g.source and f.source.sets != g.source.sets:
        raise ValidationError("pushout needs a common source")
    if not (f.is_set and g.is_set):
        raise ValidationError("pushouts are computed for systems of sets")
    A, B, C = f.source, f.target, g.target
    grid = A.grid
    labels, to_d_b, to_d_c = [], [], []
    for i in range(len(grid)):
        tagged = [("B", b) for b in B.sets[i]] + [("C", c) for c in C.sets[i]]
        ds = DisjointSet(tagged)
        for a in A.sets[i]:
            ds.merge(("B", f.components[i][a]), ("C", g.components[i][a]))
        order: dict = {}
        for t in tagged:
            root = ds[t]
            if root not in order:
                order[root] = len(order)
        cls = {t: order[ds[t]] for t in tagged}
        labels.append(tuple(range(len(order))))
        to_d_b.append({b: cls[("B", b)] for b in B.sets[i]})
        to_d_c.append({c: cls[("C", c)] for c in C.sets[i]})
    transitions = []
    for i in range(len(grid) - 1):
        t: dict = {}
        for side, system, to_d in (("B", B, to_d_b), ("C", C, to_d_c)):
            for x in system.sets[i]:
                src = to_d[i][x]
                dst = to_d[i + 1][system.transitions[i][x]]
                if t.setdefault(src, dst) != dst:
                    raise InconsistencyError("pushout transition is not well defined")
        transitions.append(t)
    D = SetSystem(grid, labels, transitions)
    return D, SystemMap(B, D, to_d_b), SystemMap(C, D, to_d_c)


# -- systems from filtered complexes ---------------------------------------------------

def pi0_system(fc: FilteredComplex, grid: PhaseGrid) -> tuple:
    """π_0 system on ``grid`` and the per-level vertex -> component tables."""
    tables = [component_map(fc.slice_at(t)) for t in grid]
    sets = [tuple(sorted(set(tab.values()))) for tab in tables]
    trans = [{a: tables[i + 1][a] for a in sets[i]} for i in range(len(grid) - 1)]
    return SetSystem(grid, sets, trans), tables


def pi0_map(src: tuple, dst: tuple, vertex_map: Callable[[int], int] | None = None) -> SystemMap:
    (A, _), (B, tab_b) = src, dst
    f = vertex_map or (lambda v: v)
    comps = [{a: tab_b[i][f(a)] for a in A.sets[i]} for i in range(len(A.grid))]
    return SystemMap(A, B, comps)


def homology_levels(fc: FilteredComplex, grid: PhaseGrid, p: int, max_k: int) -> list:
    return [SliceHomology(fc.slice_at(t), p, max_k) for t in grid]


def homology_system(levels: list, grid: PhaseGrid, q: int) -> VecSystem:
    p = levels[0].p
    dims = [h.betti[q] for h in levels]
    trans = [induced_map(levels[i], levels[i + 1], q) for i in range(len(levels) - 1)]
    return VecSystem(grid, p, dims, trans)


def homology_map(src_levels: list, dst_levels: list, src: VecSystem, dst: VecSystem, q: int,
                 vertex_map=None) -> SystemMap:
    comps = [induced_map(a, b, q, vertex_map) for a, b in zip(src_levels, dst_levels)]
    return SystemMap(src, dst, comps)


def inclusion_bundle(sub: FilteredComplex, sup: FilteredComplex, primes: Sequence[int] = (2,),
                     max_k: int = 1, vertex_map=None, grid: PhaseGrid | None = None) -> dict:
    """π_0 and H_q (q ≤ max_k, each prime) system maps induced by a simplicial map."""
    grid = grid or merge_grids(sub.birth_values(), sup.birth_values())
    p0_sub, p0_sup = pi0_system(sub, grid), pi0_system(sup, grid)
    bundle = {"pi0": pi0_map(p0_sub, p0_sup, vertex_map)}
    for p in primes:
        lv_sub = homology_levels(sub, grid, p, max_k)
        lv_sup = homology_levels(sup, grid, p, max_k)
        for q in range(max_k + 1):
            a = homology_system(lv_sub, grid, q)
            b = homology_system(lv_sup, grid, q)
            bundle[f"H{q}_p{p}"] = homology_map(lv_sub, lv_sup, a, b, q, vertex_map)
    return bundle


@dataclass
class GluedSystems:
    """π_0 and homology systems of the four corners A, B, C, D and the maps between them."""

    grid: PhaseGrid
    D: FilteredComplex
    b_to_d: dict
    pi0: dict = field(default_factory=dict)
    pi0_maps: dict = field(default_factory=dict)
    homology: dict = field(default_factory=dict)
    homology_maps: dict = field(default_factory=dict)


def _births(fc: FilteredComplex) -> dict:
    return fc.births_by_simplex()


def glue_complex_systems(A: FilteredComplex, B: FilteredComplex, C: FilteredComplex,
                         vertex_map: dict, primes: Sequence[int] = (2,), max_k: int = 1,
                         tol: float = TOL) -> GluedSystems:
    """Pushout D = B ⊔_A C of filtered complexes along A ⊂ B and a vertex injection A → C."""
    ba, bb, bc = _births(A), _births(B), _births(C)
    for simplex, t in ba.items():
        if simplex not in bb or bb[simplex] > t + tol:
            raise ValidationError(f"A is not a subcomplex of B at simplex {simplex}")
    a_verts = sorted(s[0] for s in ba if len(s) == 1)
    if set(a_verts) != set(vertex_map):
        raise ValidationError("vertex map must be defined exactly on the vertices of A")
    if len(set(vertex_map.values())) != len(vertex_map):
        raise ValidationError("vertex map is not injective")

    def image(simplex):
        return tuple(sorted(vertex_map[v] for v in simplex))

    for simplex, t in ba.items():
        tc = bc.get(image(simplex))
        if tc is None or abs(tc - t) > tol:
            raise ValidationError(f"births of {simplex} in A and its image in C disagree")
    c_verts = sorted(s[0] for s in bc if len(s) == 1)
    fresh = iter(range((max(c_verts) + 1) if c_verts else 0, 10**9))
    b_to_d = dict(vertex_map)
    for s in bb:
        if len(s) == 1 and s[0] not in b_to_d:
            b_to_d[s[0]] = next(fresh)
    births = dict(bc)
    for simplex, t in bb.items():
        if simplex in ba:
            continue
        img = tuple(sorted(b_to_d[v] for v in simplex))
        if img in births:
            raise ValidationError(
                f"simplex {simplex} of B outside A collides with a simplex of C; "
                "the pushout is not a simplicial complex")
        births[img] = t
    simps = sorted(births, key=simplex_key)
    caps = [fc.dim_cap for fc in (A, B, C) if fc.dim_cap is not None]
    D = FilteredComplex(tuple(simps), np.array([births[s] for s in simps]),
                        min(caps) if caps else None, tol)

    grid = merge_grids(A.birth_values(), B.birth_values(), C.birth_values())
    out = GluedSystems(grid, D, b_to_d)
    corners = {"A": A, "B": B, "C": C, "D": D}
    edges = {"AB": ("A", "B", None), "AC": ("A", "C", vertex_map),
             "BD": ("B", "D", b_to_d), "CD": ("C", "D", None)}
    p0 = {name: pi0_system(fc, grid) for name, fc in corners.items()}
    out.pi0 = {name: v[0] for name, v in p0.items()}
    for key, (a, b, vm) in edges.items():
        out.pi0_maps[key] = pi0_map(p0[a], p0[b], vm.__getitem__ if vm else None)
    for p in primes:
        levels = {name: homology_levels(fc, grid, p, max_k) for name, fc in corners.items()}
        for q in range(max_k + 1):
            systems = {name: homology_system(lv, grid, q) for name, lv in levels.items()}
            out.homology[(p, q)] = systems
            out.homology_maps[(p, q)] = {
                key: homology_map(levels[a], levels[b], systems[a], systems[b], q, vm)
                for key, (a, b, vm) in edges.items()}
    return out


# -- serialization ---------------------------------------------------------------------

def system_from_json(payload: dict):
    return VecSystem.from_json(payload) if "p" in payload else SetSystem.from_json(payload)


def map_to_json(f: SystemMap) -> dict:
    if f.is_set:
        comps = [[[a, b] for a, b in c.items()] for c in f.components]
    else:
        comps = [c.tolist() for c in f.components]
    return {"kind": "set" if f.is_set else "vec", "source": f.source.to_json(),
            "target": f.target.to_json(), "components": comps}


def map_from_json(payload: dict) -> SystemMap:
    source = system_from_json(payload["source"])
    target = system_from_json(payload["target"])
    if payload.get("kind", "set") == "set":
        comps = [{_hashable(a): _hashable(b) for a, b in c} for c in payload["components"]]
    else:
        comps = payload["components"]
    return SystemMap(source, target, comps)
