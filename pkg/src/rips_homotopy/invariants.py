"""Computable homotopy invariants of a fixed simplex poset.

Path components, GF(p) homology with reproducible bases, induced maps of
simplicial maps in homology, the edge-path groupoid presentation with its
spanning-tree reduced fundamental group, integral H_1, and the order complex
(nerve of the simplex poset) used as a cross-check.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from . import budget
from .errors import BudgetExceeded, InconsistencyError, ValidationError
from .filtration import ComplexSlice, faces
from .linalg import require_prime, smith_diagonal


def pi0(slice_: ComplexSlice) -> list:
    """Vertex partition into path components, each sorted, ordered by least vertex."""
    verts = slice_.vertices
    ds = DisjointSet(verts)
    for s in slice_.simplices:
        if len(s) == 2:
            ds.merge(s[0], s[1])
    classes = [sorted(c) for c in ds.subsets()]
    return sorted(classes, key=lambda c: c[0])


def component_map(slice_: ComplexSlice) -> dict:
    """vertex -> least vertex of its component."""
    return {v: c[0] for c in pi0(slice_) for v in c}


# -- chains over GF(p) -------------------------------------------------------

def _axpy(col: dict, factor: int, other: dict, p: int) -> None:
    """col -= factor * other, in place."""
    for row, c in other.items():
        x = (col.get(row, 0) - factor * c) % p
        if x:
            col[row] = x
        else:
            col.pop(row, None)


def _reduce(columns: Sequence[dict], p: int, track: bool):
    """Column reduction with pivots at the lowest (largest) row index.

    Returns reduced columns, the change-of-basis columns (if tracked) and the
    map pivot row -> column.
    """
    reduced, basis, pivot_of = [], [], {}
    for j, column in enumerate(columns):
        col = dict(column)
        v = {j: 1} if track else None
        while col:
            low = max(col)
            jj = pivot_of.get(low)
            if jj is None:
                break
            other = reduced[jj]
            factor = col[low] * pow(other[low], -1, p) % p
            _axpy(col, factor, other, p)
            if track:
                _axpy(v, factor, basis[jj], p)
        reduced.append(col)
        basis.append(v)
        if col:
            pivot_of[max(col)] = j
    return reduced, basis, pivot_of


class FieldChainComplex:
    """Simplicial chains of a slice over GF(p) up to dimension ``top_dim``.

    Bases are the slice's simplices of each dimension in lexicographic order.
    ``boundary[q]`` holds the columns of ∂_q as ``{row: coefficient}`` dicts.
    """

    def __init__(self, slice_: ComplexSlice, p: int, top_dim: int):
        self.p = require_prime(p)
        self.slice = slice_
        self.top_dim = top_dim
        self.bases = [slice_.of_dim(q) for q in range(top_dim + 1)]
        self.pos = [{s: i for i, s in enumerate(b)} for b in self.bases]
        self.boundary = [[{} for _ in self.bases[0]]]
        for q in range(1, top_dim + 1):
            below = self.pos[q - 1]
            cols = []
            for s in self.bases[q]:
                col = {}
                for i, face in enumerate(faces(s)):
                    col[below[face]] = (1 if i % 2 == 0 else -1) % p
                cols.append(col)
            self.boundary.append(cols)
        self._check_square_zero()

    def _check_square_zero(self) -> None:
        p = self.p
        for q in range(2, self.top_dim + 1):
            lower = self.boundary[q - 1]
            for col in self.boundary[q]:
                acc: dict = {}
                for row, c in col.items():
                    _axpy(acc, -c, lower[row], p)
                if acc:
                    raise InconsistencyError(f"boundary of boundary is non-zero in degree {q}")

    def dense_boundary(self, q: int) -> np.ndarray:
        rows = len(self.bases[q - 1])
        out = np.zeros((rows, len(self.bases[q])), dtype=np.int64)
        for j, col in enumerate(self.boundary[q]):
            for i, c in col.items():
                out[i, j] = c
        return out


class SliceHomology:
    """GF(p) homology of a slice in degrees 0..max_k with fixed class representatives.

    The basis of H_q is indexed by the unpaired positive q-simplices of the
    standard reduction, in lexicographic order, so it is reproducible.
    """

    def __init__(self, slice_: ComplexSlice, p: int = 2, max_k: int = 1):
        if slice_.dim_cap is not None and max_k >= slice_.dim_cap:
            raise ValidationError(
                f"homology up to degree {max_k} needs simplices of dimension {max_k + 1}, "
                f"but the complex is truncated at {slice_.dim_cap}")
        self.slice = slice_
        self.p = require_prime(p)
        self.max_k = max_k
        self.chains = FieldChainComplex(slice_, p, max_k + 1)
        reductions = [None] + [_reduce(self.chains.boundary[q], self.p, track=True)
                               for q in range(1, max_k + 2)]
        self._zbasis = []   # per degree: positive simplex -> basis vector of Z_q
        self.essential = []
        for q in range(max_k + 1):
            n_q = len(self.chains.bases[q])
            if q == 0:
                positive = list(range(n_q))
                cycle = {i: {i: 1} for i in positive}
            else:
                red, vb, _ = reductions[q]
                positive = [j for j in range(n_q) if not red[j]]
                cycle = {j: vb[j] for j in positive}
            red_up, _, pivot_up = reductions[q + 1]
            zb = {i: (red_up[pivot_up[i]] if i in pivot_up else cycle[i]) for i in positive}
            self._zbasis.append(zb)
            self.essential.append([i for i in positive if i not in pivot_up])
        self.class_index = [{i: c for c, i in enumerate(ess)} for ess in self.essential]
        self.reps = [[self._zbasis[q][i] for i in self.essential[q]] for q in range(max_k + 1)]

    @property
    def betti(self) -> list:
        return [len(e) for e in self.essential]

    def coords(self, q: int, chain: Mapping[int, int]) -> np.ndarray:
        """Coordinates in the H_q basis of a q-cycle given by basis positions."""
        p = self.p
        col = {i: c % p for i, c in chain.items() if c % p}
        out = np.zeros(len(self.essential[q]), dtype=np.int64)
        zb = self._zbasis[q]
        cls = self.class_index[q]
        while col:
            low = max(col)
            vec = zb.get(low)
            if vec is None:
                raise ValidationError(f"chain is not a cycle in degree {q}")
            factor = col[low] * pow(vec[low], -1, p) % p
            _axpy(col, factor, vec, p)
            if low in cls:
                out[cls[low]] = (out[cls[low]] + factor) % p
        return out

    def rep_simplices(self, q: int) -> list:
        basis = self.chains.bases[q]
        return [{basis[i]: c for i, c in rep.items()} for rep in self.reps[q]]


def homology_ranks(slice_: ComplexSlice, p: int = 2, max_k: int = 1) -> list:
    """Betti numbers β_0..β_max_k over GF(p)."""
    return SliceHomology(slice_, p, max_k).betti


def _permutation_sign(seq: Sequence[int]) -> int:
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def induced_map(h_sub: SliceHomology, h_sup: SliceHomology, k: int,
                vertex_map: Mapping[int, int] | Callable[[int], int] | None = None) -> np.ndarray:
    """Matrix (β_k(sup) x β_k(sub)) of the simplicial map on H_k over GF(p).

    ``vertex_map`` defaults to the identity, i.e. an inclusion of slices.
    """
    if h_sub.p != h_sup.p:
        raise ValidationError("homology over different fields")
    p = h_sub.p
    if vertex_map is None:
        f = None
    elif callable(vertex_map):
        f = vertex_map
    else:
        f = vertex_map.__getitem__
    target_pos = h_sup.chains.pos[k]
    cols = []
    for rep in h_sub.rep_simplices(k):
        image: dict = {}
        for simplex, c in rep.items():
            if f is None:
                img, sign = simplex, 1
            else:
                mapped = [f(v) for v in simplex]
                if len(set(mapped)) < len(mapped):
                    continue
                sign = _permutation_sign(mapped)
                img = tuple(sorted(mapped))
            i = target_pos.get(img)
            if i is None:
                raise ValidationError(f"simplex {img} is missing from the target slice")
            image[i] = (image.get(i, 0) + sign * c) % p
        cols.append(h_sup.coords(k, image))
    if not cols:
        return np.zeros((h_sup.betti[k], 0), dtype=np.int64)
    return np.stack(cols, axis=1).astype(np.int64)


def induced_homology_map(sub: ComplexSlice, sup: ComplexSlice, p: int = 2, k: int = 0,
                         vertex_map=None) -> np.ndarray:
    if vertex_map is None:
        index = sup.index
        missing = [s for s in sub.simplices if s not in index]
        if missing:
            raise ValidationError(f"inclusion violated: {missing[0]} not in target")
    max_k = k
    return induced_map(SliceHomology(sub, p, max_k), SliceHomology(sup, p, max_k), k, vertex_map)


# -- groupoid presentation and fundamental group --------------------------------

@dataclass(frozen=True)
class GroupoidPresentation:
    """Edge-path groupoid of a slice and the π_1 presentation at ``basepoint``.

    Words are tuples of ``(generator index, ±1)`` read left to right as
    written, e.g. the relator of ``[x,y,z]`` is ``[y,z]·[x,y]·[x,z]^-1``.
    """

    objects: tuple
    generators: tuple
    relations: tuple
    basepoint: int
    spanning_tree: tuple
    pi1_generators: tuple
    pi1_relators: tuple

    def to_json(self) -> dict:
        return {
            "basepoint": self.basepoint,
            "generators": [list(self.generators[g]) for g in self.pi1_generators],
            "relators": [[[list(self.generators[g]), e] for g, e in w] for w in self.pi1_relators],
        }


def _free_reduce(word: list) -> list:
    out: list = []
    for letter in word:
        if out and out[-1][0] == letter[0] and out[-1][1] == -letter[1]:
            out.pop()
        else:
            out.append(letter)
    while len(out) > 1 and out[0][0] == out[-1][0] and out[0][1] == -out[-1][1]:
        out = out[1:-1]
    return out


def groupoid_presentation(slice_: ComplexSlice, basepoint: int) -> GroupoidPresentation:
    objects = tuple(slice_.vertices)
    if basepoint not in set(objects):
        raise ValidationError(f"basepoint {basepoint} is not a vertex of the slice")
    edges = tuple(s for s in slice_.simplices if len(s) == 2)
    gen = {e: i for i, e in enumerate(edges)}
    relations = tuple(
        ((gen[(y, z)], 1), (gen[(x, y)], 1), (gen[(x, z)], -1))
        for (x, y, z) in (s for s in slice_.simplices if len(s) == 3))

    adj: dict = {v: [] for v in objects}
    for (x, y) in edges:
        adj[x].append(y)
        adj[y].append(x)
    seen = {basepoint}
    tree = []
    queue = deque([basepoint])
    while queue:
        v = queue.popleft()
        for w in sorted(adj[v]):
            if w not in seen:
                seen.add(w)
                tree.append(gen[(min(v, w), max(v, w))])
                queue.append(w)
    tree_set = set(tree)
    pi1_gens = tuple(i for i, (x, y) in enumerate(edges) if x in seen and i not in tree_set)
    relators = []
    for word, simplex in zip(relations, (s for s in slice_.simplices if len(s) == 3)):
        if simplex[0] not in seen:
            continue
        reduced = _free_reduce([letter for letter in word if letter[0] not in tree_set])
        if reduced:
            relators.append(tuple(reduced))
    return GroupoidPresentation(objects, edges, relations, basepoint, tuple(sorted(tree)),
                                pi1_gens, tuple(relators))


@dataclass(frozen=True)
class Abelianization:
    free_rank: int
    torsion: tuple

    def to_json(self) -> dict:
        return {"free_rank": self.free_rank, "torsion": list(self.torsion)}


def abelianized_pi1(pres: GroupoidPresentation) -> Abelianization:
    col = {g: j for j, g in enumerate(pres.pi1_generators)}
    M = np.zeros((len(pres.pi1_relators), len(col)), dtype=object)
    for i, word in enumerate(pres.pi1_relators):
        for g, e in word:
            M[i, col[g]] += e
    diag = smith_diagonal(M) if M.size else []
    return Abelianization(len(col) - len(diag), tuple(d for d in diag if d > 1))


def integer_boundary(slice_: ComplexSlice, q: int) -> np.ndarray:
    rows = {s: i for i, s in enumerate(slice_.of_dim(q - 1))}
    cols = slice_.of_dim(q)
    out = np.zeros((len(rows), len(cols)), dtype=object)
    for j, s in enumerate(cols):
        for i, face in enumerate(faces(s)):
            out[rows[face], j] = 1 if i % 2 == 0 else -1
    return out


def integral_h1(slice_: ComplexSlice) -> Abelianization:
    """H_1 with integer coefficients via the Smith form of ∂_2."""
    if slice_.dim_cap is not None and slice_.dim_cap < 2:
        raise ValidationError("integral H_1 needs 2-simplices")
    n_edges = len(slice_.of_dim(1))
    rank_d1 = slice_.vertex_count - len(pi0(slice_))
    d2 = integer_boundary(slice_, 2)
    diag = smith_diagonal(d2) if d2.size else []
    return Abelianization(n_edges - rank_d1 - len(diag), tuple(d for d in diag if d > 1))


# -- order complex ----------------------------------------------------------------

def order_complex(slice_: ComplexSlice, chain_cap: int = 3, max_chains: int | None = None) -> ComplexSlice:
    """Strict chains σ_0 ⊂ … ⊂ σ_q of length ≤ chain_cap as simplices.

    Vertex ``i`` of the result is the i-th simplex of ``slice_``. The result
    is truncated at dimension ``chain_cap - 1``.
    """
    if chain_cap < 1:
        raise ValidationError("chain_cap must be at least 1")
    limit = budget.current_budget().max_chains if max_chains is None else max_chains
    index = slice_.index
    up: list = [[] for _ in slice_.simplices]
    for j, s in enumerate(slice_.simplices):
        for size in range(1, len(s)):
            for face in combinations(s, size):
                up[index[face]].append(j)
    chains: list = []

    def extend(chain: tuple) -> None:
        chains.append(chain)
        if len(chains) > limit:
            raise BudgetExceeded(f"order complex exceeds {limit} chains")
        if len(chain) < chain_cap:
            for j in up[chain[-1]]:
                extend(chain + (j,))

    for i in range(len(slice_.simplices)):
        extend((i,))
    chains.sort(key=lambda c: (len(c), c))
    return ComplexSlice(chains, chain_cap - 1, check=False)


# -- report ------------------------------------------------------------------------

def slice_report(slice_: ComplexSlice, s: float, k: int, primes: Sequence[int] = (2,),
                 max_k: int = 1) -> dict:
    classes = pi0(slice_)
    betti = {str(p): homology_ranks(slice_, p, max_k) for p in primes}
    pi1 = []
    for c in classes:
        pres = groupoid_presentation(slice_, c[0])
        entry = pres.to_json()
        entry["abelianization"] = abelianized_pi1(pres).to_json()
        pi1.append(entry)
    return {"s": s, "k": k, "pi0": len(classes), "betti": betti, "pi1": pi1}
