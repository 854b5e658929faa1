"""Independent reference computations used to freeze expected values.

Nothing here imports the package under test: ranks go through sympy's
DomainMatrix over GF(p), Smith forms through sympy, and the combinatorial
predicates are plain enumeration.
"""
from __future__ import annotations

import math
from itertools import combinations, permutations, product

from sympy import Matrix, ZZ
from sympy.matrices.normalforms import smith_normal_form
from sympy.polys.domains import GF
from sympy.polys.matrices import DomainMatrix


def gf_rank(rows, p: int) -> int:
    rows = [list(r) for r in rows]
    if not rows or not rows[0]:
        return 0
    K = GF(p)
    return DomainMatrix([[K(int(v) % p) for v in r] for r in rows], (len(rows), len(rows[0])), K).rank()


def closure(simplices) -> list:
    out = set()
    for s in simplices:
        s = tuple(sorted(s))
        for q in range(1, len(s) + 1):
            out.update(combinations(s, q))
    return sorted(out, key=lambda t: (len(t), t))


def boundary_rows(simplices, q: int) -> list:
    """Signed boundary matrix from q-simplices to (q-1)-simplices, rows = faces."""
    cols = [s for s in simplices if len(s) == q + 1]
    faces = [s for s in simplices if len(s) == q]
    pos = {f: i for i, f in enumerate(faces)}
    M = [[0] * len(cols) for _ in faces]
    for j, s in enumerate(cols):
        for i in range(len(s)):
            M[pos[s[:i] + s[i + 1:]]][j] += (-1) ** i
    return M


def betti(simplices, p: int, max_k: int) -> list:
    simplices = closure(simplices)
    out = []
    for q in range(max_k + 1):
        n_q = sum(1 for s in simplices if len(s) == q + 1)
        rank_q = gf_rank(boundary_rows(simplices, q), p) if q else 0
        rank_next = gf_rank(boundary_rows(simplices, q + 1), p)
        out.append(n_q - rank_q - rank_next)
    return out


def integral_h1(simplices) -> tuple:
    """(free rank, torsion) of H_1 over the integers via sympy's Smith form."""
    simplices = closure(simplices)
    n_edges = sum(1 for s in simplices if len(s) == 2)
    d1 = boundary_rows(simplices, 1)
    d2 = boundary_rows(simplices, 2)
    r1 = Matrix(d1).rank() if d1 and d1[0] else 0
    diag = []
    if d2 and d2[0]:
        snf = smith_normal_form(Matrix(d2), domain=ZZ)
        diag = [abs(snf[i, i]) for i in range(min(snf.shape)) if snf[i, i] != 0]
    return n_edges - r1 - len(diag), tuple(int(d) for d in diag if d > 1)


def components(vertices, edges) -> list:
    """Connected components by repeated transitive closure."""
    remaining = set(vertices)
    out = []
    while remaining:
        start = min(remaining)
        comp = {start}
        grew = True
        while grew:
            grew = False
            for a, b in edges:
                if (a in comp) != (b in comp):
                    comp |= {a, b}
                    grew = True
        out.append(sorted(comp))
        remaining -= comp
    return out


def hausdorff(A, B, D) -> float:
    directed = lambda U, V: max(min(D[u][v] for v in V) for u in U)  # noqa: E731
    return max(directed(A, B), directed(B, A))


def config_lt(D, X, n: int, k: int, r: float) -> bool:
    """Every ordered (k+1)-tuple of distinct points has an ordered distinct X-tuple within r."""
    for ys in permutations(range(n), k + 1):
        if not any(all(D[y][x] < r for y, x in zip(ys, xs)) for xs in permutations(X, k + 1)):
            return False
    return True


def rips_births(D, dim_cap: int) -> dict:
    n = len(D)
    out = {}
    for size in range(1, dim_cap + 2):
        for s in combinations(range(n), size):
            out[s] = max((D[a][b] for a, b in combinations(s, 2)), default=0.0)
    return out


def degree_birth(D, simplex, k: int) -> float:
    n = len(D)
    diam = max((D[a][b] for a, b in combinations(simplex, 2)), default=0.0)
    worst = diam
    for x in simplex:
        others = sorted(D[x][y] for y in range(n) if y != x)
        if k > len(others):
            return math.inf
        if k:
            worst = max(worst, others[k - 1])
    return worst


def euclid(points) -> list:
    return [[math.dist(a, b) for b in points] for a in points]


# -- systems: definitions evaluated over the continuous parameter ----------------------

def level(grid, t: float) -> int:
    return max(i for i, g in enumerate(grid) if g <= t + 1e-9)


def sample_params(grid) -> list:
    """Grid values and points just below each later grid value."""
    out = list(grid)
    out += [g - 1e-6 for g in grid[1:]]
    out.append(grid[-1] + 10.0)
    return sorted(out)


def set_push(trans, i: int, j: int, a):
    for step in range(i, j):
        a = trans[step][a]
    return a


def set_r_mono(grid, A_sets, A_trans, comps, r: float) -> bool:
    for s in sample_params(grid):
        i, j = level(grid, s), level(grid, s + r)
        for a, b in combinations(A_sets[i], 2):
            if comps[i][a] == comps[i][b] and set_push(A_trans, i, j, a) != set_push(A_trans, i, j, b):
                return False
    return True


def set_r_epi(grid, B_sets, B_trans, comps, r: float) -> bool:
    for s in sample_params(grid):
        i, j = level(grid, s), level(grid, s + r)
        image = set(comps[j].values())
        if any(set_push(B_trans, i, j, b) not in image for b in B_sets[i]):
            return False
    return True


def _mat_push(trans, i, j, v, p):
    for step in range(i, j):
        M = trans[step]
        v = tuple(sum(M[row][c] * v[c] for c in range(len(v))) % p for row in range(len(M)))
    return v


def _apply(M, v, p, rows):
    return tuple(sum(M[r][c] * v[c] for c in range(len(v))) % p for r in range(rows))


def vec_r_mono(grid, dims_a, A_trans, comps, dims_b, r: float, p: int = 2) -> bool:
    """Enumerate every vector of A_s (small dims only)."""
    for s in sample_params(grid):
        i, j = level(grid, s), level(grid, s + r)
        for v in product(range(p), repeat=dims_a[i]):
            if any(_apply(comps[i], v, p, dims_b[i])):
                continue
            if any(_mat_push(A_trans, i, j, v, p)):
                return False
    return True


def vec_r_epi(grid, dims_a, comps, dims_b, B_trans, r: float, p: int = 2) -> bool:
    for s in sample_params(grid):
        i, j = level(grid, s), level(grid, s + r)
        image = {_apply(comps[j], v, p, dims_b[j]) for v in product(range(p), repeat=dims_a[j])}
        for w in product(range(p), repeat=dims_b[i]):
            if _mat_push(B_trans, i, j, w, p) not in image:
                return False
    return True
