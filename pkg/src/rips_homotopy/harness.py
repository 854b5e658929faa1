"""Seeded random instances and property runners.

Everything here is driven by ``numpy.random.Generator`` so that a seed
fixes every instance. The CLI ``property`` command and the acceptance
tests share these generators.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .filtration import (ComplexSlice, FilteredComplex, PhaseGrid, build_bifiltered, build_rips,
                         make_simplex, phase_grid, poset_at)
from .invariants import (abelianized_pi1, groupoid_presentation, homology_ranks, integral_h1,
                         order_complex, pi0)
from .linalg import inverse, matmul
from .metric import SubsetPair, config_hausdorff_lt, from_euclidean, hausdorff
from .stability import blumberg_lesnick, phase_gap_report, verify_interleaving
from .systems import (SetSystem, SystemMap, VecSystem, candidate_radii, compose,
                      compose_bound_check, controlled_equivalence_radius, glue_complex_systems,
                      is_r_iso, pushout_set_systems)


def hausdorff_radius(pair: SubsetPair) -> float:
    d = hausdorff(pair.members, range(pair.ambient.n), pair.ambient)
    return d * (1 + 1e-6) + 1e-9


# -- point-cloud instances -------------------------------------------------------------

def rips_pair(rng: np.random.Generator, max_points: int = 10) -> tuple:
    """Uniform points in the unit square and a random non-empty subset."""
    n = int(rng.integers(1, max_points + 1))
    Y = from_euclidean(rng.random((n, 2)))
    size = int(rng.integers(1, n + 1))
    members = sorted(rng.choice(n, size=size, replace=False).tolist())
    pair = SubsetPair(Y, tuple(members))
    return pair, hausdorff_radius(pair)


def degree_pair(rng: np.random.Generator, k: int, max_points: int = 10) -> tuple:
    """X made of tight clusters of ≥ k+1 points; extra Y-points within r/2 of an X-point.

    Each cluster has diameter < r/2, so every Y-point is within r of every
    point of the cluster it was drawn from, and Hall's condition holds for
    every (k+1)-subset of Y.
    """
    r = float(rng.uniform(0.1, 0.3))
    n_clusters = int(rng.integers(1, max(1, max_points // (k + 2)) + 1))
    coords = []
    for _ in range(n_clusters):
        centre = rng.random(2)
        for _ in range(k + 1):
            coords.append(centre + _in_disc(rng, r / 4))
    m = len(coords)
    extra = int(rng.integers(0, max_points - m + 1)) if max_points > m else 0
    for _ in range(extra):
        base = coords[int(rng.integers(0, m))]
        coords.append(base + _in_disc(rng, r / 2))
    Y = from_euclidean(np.array(coords))
    return SubsetPair(Y, tuple(range(m))), r


def _in_disc(rng: np.random.Generator, radius: float) -> np.ndarray:
    angle = rng.uniform(0, 2 * np.pi)
    rho = radius * 0.999 * np.sqrt(rng.random())
    return rho * np.array([np.cos(angle), np.sin(angle)])


def polygon(rng: np.random.Generator, m: int, radius: float = 0.4, jitter: float = 0.0) -> np.ndarray:
    """Vertices of a regular m-gon around (0.5, 0.5), each moved by less than ``jitter``."""
    angles = 2 * np.pi * np.arange(m) / m + rng.uniform(0, 2 * np.pi)
    pts = 0.5 + radius * np.column_stack([np.cos(angles), np.sin(angles)])
    if jitter:
        pts = pts + np.array([_in_disc(rng, jitter) for _ in range(m)])
    return pts


def pair_space_instance(rng: np.random.Generator, max_points: int = 6) -> tuple:
    """Two point sets in the plane, their cross distances, r and a scale s.

    Half of the instances are unrelated uniform clouds; the other half are
    two noisy copies of a polygon, with s chosen where the polygon's Rips
    complex carries a loop.
    """
    if rng.random() < 0.5:
        nx, ny = (int(v) for v in rng.integers(1, max_points + 1, size=2))
        px, py = rng.random((nx, 2)), rng.random((ny, 2))
        s = float(rng.uniform(0, 1.5))
    else:
        m = int(rng.integers(4, max_points + 1))
        base = polygon(rng, m)
        px = base + np.array([_in_disc(rng, 0.01) for _ in range(m)])
        py = base + np.array([_in_disc(rng, 0.01) for _ in range(m)])
        side = 0.8 * np.sin(np.pi / m)
        s = float(side + rng.uniform(0.03, 0.06))
    X, Y = from_euclidean(px), from_euclidean(py)
    cross = np.linalg.norm(px[:, None, :] - py[None, :, :], axis=2)
    d = max(cross.min(axis=0).max(), cross.min(axis=1).max())
    r = d * (1 + 1e-6) + 1e-9
    return X, Y, cross, r, s


def gap_pair(rng: np.random.Generator, max_base: int = 5) -> tuple:
    """Y = X plus tiny perturbations of X-points, so d_H is far below most phase gaps.

    X is a random cloud or, half of the time, a noisy polygon (which has a
    loop at some scales).
    """
    if rng.random() < 0.5:
        m = int(rng.integers(1, max_base + 1))
        base = rng.random((m, 2))
    else:
        m = int(rng.integers(4, max(4, max_base) + 1))
        base = polygon(rng, m, jitter=0.02)
    eps = float(rng.uniform(1e-3, 1e-2))
    extra = int(rng.integers(1, m + 1))
    moved = base[rng.integers(0, m, size=extra)] + np.array([_in_disc(rng, eps) for _ in range(extra)])
    Y = from_euclidean(np.vstack([base, moved]))
    pair = SubsetPair(Y, tuple(range(m)))
    return pair, hausdorff_radius(pair)


def gap_indices(pair: SubsetPair, r: float) -> list:
    grid = phase_grid(pair.ambient)
    gaps = grid.gaps() + [np.inf]
    return [i for i, g in enumerate(gaps) if 2 * r < g]


# -- random simplicial complexes --------------------------------------------------------

def random_slice(rng: np.random.Generator, max_simplices: int = 30, max_vertices: int = 7) -> ComplexSlice:
    """Downward closure of random edges and triangles, kept within ``max_simplices``."""
    n = int(rng.integers(1, max_vertices + 1))
    simplices = {(v,) for v in range(n)}
    candidates = [c for q in (2, 3) for c in combinations(range(n), q)]
    rng.shuffle(candidates)
    for cand in candidates[: int(rng.integers(0, len(candidates) + 1))]:
        closure = {make_simplex(f) for q in range(1, len(cand) + 1) for f in combinations(cand, q)}
        if len(simplices | closure) <= max_simplices:
            simplices |= closure
    return ComplexSlice(simplices, dim_cap=2)


# -- random systems ---------------------------------------------------------------------

def random_grid(rng: np.random.Generator, max_len: int = 5) -> PhaseGrid:
    length = int(rng.integers(1, max_len + 1))
    steps = rng.integers(1, 4, size=length - 1).astype(float)
    return PhaseGrid((0.0, *np.cumsum(steps).tolist()))


def random_set_system(rng: np.random.Generator, grid: PhaseGrid, max_size: int = 6) -> SetSystem:
    sizes = [int(rng.integers(1, max_size + 1)) for _ in grid]
    if rng.random() < 0.5:
        sizes[-1] = 1
    sets = [tuple(range(s)) for s in sizes]
    trans = [{a: int(rng.integers(0, sizes[i + 1])) for a in sets[i]} for i in range(len(grid) - 1)]
    return SetSystem(grid, sets, trans)


def random_preimage(rng: np.random.Generator, B: SetSystem, max_size: int = 6,
                    settle: float = 0.85) -> SystemMap:
    """A random system A with a natural map A → B.

    Elements of A_{i+1} hit by the transition are merged only when their
    predecessors agree downstairs in B; fresh elements map anywhere. With
    probability ``settle`` the last level maps bijectively, which makes the
    map an r-isomorphism once r reaches the end of the grid.
    """
    settled = rng.random() < settle
    grid = B.grid
    n0 = int(rng.integers(1, max_size + 1))
    sets = [tuple(range(n0))]
    comps = [{a: B.sets[0][int(rng.integers(0, len(B.sets[0])))] for a in sets[0]}]
    trans = []
    for i in range(len(grid) - 1):
        groups: dict = {}
        for a in sets[i]:
            groups.setdefault(B.transitions[i][comps[i][a]], []).append(a)
        last = settled and i == len(grid) - 2
        t, comp, nxt = {}, {}, 0
        for b, members in sorted(groups.items()):
            n_classes = 1 if last else int(rng.integers(1, len(members) + 1))
            labels = rng.integers(0, n_classes, size=len(members))
            ids = {}
            for a, lab in zip(members, labels):
                if lab not in ids:
                    ids[lab] = nxt
                    comp[nxt] = b
                    nxt += 1
                t[a] = ids[lab]
        if last:
            for b in B.sets[i + 1]:
                if b not in groups:
                    comp[nxt] = b
                    nxt += 1
        else:
            for _ in range(int(rng.integers(0, 3))):
                if nxt >= max_size:
                    break
                comp[nxt] = B.sets[i + 1][int(rng.integers(0, len(B.sets[i + 1])))]
                nxt += 1
        sets.append(tuple(range(nxt)))
        trans.append(t)
        comps.append(comp)
    return SystemMap(SetSystem(grid, sets, trans), B, comps)


def random_pushforward(rng: np.random.Generator, A: SetSystem, extra_max: int = 2,
                       max_size: int = 6) -> SystemMap:
    """A random system B with a natural map A → B built by merging and adding elements."""
    grid = A.grid
    sets, comps, trans = [], [], []
    prev = None
    for i in range(len(grid)):
        elems = list(A.sets[i])
        parent = {a: a for a in elems}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

        if prev is not None:
            by_image: dict = {}
            for a in A.sets[i - 1]:
                by_image.setdefault(prev[a], []).append(A.transitions[i - 1][a])
            for group in by_image.values():
                for a in group[1:]:
                    union(group[0], a)
        for _ in range(int(rng.integers(0, 2))):
            if len(elems) > 1:
                a, b = rng.choice(len(elems), size=2, replace=False)
                union(elems[a], elems[b])
        roots = sorted({find(a) for a in elems})
        ids = {root: j for j, root in enumerate(roots)}
        comp = {a: ids[find(a)] for a in elems}
        n_extra = min(int(rng.integers(0, extra_max + 1)), max(0, max_size - len(roots)))
        sets.append(tuple(range(len(roots) + n_extra)))
        comps.append(comp)
        if prev is not None:
            t = {}
            for a in A.sets[i - 1]:
                t[prev[a]] = comp[A.transitions[i - 1][a]]
            for b in sets[i - 1]:
                if b not in t:
                    t[b] = int(rng.integers(0, len(sets[i])))
            trans.append(t)
        prev = comp
    return SystemMap(A, SetSystem(grid, sets, trans), comps)


def linearize_systems(systems, p: int, rng: np.random.Generator | None = None) -> dict:
    """Free GF(p) vector systems on set systems, each level in a random basis.

    Returns ``{id(system): (VecSystem, bases)}`` where ``bases[i]`` sends
    the standard basis on ``system.sets[i]`` to the chosen one.
    """
    out = {}
    for system in systems:
        if id(system) in out:
            continue
        bases = [_random_invertible(rng, len(s), p) if rng is not None
                 else np.eye(len(s), dtype=np.int64) for s in system.sets]
        trans = [_in_bases(_function_matrix(t, system.sets[i], system.sets[i + 1]),
                           bases[i], bases[i + 1], p)
                 for i, t in enumerate(system.transitions)]
        out[id(system)] = (VecSystem(system.grid, p, [len(s) for s in system.sets], trans), bases)
    return out


def linearize_map(f: SystemMap, lin: dict, p: int) -> SystemMap:
    (va, ba), (vb, bb) = lin[id(f.source)], lin[id(f.target)]
    comps = [_in_bases(_function_matrix(c, f.source.sets[i], f.target.sets[i]), ba[i], bb[i], p)
             for i, c in enumerate(f.components)]
    return SystemMap(va, vb, comps)


def _function_matrix(func: dict, src, dst) -> np.ndarray:
    M = np.zeros((len(dst), len(src)), dtype=np.int64)
    pos = {b: j for j, b in enumerate(dst)}
    for j, a in enumerate(src):
        M[pos[func[a]], j] = 1
    return M


def _in_bases(M, src_basis, dst_basis, p: int) -> np.ndarray:
    return matmul(dst_basis, matmul(M, inverse(src_basis, p), p), p)


def _random_invertible(rng: np.random.Generator, n: int, p: int) -> np.ndarray:
    while True:
        M = rng.integers(0, p, size=(n, n))
        try:
            inverse(M, p)
            return M
        except ValueError:
            continue


def minimal_radius(f: SystemMap) -> float | None:
    return controlled_equivalence_radius([f])


# -- property runners ---------------------------------------------------------------------

@dataclass
class Tally:
    name: str
    checked: int = 0
    vacuous: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"name": self.name, "checked": self.checked, "vacuous": self.vacuous,
                "failures": len(self.failures), "passed": self.passed}


def check_rips_certificate(rng, tally: Tally) -> SubsetPair:
    pair, r = rips_pair(rng)
    tally.checked += 1
    if not verify_interleaving(pair, r, 0, 2).overall:
        tally.failures.append(pair.members)
    return pair


def check_degree_certificate(rng, tally: Tally) -> tuple:
    """Certificate at degree k and, for the same r, at every j ≤ k."""
    k = int(rng.integers(1, 3))
    pair, r = degree_pair(rng, k)
    tally.checked += 1
    if not all(verify_interleaving(pair, r, j, 2).overall for j in range(k, -1, -1)):
        tally.failures.append((k, pair.members))
    return pair, k, r


def check_config_monotone(pair: SubsetPair, k: int, r: float, tally: Tally) -> None:
    tally.checked += 1
    if config_hausdorff_lt(pair, k, r) and pair.ambient.n >= k + 1:
        if not config_hausdorff_lt(pair, k - 1, r):
            tally.failures.append((k, pair.members))
    else:
        tally.vacuous += 1


def check_pair_space(rng, tally: Tally, p: int = 2) -> None:
    X, Y, cross, r, s = pair_space_instance(rng)
    tally.checked += 1
    if not blumberg_lesnick(X, Y, cross, r, s, 2, p).passed:
        tally.failures.append((X.n, Y.n, s))


def check_phase_gap(rng, tally: Tally) -> None:
    pair, r = gap_pair(rng)
    for i in gap_indices(pair, r):
        tally.checked += 1
        if not phase_gap_report(pair, 0, r, i, 2, (2, 3)).passed:
            tally.failures.append((pair.members, i))


def connected_random_slice(rng, max_simplices: int = 30) -> ComplexSlice:
    slice_ = random_slice(rng, max_simplices)
    comps = pi0(slice_)
    return slice_.restrict(comps[int(rng.integers(0, len(comps)))]) if len(comps) > 1 else slice_


def check_pi1_vs_h1(rng, tally: Tally) -> None:
    slice_ = connected_random_slice(rng)
    tally.checked += 1
    ab = abelianized_pi1(groupoid_presentation(slice_, slice_.vertices[0]))
    if ab != integral_h1(slice_):
        tally.failures.append(sorted(slice_))


def check_subdivision(rng, tally: Tally) -> None:
    slice_ = random_slice(rng)
    tally.checked += 1
    sd = order_complex(slice_)
    for p in (2, 3):
        if homology_ranks(sd, p, 1) != homology_ranks(slice_, p, 1):
            tally.failures.append(sorted(slice_))
            return


def check_extremes(pair: SubsetPair, tally: Tally, deg_cap: int = 2) -> None:
    """Discrete at s = 0 and contractible at the diameter, for every degree that exists."""
    pts = pair.ambient
    cx = build_bifiltered(pts, 2, deg_cap)
    top = float(pts.dist.max())
    tally.checked += 1
    if homology_ranks(poset_at(cx, 0.0, 0), 2, 1) != [pts.n, 0]:
        tally.failures.append(("s=0", pts.n))
    for k in range(min(deg_cap, pts.n - 1) + 1):
        if homology_ranks(poset_at(cx, top, k), 2, 1) != [1, 0]:
            tally.failures.append(("s=max", k, pts.n))


def composable_maps(rng):
    """Random natural maps f: A → B, g: B → C of set systems on a common grid."""
    grid = random_grid(rng)
    C = random_set_system(rng, grid)
    g = random_preimage(rng, C)
    f = random_preimage(rng, g.source)
    return f, g


def check_composition(rng, tallies: dict) -> None:
    """All three cyclic composition bounds and monotonicity, for sets and GF(p) spaces."""
    f, g = composable_maps(rng)
    p = int(rng.choice([2, 3]))
    lin = linearize_systems([f.source, g.source, g.target], p, rng)
    for ff, gg in ((f, g), (linearize_map(f, lin, p), linearize_map(g, lin, p))):
        h = compose(ff, gg)
        radii = {"f": minimal_radius(ff), "g": minimal_radius(gg), "h": minimal_radius(h)}
        for case in ("fg", "hg", "fh"):
            tally = tallies[case]
            tally.checked += 1
            r, s = radii[case[0]], radii[case[1]]
            if r is None or s is None:
                tally.vacuous += 1
            elif not compose_bound_check(ff, gg, r, s, case):
                tally.failures.append((case, r, s))
        tallies["monotone"].checked += 1
        for m in (ff, gg, h):
            flags = [is_r_iso(m, r) for r in candidate_radii(m.grid)]
            if any(a and not b for a, b in zip(flags, flags[1:])):
                tallies["monotone"].failures.append(flags)


def check_pushout(rng, tally: Tally) -> None:
    """Along an r-iso f: A → B, the pushout leg C → D is an r-iso."""
    grid = random_grid(rng)
    B = random_set_system(rng, grid)
    f = random_preimage(rng, B)
    g = random_pushforward(rng, f.source)
    r = minimal_radius(f)
    tally.checked += 1
    if r is None:
        tally.vacuous += 1
        return
    _, _, c_to_d = pushout_set_systems(f, g)
    if not is_r_iso(c_to_d, r):
        tally.failures.append(r)


def glue_instance(rng, max_points: int = 6, max_extra: int = 3) -> tuple:
    """A = Rips(X) ⊂ B = Rips(Y) and C = Rips(Z) for Z ⊇ a copy of X.

    Returns ``(A, B, C, vertex_map, r_geom)``; A → B is a 2·r_geom
    equivalence by the retraction certificate.
    """
    n = int(rng.integers(1, max_points + 1))
    coords = rng.random((n, 2))
    members = sorted(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False).tolist())
    pair = SubsetPair(from_euclidean(coords), tuple(members))
    r_geom = hausdorff_radius(pair)
    B = build_rips(pair.ambient, 2).filtered(0)
    keep = [i for i, s in enumerate(B.simplices) if set(s) <= set(members)]
    A = FilteredComplex(tuple(B.simplices[i] for i in keep), B.births[keep], 2, B.tol)
    z = np.vstack([coords[members], rng.random((int(rng.integers(0, max_extra + 1)), 2))])
    C = build_rips(from_euclidean(z), 2).filtered(0)
    return A, B, C, {v: j for j, v in enumerate(members)}, r_geom


def check_glue(rng, tally: Tally, primes=(2, 3)) -> None:
    """π_0 C → D within the input bound and H_q C → D within twice it."""
    A, B, C, vmap, r_geom = glue_instance(rng)
    r_in = 2 * r_geom
    glued = glue_complex_systems(A, B, C, vmap, primes, 1)
    tally.checked += 1
    if not is_r_iso(glued.pi0_maps["CD"], r_in):
        tally.failures.append(("pi0", r_in))
    for key, maps in glued.homology_maps.items():
        if not is_r_iso(maps["CD"], 2 * r_in):
            tally.failures.append((key, r_in))


def property_suite(seed: int, count: int = 10) -> list:
    """Run every property family ``count`` times from one seed; returns tallies."""
    rng = np.random.default_rng(seed)
    names = ["rips_certificate", "degree_certificate", "config_monotone", "pair_space",
             "phase_gap", "pi1_vs_h1", "subdivision", "extremes", "fg", "hg", "fh",
             "monotone", "pushout", "glue"]
    t = {name: Tally(name) for name in names}
    for _ in range(count):
        pair = check_rips_certificate(rng, t["rips_certificate"])
        check_extremes(pair, t["extremes"])
        dpair, k, r = check_degree_certificate(rng, t["degree_certificate"])
        check_config_monotone(dpair, k, r, t["config_monotone"])
        check_extremes(dpair, t["extremes"])
        check_pair_space(rng, t["pair_space"])
        check_phase_gap(rng, t["phase_gap"])
        check_pi1_vs_h1(rng, t["pi1_vs_h1"])
        check_subdivision(rng, t["subdivision"])
        check_composition(rng, t)
        check_pushout(rng, t["pushout"])
        check_glue(rng, t["glue"])
    return [t[name] for name in names]
