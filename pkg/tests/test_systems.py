import json

import numpy as np
import pytest

import oracles
from rips_homotopy.errors import ValidationError
from rips_homotopy.filtration import FilteredComplex, PhaseGrid, build_rips
from rips_homotopy.harness import (composable_maps, glue_instance, linearize_map, linearize_systems,
                                   random_grid, random_preimage, random_pushforward, random_set_system)
from rips_homotopy.metric import from_euclidean
from rips_homotopy.systems import (SetSystem, SystemMap, VecSystem, candidate_radii, check_r_iso, compose,
                                   compose_bound_check, controlled_equivalence_radius,
                                   glue_complex_systems, identity_map, inclusion_bundle, is_r_epi,
                                   is_r_iso, is_r_mono, map_from_json, map_to_json, pushout_set_systems,
                                   refine, refine_map, shift_index)

G4 = PhaseGrid((0.0, 1.0, 2.0, 3.0))
G2 = PhaseGrid((0.0, 1.0))


def two_to_one():
    A = SetSystem(G2, [("a",), ("a",)], [{"a": "a"}])
    B = SetSystem(G2, [("b1", "b2"), ("b",)], [{"b1": "b", "b2": "b"}])
    return SystemMap(A, B, [{"a": "b1"}, {"a": "b"}])


def test_shift_index():
    assert shift_index(G4, 2, 0) == 2
    # constant on [1, 2): the value at 1.5 is the value at 1
    assert shift_index(G4, 1, 0.5) == 1
    assert shift_index(G4, 1, 1.0) == 2
    assert shift_index(G4, 3, 5) == 3
    with pytest.raises(ValidationError):
        shift_index(G4, 0, -1)


def test_validation():
    with pytest.raises(ValidationError):
        SetSystem(G2, [(0,), (0,)], [{0: 1}])
    A = SetSystem(G2, [(0, 1), (0, 1)], [{0: 0, 1: 1}])
    B = SetSystem(G2, [(0, 1), (0,)], [{0: 0, 1: 0}])
    with pytest.raises(ValidationError, match="naturality"):
        SystemMap(B, A, [{0: 0, 1: 1}, {0: 1}])  # 1 -> 1 -> ? disagrees
    with pytest.raises(ValidationError, match="grids differ"):
        SystemMap(A, SetSystem(PhaseGrid((0.0, 2.0)), A.sets, A.transitions), [{0: 0, 1: 1}] * 2)


def test_set_predicates_examples():
    f = two_to_one()
    assert is_r_iso(identity_map(f.target), 0)
    assert is_r_mono(f, 0) and not is_r_epi(f, 0)
    assert is_r_iso(f, 1)
    verdict = check_r_iso(f, 0).to_json()
    assert verdict["witness_failure"] == {"s": 0.0, "kind": "epi", "elements": ["b2"]}
    assert json.loads(json.dumps(check_r_iso(f, 1).to_json())) == {"r": 1, "mono": True, "epi": True}


def test_rips_inclusion_bundle():
    Y = from_euclidean([[0], [1], [3]])
    X = Y.subspace([0, 2])
    bundle = inclusion_bundle(build_rips(X, 2).filtered(), build_rips(Y, 2).filtered(), (2, 3), 1,
                              vertex_map=[0, 2].__getitem__)
    assert is_r_iso(bundle["pi0"], 2.2)
    radius = controlled_equivalence_radius(list(bundle.values()))
    assert radius is not None and radius <= 2
    same = build_rips(Y, 2).filtered()
    assert controlled_equivalence_radius(list(inclusion_bundle(same, same, (2,)).values())) == 0


def test_radius_none():
    A = SetSystem(G2, [(0,), (0,)], [{0: 0}])
    B = SetSystem(G2, [(0, 1), (0, 1)], [{0: 0, 1: 1}])
    assert controlled_equivalence_radius([SystemMap(A, B, [{0: 0}, {0: 0}])]) is None
    with pytest.raises(ValidationError):
        controlled_equivalence_radius([])


def test_predicates_against_definitions():
    """Floor shifting on the grid equals the definitions over the continuous parameter."""
    rng = np.random.default_rng(41)
    for _ in range(300):
        f, _ = composable_maps(rng)
        A, B = f.source, f.target
        for r in candidate_radii(f.grid) + [0.5, 1.7]:
            assert is_r_mono(f, r) == oracles.set_r_mono(list(f.grid), A.sets, A.transitions, f.components, r)
            assert is_r_epi(f, r) == oracles.set_r_epi(list(f.grid), B.sets, B.transitions, f.components, r)


def test_vector_predicates_against_enumeration():
    rng = np.random.default_rng(42)
    checked = 0
    while checked < 200:
        f, _ = composable_maps(rng)
        if max(len(s) for s in f.source.sets + f.target.sets) > 4:
            continue
        lin = linearize_systems([f.source, f.target], 2, rng)
        v = linearize_map(f, lin, 2)
        A, B = v.source, v.target
        comps = [c.tolist() for c in v.components]
        ta = [t.tolist() for t in A.transitions]
        tb = [t.tolist() for t in B.transitions]
        for r in candidate_radii(v.grid):
            assert is_r_mono(v, r) == oracles.vec_r_mono(list(v.grid), A.dims, ta, comps, B.dims, r)
            assert is_r_epi(v, r) == oracles.vec_r_epi(list(v.grid), A.dims, comps, B.dims, tb, r)
            # linearization preserves the set-level verdicts
            assert is_r_iso(v, r) == is_r_iso(f, r)
        checked += 1


def test_compose_examples():
    f = identity_map(two_to_one().source)
    assert compose_bound_check(f, f, 0, 0, "fg")
    with pytest.raises(ValidationError):
        compose_bound_check(f, f, 0, 0, "gf")
    with pytest.raises(ValidationError):
        compose(two_to_one(), two_to_one())


def test_composition_bound_is_attained():
    """Two 1-isos whose composite needs the full shift 2."""
    g3 = PhaseGrid((0.0, 1.0, 2.0))
    C = SetSystem(g3, [("x", "y"), ("x", "y"), ("z",)], [{"x": "x", "y": "y"}, {"x": "z", "y": "z"}])
    B = SetSystem(g3, [("x",), ("x", "y"), ("z",)], [{"x": "x"}, {"x": "z", "y": "z"}])
    A = SetSystem(g3, [("x",), ("x",), ("z",)], [{"x": "x"}, {"x": "z"}])
    f = SystemMap(A, B, [{"x": "x"}, {"x": "x"}, {"z": "z"}])
    g = SystemMap(B, C, [{"x": "x"}, {"x": "x", "y": "y"}, {"z": "z"}])
    h = compose(f, g)
    assert controlled_equivalence_radius([f]) == 1 and controlled_equivalence_radius([g]) == 1
    assert controlled_equivalence_radius([h]) == 2
    assert compose_bound_check(f, g, 1, 1, "fg")


def test_composition_bounds_random():
    rng = np.random.default_rng(43)
    for _ in range(300):
        f, g = composable_maps(rng)
        h = compose(f, g)
        radii = {"f": controlled_equivalence_radius([f]), "g": controlled_equivalence_radius([g]),
                 "h": controlled_equivalence_radius([h])}
        for case in ("fg", "hg", "fh"):
            r, s = radii[case[0]], radii[case[1]]
            if r is not None and s is not None:
                assert compose_bound_check(f, g, r, s, case)


def test_conjugation_by_isomorphisms():
    """A square whose vertical maps are isomorphisms transports r-isos both ways."""
    rng = np.random.default_rng(44)
    for _ in range(100):
        f, _ = composable_maps(rng)
        p = int(rng.choice([2, 3]))
        plain = linearize_map(f, linearize_systems([f.source, f.target], p), p)
        twisted = linearize_map(f, linearize_systems([f.source, f.target], p, rng), p)
        for r in candidate_radii(f.grid):
            assert is_r_iso(plain, r) == is_r_iso(twisted, r)


def test_pushout_examples():
    f = two_to_one()
    A = f.source
    empty = SetSystem(G2, [(), ()], [{}])
    e1 = SystemMap(empty, A, [{}, {}])
    e2 = SystemMap(empty, f.target, [{}, {}])
    D, _, _ = pushout_set_systems(e1, e2)
    assert [len(s) for s in D.sets] == [3, 2]  # disjoint union
    D, _, c_to_d = pushout_set_systems(identity_map(A), f)
    assert [len(s) for s in D.sets] == [2, 1] and is_r_iso(c_to_d, 0)


def test_pushout_preserves_r_isos():
    rng = np.random.default_rng(45)
    hits = 0
    for _ in range(400):
        grid = random_grid(rng)
        f = random_preimage(rng, random_set_system(rng, grid))
        g = random_pushforward(rng, f.source)
        r = controlled_equivalence_radius([f])
        if r is None:
            continue
        hits += 1
        D, b_to_d, c_to_d = pushout_set_systems(f, g)
        assert is_r_iso(c_to_d, r)
        for i in range(len(grid)):  # the square commutes
            for a in f.source.sets[i]:
                assert b_to_d.components[i][f.components[i][a]] == c_to_d.components[i][g.components[i][a]]
    assert hits > 100


def test_refine():
    f = two_to_one()
    fine = PhaseGrid((0.0, 0.5, 1.0, 2.0))
    rf = refine_map(f, fine)
    for r in (0, 0.5, 1):
        assert is_r_iso(rf, r) == is_r_iso(f, r)
    with pytest.raises(ValidationError):
        refine(f.source, PhaseGrid((0.0, 2.0)))


def test_serialization_roundtrip():
    rng = np.random.default_rng(46)
    f, _ = composable_maps(rng)
    back = map_from_json(json.loads(json.dumps(map_to_json(f))))
    assert back.components == f.components
    lin = linearize_systems([f.source, f.target], 3, rng)
    v = linearize_map(f, lin, 3)
    back = map_from_json(json.loads(json.dumps(map_to_json(v))))
    assert all(np.array_equal(a, b) for a, b in zip(back.components, v.components))
    assert VecSystem.from_json(v.source.to_json()).dims == v.source.dims


def _complex(simplices, births):
    order = sorted(range(len(simplices)), key=lambda i: (len(simplices[i]), simplices[i]))
    return FilteredComplex(tuple(simplices[i] for i in order), np.array([births[i] for i in order]), 2)


def test_glue_along_identity():
    rng = np.random.default_rng(47)
    A, B, C, vmap, _ = glue_instance(rng)
    glued = glue_complex_systems(A, B, A, {v: v for v in vmap}, (2,), 1)
    assert glued.D.births_by_simplex() == B.births_by_simplex()


def test_glue_cone():
    # A = two points, B = cone on A with apex 9 at scale 0, C = a path 0-1-2 gluing the points to 0 and 2
    A = _complex([(0,), (1,)], [0, 0])
    B = _complex([(0,), (1,), (9,), (0, 9), (1, 9)], [0, 0, 0, 0, 0])
    C = _complex([(0,), (1,), (2,), (0, 1), (1, 2)], [0, 0, 0, 1, 1])
    glued = glue_complex_systems(A, B, C, {0: 0, 1: 2}, (2, 3), 1)
    for p in (2, 3):
        h1 = glued.homology[(p, 1)]["D"]
        assert h1.dims == [0, 1]  # the path closes into a loop through the apex
        assert oracles.betti(glued.D.slice_at(1.0).simplices, p, 1) == [1, 1]
    assert glued.pi0["D"].sets[0] == (0, 1)


def test_glue_errors():
    A = _complex([(0,), (1,)], [0, 0])
    B = _complex([(0,), (1,), (0, 1)], [0, 0, 1])
    C = _complex([(0,), (1,), (0, 1)], [0, 0, 2])
    with pytest.raises(ValidationError, match="collides"):
        glue_complex_systems(A, B, C, {0: 0, 1: 1})
    with pytest.raises(ValidationError, match="injective"):
        glue_complex_systems(A, B, C, {0: 0, 1: 0})
    late = _complex([(0,), (1,)], [0, 5])
    with pytest.raises(ValidationError, match="disagree"):
        glue_complex_systems(A, B, late, {0: 0, 1: 1})


def test_glued_rips_conclusions():
    rng = np.random.default_rng(48)
    for _ in range(20):
        A, B, C, vmap, r_geom = glue_instance(rng)
        glued = glue_complex_systems(A, B, C, vmap, (2, 3), 1)
        r_in = 2 * r_geom
        assert is_r_iso(glued.pi0_maps["AB"], r_in)
        assert is_r_iso(glued.pi0_maps["CD"], r_in)
        for maps in glued.homology_maps.values():
            assert is_r_iso(maps["AB"], r_in)
            assert is_r_iso(maps["CD"], 2 * r_in)
