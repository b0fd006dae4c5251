from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyzeros.polytope import (BOUNDARY, INTERIOR, OUTSIDE, PolytopeError, contains,
                                count_points, dilate, dump_polytope, ehrhart_fit,
                                from_vertices, is_simple, lattice_points, load_polytope,
                                named_polytope, normal_cone_contains, relative_volume)

SQUARE = [(0, 0), (1, 0), (0, 1), (1, 1)]
TRAPEZOID = [(0, 0), (2, 0), (0, 1), (1, 1)]


def shoelace(pts):
    pts = np.asarray(pts, dtype=float)
    c = pts.mean(axis=0)
    order = np.argsort(np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0]))
    x, y = pts[order].T
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


# -- construction -------------------------------------------------------------

def test_square_combinatorics():
    P = from_vertices(SQUARE, 2)
    assert len(P.halfspaces) == 4
    assert len(P.faces) == 9
    assert [len(P.faces_of_dim(r)) for r in range(3)] == [4, 4, 1]
    assert P.dim == 2


def test_trapezoid_lattice_points():
    P = from_vertices(TRAPEZOID, 2)
    pts = {tuple(v) for v in lattice_points(P, 1)}
    assert pts == {(0, 0), (1, 0), (2, 0), (0, 1), (1, 1)}


def test_segment_halfspaces():
    P = from_vertices([(1,), (3,)], 4)
    assert P.dim == 1
    assert set(P.halfspaces) == {((1,), -1), ((-1,), 3)}


def test_halfspace_normals_primitive_and_tight():
    for name in ["square", "trapezoid_ex2", "trapezoid_ex3_3", "simplex_3_2"]:
        P = named_polytope(name)
        for u, _ in P.halfspaces:
            assert np.gcd.reduce(np.abs(u)) == 1
        for v in P.vertices:
            vals = P.ell(v)
            assert all(x >= 0 for x in vals)
            assert sum(1 for x in vals if x == 0) >= P.dim


def test_interior_point_dropped():
    P = from_vertices(SQUARE + [(1, 0)], 2)
    assert len(P.vertices) == 4


@pytest.mark.parametrize("verts,p", [
    ([(0, 0, 0, 0)], 1),
    ([(3, 0)], 2),
    ([(-1, 0)], 2),
    ([], 2),
])
def test_constructor_errors(verts, p):
    with pytest.raises(PolytopeError):
        from_vertices(verts, p)


def test_face_active_sets_unique_and_interior_empty():
    P = named_polytope("trapezoid_ex3_2")
    sets = [f.active_set for f in P.faces]
    assert len(sets) == len(set(sets))
    assert P.interior_face.active_set == ()


def test_simple_face_codim_equals_active_count():
    for name in ["square", "trapezoid_ex3_2", "simplex_3_1"]:
        P = named_polytope(name)
        assert is_simple(P)
        for f in P.faces:
            assert len(f.active_set) == P.dim - f.dim


def test_non_simple_polytope_accepted():
    # square pyramid: apex lies on four facets
    P = from_vertices([(0, 0, 0), (2, 0, 0), (0, 2, 0), (2, 2, 0), (1, 1, 1)], 4)
    assert not is_simple(P)
    assert P.dim == 3


def test_normal_cone_generators_are_maximised_on_face():
    P = named_polytope("trapezoid_ex3_2")
    V = np.array(P.vertices)
    for f in P.faces:
        for g in f.normal_cone_generators:
            vals = V @ np.array(g)
            assert all(vals[i] == vals.max() for i in f.vertex_indices)


# -- predicates ----------------------------------------------------------------

def test_normal_cone_examples():
    P = from_vertices(SQUARE, 2)
    top = P.face_containing((Fraction(1, 2), 1))
    corner = P.face_containing((1, 1))
    assert normal_cone_contains(top, (0, 1)) == INTERIOR
    assert normal_cone_contains(corner, (1, 1)) == INTERIOR
    assert normal_cone_contains(top, (1, 1)) == OUTSIDE
    assert normal_cone_contains(corner, (0, 1)) == BOUNDARY


def test_simple_and_contains():
    assert is_simple(from_vertices(SQUARE, 2))
    assert is_simple(named_polytope("trapezoid_ex3_2"))
    P = from_vertices(SQUARE, 2)
    assert contains(P, (Fraction(1, 2), Fraction(1, 2)))
    assert not contains(P, (Fraction(3, 2), 0))


def test_dilate_scales_offsets():
    P = from_vertices(TRAPEZOID, 2)
    Q = dilate(P, 3)
    assert Q.p == 6
    assert sorted(Q.vertices) == sorted(tuple(3 * c for c in v) for v in P.vertices)
    assert all(lq == 3 * lp for (_, lq), (_, lp) in zip(Q.halfspaces, P.halfspaces))
    assert count_points(Q, 1) == count_points(P, 3)


def test_disjoint_face_partition_on_rational_grid():
    P = named_polytope("trapezoid_ex3_2")
    grid = [Fraction(k, 4) for k in range(0, 13)]
    for x in product(grid, grid):
        if not contains(P, x):
            continue
        hits = []
        for f in P.faces:
            act = {j for j, val in enumerate(P.ell(x)) if val == 0}
            if act == set(f.active_set):
                hits.append(f.id)
        assert len(hits) == 1


@settings(max_examples=60, deadline=None)
@given(st.floats(-np.pi, np.pi))
def test_normal_fan_completeness(angle):
    P = named_polytope("trapezoid_ex3_2")
    w = np.array([np.cos(angle), np.sin(angle)])
    V = np.array(P.vertices, dtype=float)
    vals = V @ w
    argmax = {i for i, v in enumerate(vals) if v >= vals.max() - 1e-12}
    inside = [f for f in P.faces if normal_cone_contains(f, w, tol=1e-9) == INTERIOR]
    assert len(inside) == 1
    assert set(inside[0].vertex_indices) == argmax


# -- counting ----------------------------------------------------------------------

def test_lattice_point_counts():
    assert len(lattice_points(from_vertices(SQUARE, 2), 3)) == 16
    assert len(lattice_points(from_vertices(TRAPEZOID, 2), 2)) == 12
    seg = lattice_points(from_vertices([(1,), (3,)], 4), 5)
    assert seg.ravel().tolist() == list(range(5, 16))


def test_lattice_points_sorted():
    pts = lattice_points(named_polytope("trapezoid_ex3_3"), 3)
    assert [tuple(p) for p in pts] == sorted(tuple(p) for p in pts)


@pytest.mark.parametrize("name", ["square", "trapezoid_ex2", "trapezoid_ex3_4", "simplex_3_2"])
def test_count_points_matches_enumeration(name):
    P = named_polytope(name)
    for N in range(1, 7):
        assert count_points(P, N) == len(lattice_points(P, N))


def test_ehrhart_examples():
    assert ehrhart_fit(from_vertices(SQUARE, 2)) == [1, 2, 1]
    assert ehrhart_fit(from_vertices(TRAPEZOID, 2)) == [Fraction(3, 2), Fraction(5, 2), 1]
    assert ehrhart_fit(named_polytope("simplex_2_1"))[0] == Fraction(1, 2)


@pytest.mark.parametrize("verts", [
    SQUARE, TRAPEZOID, [(0, 0), (4, 0), (1, 1), (0, 1)], [(0, 0), (3, 1), (1, 2)],
    [(1, 0), (2, 0), (0, 2), (1, 2), (0, 1)],
])
def test_ehrhart_leading_coefficient_is_area(verts):
    P = from_vertices(verts, 4)
    a0 = ehrhart_fit(P)[0]
    assert a0 == relative_volume(P)
    assert float(a0) == pytest.approx(shoelace(verts), abs=1e-12)


def test_ehrhart_lower_dimensional():
    assert ehrhart_fit(from_vertices([(0, 0), (2, 2)], 4)) == [2, 1]


def test_json_round_trip(tmp_path):
    P = named_polytope("trapezoid_ex3_2")
    path = tmp_path / "p.json"
    import json
    path.write_text(json.dumps(dump_polytope(P)))
    Q = load_polytope(str(path))
    assert sorted(Q.vertices) == sorted(P.vertices) and Q.p == P.p


@pytest.mark.parametrize("obj", [
    {"m": 2, "p": 2, "vertices": [[0, 0]], "extra": 1},
    {"m": 2, "p": 2, "vertices": [[0.5, 0]]},
    {"m": 2, "vertices": [[0, 0]]},
])
def test_json_rejects_bad_input(obj):
    with pytest.raises(PolytopeError):
        load_polytope(obj)
