import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyzeros.momentmap import (ALLOWED, FORBIDDEN, TRANSITION, TorusPoint, b_action_integral,
                                 classify_region, decay_gradient, decay_hessian,
                                 decay_objective, moment_map, solve_normal_data)
from polyzeros.polytope import (INTERIOR, OUTSIDE, PolytopeError, from_vertices,
                                named_polytope, normal_cone_contains)

SQUARE = named_polytope("square")
EX3 = named_polytope("trapezoid_ex3_2")


def zabs(*r):
    return TorusPoint.from_abs(r)


def random_points_in(P, rng, k):
    V = np.array(P.vertices, dtype=float)
    w = rng.dirichlet(np.ones(len(V)), size=k)
    return w @ V


# -- moment map and point objective ---------------------------------------------------

def test_moment_map_values():
    np.testing.assert_allclose(moment_map(zabs(1, 1)), [1 / 3, 1 / 3])
    np.testing.assert_allclose(moment_map(zabs(1)), [0.5])
    np.testing.assert_allclose(moment_map(zabs(1, 2)), [1 / 6, 4 / 6])


def test_moment_map_extreme_rho_does_not_overflow():
    mu = moment_map(TorusPoint.from_rho([400.0, -400.0]))
    assert np.all(np.isfinite(mu)) and mu[0] == pytest.approx(1.0)


def test_torus_point_from_complex_keeps_angles():
    z = np.array([1j, -2.0])
    pt = TorusPoint.from_complex(z)
    np.testing.assert_allclose(pt.z, z)
    with pytest.raises(ValueError):
        TorusPoint.from_complex([0.0, 1.0])


def test_decay_objective_examples():
    assert decay_objective([1.0], zabs(1), 2) == pytest.approx(0.0, abs=1e-15)
    assert decay_objective([1.0, 1.0], zabs(1, 1), 2) == pytest.approx(2 * np.log(1.5), rel=1e-14)
    z = zabs(0.7, 1.9)
    x = 3 * moment_map(z)
    assert decay_objective(x, z, 3) == pytest.approx(0.0, abs=1e-13)


def test_decay_objective_rejects_outside_simplex():
    with pytest.raises(ValueError):
        decay_objective([2.0, 1.0], zabs(1, 1), 2)


def test_gradient_and_hessian_match_finite_differences():
    z, p = zabs(0.8, 1.3), 3
    x = np.array([0.9, 1.2])
    g = decay_gradient(x, z, p)
    H = decay_hessian(x, p)
    h = 1e-6
    for j in range(2):
        e = np.eye(2)[j] * h
        fd = (decay_objective(x + e, z, p) - decay_objective(x - e, z, p)) / (2 * h)
        assert fd == pytest.approx(g[j], rel=1e-7)
        fd2 = (decay_gradient(x + e, z, p) - decay_gradient(x - e, z, p)) / (2 * h)
        np.testing.assert_allclose(fd2, H[j], rtol=1e-7)


# -- normal data ------------------------------------------------------------------------

def test_square_forbidden_example():
    nd = solve_normal_data(SQUARE, zabs(1, 2))
    np.testing.assert_allclose(nd.q, [0.5, 1.0], atol=1e-12)
    np.testing.assert_allclose(nd.tau, [0.0, np.log(2)], atol=1e-12)
    assert nd.b == pytest.approx(np.log(9 / 8), abs=1e-13)


def test_square_allowed_example():
    nd = solve_normal_data(SQUARE, zabs(1, 1))
    np.testing.assert_allclose(nd.q, [2 / 3, 2 / 3], atol=1e-12)
    np.testing.assert_allclose(nd.tau, [0.0, 0.0])
    assert nd.b == pytest.approx(0.0, abs=1e-14)
    assert nd.face.dim == 2


def test_example3_vertex_region():
    # |z2|^2 >= |z1|^{4}, |z1|^2 >= 1 for n = 2
    nd = solve_normal_data(EX3, zabs(1.5, 4.0))
    np.testing.assert_allclose(nd.q, [1.0, 1.0])
    assert nd.face.dim == 0


def test_polytope_in_simplex_boundary_rejected():
    P = from_vertices([(0, 0), (2, 0)], 2)
    with pytest.raises(PolytopeError):
        solve_normal_data(P, zabs(1, 1))


def test_lower_dimensional_polytope():
    # diagonal segment inside 4 Sigma
    P = from_vertices([(0, 0), (2, 2)], 4)
    z = zabs(1.3, 0.4)
    nd = solve_normal_data(P, z)
    t = np.linspace(0, 1, 2001)
    vals = [decay_objective([2 * s, 2 * s], z, 4) for s in t[1:-1]]
    assert nd.b == pytest.approx(min(vals), abs=1e-6)
    np.testing.assert_allclose(nd.q[0], nd.q[1], atol=1e-12)


@pytest.mark.parametrize("name", ["square", "trapezoid_ex3_2", "trapezoid_ex3_3", "simplex_3_2"])
def test_kkt_and_flow_condition(name):
    P = named_polytope(name)
    rng = np.random.default_rng(1)
    for rho in rng.uniform(-2.5, 2.5, size=(40, P.m)):
        z = TorusPoint.from_rho(rho)
        nd = solve_normal_data(P, z)
        assert nd.residual <= 1e-8
        assert nd.b >= 0
        # p mu(e^{-tau/2} z) = q
        np.testing.assert_allclose(P.p * moment_map(z.scaled(nd.tau)), nd.q, atol=1e-9)
        # -grad b(q) = tau up to the tangent space of the face
        if nd.face.dim < P.m:
            assert normal_cone_contains(nd.face, nd.tau, tol=1e-7) != OUTSIDE
        assert (nd.b == 0) == (nd.face.dim == P.dim) or nd.b < 1e-12


@pytest.mark.parametrize("name", ["square", "trapezoid_ex3_2", "simplex_3_2"])
def test_minimiser_optimality(name):
    P = named_polytope(name)
    rng = np.random.default_rng(2)
    for rho in rng.uniform(-2, 2, size=(10, P.m)):
        z = TorusPoint.from_rho(rho)
        nd = solve_normal_data(P, z)
        for x in random_points_in(P, rng, 50):
            assert decay_objective(x, z, P.p) >= nd.b - 1e-9


@settings(max_examples=40, deadline=None)
@given(st.floats(-2.5, 2.5), st.floats(-2.5, 2.5))
def test_gradient_identity(r1, r2):
    # d_rho b_P = 2 p mu - 2 q
    P = EX3
    rho = np.array([r1, r2])
    nd = solve_normal_data(P, TorusPoint.from_rho(rho))
    if nd.transition_flag:
        return
    h = 1e-6
    fd = []
    for j in range(2):
        e = np.eye(2)[j] * h
        bp = solve_normal_data(P, TorusPoint.from_rho(rho + e)).b
        bm = solve_normal_data(P, TorusPoint.from_rho(rho - e)).b
        fd.append((bp - bm) / (2 * h))
    expected = 2 * P.p * moment_map(TorusPoint.from_rho(rho)) - 2 * nd.q
    np.testing.assert_allclose(fd, expected, atol=1e-5)


def test_c1_across_interface():
    # interface of the square: |z2|^2 = |z1|^2 + 1
    for s1 in [0.3, 1.0, 4.0]:
        rho_star = np.array([0.5 * np.log(s1), 0.5 * np.log(s1 + 1)])
        vals, grads = [], []
        for sign in (-1, 1):
            rho = rho_star + sign * 1e-6 * np.array([0.0, 1.0])
            nd = solve_normal_data(SQUARE, TorusPoint.from_rho(rho))
            vals.append(nd.b)
            grads.append(2 * 2 * moment_map(TorusPoint.from_rho(rho)) - 2 * nd.q)
        assert abs(vals[0] - vals[1]) <= 1e-4
        np.testing.assert_allclose(grads[0], grads[1], atol=1e-4)


# -- regions ---------------------------------------------------------------------------

def test_region_examples():
    r = classify_region(SQUARE, zabs(2, 1))
    assert r.kind == FORBIDDEN
    face = SQUARE.faces[r.face_id]
    assert face.dim == 1 and SQUARE.halfspaces[face.active_set[0]] == ((-1, 0), 1)
    assert classify_region(SQUARE, zabs(1, np.sqrt(2))).kind == TRANSITION
    assert classify_region(EX3, zabs(2, 0.1)).kind == ALLOWED
    assert classify_region(SQUARE, zabs(1, 1)).kind == ALLOWED


def test_forbidden_points_have_positive_decay():
    rng = np.random.default_rng(3)
    for rho in rng.uniform(-3, 3, size=(60, 2)):
        z = TorusPoint.from_rho(rho)
        if classify_region(EX3, z).kind == FORBIDDEN:
            assert solve_normal_data(EX3, z).b > 0


@pytest.mark.parametrize("outer,inner,p", [
    ("square", [(0, 0), (1, 0), (0, 1)], 2),
    ("trapezoid_ex3_2", [(0, 0), (1, 0), (1, 1), (0, 1)], 3),
    ("simplex_2_3", [(0, 0), (2, 0), (1, 1), (0, 1)], 3),
])
def test_monotone_in_polytope(outer, inner, p):
    P = named_polytope(outer)
    Q = from_vertices(inner, p)
    rng = np.random.default_rng(4)
    for rho in rng.uniform(-2, 2, size=(30, 2)):
        z = TorusPoint.from_rho(rho)
        bP, bQ = solve_normal_data(P, z), solve_normal_data(Q, z)
        assert bQ.b >= bP.b - 1e-12


# -- b as an action integral ---------------------------------------------------------------

def test_action_integral_square():
    val = b_action_integral(SQUARE, zabs(1, 2), steps=32)
    assert val == pytest.approx(np.log(9 / 8), abs=1e-10)


def test_action_integral_allowed_is_zero():
    assert b_action_integral(SQUARE, zabs(1, 1)) == 0.0


def test_action_integral_interval():
    P = from_vertices([(1,), (3,)], 4)
    z = zabs(3.0)  # 4 mu = 3.6 > 3
    direct = decay_objective([3.0], z, 4)
    assert solve_normal_data(P, z).b == pytest.approx(direct, abs=1e-14)
    assert b_action_integral(P, z) == pytest.approx(direct, abs=1e-10)


@pytest.mark.parametrize("rho", [[1.2, 0.1], [0.3, 1.5], [1.0, 2.0]])
def test_action_integral_example3(rho):
    z = TorusPoint.from_rho(rho)
    nd = solve_normal_data(EX3, z)
    assert b_action_integral(EX3, z, steps=48) == pytest.approx(nd.b, abs=1e-8)


def test_action_integral_rejects_few_steps():
    with pytest.raises(ValueError):
        b_action_integral(SQUARE, zabs(1, 2), steps=8)
