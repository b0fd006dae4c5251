"""Exact integer geometry of convex lattice polytopes in dimension <= 3.

Polytopes are stored in both vertex and halfspace form,

    P = {x : <x, u_j> + lam_j >= 0,  j = 1..d}   (plus affine equations if dim P < m),

with primitive integer normals ``u_j``.  Faces are the disjoint equivalence
classes of points sharing the same active set, so the open interior is a face
with empty active set and edges are stored without their endpoints.

All arithmetic here is on ``int`` and ``fractions.Fraction``; floats only enter
through :func:`face_of_point` when classifying numerical points.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "PolytopeError",
    "NonSimplePolytopeError",
    "Face",
    "LatticePolytope",
    "from_vertices",
    "lattice_points",
    "count_points",
    "ehrhart_fit",
    "relative_volume",
    "normal_cone_contains",
    "is_simple",
    "contains",
    "dilate",
    "load_polytope",
    "dump_polytope",
    "named_polytope",
    "INTERIOR",
    "BOUNDARY",
    "OUTSIDE",
]

INTERIOR = "interior"
BOUNDARY = "boundary"
OUTSIDE = "outside"

MAX_DIM = 3


class PolytopeError(ValueError):
    """Invalid polytope input."""


class NonSimplePolytopeError(PolytopeError):
    """Raised by analyses that need a simple polytope."""


# ---------------------------------------------------------------------------
# small exact linear algebra
# ---------------------------------------------------------------------------

def _primitive(v: Sequence) -> tuple[int, ...]:
    """Scale a rational vector to the primitive integer vector on its ray."""
    fr = [Fraction(x) for x in v]
    den = 1
    for x in fr:
        den = den * x.denominator // math.gcd(den, x.denominator)
    ints = [int(x * den) for x in fr]
    g = 0
    for x in ints:
        g = math.gcd(g, abs(x))
    if g == 0:
        raise ZeroDivisionError("zero vector has no primitive representative")
    return tuple(x // g for x in ints)


def _rref(rows: list[list[Fraction]], ncols: int) -> tuple[list[list[Fraction]], list[int]]:
    mat = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        lead = mat[r][c]
        mat[r] = [x / lead for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    return mat[:r], pivots


def _rank(rows: Iterable[Sequence], ncols: int) -> int:
    rows = [[Fraction(x) for x in r] for r in rows]
    if not rows:
        return 0
    return len(_rref(rows, ncols)[1])


def _nullspace(rows: Iterable[Sequence], ncols: int) -> list[tuple[int, ...]]:
    """Integer (primitive) basis of the rational nullspace of ``rows``."""
    rows = [[Fraction(x) for x in r] for r in rows]
    if rows:
        red, pivots = _rref(rows, ncols)
    else:
        red, pivots = [], []
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, pc in zip(red, pivots):
            v[pc] = -row[f]
        basis.append(_primitive(v))
    return basis


def _dot(a: Sequence, b: Sequence):
    return sum(x * y for x, y in zip(a, b))


def _sub(a: Sequence, b: Sequence):
    return tuple(x - y for x, y in zip(a, b))


def _det(mat: list[list[Fraction]]) -> Fraction:
    n = len(mat)
    if n == 0:
        return Fraction(1)
    m = [[Fraction(x) for x in row] for row in mat]
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for i in range(c + 1, n):
            f = m[i][c] / m[c][c]
            m[i] = [a - f * b for a, b in zip(m[i], m[c])]
    return det


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Face:
    """A face of ``P`` (relatively open), identified by its active set.

    Attributes
    ----------
    id : int
        Index into ``LatticePolytope.faces``.
    active_set : tuple of int
        Sorted indices ``j`` of the facet inequalities that vanish on the face.
    dim : int
        Affine dimension of the face.
    vertex_indices : tuple of int
        Vertices of the closed face.
    tangent_basis : tuple of vectors
        Integer vectors spanning the direction space ``T_F``.
    normal_cone_generators : tuple of vectors
        Generators ``-u_j`` (``j`` in the active set) of the pointed part of ``C_F``.
    lineality : tuple of vectors
        Basis of the linear subspace contained in every normal cone
        (non-empty only when ``dim P < m``).
    relative_interior_point : tuple of Fraction
        Average of the face vertices.
    """

    id: int
    active_set: tuple[int, ...]
    dim: int
    vertex_indices: tuple[int, ...]
    tangent_basis: tuple[tuple[int, ...], ...]
    normal_cone_generators: tuple[tuple[int, ...], ...]
    lineality: tuple[tuple[int, ...], ...]
    relative_interior_point: tuple[Fraction, ...]

    @property
    def codim(self) -> int:
        return len(self.relative_interior_point) - self.dim

    @property
    def is_vertex(self) -> bool:
        return self.dim == 0


@dataclass(frozen=True, eq=False)
class LatticePolytope:
    """Convex lattice polytope ``P`` inside the dilated simplex ``p * Sigma``.

    Build instances with :func:`from_vertices`; the constructor does not
    validate its arguments.
    """

    ambient_dim: int
    degree_bound: int
    vertices: tuple[tuple[int, ...], ...]
    halfspaces: tuple[tuple[tuple[int, ...], int], ...]
    equations: tuple[tuple[tuple[int, ...], int], ...]
    dim: int
    faces: tuple[Face, ...] = field(repr=False)

    # -- convenience views --------------------------------------------------
    @property
    def m(self) -> int:
        return self.ambient_dim

    @property
    def p(self) -> int:
        return self.degree_bound

    @cached_property
    def normals(self) -> np.ndarray:
        """Facet normals as a float array of shape ``(d, m)``."""
        if not self.halfspaces:
            return np.zeros((0, self.m))
        return np.array([u for u, _ in self.halfspaces], dtype=float)

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.array([lam for _, lam in self.halfspaces], dtype=float)

    @cached_property
    def vertex_array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=float)

    @cached_property
    def _face_by_active(self) -> dict[tuple[int, ...], Face]:
        return {f.active_set: f for f in self.faces}

    @property
    def interior_face(self) -> Face:
        """The open face ``P°`` (relative interior)."""
        return self._face_by_active[()]

    def face(self, active_set: Iterable[int]) -> Face:
        return self._face_by_active[tuple(sorted(active_set))]

    def face_containing(self, x: Sequence) -> Face:
        """Face containing the rational point ``x`` (exact)."""
        if not contains(self, x):
            raise PolytopeError(f"point {tuple(x)} is not in P")
        active = tuple(j for j, (u, lam) in enumerate(self.halfspaces)
                       if _dot(u, [Fraction(v) for v in x]) + lam == 0)
        return self._face_by_active[active]

    def ell(self, x: Sequence) -> list:
        """Values ``l_j(x) = <x, u_j> + lam_j`` for every facet."""
        return [_dot(u, x) + lam for u, lam in self.halfspaces]

    def faces_of_dim(self, r: int) -> list[Face]:
        return [f for f in self.faces if f.dim == r]

    @cached_property
    def volume(self) -> Fraction:
        """Lattice-normalised ``dim P``-volume (see :func:`relative_volume`)."""
        return relative_volume(self)

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return (f"LatticePolytope(m={self.m}, p={self.p}, dim={self.dim}, "
                f"vertices={list(self.vertices)})")


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def from_vertices(vertices: Iterable[Sequence[int]], p: int) -> LatticePolytope:
    """Convex hull of integer points inside ``p * Sigma``.

    Facets are found by brute force over subsets of the input points, which is
    cheap for ``m <= 3``.  Input points need not be vertices; non-extreme
    points are discarded.

    Parameters
    ----------
    vertices : iterable of integer vectors
        Points of ``Z^m`` whose convex hull is ``P``.
    p : int
        Degree bound; every point must satisfy ``x >= 0`` and ``sum(x) <= p``.

    Returns
    -------
    LatticePolytope
    """
    pts = []
    for v in vertices:
        v = tuple(v)
        if not all(isinstance(c, (int, np.integer)) and not isinstance(c, bool) for c in v):
            if not all(float(c).is_integer() for c in v):
                raise PolytopeError(f"non-integer vertex {v}")
        pts.append(tuple(int(c) for c in v))
    if not pts:
        raise PolytopeError("empty vertex list")
    m = len(pts[0])
    if not 1 <= m <= MAX_DIM:
        raise PolytopeError(f"ambient dimension must be 1..{MAX_DIM}, got {m}")
    if any(len(v) != m for v in pts):
        raise PolytopeError("vertices of mixed dimension")
    p = int(p)
    if p < 1:
        raise PolytopeError("degree bound p must be >= 1")
    for v in pts:
        if min(v) < 0 or sum(v) > p:
            raise PolytopeError(f"vertex {v} lies outside {p}*Sigma")
    pts = sorted(set(pts))

    base = pts[0]
    diffs = [_sub(v, base) for v in pts[1:]]
    n = _rank(diffs, m)
    eq_normals = _nullspace(diffs, m) if n < m else []
    equations = tuple((a, -_dot(a, base)) for a in eq_normals)

    halfspaces = _facets(pts, n, m, eq_normals)
    # vertices: points whose active normals together with the equations span R^m
    verts = []
    for v in pts:
        act = [u for u, lam in halfspaces if _dot(u, v) + lam == 0]
        if _rank(act + list(eq_normals), m) == m:
            verts.append(v)
    if n == 0:
        verts = [pts[0]]
    verts = tuple(sorted(verts))
    faces = _face_lattice(verts, halfspaces, eq_normals, m)
    return LatticePolytope(ambient_dim=m, degree_bound=p, vertices=verts,
                           halfspaces=halfspaces, equations=equations, dim=n,
                           faces=faces)


def _facets(pts, n, m, eq_normals):
    if n == 0:
        return ()
    found = {}
    # a facet of an n-dimensional polytope is spanned by n affinely independent points
    for subset in itertools.combinations(pts, n):
        d = [_sub(v, subset[0]) for v in subset[1:]]
        if _rank(d, m) != n - 1:
            continue
        null = _nullspace(d + list(eq_normals), m)
        if len(null) != 1:
            continue
        u = null[0]
        vals = [_dot(u, v) for v in pts]
        lo, hi = min(vals), max(vals)
        if lo == hi:
            continue
        ref = _dot(u, subset[0])
        if ref == lo:
            lam = -lo
        elif ref == hi:
            u = tuple(-c for c in u)
            lam = hi
        else:
            continue
        found[u] = (u, lam)
    return tuple(sorted(found.values()))


def _face_lattice(verts, halfspaces, eq_normals, m) -> tuple[Face, ...]:
    vert_active = {v: frozenset(j for j, (u, lam) in enumerate(halfspaces)
                                if _dot(u, v) + lam == 0) for v in verts}
    family = set(vert_active.values())
    frontier = set(family)
    while frontier:
        new = set()
        for a in frontier:
            for b in family:
                c = a & b
                if c not in family:
                    new.add(c)
        family |= new
        frontier = new
    family.add(frozenset())
    lineality = tuple(tuple(a) for a in eq_normals)
    faces = []
    for active in sorted(family, key=lambda s: (-len(s), sorted(s))):
        fverts = [i for i, v in enumerate(verts) if active <= vert_active[v]]
        if not fverts:
            continue
        pts = [verts[i] for i in fverts]
        tang = [_sub(v, pts[0]) for v in pts[1:]]
        r = _rank(tang, m)
        basis = _independent_subset(tang, m)
        center = tuple(Fraction(sum(v[k] for v in pts), len(pts)) for k in range(m))
        gens = tuple(tuple(-c for c in halfspaces[j][0]) for j in sorted(active))
        faces.append((tuple(sorted(active)), r, tuple(fverts), basis, gens, center))
    faces.sort(key=lambda f: (f[1], f[0]))
    return tuple(Face(id=i, active_set=a, dim=r, vertex_indices=fv,
                      tangent_basis=tb, normal_cone_generators=g,
                      lineality=lineality, relative_interior_point=c)
                 for i, (a, r, fv, tb, g, c) in enumerate(faces))


def _independent_subset(vectors, m):
    chosen: list = []
    for v in vectors:
        if _rank(chosen + [v], m) > len(chosen):
            chosen.append(tuple(v))
    return tuple(chosen)


# ---------------------------------------------------------------------------
# predicates and transforms
# ---------------------------------------------------------------------------

def contains(P: LatticePolytope, x: Sequence) -> bool:
    """Exact membership test for a rational (or integer) point."""
    x = [Fraction(c) for c in x]
    if len(x) != P.m:
        raise PolytopeError("dimension mismatch")
    if any(_dot(a, x) + c != 0 for a, c in P.equations):
        return False
    return all(v >= 0 for v in P.ell(x))


def is_simple(P: LatticePolytope) -> bool:
    """True when every vertex lies on exactly ``dim P`` facets."""
    return all(len(f.active_set) == P.dim for f in P.faces if f.dim == 0)


def dilate(P: LatticePolytope, N: int) -> LatticePolytope:
    """``N * P`` inside ``N p * Sigma``; vertices and offsets scale by ``N``."""
    N = int(N)
    if N < 1:
        raise PolytopeError("dilation factor must be >= 1")
    faces = tuple(Face(id=f.id, active_set=f.active_set, dim=f.dim,
                       vertex_indices=f.vertex_indices, tangent_basis=f.tangent_basis,
                       normal_cone_generators=f.normal_cone_generators,
                       lineality=f.lineality,
                       relative_interior_point=tuple(N * c for c in f.relative_interior_point))
                  for f in P.faces)
    return LatticePolytope(
        ambient_dim=P.m, degree_bound=N * P.p,
        vertices=tuple(tuple(N * c for c in v) for v in P.vertices),
        halfspaces=tuple((u, N * lam) for u, lam in P.halfspaces),
        equations=tuple((a, N * c) for a, c in P.equations),
        dim=P.dim, faces=faces)


def normal_cone_contains(face: Face, w: Sequence[float], tol: float = 1e-9) -> str:
    """Classify ``w`` against the normal cone ``C_F``.

    Returns one of ``"interior"``, ``"boundary"`` or ``"outside"``.  Interior
    means the relative interior of ``C_F``; the boundary band has width
    ``tol * max(1, |w|)`` in the cone coefficients and in the residual.

    The generators of ``C_F`` of a simple face are linearly independent, so
    the coefficients are obtained by least squares.  For non-simple vertices
    (more generators than the dimension) the coefficients come from a
    non-negative least-squares fit.
    """
    w = np.asarray(w, dtype=float)
    scale = max(1.0, float(np.linalg.norm(w)))
    band = tol * scale
    gens = np.array(face.normal_cone_generators, dtype=float).reshape(-1, w.size)
    lin = np.array(face.lineality, dtype=float).reshape(-1, w.size)
    if gens.shape[0] == 0:
        # C_F is the lineality space
        if lin.shape[0]:
            coef, *_ = np.linalg.lstsq(lin.T, w, rcond=None)
            resid = np.linalg.norm(lin.T @ coef - w)
        else:
            resid = np.linalg.norm(w)
        return INTERIOR if resid <= band else OUTSIDE

    # unit-length generators so that ``tol`` is comparable across cones
    gnorm = np.linalg.norm(gens, axis=1)
    G = gens / gnorm[:, None]
    A = np.vstack([G, lin]).T if lin.shape[0] else G.T
    k = G.shape[0]
    if np.linalg.matrix_rank(A) == A.shape[1]:
        coef, *_ = np.linalg.lstsq(A, w, rcond=None)
    else:
        from scipy.optimize import nnls
        # split lineality into +/- pairs so NNLS sees only non-negative coefficients
        A2 = np.hstack([G.T, lin.T, -lin.T]) if lin.shape[0] else G.T
        c2, _ = nnls(A2, w)
        coef = c2[:k]
        if lin.shape[0]:
            coef = np.concatenate([coef, c2[k:k + lin.shape[0]] - c2[k + lin.shape[0]:]])
    resid = np.linalg.norm(A @ coef - w)
    t = coef[:k]
    if resid > band or np.any(t < -band):
        return OUTSIDE
    if np.all(t > band):
        return INTERIOR
    return BOUNDARY


def face_of_point(P: LatticePolytope, x: Sequence[float], tol: float = 1e-9) -> Face:
    """Face containing a floating point ``x`` with active-set tolerance ``tol``."""
    x = np.asarray(x, dtype=float)
    if P.halfspaces:
        slack = P.normals @ x + P.offsets
        norms = np.linalg.norm(P.normals, axis=1)
        active = tuple(int(j) for j in np.nonzero(slack <= tol * norms)[0])
    else:
        active = ()
    try:
        return P.face(active)
    except KeyError:
        # tolerance put x near several facets that do not share a face; take
        # the face of the closest vertex-compatible subset
        best = min(P.faces, key=lambda f: (len(set(f.active_set) ^ set(active)), -f.dim))
        return best


# ---------------------------------------------------------------------------
# lattice points and Ehrhart
# ---------------------------------------------------------------------------

def _dilated_box(P: LatticePolytope, N: int):
    V = np.array(P.vertices, dtype=np.int64) * N
    return V.min(axis=0), V.max(axis=0)


def _lattice_mask(P: LatticePolytope, N: int):
    lo, hi = _dilated_box(P, N)
    axes = [np.arange(a, b + 1, dtype=np.int64) for a, b in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, P.m)
    ok = np.ones(len(grid), dtype=bool)
    for u, lam in P.halfspaces:
        ok &= grid @ np.array(u, dtype=np.int64) + N * lam >= 0
    for a, c in P.equations:
        ok &= grid @ np.array(a, dtype=np.int64) + N * c == 0
    return grid, ok


def lattice_points(P: LatticePolytope, N: int = 1) -> np.ndarray:
    """Lattice points of ``N P`` as an ``(k, m)`` integer array, lexicographically sorted."""
    if N < 1:
        raise PolytopeError("N must be >= 1")
    grid, ok = _lattice_mask(P, N)
    return grid[ok]  # meshgrid with ij indexing is already lexicographic


def count_points(P: LatticePolytope, N: int = 1) -> int:
    """``#(N P ∩ Z^m)``, counted fibre by fibre along the last coordinate.

    Each fibre is an integer interval whose ends come from exact floor and
    ceiling divisions, so this is independent of :func:`lattice_points`.
    """
    if N < 1:
        raise PolytopeError("N must be >= 1")
    if P.equations or P.m == 1 and not P.halfspaces:
        _, ok = _lattice_mask(P, N)
        return int(ok.sum())
    lo, hi = _dilated_box(P, N)
    axes = [np.arange(a, b + 1, dtype=np.int64) for a, b in zip(lo[:-1], hi[:-1])]
    if axes:
        base = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, P.m - 1)
    else:
        base = np.zeros((1, 0), dtype=np.int64)
    low = np.full(len(base), lo[-1], dtype=np.int64)
    high = np.full(len(base), hi[-1], dtype=np.int64)
    ok = np.ones(len(base), dtype=bool)
    for u, lam in P.halfspaces:
        rest = base @ np.array(u[:-1], dtype=np.int64) + N * lam  # u_m x_m + rest >= 0
        um = u[-1]
        if um > 0:
            low = np.maximum(low, -(rest // um))  # ceil(-rest / um)
        elif um < 0:
            high = np.minimum(high, rest // (-um))  # floor(rest / -um)
        else:
            ok &= rest >= 0
    return int(np.sum(np.where(ok, np.clip(high - low + 1, 0, None), 0)))


def relative_volume(P: LatticePolytope) -> Fraction:
    """``dim P``-volume of ``P`` measured in the lattice of its affine hull.

    For full-dimensional ``P`` this is the Euclidean volume, computed by fan
    triangulation from the centroid.  For lower-dimensional ``P`` the volume
    is normalised so that a fundamental cell of ``aff(P) ∩ Z^m`` has volume 1,
    which is the normalisation of the Ehrhart leading coefficient.
    """
    n, m = P.dim, P.m
    if n == 0:
        return Fraction(1)
    simplices = _triangulate(P)
    if n == m:
        total = Fraction(0)
        for s in simplices:
            total += abs(_det([_sub(v, s[0]) for v in s[1:]]))
        return total / math.factorial(n)
    if n == 1:
        a, b = simplices[0]
        d = _sub(b, a)
        g = 0
        for c in d:
            g = math.gcd(g, abs(int(c)))
        return Fraction(g)
    # n == 2 inside m == 3: cross(d1, d2) = k * a with a the primitive normal
    a = P.equations[0][0]
    total = Fraction(0)
    for s in simplices:
        d1, d2 = _sub(s[1], s[0]), _sub(s[2], s[0])
        cr = (d1[1] * d2[2] - d1[2] * d2[1], d1[2] * d2[0] - d1[0] * d2[2],
              d1[0] * d2[1] - d1[1] * d2[0])
        k = Fraction(_dot(cr, a), _dot(a, a))
        total += abs(k)
    return total / 2


def _ordered_polygon(pts, normal=None):
    """Order the vertices of a convex polygon cyclically."""
    if len(pts) <= 2:
        return list(pts)
    c = [sum(Fraction(v[k]) for v in pts) / len(pts) for k in range(len(pts[0]))]
    if len(pts[0]) == 2:
        coords = [(float(v[0] - c[0]), float(v[1] - c[1])) for v in pts]
    else:
        e1 = _sub(pts[1], pts[0])
        n = normal
        e2 = (n[1] * e1[2] - n[2] * e1[1], n[2] * e1[0] - n[0] * e1[2], n[0] * e1[1] - n[1] * e1[0])
        coords = [(float(_dot(_sub(v, c), e1)), float(_dot(_sub(v, c), e2))) for v in pts]
    order = sorted(range(len(pts)), key=lambda i: math.atan2(coords[i][1], coords[i][0]))
    return [pts[i] for i in order]


def _triangulate(P: LatticePolytope) -> list[tuple]:
    """Exact triangulation of ``P`` into ``dim P``-simplices (fan from the centroid)."""
    n = P.dim
    verts = [tuple(Fraction(c) for c in v) for v in P.vertices]
    if n == 1:
        return [(verts[0], verts[-1])] if len(verts) == 2 else [(min(verts), max(verts))]
    centroid = tuple(sum(v[k] for v in verts) / len(verts) for k in range(P.m))
    simplices = []
    for f in P.faces:
        if f.dim != n - 1:
            continue
        fv = [verts[i] for i in f.vertex_indices]
        if n == 2:
            simplices.append((centroid, fv[0], fv[1]))
        else:  # n == 3, facet is a polygon
            u = P.halfspaces[f.active_set[0]][0]
            ring = _ordered_polygon(fv, u)
            for i in range(1, len(ring) - 1):
                simplices.append((centroid, ring[0], ring[i], ring[i + 1]))
    if n == 2 and P.m == 3:
        a = P.equations[0][0]
        ring = _ordered_polygon(verts, a)
        simplices = [(ring[0], ring[i], ring[i + 1]) for i in range(1, len(ring) - 1)]
    return simplices


def triangulation(P: LatticePolytope) -> list[tuple]:
    """Public access to the exact simplex decomposition used for volumes."""
    return _triangulate(P)


def ehrhart_fit(P: LatticePolytope) -> list[Fraction]:
    """Ehrhart coefficients ``(a_0, ..., a_n)`` with ``#(NP) = sum a_j N^(n-j)``.

    The polynomial is interpolated exactly through the counts at
    ``N = 1..n+1``, then checked against the count at ``N = n+2`` and against
    the independently computed relative volume.

    Raises
    ------
    PolytopeError
        If the extra count or the leading coefficient disagree.
    """
    n = P.dim
    Ns = list(range(1, n + 2))
    counts = [count_points(P, N) for N in Ns]
    # solve Vandermonde system for coefficients of N^n ... N^0
    rows = [[Fraction(N) ** (n - j) for j in range(n + 1)] for N in Ns]
    aug = [r + [Fraction(c)] for r, c in zip(rows, counts)]
    red, _ = _rref(aug, n + 1)
    coeffs = [red[j][n + 1] for j in range(n + 1)]
    check_N = n + 2
    predicted = sum(c * Fraction(check_N) ** (n - j) for j, c in enumerate(coeffs))
    if predicted != count_points(P, check_N):
        raise PolytopeError("lattice counts are not polynomial in N")
    if coeffs[0] != relative_volume(P):
        raise PolytopeError(f"leading coefficient {coeffs[0]} != volume {relative_volume(P)}")
    return coeffs


# ---------------------------------------------------------------------------
# I/O and named examples
# ---------------------------------------------------------------------------

def load_polytope(path_or_obj) -> LatticePolytope:
    """Read ``{"m": int, "p": int, "vertices": [[int, ...], ...]}``."""
    if isinstance(path_or_obj, dict):
        obj = path_or_obj
    else:
        with open(path_or_obj) as fh:
            obj = json.load(fh)
    unknown = set(obj) - {"m", "p", "vertices"}
    if unknown:
        raise PolytopeError(f"unknown polytope fields: {sorted(unknown)}")
    try:
        m, p, verts = obj["m"], obj["p"], obj["vertices"]
    except KeyError as exc:
        raise PolytopeError(f"missing polytope field {exc}") from None
    for v in verts:
        if len(v) != m or not all(isinstance(c, int) and not isinstance(c, bool) for c in v):
            raise PolytopeError(f"vertex {v} is not an integer vector of length {m}")
    return from_vertices(verts, p)


def dump_polytope(P: LatticePolytope) -> dict:
    return {"m": P.m, "p": P.p, "vertices": [list(v) for v in P.vertices]}


def named_polytope(name: str) -> LatticePolytope:
    """Worked examples: ``square``, ``trapezoid_ex2``, ``trapezoid_ex3_<n>``, ``simplex_<m>_<p>``."""
    if name == "square":
        return from_vertices([(0, 0), (1, 0), (0, 1), (1, 1)], 2)
    if name == "trapezoid_ex2":
        return from_vertices([(0, 0), (2, 0), (0, 1), (1, 1)], 2)
    if name.startswith("trapezoid_ex3"):
        n = int(name.rsplit("_", 1)[1])
        if n < 2:
            raise PolytopeError("trapezoid_ex3 needs n >= 2")
        return from_vertices([(0, 0), (n + 1, 0), (0, 1), (1, 1)], n + 1)
    if name.startswith("simplex_"):
        _, m, p = name.split("_")
        m, p = int(m), int(p)
        verts = [tuple([0] * m)] + [tuple(p if k == j else 0 for k in range(m)) for j in range(m)]
        return from_vertices(verts, p)
    raise KeyError(name)
