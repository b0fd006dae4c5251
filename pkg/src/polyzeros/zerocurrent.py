"""The limit zero current as a pointwise coefficient matrix.

In log coordinates ``w_j = rho_j + i theta_j`` the limit potential is
``u_inf(rho) = p log(1 + sum_j e^{2 rho_j}) - b_P(rho)`` and the current is

    psi = (i / 8 pi) sum_{jk} d^2 u_inf / d rho_j d rho_k  dw_j ^ dw-bar_k.

The matrix ``M = Hess_rho(u_inf) / (8 pi)`` is what this module stores.  On
the allowed region it equals ``(p / 2 pi)(diag mu - mu mu^T)``, the
coefficient matrix of ``p`` times the Fubini-Study form.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import factorial, log, pi
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.special import roots_legendre

from .momentmap import (ALLOWED, FORBIDDEN, TRANSITION, NormalData, Region,
                        TorusPoint, _as_point, _log_fs, classify_region,
                        moment_map, solve_normal_data)
from .polytope import LatticePolytope, named_polytope, triangulation

__all__ = [
    "TransitionPointError",
    "StencilError",
    "PsiDensity",
    "OracleRegion",
    "fs_matrix",
    "psi_density",
    "psi_rank",
    "oracle_region",
    "oracle_u",
    "oracle_b",
    "oracle_psi",
    "normal_flow_residual",
    "bk_volume_check",
    "box_pushforward_volume",
]

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-3
RANK_TOL = 1e-4


class TransitionPointError(ValueError):
    """The point lies on an interface between flow-out regions."""


class StencilError(RuntimeError):
    """Every finite-difference stencil tried straddles a region interface."""


@dataclass(frozen=True)
class PsiDensity:
    """Coefficient matrix of the limit current at one point.

    Attributes
    ----------
    point : TorusPoint
    matrix : ndarray, shape (m, m)
        ``Hess_rho(u_inf) / (8 pi)``, symmetrised.
    eigenvalues : ndarray
        Ascending.
    rank : int
        Number of eigenvalues above ``RANK_TOL`` times the reference scale.
    region : Region
    reference : ndarray
        ``p`` times the Fubini-Study coefficient matrix at the same point, used
        to scale the rank threshold.
    step : float
        Finite-difference step actually used (0 for closed forms).
    """

    point: TorusPoint
    matrix: np.ndarray
    eigenvalues: np.ndarray
    rank: int
    region: Optional[Region]
    reference: np.ndarray
    step: float = 0.0


def fs_matrix(rho, p: float = 1.0) -> np.ndarray:
    """``(p / 2 pi)(diag mu - mu mu^T)``."""
    mu = moment_map(TorusPoint.from_rho(rho))
    return (p / (2 * pi)) * (np.diag(mu) - np.outer(mu, mu))


def _rank(eig: np.ndarray, ref: np.ndarray, rank_tol: float) -> int:
    scale = max(float(np.max(np.linalg.eigvalsh(ref))), float(np.max(eig)), 0.0)
    return int(np.sum(eig > rank_tol * scale))


def _make(pt, M, region, p, rank_tol, step) -> PsiDensity:
    M = 0.5 * (M + M.T)
    eig = np.linalg.eigvalsh(M)
    ref = fs_matrix(pt.rho, p)
    return PsiDensity(point=pt, matrix=M, eigenvalues=eig, rank=_rank(eig, ref, rank_tol),
                      region=region, reference=ref, step=step)


def _u_inf(P: LatticePolytope, rho: np.ndarray, face_id: int) -> float:
    nd = solve_normal_data(P, TorusPoint.from_rho(rho))
    if nd.face.id != face_id:
        raise _Straddle()
    return P.p * _log_fs(rho) - nd.b


class _Straddle(Exception):
    pass


def _fd_hessian(P: LatticePolytope, rho: np.ndarray, h: float, face_id: int) -> np.ndarray:
    """Central second differences of ``u_inf``; every stencil point must stay on ``face_id``."""
    m = rho.size
    E = np.eye(m) * h
    u0 = _u_inf(P, rho, face_id)
    H = np.empty((m, m))
    for j in range(m):
        up = _u_inf(P, rho + E[j], face_id)
        um = _u_inf(P, rho - E[j], face_id)
        H[j, j] = (up - 2.0 * u0 + um) / h**2
        for k in range(j):
            upp = _u_inf(P, rho + E[j] + E[k], face_id)
            upm = _u_inf(P, rho + E[j] - E[k], face_id)
            ump = _u_inf(P, rho - E[j] + E[k], face_id)
            umm = _u_inf(P, rho - E[j] - E[k], face_id)
            H[j, k] = H[k, j] = (upp - upm - ump + umm) / (4.0 * h**2)
    return H


def psi_density(P: LatticePolytope, z, step: float = DEFAULT_STEP,
                rank_tol: float = RANK_TOL, exact_allowed: bool = False,
                max_shrink: int = 3) -> PsiDensity:
    """Finite-difference coefficient matrix of the limit current at ``z``.

    Second differences of ``u_inf`` with steps ``h`` and ``h/2`` are combined
    by Richardson extrapolation.  When a stencil point falls on a different
    face than the centre, the step is divided by 4, at most ``max_shrink``
    times.

    Parameters
    ----------
    P : LatticePolytope
    z : TorusPoint or complex array
    step : float
        Initial step ``h`` in ``rho``.
    rank_tol : float
        Relative eigenvalue threshold for the rank.
    exact_allowed : bool
        Return the closed-form Fubini-Study matrix on the allowed region
        instead of differencing.

    Raises
    ------
    TransitionPointError
        At transition points, where the current has no pointwise value.
    StencilError
        If no admissible stencil is found.
    """
    pt = _as_point(z)
    nd = solve_normal_data(P, pt)
    region = classify_region(P, pt, data=nd)
    if region.kind == TRANSITION:
        raise TransitionPointError(f"rho = {pt.rho} is a transition point")
    if exact_allowed and region.kind == ALLOWED:
        return _make(pt, fs_matrix(pt.rho, P.p), region, P.p, rank_tol, 0.0)
    h = step
    for _ in range(max_shrink + 1):
        try:
            H1 = _fd_hessian(P, pt.rho, h, nd.face.id)
            H2 = _fd_hessian(P, pt.rho, h / 2, nd.face.id)
        except _Straddle:
            h /= 4
            continue
        H = (4.0 * H2 - H1) / 3.0
        return _make(pt, H / (8 * pi), region, P.p, rank_tol, h)
    raise StencilError(f"stencil straddles an interface at rho = {pt.rho} for every step tried")


def psi_rank(P: LatticePolytope, z, **kwargs) -> int:
    return psi_density(P, z, **kwargs).rank


# ---------------------------------------------------------------------------
# closed-form oracles
# ---------------------------------------------------------------------------
#
# Example ids: "square" is [0,1]^2 in 2 Sigma; "trapezoid_ex2" is
# conv{(0,0),(2,0),(0,1),(1,1)} in 2 Sigma; "trapezoid_ex3_<n>" is
# conv{(0,0),(n+1,0),(0,1),(1,1)} in (n+1) Sigma, n >= 2.  With s_j = |z_j|^2
# the limit potential is piecewise
#
#   allowed : p log(1 + s1 + s2)
#   top edge flow-out (square, ex2, ex3):
#             log s2 + n log(1 + s1) + (n+1) log(n+1) - n log n      (n = 1 for the square)
#   right edge flow-out (square): same with s1 <-> s2
#   slanted edge flow-out (ex3):
#             (n+1) log(n/(n-1) + e^w) + ((n+1)/n) log((n-1) s2),
#             w = 2 rho1 - (log(n-1) + 2 rho2)/n
#   vertex (1,1) flow-out (ex3): 2(rho1 + rho2) + 2 log(n+1) - (n-1) log((n-1)/(n+1))
#
# The slanted-edge form comes from u_inf = <q, tau> + p log(1 + ||e^{-tau/2} z||^2)
# with tau = t (1, n) and (n-1) s2 e^{-nt} = 1.  Second derivatives:
#   d^2/drho^2 log(c + e^{2 rho}) = 4 nu (1 - nu),  nu = e^{2 rho} / (c + e^{2 rho}),
#   Hess (n+1) log(c + e^w) = (n+1) sigma (1 - sigma) v v^T,  v = (2, -2/n).


@dataclass(frozen=True)
class OracleRegion:
    """Region of a closed-form example.

    ``name`` is one of ``allowed``, ``F`` (top edge), ``Fstar`` (right edge of the
    square), ``Fprime`` (slanted edge), ``v`` (vertex (1,1)); ``normal`` is the
    inward facet normal of the edge, ``None`` otherwise.
    """

    name: str
    dim: int
    normal: Optional[tuple] = None


def _parse_example(example_id: str):
    if example_id == "square":
        return "square", 1, 2
    if example_id == "trapezoid_ex2":
        return "ex3", 1, 2
    if example_id.startswith("trapezoid_ex3"):
        n = int(example_id.rsplit("_", 1)[1])
        if n < 2:
            raise ValueError("trapezoid_ex3 needs n >= 2")
        return "ex3", n, n + 1
    raise ValueError(f"unknown example {example_id!r}")


def example_polytope(example_id: str) -> LatticePolytope:
    return named_polytope(example_id)


def oracle_region(example_id: str, z, tol: float = 1e-9) -> OracleRegion:
    """Region read off the printed inequalities.

    Raises
    ------
    ValueError
        If ``z`` lies within ``tol`` (relative) of an interface.
    """
    kind, n, p = _parse_example(example_id)
    rho = _as_point(z).rho
    s1, s2 = np.exp(2 * rho)

    def near(a, b):
        return abs(a - b) <= tol * max(1.0, abs(a), abs(b))

    if kind == "square":
        if near(s2, s1 + 1) or near(s1, s2 + 1):
            raise ValueError("point on an interface")
        if s2 > s1 + 1:
            return OracleRegion("F", 1, (0, -1))
        if s1 > s2 + 1:
            return OracleRegion("Fstar", 1, (-1, 0))
        return OracleRegion("allowed", 2)
    if n == 1:
        if near(s2, s1 + 1):
            raise ValueError("point on an interface")
        return OracleRegion("F", 1, (0, -1)) if s2 > s1 + 1 else OracleRegion("allowed", 2)
    c = 1.0 / (n - 1)
    top = (1 + s1) / n
    corner = (n - 1) ** (n - 1) * s1**n
    for a, b in ((s2, top), (s1, c), (s2, c), (s2, corner)):
        if near(a, b):
            # only interfaces that actually bound a region matter, but a
            # point this close to any of the curves is rejected
            raise ValueError("point on an interface")
    if s2 < min(top, c):
        return OracleRegion("allowed", 2)
    if s1 < c and s2 >= top:
        return OracleRegion("F", 1, (0, -1))
    if s1 > c and c <= s2 < corner:
        return OracleRegion("Fprime", 1, (-1, -n))
    if s1 >= c and s2 >= corner:
        return OracleRegion("v", 0)
    raise ValueError("point not covered by the printed regions")  # pragma: no cover


def _curv(sigma: float) -> float:
    """``d^2/dt^2 log(c + e^t) = sigma (1 - sigma)`` with ``sigma = e^t / (c + e^t)``."""
    return sigma * (1.0 - sigma)


def oracle_u(example_id: str, z) -> float:
    """Closed-form ``u_inf``."""
    kind, n, p = _parse_example(example_id)
    rho = _as_point(z).rho
    reg = oracle_region(example_id, z)
    if reg.name == "allowed":
        return p * _log_fs(rho)
    if reg.name == "F":
        return 2 * rho[1] + n * np.log1p(np.exp(2 * rho[0])) + (n + 1) * log(n + 1) - n * log(n)
    if reg.name == "Fstar":
        return 2 * rho[0] + np.log1p(np.exp(2 * rho[1])) + 2 * log(2)
    if reg.name == "Fprime":
        w = 2 * rho[0] - (log(n - 1) + 2 * rho[1]) / n
        return (n + 1) * np.logaddexp(log(n / (n - 1)), w) + ((n + 1) / n) * (log(n - 1) + 2 * rho[1])
    # vertex (1, 1)
    return 2 * (rho[0] + rho[1]) + 2 * log(n + 1) - (n - 1) * log((n - 1) / (n + 1))


def oracle_b(example_id: str, z) -> float:
    """Closed-form ``b_P(z) = p log(1 + ||z||^2) - u_inf(z)``."""
    _, _, p = _parse_example(example_id)
    rho = _as_point(z).rho
    if oracle_region(example_id, z).name == "allowed":
        return 0.0
    return p * _log_fs(rho) - oracle_u(example_id, z)


def oracle_psi(example_id: str, z, rank_tol: float = RANK_TOL) -> PsiDensity:
    """Closed-form coefficient matrix ``Hess_rho(u_inf) / (8 pi)``."""
    kind, n, p = _parse_example(example_id)
    pt = _as_point(z)
    rho = pt.rho
    reg = oracle_region(example_id, z)
    H = np.zeros((2, 2))
    if reg.name == "allowed":
        mu = moment_map(pt)
        H = 4 * p * (np.diag(mu) - np.outer(mu, mu))
    elif reg.name == "F":
        nu = 1.0 / (1.0 + np.exp(-2 * rho[0]))
        H[0, 0] = 4 * n * _curv(nu)
    elif reg.name == "Fstar":
        nu = 1.0 / (1.0 + np.exp(-2 * rho[1]))
        H[1, 1] = 4 * _curv(nu)
    elif reg.name == "Fprime":
        w = 2 * rho[0] - (log(n - 1) + 2 * rho[1]) / n
        sigma = 1.0 / (1.0 + (n / (n - 1)) * np.exp(-w))
        v = np.array([2.0, -2.0 / n])
        H = (n + 1) * _curv(sigma) * np.outer(v, v)
    label = Region(ALLOWED) if reg.name == "allowed" else Region(FORBIDDEN, None)
    return _make(pt, H / (8 * pi), label, p, rank_tol, 0.0)


# ---------------------------------------------------------------------------
# normal flow
# ---------------------------------------------------------------------------

def _cone_span(face) -> np.ndarray:
    """Orthonormal basis of the linear span of the normal cone."""
    G = np.array(face.normal_cone_generators, dtype=float).reshape(-1, len(face.relative_interior_point))
    U, s, _ = np.linalg.svd(G.T, full_matrices=False)
    return U[:, s > 1e-12 * max(1.0, s.max())]


def normal_flow_residual(P: LatticePolytope, z, step: float = DEFAULT_STEP) -> float:
    """``max_v |v^T M v| / trace`` over an orthonormal basis of the cone span.

    The normalising trace is that of ``M`` itself, except on vertex flow-outs
    where ``M`` vanishes and the Fubini-Study reference is used.

    Raises
    ------
    ValueError
        If ``z`` lies in the allowed region.
    """
    psi = psi_density(P, z, step=step)
    if psi.region.kind == ALLOWED:
        raise ValueError("normal_flow_residual needs a forbidden point")
    nd = solve_normal_data(P, z)
    V = _cone_span(nd.face)
    M = psi.matrix
    denom = float(np.trace(M)) if nd.face.dim > 0 else float(np.trace(psi.reference))
    return float(max(abs(v @ M @ v) for v in V.T) / denom)


# ---------------------------------------------------------------------------
# volume identities
# ---------------------------------------------------------------------------

def _simplex_rule(dim: int, order: int):
    """Collapsed (Duffy) Gauss-Legendre rule on the unit simplex of dimension ``dim``."""
    x, w = roots_legendre(order)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    if dim == 1:
        return x[:, None], w
    if dim == 2:
        a, b = np.meshgrid(x, x, indexing="ij")
        wa, wb = np.meshgrid(w, w, indexing="ij")
        pts = np.stack([a.ravel(), (b * (1 - a)).ravel()], axis=1)
        return pts, (wa * wb * (1 - a)).ravel()
    if dim == 3:
        a, b, c = np.meshgrid(x, x, x, indexing="ij")
        wa, wb, wc = np.meshgrid(w, w, w, indexing="ij")
        pts = np.stack([a.ravel(), (b * (1 - a)).ravel(), (c * (1 - a) * (1 - b)).ravel()], axis=1)
        return pts, (wa * wb * wc * (1 - a) ** 2 * (1 - b)).ravel()
    raise ValueError("dimension must be 1..3")


def bk_volume_check(P: LatticePolytope, grid_resolution: int = 6,
                    step: float = DEFAULT_STEP) -> tuple[float, Fraction]:
    """``int psi^m`` over the torus against ``m! Vol(P)``.

    Integrating out the angles gives ``int psi^m = m! 2^{-m} int det H d rho``
    with ``H = Hess_rho(u_inf)``; ``H`` is singular off the allowed region, so
    only the allowed region contributes.  The integral is pulled back to ``P``
    through ``x = p mu(rho)`` and computed with a Gauss rule on a
    triangulation of ``P``; ``det H`` comes from the finite-difference matrix.

    Parameters
    ----------
    P : LatticePolytope
        Full-dimensional.
    grid_resolution : int
        Gauss points per direction on each simplex.

    Returns
    -------
    numeric : float
    exact : Fraction
        ``m! Vol(P)``.
    """
    if P.dim != P.m:
        raise ValueError("bk_volume_check needs a full-dimensional polytope")
    m, p = P.m, P.p
    exact = factorial(m) * P.volume
    ref_pts, ref_w = _simplex_rule(m, grid_resolution)
    total = 0.0
    for simplex in triangulation(P):
        V = np.array([[float(c) for c in v] for v in simplex])
        A = (V[1:] - V[0]).T
        jac = abs(np.linalg.det(A))
        for r, wt in zip(ref_pts, ref_w):
            x = V[0] + A @ r
            rho = 0.5 * (np.log(x) - np.log(p - x.sum()))
            psi = psi_density(P, TorusPoint.from_rho(rho), step=step)
            H = psi.matrix * 8 * pi
            mu = x / p
            # d(p mu)/d rho = 2 p (diag mu - mu mu^T)
            J = 2 * p * (np.diag(mu) - np.outer(mu, mu))
            dens = factorial(m) * 2.0**-m * np.linalg.det(H) / abs(np.linalg.det(J))
            total += wt * jac * dens
    return total, exact


def box_pushforward_volume(lower, upper) -> float:
    """Fubini-Study volume ``int omega^m / m!`` of ``mu^{-1}(box)`` for a box in the open simplex.

    Integrates ``2^{-m} det Hess_rho log(1 + sum e^{2 rho})`` over the preimage
    in ``rho`` with nested quadrature; the result should equal the Euclidean
    volume of the box.
    """
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    m = lo.size
    if np.any(lo <= 0) or np.any(hi <= lo) or hi.sum() >= 1:
        raise ValueError("box must lie in the open simplex")
    if m == 1:
        r0, r1 = 0.5 * np.log(lo[0] / (1 - lo[0])), 0.5 * np.log(hi[0] / (1 - hi[0]))
        f = lambda r: 2.0 * float(np.prod(_mu_det(np.array([r]))))
        return integrate.quad(f, r0, r1, epsabs=1e-13, epsrel=1e-11)[0]
    if m == 2:
        def inner_bounds(r2):
            s2 = np.exp(2 * r2)
            a1, b1 = lo[0], hi[0]
            a2, b2 = lo[1], hi[1]
            # mu_1 in [a1, b1] and mu_2 in [a2, b2] as bounds on s1
            s_lo = max(a1 * (1 + s2) / (1 - a1), s2 * (1 - b2) / b2 - 1)
            s_hi = min(b1 * (1 + s2) / (1 - b1), s2 * (1 - a2) / a2 - 1)
            return s_lo, s_hi

        def outer(r2):
            s_lo, s_hi = inner_bounds(r2)
            if s_hi <= s_lo or s_hi <= 0:
                return 0.0
            r_lo = 0.5 * np.log(max(s_lo, 1e-300))
            r_hi = 0.5 * np.log(s_hi)
            g = lambda r1: 4.0 * float(_mu_det(np.array([r1, r2])))
            return integrate.quad(g, r_lo, r_hi, epsabs=1e-13, epsrel=1e-11)[0]

        r2_min = 0.5 * np.log(lo[1] / (1 - lo[0] - lo[1]))
        r2_max = 0.5 * np.log(hi[1] / (1 - hi[0] - hi[1]))
        return integrate.quad(outer, r2_min, r2_max, epsabs=1e-12, epsrel=1e-10, limit=200)[0]
    raise ValueError("box check supports m = 1, 2")


def _mu_det(rho: np.ndarray) -> float:
    """``prod_{j=0}^m mu_j``, the determinant of ``diag mu - mu mu^T``."""
    mu = moment_map(TorusPoint.from_rho(rho))
    return float(np.prod(mu) * (1 - mu.sum()))
