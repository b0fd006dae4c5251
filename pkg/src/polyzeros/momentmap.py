"""Moment map, point decay objective and the normal-data solver.

For a torus point ``z = exp(rho + i theta)`` the decay function is

    b_P(z) = min_{x in P} b(x; z),
    b(x; z) = sum_{j=0}^m x_j log(x_j / p) - 2<x, rho> + p log(1 + sum_j e^{2 rho_j}),

with ``x_0 = p - sum_j x_j``.  The minimiser is ``q(z)`` and
``tau_z = -grad_x b(q; z)`` lies in the normal cone of ``P`` at ``q``.  The
objective is strictly convex on ``p * Sigma`` so the minimiser is unique and
can be found face by face: the global minimiser over ``P`` is the minimiser
over ``aff(F) ∩ p Sigma`` for the face ``F`` containing it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.special import roots_legendre, xlogy

from .polytope import (BOUNDARY, INTERIOR, OUTSIDE, Face, LatticePolytope,
                       PolytopeError, normal_cone_contains)

__all__ = [
    "TorusPoint",
    "NormalData",
    "Region",
    "SolverError",
    "moment_map",
    "decay_objective",
    "decay_gradient",
    "decay_hessian",
    "solve_normal_data",
    "decay_function",
    "classify_region",
    "b_action_integral",
    "ALLOWED",
    "FORBIDDEN",
    "TRANSITION",
]

logger = logging.getLogger(__name__)

ALLOWED = "allowed"
FORBIDDEN = "forbidden"
TRANSITION = "transition"

TRANSITION_TOL = 1e-7
_CLAMP = 1e-12


class SolverError(RuntimeError):
    """The normal-data solver failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class TorusPoint:
    """A point of ``(C*)^m`` in log coordinates ``log z_j = rho_j + i theta_j``."""

    rho: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        rho = np.atleast_1d(np.asarray(self.rho, dtype=float))
        theta = np.zeros_like(rho) if self.theta is None else \
            np.atleast_1d(np.asarray(self.theta, dtype=float))
        if rho.shape != theta.shape or rho.ndim != 1:
            raise ValueError("rho and theta must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(theta))):
            raise ValueError("torus point coordinates must be finite")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def from_complex(cls, z) -> "TorusPoint":
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if np.any(z == 0):
            raise ValueError("torus points have non-zero coordinates")
        return cls(np.log(np.abs(z)), np.angle(z))

    @classmethod
    def from_abs(cls, r) -> "TorusPoint":
        """Point with moduli ``r`` and zero arguments."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        return cls(np.log(r), np.zeros_like(r))

    @classmethod
    def from_rho(cls, rho) -> "TorusPoint":
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        return cls(rho, np.zeros_like(rho))

    @property
    def m(self) -> int:
        return self.rho.size

    @property
    def z(self) -> np.ndarray:
        return np.exp(self.rho + 1j * self.theta)

    def scaled(self, tau) -> "TorusPoint":
        """``exp(-tau/2) . z``."""
        return TorusPoint(self.rho - 0.5 * np.asarray(tau, dtype=float), self.theta)


def _as_point(z) -> TorusPoint:
    if isinstance(z, TorusPoint):
        return z
    z = np.atleast_1d(np.asarray(z))
    if np.iscomplexobj(z) or np.all(z > 0):
        return TorusPoint.from_complex(z)
    raise ValueError("pass a TorusPoint or non-zero complex coordinates")


def _log_fs(rho: np.ndarray) -> float:
    """``log(1 + ||z||^2)`` from log moduli without overflow."""
    t = 2.0 * np.asarray(rho, dtype=float)
    top = max(0.0, float(t.max()))
    return top + float(np.log(np.exp(-top) + np.exp(t - top).sum()))


def moment_map(z) -> np.ndarray:
    """``mu(z)_j = |z_j|^2 / (1 + ||z||^2)``, evaluated through shifted exponentials."""
    rho = _as_point(z).rho
    return np.exp(2.0 * rho - _log_fs(rho))


# ---------------------------------------------------------------------------
# point decay objective
# ---------------------------------------------------------------------------

def _homog(x: np.ndarray, p: float) -> np.ndarray:
    return np.concatenate([[p - x.sum()], x])


def _check_in_simplex(x: np.ndarray, p: float, tol: float = 1e-12):
    if np.any(x < -tol) or x.sum() > p + tol:
        raise ValueError(f"x = {x} lies outside {p}*Sigma")


def decay_objective(x, z, p) -> float:
    """``b_{x}(z) = sum_{j=0}^m x_j log(x_j/p) - log(|z|^{2x} / (1+||z||^2)^p)``.

    Uses ``0 log 0 = 0`` on the boundary of ``p * Sigma``.
    """
    x = np.asarray(x, dtype=float)
    pt = _as_point(z)
    _check_in_simplex(x, p)
    xh = np.clip(_homog(x, p), 0.0, None)
    entropy = float(np.sum(xlogy(xh, xh / p)))
    return entropy - 2.0 * float(x @ pt.rho) + p * _log_fs(pt.rho)


def decay_gradient(x, z, p) -> np.ndarray:
    """Gradient ``-tau(x)`` with ``tau_j(x) = 2 rho_j + log x_0 - log x_j``."""
    x = np.asarray(x, dtype=float)
    rho = _as_point(z).rho
    x0 = p - x.sum()
    return np.log(x) - np.log(x0) - 2.0 * rho


def decay_hessian(x, p) -> np.ndarray:
    """Hessian ``1/x_0 + delta_jk / x_j``."""
    x = np.asarray(x, dtype=float)
    x0 = p - x.sum()
    return np.full((x.size, x.size), 1.0 / x0) + np.diag(1.0 / x)


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalData:
    """Solution of the normal-data problem at one torus point.

    Attributes
    ----------
    q : ndarray
        Minimiser of the decay objective over ``P`` (coordinates of ``p Sigma``).
    tau : ndarray
        ``tau_z = -grad b(q)``; lies in the normal cone of ``P`` at ``q``.
    b : float
        ``b_P(z) >= 0``.
    face : Face
        Face of ``P`` containing ``q``.
    transition_flag : bool
        ``q`` or ``tau`` lies within tolerance of the boundary of its face or cone.
    residual : float
        KKT residual of the returned pair.
    """

    q: np.ndarray
    tau: np.ndarray
    b: float
    face: Face
    transition_flag: bool
    residual: float

    @property
    def face_id(self) -> int:
        return self.face.id


def _newton_on_face(P: LatticePolytope, face: Face, rho: np.ndarray,
                    tol: float = 1e-14, max_iter: int = 100):
    """Minimise ``b(.; z)`` over ``aff(face) ∩ p Sigma``.

    Damped Newton in an orthonormal parametrisation of the affine hull; steps
    are cut back so that the iterate stays in the open simplex.
    """
    p = float(P.p)
    x_ref, B = _face_frame(P, face)
    if B is None:
        return x_ref.copy(), 0
    if B.shape[1] == P.m:
        # unconstrained minimiser over p Sigma is p mu(z)
        return P.p * np.exp(2.0 * rho - _log_fs(rho)), 0
    # start from the projection of p mu(z) onto the affine hull when it is admissible
    y = P.p * np.exp(2.0 * rho - _log_fs(rho))
    x = x_ref + B @ (B.T @ (y - x_ref))
    if not np.all(_homog(x, p) > 1e-9 * p):
        x = x_ref.copy()
    for it in range(max_iter):
        x0 = p - x.sum()
        g = B.T @ (np.log(x) - np.log(x0) - 2.0 * rho)
        H = B.T @ (np.full((x.size, x.size), 1.0 / x0) + np.diag(1.0 / x)) @ B
        step = -np.linalg.solve(H, g)
        dx = B @ step
        decrement = float(-g @ step)
        if decrement < tol:
            xn = x + dx
            return (xn if np.all(_homog(xn, p) > 0) else x), it + 1
        # keep x_j > 0 and x_0 > 0
        t = 1.0
        xh = _homog(x, p)
        dh = np.concatenate([[-dx.sum()], dx])
        neg = dh < 0
        if np.any(neg):
            t = min(1.0, 0.99 * float(np.min(-xh[neg] / dh[neg])))
        f0 = _entropy_part(x, rho, p)
        while t > 1e-16:
            xn = x + t * dx
            if np.all(_homog(xn, p) > _CLAMP) and \
                    _entropy_part(xn, rho, p) <= f0 - 0.25 * t * decrement + 1e-15 * abs(f0):
                break
            t *= 0.5
        x = x + t * dx
    raise SolverError(f"Newton on face {face.id} did not converge", residual=decrement)


def _entropy_part(x, rho, p):
    """Decay objective without the ``x``-independent term ``p log(1 + ||z||^2)``."""
    xh = _homog(x, p)
    return float(np.sum(xlogy(xh, xh / p))) - 2.0 * float(x @ rho)


def _obj_fast(x, rho, p):
    return _entropy_part(x, rho, p) + p * _log_fs(rho)


@lru_cache(maxsize=256)
def _frames(P: LatticePolytope) -> dict:
    out = {}
    for f in P.faces:
        x = np.array([float(c) for c in f.relative_interior_point])
        if f.dim == 0:
            out[f.id] = (x, None)
        else:
            B, _ = np.linalg.qr(np.array(f.tangent_basis, dtype=float).T)
            out[f.id] = (x, B)
    return out


def _face_frame(P: LatticePolytope, face: Face):
    return _frames(P)[face.id]


@lru_cache(maxsize=256)
def _usable_faces(P: LatticePolytope) -> tuple:
    """Faces meeting the open simplex, largest first."""
    faces = [f for f in P.faces if _in_sigma_interior(f, P.p)]
    return tuple(sorted(faces, key=lambda f: -f.dim))


def _in_sigma_interior(face: Face, p: int) -> bool:
    c = face.relative_interior_point
    return all(v > 0 for v in c) and sum(c) < p


def _slack_band(P: LatticePolytope, x: np.ndarray) -> np.ndarray:
    if not P.halfspaces:
        return np.zeros(0)
    return (P.normals @ x + P.offsets) / np.linalg.norm(P.normals, axis=1)


def _transition(P: LatticePolytope, face: Face, q: np.ndarray, tau: np.ndarray,
                tol: float) -> bool:
    # q near the relative boundary of its face
    slack = _slack_band(P, q)
    inactive = [j for j in range(len(P.halfspaces)) if j not in face.active_set]
    if inactive and np.min(slack[inactive]) <= tol * max(1.0, P.p):
        return True
    if face.normal_cone_generators:
        scale = max(float(np.linalg.norm(tau)), 1e-300)
        # cone coefficients of tau relative to |tau|; tau = 0 is the apex
        if np.linalg.norm(tau) <= tol:
            return True
        return normal_cone_contains(face, tau / scale, tol=tol) != INTERIOR
    return False


def solve_normal_data(P: LatticePolytope, z, tol: float = TRANSITION_TOL) -> NormalData:
    """Compute ``(q(z), tau_z, b_P(z))`` and the face of ``q(z)``.

    Each face ``F`` of ``P`` whose relative interior meets the open simplex
    yields a candidate, the minimiser of ``b(.; z)`` over ``aff(F)``; the
    candidate that lies in ``P`` with the smallest objective value is the
    global minimiser.

    Parameters
    ----------
    P : LatticePolytope
        Must not be contained in the boundary of ``p * Sigma``.
    z : TorusPoint or complex array
    tol : float
        Width of the band used for the transition flag.

    Raises
    ------
    PolytopeError
        If ``P`` is contained in the boundary of ``p * Sigma``.
    SolverError
        If no feasible candidate is found.
    """
    pt = _as_point(z)
    if pt.m != P.m:
        raise ValueError("dimension mismatch between P and z")
    rho = pt.rho
    p = P.p
    usable = _usable_faces(P)
    if not usable:
        raise PolytopeError("P is contained in the boundary of p*Sigma")

    if P.m == 1 and P.dim == 1:
        q, face = _solve_interval(P, rho)
    else:
        best = None
        for face in usable:
            x, _ = _newton_on_face(P, face, rho)
            slack = _slack_band(P, x)
            if slack.size and np.min(slack) < -1e-9 * max(1.0, p):
                continue
            if P.equations:
                eq_res = max(abs(float(np.dot(a, x)) + c) for a, c in P.equations)
                if eq_res > 1e-9 * max(1.0, p):
                    continue
            val = _obj_fast(x, rho, p)
            if best is None or val < best[0] - 1e-13 * max(1.0, abs(val)):
                best = (val, x, face)
            elif abs(val - best[0]) <= 1e-13 * max(1.0, abs(val)) and face.dim < best[2].dim:
                best = (val, x, face)
            if face.dim == P.dim and best[2] is face:
                # a feasible minimiser over the whole affine hull is global
                break
        if best is None:
            raise SolverError("no feasible candidate on any face")
        _, q, face = best

    tau = -(np.log(q) - np.log(p - q.sum()) - 2.0 * rho)
    b = max(_obj_fast(q, rho, p), 0.0)
    if face.dim == P.dim:
        # interior of P: tau lies in the lineality space (zero when P is full-dimensional)
        if not face.lineality:
            tau = np.zeros_like(tau)
    residual = _kkt_residual(P, face, tau, q, rho, p)
    if residual > 1e-6:
        raise SolverError(f"KKT residual {residual:.3e} too large", residual=residual)
    flag = _transition(P, face, q, tau, tol)
    return NormalData(q=q, tau=tau, b=b, face=face, transition_flag=flag, residual=residual)


def _solve_interval(P: LatticePolytope, rho: np.ndarray):
    """Closed form for ``m = 1``: ``q = clip(p mu(z), a, b)``."""
    a, b = min(v[0] for v in P.vertices), max(v[0] for v in P.vertices)
    x = P.p * float(np.exp(2 * rho[0] - _log_fs(rho)))
    q = np.array([min(max(x, a), b)], dtype=float)
    if x <= a:
        face = P.face([j for j, (u, lam) in enumerate(P.halfspaces) if u[0] * a + lam == 0])
    elif x >= b:
        face = P.face([j for j, (u, lam) in enumerate(P.halfspaces) if u[0] * b + lam == 0])
    else:
        face = P.interior_face
    if not _in_sigma_interior(face, P.p):
        # the endpoint is on the boundary of p*Sigma; the interior is the only usable face
        face = P.interior_face
    return q, face


def _kkt_residual(P: LatticePolytope, face: Face, tau, q, rho, p) -> float:
    """Tangential stationarity: ``tau`` must be orthogonal to ``T_F``."""
    grad = np.log(q) - np.log(p - q.sum()) - 2.0 * rho
    if face.dim == 0:
        return 0.0
    B = _face_frame(P, face)[1]
    return float(np.linalg.norm(B.T @ grad)) + float(np.linalg.norm(B.T @ tau))


def decay_function(P: LatticePolytope, z) -> float:
    """``b_P(z)``."""
    return solve_normal_data(P, z).b


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Region:
    """Region label: allowed, forbidden flow-out of a face, or transition."""

    kind: str
    face_id: Optional[int] = None

    def __str__(self) -> str:
        if self.kind == FORBIDDEN:
            return f"forbidden({self.face_id})"
        return self.kind


def classify_region(P: LatticePolytope, z, tol: float = TRANSITION_TOL,
                    data: Optional[NormalData] = None) -> Region:
    """Allowed iff ``q`` is in the interior of ``P``; forbidden(F) off the transition band."""
    nd = solve_normal_data(P, z, tol=tol) if data is None else data
    if nd.transition_flag:
        return Region(TRANSITION)
    if nd.face.dim == P.dim and P.dim == P.m:
        return Region(ALLOWED)
    return Region(FORBIDDEN, nd.face.id)


def b_action_integral(P: LatticePolytope, z, steps: int = 32) -> float:
    """``int_0^{tau_z} [-q(e^{-s/2} z) + p mu(e^{-s/2} z)] . ds`` along ``s = t tau_z``.

    Gauss-Legendre on ``t in [0, 1]`` with ``steps`` nodes; ``q`` is recomputed
    with the solver at each node.
    """
    if steps < 16:
        raise ValueError("steps must be >= 16")
    pt = _as_point(z)
    nd = solve_normal_data(P, pt)
    tau = nd.tau
    if not np.any(tau):
        return 0.0
    nodes, weights = roots_legendre(steps)
    t = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    total = 0.0
    for ti, wi in zip(t, w):
        zt = pt.scaled(ti * tau)
        qt = solve_normal_data(P, zt).q
        total += wi * float((-qt + P.p * moment_map(zt)) @ tau)
    return total
