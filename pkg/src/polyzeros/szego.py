"""Diagonal of the conditional Szegő kernel and the potentials built from it.

For polynomials supported in ``NP`` with the Fubini-Study inner product of
degree ``Np``, the kernel diagonal in the affine chart is

    Pi(z, z) = ((Np+m)! / (Np)!) * sum_{alpha in NP} binom(Np, alpha) |z|^{2 alpha}
               / (1 + ||z||^2)^{Np}.

Everything is evaluated in log space: the summands span hundreds of orders of
magnitude already at ``N ~ 100``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, lgamma, log
from typing import Iterable

import numpy as np
from scipy.special import gammaln, logsumexp

from .momentmap import TorusPoint, _as_point, _log_fs, solve_normal_data
from .polytope import LatticePolytope, lattice_points

__all__ = [
    "MAX_POINTS",
    "EnumerationGuardError",
    "SzegoEval",
    "log_szego_diag",
    "mass_density",
    "szego_eval",
    "u_N",
    "u_inf",
    "convergence_profile",
]

MAX_POINTS = 10**7


class EnumerationGuardError(ValueError):
    """The dilated simplex holds more lattice points than ``MAX_POINTS``."""


def _check_guard(P: LatticePolytope, N: int):
    if N < 1:
        raise ValueError("N must be >= 1")
    total = comb(N * P.p + P.m, P.m)
    if total > MAX_POINTS:
        raise EnumerationGuardError(
            f"#(N p Sigma) = {total} exceeds the enumeration guard {MAX_POINTS}")


@lru_cache(maxsize=64)
def _log_weights(P: LatticePolytope, N: int):
    """Lattice points of ``NP`` and their log multinomial coefficients."""
    _check_guard(P, N)
    pts = np.asarray(lattice_points(P, N), dtype=np.int64).reshape(-1, P.m)
    d = N * P.p
    a0 = d - pts.sum(axis=1)
    logw = gammaln(d + 1.0) - gammaln(a0 + 1.0) - gammaln(pts + 1.0).sum(axis=1)
    pts.setflags(write=False)
    logw.setflags(write=False)
    return pts, logw


def _log_prefactor(d: int, m: int) -> float:
    # log((d+m)!/d!) = sum_{j=1}^m log(d+j)
    return float(sum(log(d + j) for j in range(1, m + 1)))


def _log_sum(P: LatticePolytope, N: int, rho: np.ndarray) -> float:
    """``log sum_{alpha in NP} binom(Np, alpha) e^{2 <alpha, rho>}``."""
    pts, logw = _log_weights(P, N)
    return float(logsumexp(logw + 2.0 * (pts @ rho)))


def log_szego_diag(P: LatticePolytope, N: int, z) -> float:
    """``log Pi_{|NP}(z, z)``.

    Parameters
    ----------
    P : LatticePolytope
    N : int
        Dilation factor, ``N >= 1``.
    z : TorusPoint or complex array
        Only the moduli enter.

    Raises
    ------
    EnumerationGuardError
        If ``#(N p Sigma)`` exceeds ``MAX_POINTS``.
    """
    rho = _as_point(z).rho
    d = N * P.p
    return _log_prefactor(d, P.m) + _log_sum(P, N, rho) - d * _log_fs(rho)


def _log_count(P: LatticePolytope, N: int) -> float:
    pts, _ = _log_weights(P, N)
    return log(len(pts))


def mass_density(P: LatticePolytope, N: int, z) -> float:
    """Expected Fubini-Study mass ``Pi_{|NP}(z, z) / #(NP)``."""
    return float(np.exp(log_szego_diag(P, N, z) - _log_count(P, N)))


def u_N(P: LatticePolytope, N: int, z) -> float:
    """``(1/N) log sum_{alpha in NP} binom(Np, alpha) |z|^{2 alpha}``.

    This is the potential whose ``dd^c`` gives the expected zero current of
    the ensemble; it differs from ``(1/N) log Pi + p log(1 + ||z||^2)`` by the
    constant ``(1/N) log((Np+m)!/(Np)!)``.
    """
    return _log_sum(P, N, _as_point(z).rho) / N


def u_inf(P: LatticePolytope, z) -> float:
    """``p log(1 + ||z||^2) - b_P(z)`` with ``b_P`` from the normal-data solver."""
    pt = _as_point(z)
    return P.p * _log_fs(pt.rho) - solve_normal_data(P, pt).b


@dataclass(frozen=True)
class SzegoEval:
    """Kernel diagonal and potentials at one point.

    ``u_N_kernel = log_pi / N + p log(1 + ||z||^2)`` keeps the kernel's
    dimensional prefactor, ``u_N`` drops it.
    """

    N: int
    log_pi: float
    log_count: float
    u_N: float
    u_N_kernel: float
    u_inf: float

    @property
    def mass(self) -> float:
        return float(np.exp(self.log_pi - self.log_count))

    @property
    def residual(self) -> float:
        return abs(self.u_N - self.u_inf)


def szego_eval(P: LatticePolytope, N: int, z, u_infinity: float | None = None) -> SzegoEval:
    pt = _as_point(z)
    lfs = _log_fs(pt.rho)
    log_pi = log_szego_diag(P, N, pt)
    uinf = u_inf(P, pt) if u_infinity is None else u_infinity
    return SzegoEval(
        N=N,
        log_pi=log_pi,
        log_count=_log_count(P, N),
        u_N=_log_sum(P, N, pt.rho) / N,
        u_N_kernel=log_pi / N + P.p * lfs,
        u_inf=uinf,
    )


def convergence_profile(P: LatticePolytope, z, N_list: Iterable[int]) -> list[tuple[int, float]]:
    """``(N, |u_N(z) - u_inf(z)|)`` for each ``N``."""
    pt = _as_point(z)
    uinf = u_inf(P, pt)
    return [(int(N), abs(u_N(P, int(N), pt) - uinf)) for N in N_list]
