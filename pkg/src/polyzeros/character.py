"""Polytope characters and the one-dimensional Todd formula.

The character of ``NP`` is the exponential sum

    chi_{NP}(e^w) = sum_{alpha in NP} e^{<w, alpha>}.

In one dimension, with ``NP = [Na, Nb]``, it equals the Todd operator applied
to the integral of ``e^{wx}`` over the interval with both endpoints moved:

    chi = Todd(d/dh1) Todd(d/dh2) int_{Na-h1}^{Nb+h2} e^{wx} dx |_{h=0}
        = (T(w) e^{wNb} - T(-w) e^{wNa}) / w,

``T(z) = z / (1 - e^{-z}) = sum_k B_k^+ z^k / k!``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Iterable

import numpy as np
from scipy.special import logsumexp

from .polytope import LatticePolytope, from_vertices
from .szego import _check_guard, _log_weights

__all__ = [
    "EXACT_SUM",
    "TODD_1D",
    "CharacterEval",
    "bernoulli_plus",
    "todd_coefficients",
    "character_exact",
    "character_1d_exact",
    "character_1d_todd",
    "support_function_limit",
]

EXACT_SUM = "exact_sum"
TODD_1D = "todd_1d"

MAX_ORDER = 20


@lru_cache(maxsize=None)
def bernoulli_plus(n: int) -> Fraction:
    """Bernoulli number ``B_n`` with the convention ``B_1 = +1/2``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    B = [Fraction(1)]
    for k in range(1, n + 1):
        B.append(-sum(comb(k + 1, j) * B[j] for j in range(k)) / (k + 1))
    out = B[n]
    return -out if n == 1 else out


def todd_coefficients(order: int) -> list[Fraction]:
    """Exact Taylor coefficients ``B_k^+ / k!`` of ``T`` for ``k = 0..order``."""
    return [bernoulli_plus(k) / factorial(k) for k in range(order + 1)]


@dataclass(frozen=True)
class CharacterEval:
    """Value of a character.

    For large ``N`` the value may overflow a float, so it is also kept as
    ``log_abs`` and ``phase`` with ``value = exp(log_abs + i phase)``.
    ``direct`` holds the unshifted sum when it is representable, so that
    ``w = 0`` returns the lattice point count exactly.
    """

    N: int
    w: np.ndarray
    log_abs: float
    phase: float
    method: str
    direct: complex | None = None

    @property
    def value(self) -> complex:
        if self.direct is not None:
            return self.direct
        if self.log_abs == -np.inf:
            return 0j
        return complex(np.exp(self.log_abs) * np.exp(1j * self.phase))


def character_exact(P: LatticePolytope, N: int, w) -> CharacterEval:
    """Direct sum over the lattice points of ``NP``.

    The sum is shifted by the largest real exponent before exponentiating,
    which for real ``w`` is a plain log-sum-exp.
    """
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    if w.shape != (P.m,):
        raise ValueError("w has the wrong dimension")
    pts, _ = _log_weights(P, N)
    expo = pts @ w
    shift = float(np.max(expo.real))
    s = complex(np.sum(np.exp(expo - shift)))
    # exact zero when the terms cancel to rounding
    scale = float(np.sum(np.abs(np.exp(expo - shift))))
    if abs(s) <= 1e-14 * scale:
        return CharacterEval(N, w, -np.inf, 0.0, EXACT_SUM)
    direct = None
    if shift == 0.0:
        direct = s
    elif abs(shift) < 600.0:
        direct = complex(np.sum(np.exp(expo)))
    return CharacterEval(N, w, shift + float(np.log(abs(s))), float(np.angle(s)), EXACT_SUM,
                         direct)


def character_1d_exact(a: int, b: int, N: int, w: complex) -> complex:
    """``sum_{k=Na}^{Nb} e^{wk}``."""
    k = np.arange(N * a, N * b + 1)
    return complex(np.sum(np.exp(complex(w) * k)))


def _series_coeffs(c: Iterable[Fraction], shift: float, sign: int, terms: int) -> np.ndarray:
    """Taylor coefficients of ``T_n(sign w) e^{w shift}`` up to ``w^terms``."""
    c = [float(v) * sign**k for k, v in enumerate(c)]
    e = [shift**j / factorial(j) for j in range(terms + 1)]
    return np.convolve(c, e)[: terms + 1]


def character_1d_todd(a: int, b: int, N: int, w: complex, order: int = 12) -> complex:
    """Truncated Todd formula for the character of ``N[a, b]``.

    Parameters
    ----------
    a, b : int
        Interval endpoints, ``a <= b``.
    N : int
    w : complex
        ``|Im w| < 2 pi``.
    order : int
        Highest power of ``z`` kept in the Todd series, ``0 <= order <= 20``.
        ``order = 0`` gives the plain integral of ``e^{wx}``.

    Notes
    -----
    Near ``w = 0`` the two terms cancel; there the numerator is expanded as a
    power series and divided by ``w`` term by term, which at ``w = 0`` gives
    ``N(b - a) + 1`` for every ``order >= 1``.
    """
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in [0, {MAX_ORDER}]")
    if a > b:
        raise ValueError("a must not exceed b")
    w = complex(w)
    if abs(w.imag) >= 2 * np.pi:
        raise ValueError("|Im w| must be below 2 pi")
    A, B = N * a, N * b
    coeffs = todd_coefficients(order)
    reach = abs(w) * max(1.0, abs(A), abs(B))
    if reach < 0.5:
        terms = 40
        num = _series_coeffs(coeffs, B, 1, terms) - _series_coeffs(coeffs, A, -1, terms)
        powers = w ** np.arange(terms)
        return complex(np.sum(num[1:] * powers))
    T_plus = sum(float(c) * w**k for k, c in enumerate(coeffs))
    T_minus = sum(float(c) * (-w) ** k for k, c in enumerate(coeffs))
    return (T_plus * np.exp(w * B) - T_minus * np.exp(w * A)) / w


def support_function_limit(P: LatticePolytope, w_real, N_list: Iterable[int]) -> list[tuple[int, float]]:
    """``(N, |(1/N) log chi_{NP}(e^w) - max_v <w, v>|)`` for real ``w``."""
    w = np.atleast_1d(np.asarray(w_real, dtype=float))
    h = float(np.max(P.vertex_array @ w))
    out = []
    for N in N_list:
        ev = character_exact(P, int(N), w)
        out.append((int(N), abs(ev.log_abs / N - h)))
    return out
