"""Gaussian polynomial ensembles with prescribed Newton polytope.

A draw is ``f = sum_{alpha in NP} c_alpha chi_alpha / ||chi_alpha||`` with
i.i.d. standard complex Gaussian ``c_alpha`` and the Fubini-Study norms

    ||chi_alpha||^2 = (Np - |alpha|)! alpha_1! ... alpha_m! / (Np + m)!.

For ``m = 1`` the zeros are computed and compared with the limit law and with
the exact finite-``N`` expectation.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
from scipy.linalg import companion
from scipy.special import gammaln, logsumexp

from .polytope import LatticePolytope, PolytopeError, from_vertices, lattice_points

__all__ = [
    "DEGENERATE_TOL",
    "DegenerateDrawError",
    "SparsePolynomial",
    "ZeroSample",
    "ZeroStats",
    "sample_polynomial",
    "univariate_roots",
    "expected_zero_cdf",
    "empirical_zero_stats",
    "facet_polytope",
    "tentacle_allowed_fraction",
]

logger = logging.getLogger(__name__)

DEGENERATE_TOL = 1e-12
RESIDUAL_TOL = 1e-8


class DegenerateDrawError(ValueError):
    """An endpoint coefficient vanishes to within ``DEGENERATE_TOL``."""


def _log_norms(exps: np.ndarray, d: int) -> np.ndarray:
    """``log ||chi_alpha||`` for degree ``d``."""
    m = exps.shape[1]
    a0 = d - exps.sum(axis=1)
    return 0.5 * (gammaln(a0 + 1.0) + gammaln(exps + 1.0).sum(axis=1) - gammaln(d + m + 1.0))


@dataclass(frozen=True)
class SparsePolynomial:
    """One draw from the ensemble of polynomials supported in ``NP``.

    Attributes
    ----------
    P : LatticePolytope
    N : int
    exponents : ndarray of int, shape (K, m)
        Lattice points of ``NP`` in lexicographic order.
    coeffs : ndarray of complex, shape (K,)
        Gaussian coefficients ``c_alpha`` in the orthonormal basis.
    seed : int or None
    sample_index : int
    """

    P: LatticePolytope
    N: int
    exponents: np.ndarray
    coeffs: np.ndarray
    seed: Optional[int] = None
    sample_index: int = 0

    @property
    def coeff_map(self) -> dict:
        return {tuple(int(v) for v in a): complex(c) for a, c in zip(self.exponents, self.coeffs)}

    @property
    def log_norms(self) -> np.ndarray:
        return _log_norms(self.exponents, self.N * self.P.p)

    def monomial_coefficients(self) -> np.ndarray:
        """Coefficients ``c_alpha / ||chi_alpha||`` of the monomials ``z^alpha``."""
        return self.coeffs * np.exp(-self.log_norms)

    @classmethod
    def from_monomials(cls, P: LatticePolytope, N: int, monomials: Mapping) -> "SparsePolynomial":
        """Build from monomial coefficients ``{alpha: a_alpha}``; missing points get 0."""
        exps = np.asarray(lattice_points(P, N), dtype=np.int64).reshape(-1, P.m)
        index = {tuple(int(v) for v in a): i for i, a in enumerate(exps)}
        a = np.zeros(len(exps), dtype=complex)
        for alpha, val in monomials.items():
            key = tuple(int(v) for v in np.atleast_1d(alpha))
            if key not in index:
                raise ValueError(f"exponent {key} is outside NP")
            a[index[key]] = val
        coeffs = a * np.exp(_log_norms(exps, N * P.p))
        return cls(P, N, exps, coeffs)

    def __call__(self, z) -> complex:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        mono = np.prod(z[None, :] ** self.exponents, axis=1)
        return complex(np.sum(self.monomial_coefficients() * mono))


def _generator(seed: int, sample_index: int, attempt: int = 0) -> np.random.Generator:
    # keyed by (seed, sample, attempt) so samples do not depend on evaluation order
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(sample_index), int(attempt)])))


def _interval(P: LatticePolytope) -> tuple[int, int]:
    xs = [v[0] for v in P.vertices]
    return min(xs), max(xs)


def _endpoints_ok(P: LatticePolytope, N: int, exps: np.ndarray, c: np.ndarray) -> bool:
    if P.m != 1:
        return True
    a, b = _interval(P)
    lo = c[exps[:, 0] == N * a]
    hi = c[exps[:, 0] == N * b]
    return bool(np.all(np.abs(lo) >= DEGENERATE_TOL) and np.all(np.abs(hi) >= DEGENERATE_TOL))


def sample_polynomial(P: LatticePolytope, N: int, seed: int, sample_index: int = 0,
                      max_attempts: int = 16) -> SparsePolynomial:
    """Draw ``f`` with support ``NP``.

    Real and imaginary parts of each ``c_alpha`` are independent centred normals
    with variance ``1/2``.  For ``m = 1`` a draw with a near-zero endpoint
    coefficient is redrawn from the next attempt key.
    """
    exps = np.asarray(lattice_points(P, N), dtype=np.int64).reshape(-1, P.m)
    for attempt in range(max_attempts):
        rng = _generator(seed, sample_index, attempt)
        c = (rng.standard_normal(len(exps)) + 1j * rng.standard_normal(len(exps))) * np.sqrt(0.5)
        if _endpoints_ok(P, N, exps, c):
            if attempt:
                logger.info("sample %d redrawn %d time(s)", sample_index, attempt)
            return SparsePolynomial(P, N, exps, c, seed, sample_index)
    raise DegenerateDrawError("could not draw a generic polynomial")  # pragma: no cover


@dataclass(frozen=True)
class ZeroSample:
    """Zeros of one univariate draw in ``C*``."""

    roots: np.ndarray
    N: int
    allowed_count: int
    forbidden_count: int
    residual: float


def _horner(coef: np.ndarray, z: np.ndarray):
    """Value, derivative and ``sum |a_j| |z|^j`` of ``sum_j coef[j] z^j``."""
    f = np.zeros_like(z)
    df = np.zeros_like(z)
    s = np.zeros(z.shape)
    az = np.abs(z)
    for a in coef[::-1]:
        df = df * z + f
        f = f * z + a
        s = s * az + abs(a)
    return f, df, s


def _allowed_mask(P: LatticePolytope, roots: np.ndarray) -> np.ndarray:
    """Allowed iff ``p mu(|z|)`` is interior to ``P``; endpoints on the boundary of ``[0, p]`` are open."""
    a, b = _interval(P)
    p = P.p
    x = p / (1.0 + np.abs(roots) ** -2)
    return ((x > a) | (a == 0)) & ((x < b) | (b == p))


def univariate_roots(f: SparsePolynomial) -> ZeroSample:
    """Zeros in ``C*`` of a univariate draw.

    The factor ``z^{Na}`` is removed, the remaining ``N(b - a)`` roots are the
    eigenvalues of the (LAPACK-balanced) companion matrix, and each is polished
    by one Newton step when that lowers the backward error.

    Raises
    ------
    DegenerateDrawError
        If an endpoint coefficient is below ``DEGENERATE_TOL``.
    """
    P, N = f.P, f.N
    if P.m != 1:
        raise ValueError("univariate_roots needs m = 1")
    a, b = _interval(P)
    if b == a:
        return ZeroSample(np.zeros(0, dtype=complex), N, 0, 0, 0.0)
    order = np.argsort(f.exponents[:, 0])
    coef = f.monomial_coefficients()[order]  # powers N a .. N b
    if abs(f.coeffs[order][0]) < DEGENERATE_TOL or abs(f.coeffs[order][-1]) < DEGENERATE_TOL:
        raise DegenerateDrawError("endpoint coefficient vanishes")
    # rescale so the extreme coefficients have unit modulus: z = lam w
    d = len(coef) - 1
    lam = np.exp((np.log(abs(coef[0])) - np.log(abs(coef[-1]))) / d)
    scaled = coef * lam ** np.arange(d + 1)
    scaled = scaled / scaled[-1]
    C = companion(scaled[::-1])
    w = np.linalg.eigvals(C)
    fw, dfw, sw = _horner(scaled, w)
    w_new = w - fw / dfw
    fn, _, sn = _horner(scaled, w_new)
    better = np.abs(fn) / sn < np.abs(fw) / sw
    w = np.where(better, w_new, w)
    res = np.where(better, np.abs(fn) / sn, np.abs(fw) / sw)
    residual = float(res.max())
    if residual > RESIDUAL_TOL:
        logger.warning("root backward error %.3e exceeds %.1e", residual, RESIDUAL_TOL)
    roots = lam * w
    allowed = _allowed_mask(P, roots)
    return ZeroSample(roots, N, int(allowed.sum()), int((~allowed).sum()), residual)


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

def expected_zero_cdf(P: LatticePolytope, N: int, t) -> np.ndarray:
    """Exact expected fraction of zeros with ``mu(|z|) <= t``.

    With weights ``w_k = binom(Np, k)`` the expected number of zeros in
    ``|z| < r`` is ``<k>_r - Na`` where ``<k>_r`` is the mean of ``k`` under
    ``w_k r^{2k}``.
    """
    a, b = _interval(P)
    d = N * P.p
    k = np.arange(N * a, N * b + 1)
    logw = gammaln(d + 1.0) - gammaln(k + 1.0) - gammaln(d - k + 1.0)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(t)
    for i, ti in enumerate(t):
        if ti <= 0:
            out[i] = 0.0
            continue
        if ti >= 1:
            out[i] = 1.0
            continue
        lr = np.log(ti) - np.log1p(-ti)  # log |z|^2
        lz = logw + k * lr
        mean_k = float(np.exp(logsumexp(lz, b=k) - logsumexp(lz)))
        out[i] = (mean_k - N * a) / (N * (b - a))
    return out


@dataclass(frozen=True)
class ZeroStats:
    """Pooled zero statistics of ``n_samples`` univariate draws.

    The histogram is of ``mu(|z|)`` over ``[0, 1]``, normalised to unit mass.
    ``predicted_density`` is the limit law, uniform on ``(a/p, b/p)``;
    ``expected_density`` is the exact finite-``N`` expectation.
    """

    allowed_fraction: float
    bin_edges: np.ndarray
    empirical_density: np.ndarray
    predicted_density: np.ndarray
    expected_density: np.ndarray
    roots_per_sample: np.ndarray
    expected_allowed_fraction: float
    max_residual: float

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def sup_error_limit(self) -> float:
        return float(np.max(np.abs(self.empirical_density - self.predicted_density)))

    @property
    def sup_error_expected(self) -> float:
        return float(np.max(np.abs(self.empirical_density - self.expected_density)))


def _one_sample(P, N, seed, i):
    return univariate_roots(sample_polynomial(P, N, seed, i))


def empirical_zero_stats(P: LatticePolytope, N: int, n_samples: int, seed: int,
                         bins: int = 20, threads: int = 1) -> ZeroStats:
    """Pool the zeros of ``n_samples`` draws and compare them with the predictions.

    Results are merged in sample order, so they do not depend on ``threads``.
    """
    if P.m != 1:
        raise ValueError("empirical_zero_stats needs m = 1")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            samples = list(pool.map(lambda i: _one_sample(P, N, seed, i), range(n_samples)))
    else:
        samples = [_one_sample(P, N, seed, i) for i in range(n_samples)]
    roots = np.concatenate([s.roots for s in samples]) if samples else np.zeros(0, complex)
    allowed = sum(s.allowed_count for s in samples)
    total = len(roots)
    edges = np.linspace(0.0, 1.0, bins + 1)
    mu = 1.0 / (1.0 + np.abs(roots) ** -2)
    counts, _ = np.histogram(mu, bins=edges)
    width = np.diff(edges)
    emp = counts / (max(total, 1) * width)
    a, b = _interval(P)
    lo, hi = a / P.p, b / P.p
    overlap = np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, None)
    predicted = overlap / ((hi - lo) * width) if hi > lo else np.zeros(bins)
    cdf = expected_zero_cdf(P, N, edges)
    expected = np.diff(cdf) / width
    ca, cb = expected_zero_cdf(P, N, [lo, hi])
    exp_allowed = (cb if b != P.p else 1.0) - (ca if a != 0 else 0.0)
    return ZeroStats(
        allowed_fraction=allowed / total if total else 1.0,
        bin_edges=edges,
        empirical_density=emp,
        predicted_density=predicted,
        expected_density=expected,
        roots_per_sample=np.array([len(s.roots) for s in samples]),
        expected_allowed_fraction=float(exp_allowed),
        max_residual=max((s.residual for s in samples), default=0.0),
    )


def facet_polytope(P2: LatticePolytope, facet_index: int) -> LatticePolytope:
    """``P`` intersected with a facet of ``p Sigma`` in that facet's lattice coordinate.

    Facet 0 is ``x_1 + x_2 = p`` (coordinate ``x_1``), facet 1 is ``x_1 = 0``
    (coordinate ``x_2``), facet 2 is ``x_2 = 0`` (coordinate ``x_1``).  Along
    each facet the ensemble weights reduce to ``binom(Np, k)``.

    Raises
    ------
    PolytopeError
        If the intersection is empty or a single point.
    """
    if P2.m != 2:
        raise ValueError("facet_polytope needs m = 2")
    p = P2.p
    if facet_index == 0:
        on = [v[0] for v in P2.vertices if v[0] + v[1] == p]
    elif facet_index == 1:
        on = [v[1] for v in P2.vertices if v[0] == 0]
    elif facet_index == 2:
        on = [v[0] for v in P2.vertices if v[1] == 0]
    else:
        raise ValueError("facet_index must be 0, 1 or 2")
    if len(set(on)) < 2:
        raise PolytopeError(f"P meets facet {facet_index} in fewer than two lattice points")
    return from_vertices([[min(on)], [max(on)]], p)


def tentacle_allowed_fraction(P2: LatticePolytope, facet_index: int, N: int, n_samples: int,
                              seed: int, threads: int = 1) -> float:
    """Allowed fraction of the zeros of the facet-restricted ensemble."""
    P1 = facet_polytope(P2, facet_index)
    return empirical_zero_stats(P1, N, n_samples, seed, threads=threads).allowed_fraction
