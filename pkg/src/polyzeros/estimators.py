"""scikit-learn style wrappers over arrays of log-modulus points.

Each estimator takes ``X`` of shape ``(n_points, m)`` whose rows are ``rho``
vectors (``rho_j = log|z_j|``).  ``fit`` only resolves and checks the polytope;
nothing is learned from data, so ``fit`` may be called with any ``X`` of the
right width.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .momentmap import TorusPoint, classify_region, solve_normal_data
from .polytope import LatticePolytope, load_polytope, named_polytope
from .szego import log_szego_diag, mass_density, u_N
from .zerocurrent import TransitionPointError, psi_density

__all__ = [
    "DecayTransformer",
    "RegionClassifier",
    "SzegoMassTransformer",
    "PsiTransformer",
]


def _resolve(polytope) -> LatticePolytope:
    if isinstance(polytope, LatticePolytope):
        return polytope
    if isinstance(polytope, str):
        try:
            return named_polytope(polytope)
        except (KeyError, ValueError):
            return load_polytope(polytope)
    if isinstance(polytope, dict):
        return load_polytope(polytope)
    raise TypeError("polytope must be a LatticePolytope, a name, a path or a dict")


class _PolytopeMixin:
    def fit(self, X=None, y=None):
        self.polytope_ = _resolve(self.polytope)
        self.n_features_in_ = self.polytope_.m
        if X is not None:
            self._check(X)
        return self

    def _check(self, X):
        X = check_array(X, dtype=float, ensure_2d=True)
        if X.shape[1] != self.polytope_.m:
            raise ValueError(f"X has {X.shape[1]} columns, polytope has m = {self.polytope_.m}")
        return X


class DecayTransformer(_PolytopeMixin, TransformerMixin, BaseEstimator):
    """Map ``rho`` to ``[b_P, q_1..q_m, tau_1..tau_m]``.

    Parameters
    ----------
    polytope : LatticePolytope, str or dict
        Polytope, a named example, a JSON path or a JSON object.
    """

    def __init__(self, polytope="square"):
        self.polytope = polytope

    def transform(self, X):
        check_is_fitted(self, "polytope_")
        X = self._check(X)
        out = []
        for rho in X:
            nd = solve_normal_data(self.polytope_, TorusPoint.from_rho(rho))
            out.append(np.concatenate([[nd.b], nd.q, nd.tau]))
        return np.array(out)


class RegionClassifier(_PolytopeMixin, ClassifierMixin, BaseEstimator):
    """Label each ``rho`` as ``allowed``, ``forbidden(<face id>)`` or ``transition``."""

    def __init__(self, polytope="square", tol=1e-7):
        self.polytope = polytope
        self.tol = tol

    def fit(self, X=None, y=None):
        super().fit(X, y)
        labels = ["allowed", "transition"]
        labels += [f"forbidden({f.id})" for f in self.polytope_.faces if f.dim < self.polytope_.dim]
        self.classes_ = np.array(labels)
        return self

    def predict(self, X):
        check_is_fitted(self, "polytope_")
        X = self._check(X)
        return np.array([str(classify_region(self.polytope_, TorusPoint.from_rho(r), tol=self.tol))
                         for r in X])


class SzegoMassTransformer(_PolytopeMixin, TransformerMixin, BaseEstimator):
    """Map ``rho`` to ``[log Pi, mass, u_N]`` at a fixed ``N``."""

    def __init__(self, polytope="square", N=10):
        self.polytope = polytope
        self.N = N

    def transform(self, X):
        check_is_fitted(self, "polytope_")
        X = self._check(X)
        P, N = self.polytope_, int(self.N)
        rows = []
        for rho in X:
            pt = TorusPoint.from_rho(rho)
            rows.append([log_szego_diag(P, N, pt), mass_density(P, N, pt), u_N(P, N, pt)])
        return np.array(rows)


class PsiTransformer(_PolytopeMixin, TransformerMixin, BaseEstimator):
    """Map ``rho`` to the flattened coefficient matrix of the limit current.

    Transition points give rows of NaN.
    """

    def __init__(self, polytope="square", step=1e-3, rank_tol=1e-4):
        self.polytope = polytope
        self.step = step
        self.rank_tol = rank_tol

    def _psi(self, rho):
        try:
            return psi_density(self.polytope_, TorusPoint.from_rho(rho),
                               step=self.step, rank_tol=self.rank_tol)
        except TransitionPointError:
            return None

    def transform(self, X):
        check_is_fitted(self, "polytope_")
        X = self._check(X)
        m = self.polytope_.m
        out = np.full((len(X), m * m), np.nan)
        for i, rho in enumerate(X):
            psi = self._psi(rho)
            if psi is not None:
                out[i] = psi.matrix.ravel()
        return out

    def rank(self, X):
        """Rank at each point, ``-1`` at transition points."""
        check_is_fitted(self, "polytope_")
        X = self._check(X)
        return np.array([(-1 if (psi := self._psi(r)) is None else psi.rank) for r in X])
