"""Lewis position for discrete L_p representations.

Given atoms ``(c_j, u_j)`` defining ``||x|| = (sum_j c_j |<x, u_j>|^p)^(1/p)``,
find an invertible ``A`` such that the pushforward measure (directions
``A^T u_j`` renormalized, weights ``c_j ||A^T u_j||^p``) is isotropic.  Then
``||x||_{p, pushforward} = ||A x||_{p, original}`` for every ``x``.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_invertible, check_positive
from .spaces import DiscreteMeasure


class LewisSingularityError(np.linalg.LinAlgError):
    pass


def isotropy_residual(measure):
    """Frobenius distance ``||sum_j c_j u_j u_j^T - I||_F``."""
    return float(np.linalg.norm(measure.gram() - np.eye(measure.m)))


def pushforward(measure, A, p):
    A = check_invertible(A, "A", dim=measure.m)
    p = check_positive(p, "p")
    v = measure.directions @ A  # rows are (A^T u_j)^T
    lengths = np.linalg.norm(v, axis=1)
    return DiscreteMeasure(measure.weights * lengths**p, v / lengths[:, None])


def whitening(measure):
    """Closed-form ``p = 2`` Lewis transform ``(sum_j c_j u_j u_j^T)^(-1/2)``."""
    vals, vecs = np.linalg.eigh(measure.gram())
    return (vecs / np.sqrt(vals)) @ vecs.T


@dataclass(frozen=True)
class LewisResult:
    transform: np.ndarray
    measure: DiscreteMeasure
    residual: float
    iterations: int
    converged: bool

    def to_dict(self):
        return {
            "A": self.transform.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _weighted_gram(measure, A, p):
    w = measure.directions @ A
    lengths = np.linalg.norm(w, axis=1)
    coef = measure.weights * lengths ** (p - 2)
    return (w * coef[:, None]).T @ w


def _rescaled(measure, A, p):
    # isotropy forces trace = m; F scales like t^p under A -> tA
    F = _weighted_gram(measure, A, p)
    kappa = np.trace(F) / measure.m
    return A * kappa ** (-1.0 / p)


def lewis_solve(measure, p, tol=1e-10, max_iter=10_000, damping=0.5):
    """Damped fixed-point iteration ``A <- A F(A)^(-damping/2)`` with ``det A = 1``.

    ``F(A) = sum_j c_j ||A^T u_j||^(p-2) (A^T u_j)(A^T u_j)^T`` is the second
    moment of the pushforward; at the fixed point it is a multiple of the
    identity and a final scalar rescaling makes it exactly ``I``.  The
    iteration starts from the ``p = 2`` whitening, so ``p = 2`` needs no steps.

    Non-convergence returns the best iterate with ``converged=False``.
    """
    p = check_positive(p, "p")
    tol = check_positive(tol, "tol")
    if not 0 < damping <= 1:
        raise ValueError(f"damping must be in (0, 1], got {damping}")
    m = measure.m
    A = whitening(measure)
    A /= abs(np.linalg.det(A)) ** (1.0 / m)

    best = None
    for it in range(int(max_iter) + 1):
        cand = _rescaled(measure, A, p)
        pushed = pushforward(measure, cand, p)
        res = isotropy_residual(pushed)
        if best is None or res < best[2]:
            best = (cand, pushed, res, it)
        if res < tol or it == max_iter:
            break
        F = _weighted_gram(measure, A, p)
        vals, vecs = np.linalg.eigh(F)
        if vals[0] <= 1e-14 * vals[-1]:
            raise LewisSingularityError(
                f"F(A) is numerically rank deficient at iteration {it} "
                f"(eigenvalues {vals[0]:.3g} .. {vals[-1]:.3g})")
        step = (vecs * vals ** (-damping / 2)) @ vecs.T
        A = A @ step
        A /= abs(np.linalg.det(A)) ** (1.0 / m)

    cand, pushed, res, it = best
    return LewisResult(cand, pushed, res, it, bool(res < tol))


def _as_measure(X):
    if isinstance(X, DiscreteMeasure):
        return X
    rows = check_array(X, ensure_min_features=2)
    return DiscreteMeasure.from_array(rows)


class LewisPosition(TransformerMixin, BaseEstimator):
    """Bring a discrete ``L_p`` norm into Lewis position.

    ``fit`` takes a :class:`DiscreteMeasure` or an array of atom rows
    ``[c_j, u_j...]``.  After fitting, ``transform`` maps points from the
    original coordinates to Lewis coordinates (``x -> A^{-1} x``), so that the
    isotropic norm of the image equals the original norm of ``x``.

    Attributes
    ----------
    matrix_ : ndarray of shape (m, m)
    measure_ : DiscreteMeasure
        The isotropic pushforward.
    residual_ : float
    n_iter_ : int
    converged_ : bool
    """

    def __init__(self, p=1.0, tol=1e-10, max_iter=10_000, damping=0.5):
        self.p = p
        self.tol = tol
        self.max_iter = max_iter
        self.damping = damping

    def fit(self, X, y=None):
        measure = _as_measure(X)
        res = lewis_solve(measure, self.p, self.tol, self.max_iter, self.damping)
        self.matrix_ = res.transform
        self.measure_ = res.measure
        self.residual_ = res.residual
        self.n_iter_ = res.iterations
        self.converged_ = res.converged
        self.n_features_in_ = measure.m
        self._inverse = np.linalg.inv(res.transform)
        return self

    def transform(self, X):
        check_is_fitted(self, "matrix_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self._inverse.T

    def inverse_transform(self, X):
        check_is_fitted(self, "matrix_")
        X = check_array(X)
        return X @ self.matrix_.T
