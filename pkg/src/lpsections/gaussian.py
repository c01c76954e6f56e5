"""Monte-Carlo estimates of Gaussian functionals on block hyperplanes.

``G_theta`` is the standard Gaussian vector on ``H_theta``; it is sampled as
``g @ basis`` with ``g`` standard normal in ``R^{m(n-1)}``.  Two estimates
built from the same :class:`MCConfig` see the same ``g`` and are therefore
paired (common random numbers) even when ``theta`` differs.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from ._validation import check_count, check_positive
from .spaces import LpDiscrete, LpPower, hyperplane_basis, resolve_theta
from .streams import Estimate, collect


def _block_space(X, p, n):
    return LpPower(check_positive(p, "p", allow_inf=True), check_count(n, "n", minimum=2), X)


def _gaussian_values(X, p, n, theta, mc, func):
    body = _block_space(X, p, n)
    H = hyperplane_basis(resolve_theta(theta, n), X.dim)

    def draw(rng, size):
        g = rng.standard_normal((size, H.dim))
        return func(body, g @ H.basis)

    return collect(draw, mc)


def laplace_samples(X, p, n, theta, lam, mc):
    lam = check_positive(lam, "lambda")
    p = float(p)
    return _gaussian_values(
        X, p, n, theta, mc,
        lambda body, x: np.exp(-lam * np.sum(body.block_norms(x) ** p, axis=-1)))


def laplace_estimate(X, p, n, theta, lam, mc):
    """``E exp(-lam ||G_theta||^p)`` for the ``l_p^n(X)`` quasi-norm."""
    return Estimate.from_samples(laplace_samples(X, p, n, theta, lam, mc), mc.seed)


def norm_power_samples(X, p, n, theta, power, mc):
    return _gaussian_values(X, p, n, theta, mc, lambda body, x: body.norm(x) ** power)


def negative_moment_estimate(X, p, n, theta, alpha, mc):
    """``E ||G_theta||^(-alpha)`` for ``0 < alpha < m(n-1)``.

    The integrand has finite variance only for ``2 alpha < m(n-1)``; outside
    that range a ``RuntimeWarning`` is issued and the standard error is not
    trustworthy.
    """
    dim = X.dim * (n - 1)
    if not 0 < alpha < dim:
        raise ValueError(f"alpha must lie in (0, {dim}), got {alpha}")
    if 2 * alpha >= dim:
        warnings.warn(f"alpha={alpha} >= {dim}/2: the moment estimator has infinite variance",
                      RuntimeWarning, stacklevel=2)
    return Estimate.from_samples(norm_power_samples(X, p, n, theta, -alpha, mc), mc.seed)


def norm_moment_estimate(X, p, n, theta, power, mc):
    """``E ||G_theta||^power`` for ``power > 0``."""
    check_positive(power, "power")
    return Estimate.from_samples(norm_power_samples(X, p, n, theta, power, mc), mc.seed)


def slab_samples(X, p, n, theta, lam, epsilon, mc):
    """Per-sample terms of the slab estimator, already scaled.

    A standard Gaussian ``x`` on ``(R^m)^n`` splits as ``y + theta (x) w`` with
    ``y = G_theta`` and ``w = sum_i theta_i x_i`` standard normal on ``R^m``,
    independent.  Restricting to the slab ``||w||_inf < eps/2`` is done by
    drawing ``w`` from the truncated normal and multiplying by the exact
    probability of the cube, so every sample contributes.
    """
    lam = check_positive(lam, "lambda")
    eps = check_positive(epsilon, "epsilon")
    p = float(p)
    body = _block_space(X, p, n)
    th = resolve_theta(theta, n)
    H = hyperplane_basis(th, X.dim)
    m = X.dim
    lo = ndtr(-eps / 2)
    width = ndtr(eps / 2) - lo
    scale = (2 * math.pi) ** (m / 2) * (width / eps) ** m
    shift = np.kron(th[None, :], np.eye(m))

    def draw(rng, size):
        g = rng.standard_normal((size, H.dim))
        w = ndtri(lo + width * rng.random((size, m)))
        x = g @ H.basis + w @ shift
        return scale * np.exp(-lam * np.sum(body.block_norms(x) ** p, axis=-1))

    return collect(draw, mc)


def slab_laplace_estimate(X, p, n, theta, lam, epsilon, mc):
    """``(2 pi)^(-m(n-1)/2) eps^(-m) mu(H_theta(eps))`` for the Gaussian-tilted measure ``mu``."""
    return Estimate.from_samples(slab_samples(X, p, n, theta, lam, epsilon, mc), mc.seed)


@dataclass(frozen=True)
class SlabSweep:
    epsilons: list
    estimates: list
    limit: Estimate
    monotone: bool


def slab_sweep(X, p, n, theta, lam, mc, epsilons=(0.5, 0.25, 0.1, 0.05)):
    """Slab estimates on a decreasing ``eps`` grid, paired with each other.

    ``monotone`` reports whether consecutive estimates are nondecreasing as
    ``eps`` shrinks within three paired standard errors.
    """
    eps = sorted(epsilons, reverse=True)
    cols = [slab_samples(X, p, n, theta, lam, e, mc) for e in eps]
    ests = [Estimate.from_samples(c, mc.seed) for c in cols]
    monotone = True
    for a, b in zip(cols, cols[1:]):
        d = Estimate.from_samples(b - a, mc.seed)
        monotone &= d.value >= -3 * d.std_error
    return SlabSweep(eps, ests, laplace_estimate(X, p, n, theta, lam, mc), bool(monotone))


# --------------------------------------------------------------------------
# random positive definite matrices

@dataclass(frozen=True)
class PSDSamplerSpec:
    """Distribution of i.i.d. positive definite ``m x m`` matrices.

    kind ``'wishart'``: ``G^T G + eps I`` with ``G`` a ``dof x m`` standard
    Gaussian matrix; ``'uniform'``: diagonal with i.i.d. uniform ``[lo, hi]``
    entries; ``'constant'``: always ``matrix``.
    """

    m: int
    kind: str = "wishart"
    dof: int | None = None
    eps: float = 0.01
    lo: float = 1.0
    hi: float = 2.0
    matrix: tuple | None = None

    def __post_init__(self):
        check_count(self.m, "m")
        if self.kind not in ("wishart", "uniform", "constant"):
            raise ValueError(f"unknown sampler kind {self.kind!r}")
        if self.kind == "uniform" and not 0 < self.lo <= self.hi:
            raise ValueError("uniform sampler needs 0 < lo <= hi")
        if self.kind == "constant":
            M = np.eye(self.m) if self.matrix is None else np.asarray(self.matrix, dtype=float)
            np.linalg.cholesky(M)

    def sample(self, rng, shape):
        m = self.m
        if self.kind == "wishart":
            dof = self.dof or 2 * m + 4
            G = rng.standard_normal(shape + (dof, m))
            return np.swapaxes(G, -1, -2) @ G + self.eps * np.eye(m)
        if self.kind == "uniform":
            d = rng.uniform(self.lo, self.hi, shape + (m,))
            return d[..., :, None] * np.eye(m)
        M = np.eye(m) if self.matrix is None else np.asarray(self.matrix, dtype=float)
        return np.broadcast_to(M, shape + (m, m)).copy()


def det_schur_samples(sampler, alphas, r, mc):
    """Per-sample ``det(sum_i alpha_i M_i)^(-r)`` for each weight vector in ``alphas``.

    Returns an array of shape ``(samples, len(alphas))``; all columns use the
    same matrices ``M_1..M_n``.
    """
    alphas = np.atleast_2d(np.asarray(alphas, dtype=float))
    if np.any(alphas < 0) or np.any(alphas.sum(axis=1) <= 0):
        raise ValueError("weights must be nonnegative with positive sum")
    r = check_positive(r, "r")
    n = alphas.shape[1]

    def draw(rng, size):
        M = sampler.sample(rng, (size, n))
        S = np.einsum("ki,sixy->ksxy", alphas, M)
        _, logdet = np.linalg.slogdet(S)
        return np.exp(-r * logdet).T

    return collect(draw, mc)


def det_schur_estimate(sampler, alphas, r, n, mc):
    """``E det(sum_i alpha_i M_i)^(-r)`` over i.i.d. ``M_i`` from ``sampler``."""
    alphas = np.asarray(alphas, dtype=float)
    if alphas.shape != (n,):
        raise ValueError(f"expected {n} weights, got shape {alphas.shape}")
    col = det_schur_samples(sampler, alphas[None, :], r, mc)[:, 0]
    return Estimate.from_samples(col, mc.seed)


@dataclass(frozen=True)
class DetIdentityCheck:
    mc: Estimate
    closed_form: float
    determinant_form: float
    agree: bool


def det_identity_p2_check(measure, n, theta, lam, mc):
    """At ``p = 2`` the mixing measures are point masses at ``s_j = (lam + 1/2) c_j``.

    Then ``M_i = (1/2)(sum_j s_j u_j u_j^T)^{-1}`` is deterministic and
    ``E exp(-lam ||G_theta||^2) = prod_i det(M_i)^(1/2) det(sum_i theta_i^2 M_i)^(-1/2)``,
    which equals ``(1 + 2 lam)^(-m(n-1)/2)`` for an isotropic measure.
    """
    lam = check_positive(lam, "lambda")
    gram = measure.gram()
    m = measure.m
    if np.linalg.norm(gram - np.eye(m)) >= 1e-8:
        raise ValueError("measure is not isotropic (residual >= 1e-8)")
    th = resolve_theta(theta, n)
    M = 0.5 * np.linalg.inv((lam + 0.5) * gram)
    _, logdet_M = np.linalg.slogdet(M)
    _, logdet_mix = np.linalg.slogdet(np.sum(th**2) * M)
    determinant_form = math.exp(0.5 * n * logdet_M - 0.5 * logdet_mix)
    closed = (1 + 2 * lam) ** (-m * (n - 1) / 2)
    est = laplace_estimate(LpDiscrete(2.0, measure), 2.0, n, th, lam, mc)
    agree = abs(est.value - closed) <= 3 * est.std_error + 1e-15
    return DetIdentityCheck(est, closed, determinant_form, bool(agree))
