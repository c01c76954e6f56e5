"""Section volumes through the polar negative-moment identity.

For a star body ``K`` in an ``l``-dimensional subspace,
``|K| = |B_2^l| * E ||U||_K^(-l)`` with ``U`` uniform on the unit sphere of
the subspace.  The body is given by its gauge on the ambient space, so the
same estimator serves block hyperplanes, general subspaces and whole spaces.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_count, check_invertible, check_positive
from .exact import lp_ball_volume
from .spaces import (
    LinearImage,
    LpPower,
    Subspace,
    as_subspace,
    hyperplane_basis,
    is_chain,
    resolve_theta,
)
from .streams import Estimate, collect, ratio_influence, sigma_of

MAX_SECTION_DIM = 8


def section_samples(body, sub, mc):
    """Per-sample ``||U||_K^(-l)`` values (unscaled)."""
    sub = as_subspace(sub)
    if sub.ambient != body.dim:
        raise ValueError(f"subspace lives in R^{sub.ambient} but the body in R^{body.dim}")
    ell = sub.dim
    if ell > MAX_SECTION_DIM:
        warnings.warn(f"section dimension {ell} > {MAX_SECTION_DIM}: estimator variance grows quickly",
                      RuntimeWarning, stacklevel=3)

    def draw(rng, size):
        g = rng.standard_normal((size, ell))
        u = (g / np.linalg.norm(g, axis=1)[:, None]) @ sub.basis
        return np.exp(-ell * np.log(body.norm(u)))

    return collect(draw, mc)


def section_volume(body, sub, mc):
    """``|K cap sub|`` for the body with gauge ``body`` (any star body, ``p < 1`` included)."""
    sub = as_subspace(sub)
    ball = lp_ball_volume(sub.dim, 2).value
    return Estimate.from_samples(section_samples(body, sub, mc), mc.seed, scale=ball)


def block_section_volume(X, p, n, theta, mc):
    """``|B_p^n(X) cap H_theta|``."""
    body = LpPower(p, n, X)
    return section_volume(body, hyperplane_basis(resolve_theta(theta, n), X.dim), mc)


@dataclass(frozen=True)
class RelationCheck:
    pair: tuple
    ordered: bool
    slack_sigma: float


@dataclass(frozen=True)
class SectionReport:
    thetas: list
    estimates: list
    relations: list
    bound: Estimate
    bound_checks: list
    exact_reference: float | None = None
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return all(r.ordered for r in self.relations) and all(r.ordered for r in self.bound_checks)


def _z(gap, sigma):
    if sigma == 0:
        return math.inf if gap >= 0 else -math.inf
    return gap / sigma


def one_sided(hi, lo, pair, slack=3.0):
    """Paired check that ``mean(hi - lo) >= 0`` up to ``slack`` standard errors."""
    est = Estimate.from_samples(hi - lo, 0)
    # columns that agree analytically still differ by rounding
    floor = 1e-12 * float(np.mean(np.abs(hi)) + np.mean(np.abs(lo)))
    ok = est.value >= -slack * est.std_error - floor
    return RelationCheck(pair, bool(ok), _z(est.value, est.std_error))


def ordered_pairs(columns, increasing=True, slack=3.0):
    """One-sided paired checks between consecutive columns of per-sample values."""
    out = []
    for i in range(len(columns) - 1):
        a, b = columns[i], columns[i + 1]
        hi, lo = (b, a) if increasing else (a, b)
        out.append(one_sided(hi, lo, (i, i + 1), slack))
    return out


def schur_section_suite(X, p, n, chain, mc, exact_reference=None):
    """Section volumes along a majorization chain with common random numbers.

    Each consecutive pair must be nondecreasing within three paired standard
    errors, and every section must stay below ``|B_p^{n-1}(X)|``, estimated as
    the full-dimensional section of ``B_p^{n-1}(X)``.
    """
    n = check_count(n, "n", minimum=2)
    thetas = [resolve_theta(t, n) for t in chain]
    if not is_chain(thetas):
        raise ValueError("chain entries are not increasing in the majorization order of theta^2")
    body = LpPower(p, n, X)
    ell = X.dim * (n - 1)
    ball = lp_ball_volume(ell, 2).value
    cols = [ball * section_samples(body, hyperplane_basis(t, X.dim), mc) for t in thetas]
    ests = [Estimate.from_samples(c, mc.seed) for c in cols]
    relations = ordered_pairs(cols, increasing=True)

    lower = LpPower(p, n - 1, X)
    bound_col = ball * section_samples(lower, Subspace.full(lower.dim), mc)
    bound = Estimate.from_samples(bound_col, mc.seed)
    bound_checks = [one_sided(bound_col, c, (i, "bound")) for i, c in enumerate(cols)]
    return SectionReport(thetas, ests, relations, bound, bound_checks, exact_reference)


@dataclass(frozen=True)
class InvarianceCheck:
    ratio_X: Estimate
    ratio_TX: Estimate
    agree: bool
    scale: Estimate
    expected_scale: float
    scale_agree: bool


def invariance_ratio_check(X, p, n, T, theta, phi, mc):
    """Compare section ratios for ``X`` and ``TX`` and the ``det(T)^(n-1)`` scaling.

    All four section estimates share one stream, so the ratio difference and
    the scale factor get paired delta-method standard errors.
    """
    T = check_invertible(T, dim=X.dim)
    TX = LinearImage(X, T)
    th = resolve_theta(theta, n)
    ph = resolve_theta(phi, n)
    Ht = hyperplane_basis(th, X.dim)
    Hp = hyperplane_basis(ph, X.dim)
    ball = lp_ball_volume(Ht.dim, 2).value
    a_t = ball * section_samples(LpPower(p, n, X), Ht, mc)
    a_p = ball * section_samples(LpPower(p, n, X), Hp, mc)
    b_t = ball * section_samples(LpPower(p, n, TX), Ht, mc)
    b_p = ball * section_samples(LpPower(p, n, TX), Hp, mc)

    rx, ix = ratio_influence(a_t, a_p)
    rt, it = ratio_influence(b_t, b_p)
    s_diff = sigma_of(it - ix)
    agree = abs(rt - rx) <= 3 * s_diff + 1e-12 * abs(rx)
    scale, iscale = ratio_influence(b_t, a_t)
    s_scale = sigma_of(iscale)
    expected = abs(np.linalg.det(T)) ** (n - 1)
    scale_agree = abs(scale - expected) <= 3 * s_scale + 1e-12 * expected
    N = a_t.shape[0]
    return InvarianceCheck(
        Estimate(float(rx), sigma_of(ix), N, mc.seed),
        Estimate(float(rt), sigma_of(it), N, mc.seed),
        bool(agree),
        Estimate(float(scale), s_scale, N, mc.seed),
        float(expected),
        bool(scale_agree),
    )


def question_probe(K, p, n, theta, mc):
    """Both sides of the open ``p > 2`` question: ``|B_p^{n-1}(K)|`` and ``|B_p^n(K) cap H_theta|``.

    Reports data only; nothing is asserted.
    """
    check_positive(p, "p", allow_inf=True)
    n = check_count(n, "n", minimum=2)
    section = block_section_volume(K, p, n, theta, mc)
    lower = LpPower(p, n - 1, K)
    full = section_volume(lower, Subspace.full(lower.dim), mc)
    return {"lower_dim_volume": full, "section": section}
