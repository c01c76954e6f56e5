"""Projection volumes through a convex-feasibility membership oracle.

A point ``y`` of a subspace ``F`` lies in ``Proj_F(K)`` iff some ``z`` in
``F^perp`` has ``||y + z||_K <= 1``.  The oracle minimizes the convex,
nonsmooth gauge ``z -> ||y + z||_K`` with a Nelder-Mead simplex search that
runs on a whole batch of points at once.  Volumes are hit fractions of a
bounding box in ``F``.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_count, check_positive
from .exact import lp_ball_volume
from .sections import section_volume
from .spaces import (
    LpPower,
    LqBall,
    Subspace,
    as_subspace,
    hyperplane_basis,
    resolve_theta,
)
from .streams import Estimate, collect, substream


@dataclass(frozen=True)
class MembershipConfig:
    tol: float = 1e-8
    max_iter: int = 400
    multistarts: int = 8
    # starts after the first only run for points whose best gauge is below 1 + retry_margin
    retry_margin: float = 0.25
    # simplex collapse tolerance, relative to the search radius
    xtol: float = 1e-9

    def __post_init__(self):
        check_positive(self.tol, "tol")
        check_count(self.max_iter, "max_iter")
        check_count(self.multistarts, "multistarts")


def batched_nelder_mead(f, x0, step, max_iter=400, xtol=1e-10, ftol=1e-12, stop_below=None):
    """Minimize ``N`` problems at once, one per row of ``x0``.

    ``f(z, rows)`` evaluates problem ``rows[k]`` at point ``z[k]``.  A row stops
    once its simplex has collapsed (``xtol`` and ``ftol``) or its best value is
    at most ``stop_below``.  Returns ``(best_x, best_f)``.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    N, d = x0.shape
    everyone = np.arange(N)
    sim = np.repeat(x0[:, None, :], d + 1, axis=1)
    sim[:, 1:, :] += step * np.eye(d)
    fs = f(sim.reshape(-1, d), np.repeat(everyone, d + 1)).reshape(N, d + 1)
    active = everyone

    for _ in range(max_iter):
        S, F = sim[active], fs[active]
        order = np.argsort(F, axis=1)
        S = np.take_along_axis(S, order[:, :, None], axis=1)
        F = np.take_along_axis(F, order, axis=1)
        spread = np.max(np.abs(S - S[:, :1]), axis=(1, 2))
        done = (F[:, -1] - F[:, 0] <= ftol) & (spread <= xtol)
        if stop_below is not None:
            done |= F[:, 0] <= stop_below
        sim[active], fs[active] = S, F
        active, S, F = active[~done], S[~done], F[~done]
        if active.size == 0:
            break

        worst, fw = S[:, -1], F[:, -1]
        cen = S[:, :-1].mean(axis=1)
        xr, xe = 2 * cen - worst, 3 * cen - 2 * worst
        xo, xi = 1.5 * cen - 0.5 * worst, 0.5 * (cen + worst)
        fr, fe, fo, fi = (f(x, active) for x in (xr, xe, xo, xi))

        use_e = (fr < F[:, 0]) & (fe < fr)
        reflect = ((fr < F[:, 0]) & ~use_e) | ((fr >= F[:, 0]) & (fr < F[:, -2]))
        outside = (fr >= F[:, -2]) & (fr < fw) & (fo <= fr)
        inside = (fr >= fw) & (fi < fw)
        for mask, x, fx in ((use_e, xe, fe), (reflect, xr, fr), (outside, xo, fo), (inside, xi, fi)):
            S[mask, -1], F[mask, -1] = x[mask], fx[mask]

        shrink = ~(use_e | reflect | outside | inside)
        if np.any(shrink):
            Ss, Fs = S[shrink], F[shrink]
            Ss[:, 1:] = Ss[:, :1] + 0.5 * (Ss[:, 1:] - Ss[:, :1])
            rows = np.repeat(active[shrink], d)
            Fs[:, 1:] = f(Ss[:, 1:].reshape(-1, d), rows).reshape(-1, d)
            S[shrink], F[shrink] = Ss, Fs
        sim[active], fs[active] = S, F

    best = np.argmin(fs, axis=1)
    return sim[everyone, best], fs[everyone, best]


def circumradius(body, n_dirs=20_000, seed=12345, safety=1.01):
    """Estimate ``max ||x||_2`` over the unit ball of ``body`` by probing directions.

    Probes random sphere directions, the coordinate axes and (for small
    dimension) the sign diagonals, then inflates the maximum by ``safety``.
    """
    k = body.dim
    g = substream(seed, 0).standard_normal((n_dirs, k))
    dirs = [g / np.linalg.norm(g, axis=1)[:, None], np.eye(k)]
    if k <= 10:
        dirs.append(np.array(list(itertools.product((-1.0, 1.0), repeat=k))) / math.sqrt(k))
    with np.errstate(divide="ignore"):
        R = float(np.max(1.0 / body.norm(np.vstack(dirs)))) * safety
    if not np.isfinite(R) or R <= 0:
        raise ValueError("circumradius estimate failed (unbounded or degenerate body)")
    return R


def _require_convex(body):
    if not body.is_convex:
        raise ValueError("membership oracle needs a convex body (p >= 1 and q >= 1 throughout)")


def min_gauge(body, y, comp, cfg, rng, radius):
    """Approximate ``min_z ||y + z @ comp||_K`` for every row of ``y``.

    Rows stop as soon as a value ``<= 1 + tol`` is found.  The first start is
    ``z = 0``; the remaining ``multistarts - 1`` are uniform in ``[-radius,
    radius]^d`` and each start is followed by one restart from its end point.
    """
    y = np.atleast_2d(y)
    d = comp.shape[0]
    if d == 0:
        return body.norm(y)
    target = 1.0 + cfg.tol
    best = np.full(y.shape[0], np.inf)
    todo = np.arange(y.shape[0])
    for start in range(cfg.multistarts):
        if todo.size == 0:
            break
        yy = y[todo]

        def f(z, rows, yy=yy):
            return body.norm(yy[rows] + z @ comp)

        if start == 0:
            z0 = np.zeros((todo.size, d))
        else:
            z0 = rng.uniform(-radius, radius, (todo.size, d))
        opts = dict(max_iter=cfg.max_iter, xtol=cfg.xtol * radius, ftol=cfg.tol * 1e-2, stop_below=target)
        z, v = batched_nelder_mead(f, z0, 0.5 * radius, **opts)
        _, v2 = batched_nelder_mead(f, z, 0.1 * radius, **opts)
        best[todo] = np.minimum(best[todo], np.minimum(v, v2))
        left = best[todo] > target
        if start == 0:
            left &= best[todo] <= 1.0 + cfg.retry_margin
        todo = todo[left]
    return best


def _membership_setup(K, n, theta):
    body = LpPower(math.inf, n, K)
    _require_convex(body)
    H = hyperplane_basis(resolve_theta(theta, n), K.dim)
    return body, H


def projection_membership(K, n, theta, y, cfg=MembershipConfig(), seed=0):
    """Whether ``y`` (a point of ``H_theta``) lies in ``Proj_{H_theta}(K^n)``."""
    body, H = _membership_setup(K, n, theta)
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != body.dim:
        raise ValueError(f"y must have length {body.dim}")
    if not H.contains(y, tol=1e-10):
        raise ValueError("y is not in H_theta")
    R = circumradius(K)
    vals = min_gauge(body, y, H.complement_basis(), cfg, substream(seed, 0), R)
    out = vals <= 1.0 + cfg.tol
    return bool(out[0]) if y.ndim == 1 else out


def subspace_projection_volume(body, sub, cfg, mc, radius=None):
    """``|Proj_sub(L)|`` for the convex body ``L`` with gauge ``body``.

    Hit-or-miss over the box ``[-radius, radius]^d`` in basis coordinates of
    ``sub``; ``radius`` defaults to the estimated circumradius of ``L``.
    Points outside the Euclidean ball of that radius are rejected without
    running the oracle.
    """
    _require_convex(body)
    sub = as_subspace(sub)
    if sub.ambient != body.dim:
        raise ValueError(f"subspace lives in R^{sub.ambient} but the body in R^{body.dim}")
    R = circumradius(body) if radius is None else float(radius)
    comp = sub.complement_basis()
    d = sub.dim
    box = (2 * R) ** d

    def draw(rng, size):
        c = rng.uniform(-R, R, (size, d))
        hit = np.zeros(size)
        inside = np.einsum("ij,ij->i", c, c) <= R * R
        if np.any(inside):
            y = c[inside] @ sub.basis
            vals = min_gauge(body, y, comp, cfg, rng, R)
            hit[inside] = vals <= 1.0 + cfg.tol
        return hit

    return Estimate.from_samples(collect(draw, mc), mc.seed, scale=box)


def projection_volume(K, n, theta, cfg, mc):
    """``|Proj_{H_theta}(K^n)|`` using a box of half-width ``sqrt(n) R(K)``."""
    body, H = _membership_setup(K, n, theta)
    R = math.sqrt(n) * circumradius(K)
    return subspace_projection_volume(body, H, cfg, mc, radius=R)


def body_volume(K, mc):
    """Exact for ``l_q`` balls, otherwise a polar-identity estimate."""
    if isinstance(K, LqBall):
        return lp_ball_volume(K.m, K.q).value, 0.0
    est = section_volume(K, Subspace.full(K.dim), mc)
    return est.value, est.std_error


@dataclass(frozen=True)
class LowerBoundCheck:
    proj: Estimate
    bound: float
    holds: bool


def projection_lower_bound_check(K, n, theta, cfg, mc):
    """``|Proj_{H_theta}(K^n)| >= |K|^(n-1)`` with three standard errors of slack."""
    proj = projection_volume(K, n, theta, cfg, mc)
    vol, vol_se = body_volume(K, mc)
    bound = vol ** (n - 1)
    bound_se = (n - 1) * vol ** (n - 2) * vol_se
    slack = 3 * math.hypot(proj.std_error, bound_se)
    return LowerBoundCheck(proj, bound, bool(proj.value + slack >= bound))


# --------------------------------------------------------------------------
# sign/permutation decompositions of the identity

MAX_DECOMP_N = 7


def _signed_permutations(n):
    if n > MAX_DECOMP_N:
        cost = 2**n * math.factorial(n)
        raise ValueError(f"n={n} > {MAX_DECOMP_N}: the average has {cost} terms")
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=n)))
    perms = np.array(list(itertools.permutations(range(n))))
    return signs, perms


def block_family(theta, m=1):
    """Complement bases of all ``H_theta^{eps, sigma}`` (``theta`` signed and permuted).

    Returns an array of shape ``(2^n n!, m, mn)``; row block ``k`` spans the
    orthogonal complement ``v (x) R^m`` with ``v_i = eps_i theta_{sigma(i)}``.
    """
    theta = np.asarray(theta, dtype=float)
    signs, perms = _signed_permutations(theta.shape[0])
    v = (signs[:, None, :] * theta[perms][None, :, :]).reshape(-1, theta.shape[0])
    return np.einsum("ki,ab->kaib", v, np.eye(m)).reshape(v.shape[0], m, -1)


def symmetric_family(F):
    """Bases of all ``F^{eps, sigma}``: shape ``(2^n n!, d, n)``."""
    F = as_subspace(F)
    n = F.ambient
    signs, perms = _signed_permutations(n)
    # entry i of a transformed basis vector b is eps_i b_{sigma(i)}
    permuted = F.basis[:, perms].transpose(1, 0, 2)
    return (signs[:, None, None, :] * permuted[None, :, :, :]).reshape(-1, F.dim, n)


def _gram_sum(stack):
    # sum_k B_k^T B_k as one matrix product over all stacked rows
    rows = stack.reshape(-1, stack.shape[-1])
    return rows.T @ rows


def decomposition_identity_check(n, theta=None, m=1, F=None):
    """Max-abs deviation of the averaged projections from a multiple of the identity.

    Block case (``theta``): ``(1/(2^n n!)) sum P_{eps,sigma}`` against
    ``((n-1)/n) I_{mn}``; each projection is ``I - V V^T`` with ``V`` the
    complement basis.  Subspace case (``F``): against ``(d/n) I_n``.
    """
    n = check_count(n, "n", minimum=1)
    if F is not None:
        fam = symmetric_family(F)
        avg = _gram_sum(fam) / fam.shape[0]
        target = (as_subspace(F).dim / n) * np.eye(n)
    else:
        theta = resolve_theta(theta, n)
        fam = block_family(theta, m)
        k = fam.shape[0]
        avg = np.eye(m * n) - _gram_sum(fam) / k
        target = ((n - 1) / n) * np.eye(m * n)
    return float(np.max(np.abs(avg - target)))


def block_decomposition(theta, m=1):
    """``(c_i, F_i)`` pairs and ``s`` with ``sum c_i Proj_{F_i} = s I`` from the ``H_theta`` family."""
    theta = np.asarray(theta, dtype=float)
    n = theta.shape[0]
    fam = block_family(theta, m)
    c = 1.0 / fam.shape[0]
    pairs = [(c, Subspace(Subspace(V).complement_basis())) for V in fam]
    return pairs, (n - 1) / n


@dataclass(frozen=True)
class LoomisWhitneyCheck:
    lhs: float
    rhs: float
    rhs_std_error: float
    holds: bool


def loomis_whitney_check(L, decomposition, s, cfg, mc, scale=1.0):
    """``|L|^s <= prod_i |Proj_{F_i}(L)|^{c_i}`` for ``L = center + scale * B_body``.

    Translating ``L`` changes neither side, so only ``scale`` is taken.  The
    decomposition is verified to ``1e-10`` first.
    """
    k = L.dim
    total = sum(c * as_subspace(F).projector() for c, F in decomposition)
    if np.max(np.abs(total - s * np.eye(k))) > 1e-10:
        raise ValueError("subspaces do not decompose s * identity")
    vol, vol_se = body_volume(L, mc)
    lhs = (scale**k * vol) ** s
    log_rhs, var = 0.0, 0.0
    for c, F in decomposition:
        F = as_subspace(F)
        est = subspace_projection_volume(L, F, cfg, mc)
        log_rhs += c * (F.dim * math.log(scale) + math.log(est.value))
        var += (c * est.std_error / est.value) ** 2
    rhs = math.exp(log_rhs)
    rhs_se = rhs * math.sqrt(var)
    lhs_se = lhs * s * vol_se / vol
    holds = lhs <= rhs + 3 * math.hypot(rhs_se, lhs_se)
    return LoomisWhitneyCheck(lhs, rhs, rhs_se, bool(holds))


def onesym_projection_check(K, F, cfg, mc):
    """``|Proj_F K| >= |K|^(d/n)`` for an ``l_q`` ball ``K`` and a ``d``-dimensional ``F``."""
    if not isinstance(K, LqBall):
        raise ValueError("1-symmetric checks are implemented for l_q balls")
    F = as_subspace(F)
    proj = subspace_projection_volume(K, F, cfg, mc)
    bound = lp_ball_volume(K.m, K.q).value ** (F.dim / K.m)
    return LowerBoundCheck(proj, bound, bool(proj.value + 3 * proj.std_error >= bound))
