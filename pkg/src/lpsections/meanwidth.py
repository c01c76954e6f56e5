"""Mean widths of projected polar bodies.

With the convention ``w(K°) = int_{S^{l-1}} ||u||_K dsigma(u)`` (no factor
2), polarity turns the mean width of ``Proj_{H_theta}(B_q^n(X*))`` into the
sphere average of the ``l_p^n(X)`` norm over ``H_theta``.  The dual space is
never built.
"""

import numpy as np

from ._validation import check_count
from .sections import ordered_pairs
from .spaces import LpPower, hyperplane_basis, in_lewis_position, is_chain, resolve_theta
from .streams import Estimate, collect


def mean_width_samples(X, p, n, theta, mc):
    if p < 1:
        raise ValueError(f"mean width needs p >= 1, got {p}")
    n = check_count(n, "n", minimum=2)
    body = LpPower(p, n, X)
    H = hyperplane_basis(resolve_theta(theta, n), X.dim)

    def draw(rng, size):
        g = rng.standard_normal((size, H.dim))
        return body.norm((g / np.linalg.norm(g, axis=1)[:, None]) @ H.basis)

    return collect(draw, mc)


def mean_width_estimate(X, p, n, theta, mc):
    """Sphere average of ``||u||_{l_p^n(X)}`` over the unit sphere of ``H_theta``."""
    return Estimate.from_samples(mean_width_samples(X, p, n, theta, mc), mc.seed)


def meanwidth_schur_suite(X, p, n, chain, mc):
    """Paired mean widths along a chain; each step must not increase (3 sigma slack)."""
    if not in_lewis_position(X, p):
        raise ValueError("X must be in Lewis position for the mean width comparison")
    thetas = [resolve_theta(t, n) for t in chain]
    if not is_chain(thetas):
        raise ValueError("chain entries are not increasing in the majorization order of theta^2")
    cols = [mean_width_samples(X, p, n, t, mc) for t in thetas]
    checks = ordered_pairs(cols, increasing=False)
    return {
        "thetas": thetas,
        "estimates": [Estimate.from_samples(c, mc.seed) for c in cols],
        "relations": checks,
        "passed": all(c.ordered for c in checks),
    }
