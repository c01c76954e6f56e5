"""Verification suites.

Every check yields one :class:`Check` row ``check_id,lhs,rhs,sigma_slack,pass``.
``sigma_slack`` is the margin in standard errors: signed (positive means the
inequality holds with room to spare) for one-sided checks, the absolute
deviation for two-sided ones, and empty for exact comparisons.  All random
inputs derive from the suite seed, so a suite's CSV is a pure function of
``(seed, chunk)``.
"""

import csv
import io
import math
import time
from dataclasses import dataclass

import numpy as np

from .exact import diagonal_section_limit, lp_ball_volume, block_counterexample_check
from .gaussian import (
    PSDSamplerSpec,
    det_identity_p2_check,
    det_schur_samples,
    laplace_samples,
    norm_power_samples,
    slab_sweep,
)
from .lewis import lewis_solve, whitening
from .meanwidth import mean_width_estimate, mean_width_samples, meanwidth_schur_suite
from .projections import (
    MembershipConfig,
    block_decomposition,
    decomposition_identity_check,
    loomis_whitney_check,
    onesym_projection_check,
    projection_lower_bound_check,
    projection_volume,
)
from .sections import (
    invariance_ratio_check,
    one_sided,
    ordered_pairs,
    schur_section_suite,
    section_volume,
)
from .spaces import (
    DiscreteMeasure,
    Euclidean,
    LpDiscrete,
    LpPower,
    LqBall,
    Subspace,
    majorization_chain,
)
from .streams import Estimate, MCConfig

COLUMNS = ("check_id", "lhs", "rhs", "sigma_slack", "pass")


@dataclass(frozen=True)
class Check:
    check_id: str
    lhs: float
    rhs: float
    sigma_slack: float | None
    passed: bool

    def row(self):
        slack = "" if self.sigma_slack is None else repr(float(self.sigma_slack))
        return [self.check_id, repr(float(self.lhs)), repr(float(self.rhs)), slack,
                "true" if self.passed else "false"]


def _margin(gap, sigma):
    if sigma > 0:
        return gap / sigma
    return math.inf if gap >= 0 else -math.inf


def leq(check_id, lhs, rhs, sigma, slack=3.0):
    """``lhs <= rhs`` within ``slack`` standard errors."""
    ok = lhs <= rhs + slack * sigma + 1e-12 * max(abs(lhs), abs(rhs))
    return Check(check_id, lhs, rhs, _margin(rhs - lhs, sigma), bool(ok))


def close(check_id, lhs, rhs, sigma, slack=3.0):
    """``|lhs - rhs| <= slack * sigma``."""
    gap = abs(lhs - rhs)
    ok = gap <= slack * sigma + 1e-12 * max(abs(lhs), abs(rhs))
    return Check(check_id, lhs, rhs, gap / sigma if sigma > 0 else (0.0 if ok else math.inf), bool(ok))


def relative(check_id, lhs, rhs, rtol):
    return Check(check_id, lhs, rhs, None, bool(abs(lhs - rhs) <= rtol * abs(rhs)))


def paired(check_id, relation, hi, lo):
    """Row for a paired relation ``mean(hi) >= mean(lo)``."""
    return Check(check_id, float(np.mean(lo)), float(np.mean(hi)), relation.slack_sigma, relation.ordered)


def _mc(samples, seed, workers):
    return MCConfig(samples=samples, seed=seed, workers=workers)


def _rng(seed, tag):
    return np.random.default_rng([seed, tag])


def isotropic_three_atoms():
    """Three equal atoms at 0, 60 and 120 degrees; their Gram matrix is the identity."""
    ang = np.array([0.0, math.pi / 3, 2 * math.pi / 3])
    return DiscreteMeasure(np.full(3, 2.0 / 3.0), np.column_stack([np.cos(ang), np.sin(ang)]))


def l1_plane():
    return LqBall(1.0, 2)


def schur_grid():
    """``(label, X, p)`` cases; every ``X`` is an ``L_p`` subspace in Lewis position."""
    return [
        ("R,p=0.5", Euclidean(1), 0.5),
        ("R,p=1", Euclidean(1), 1.0),
        ("R,p=2", Euclidean(1), 2.0),
        ("l2^2,p=1", Euclidean(2), 1.0),
        ("l1^2,p=1", l1_plane(), 1.0),
        ("3atom,p=1", LpDiscrete(1.0, isotropic_three_atoms()), 1.0),
    ]


def b14_test_plane():
    rows = np.array([[1.0, 1 / math.sqrt(2), 0.0, -1 / math.sqrt(2)],
                     [0.0, 1 / math.sqrt(2), 1.0, 1 / math.sqrt(2)]]) / math.sqrt(2)
    return Subspace(rows)


# --------------------------------------------------------------------------
# check groups

def exact_checks(n_max=50, seed=0, workers=None):
    out = []
    for n in range(2, n_max + 1):
        c = block_counterexample_check(n)
        out.append(Check(f"exact/counterexample/n={n}", c.log_lhs, c.log_rhs, None,
                         c.strict and c.routes_agree))
    c = block_counterexample_check(2)
    out.append(Check("exact/counterexample/n=2/factorial", c.lhs, c.rhs, None,
                     c.lhs == 12.0 and abs(c.rhs - (4 / math.pi) ** 2) < 1e-15))
    out.append(Check("exact/diagonal-limit/m=2", diagonal_section_limit(2).value, 2.0, None, diagonal_section_limit(2).value == 2.0))
    return out


def cross_polytope_section_checks(samples=1_000_000, seed=0, workers=None):
    """The two sections of ``B_1^4``: through ``H_diag`` (volume 1) and through ``E``."""
    mc = _mc(samples, seed, workers)
    body = LqBall(1.0, 4)
    diag = section_volume(body, Subspace(np.kron([[1.0, -1.0]], np.eye(2)) / math.sqrt(2)), mc)
    plane = section_volume(body, b14_test_plane(), mc)
    target = 4 * (3 * math.sqrt(2) - 4)
    gap_se = math.hypot(diag.std_error, plane.std_error)
    return [
        relative("b14/diag", diag.value, 1.0, 0.02),
        relative("b14/E", plane.value, target, 0.02),
        Check("b14/E<diag", plane.value, 1.0, _margin(1.0 - plane.value, plane.std_error),
              bool(plane.value + 3 * plane.std_error < 1.0)),
        Check("b14/E<b14-diag", plane.value, diag.value, _margin(diag.value - plane.value, gap_se),
              bool(plane.value + 3 * gap_se < diag.value)),
    ]


def schur_section_checks(samples=100_000, seed=0, workers=None, steps=4):
    mc = _mc(samples, seed, workers)
    out = []
    for label, X, p in schur_grid():
        for n in (2, 3):
            rep = schur_section_suite(X, p, n, majorization_chain(n, steps), mc)
            for r in rep.relations:
                i, j = r.pair
                out.append(Check(f"sections/{label}/n={n}/step{i}<=step{j}", rep.estimates[i].value,
                                 rep.estimates[j].value, r.slack_sigma, r.ordered))
            for r, est in zip(rep.bound_checks, rep.estimates):
                out.append(Check(f"sections/{label}/n={n}/step{r.pair[0]}<=lower-dim", est.value,
                                 rep.bound.value, r.slack_sigma, r.ordered))
    return out


def laplace_checks(samples=100_000, seed=0, workers=None, steps=4, lambdas=(0.5, 1.0, 2.0)):
    mc = _mc(samples, seed, workers)
    out = []
    for label, X, p in schur_grid():
        for n in (2, 3):
            chain = majorization_chain(n, steps)
            for lam in lambdas:
                cols = [laplace_samples(X, p, n, t, lam, mc) for t in chain]
                for r in ordered_pairs(cols, increasing=True):
                    i, j = r.pair
                    out.append(paired(f"laplace/{label}/n={n}/lambda={lam:g}/step{i}<=step{j}",
                                      r, cols[j], cols[i]))
    measures = [("R", DiscreteMeasure([1.0], [[1.0]])), ("3atom", isotropic_three_atoms())]
    for label, mu in measures:
        for n in (2, 3):
            for lam in lambdas:
                c = det_identity_p2_check(mu, n, "diag", lam, mc)
                out.append(close(f"laplace/p=2/{label}/n={n}/lambda={lam:g}/closed-form",
                                 c.mc.value, c.closed_form, c.mc.std_error))
                out.append(relative(f"laplace/p=2/{label}/n={n}/lambda={lam:g}/determinant-form",
                                    c.determinant_form, c.closed_form, 1e-12))
    sweep = slab_sweep(l1_plane(), 1.0, 2, "diag", 1.0, mc)
    out.append(Check("laplace/slab/l1^2/monotone", sweep.estimates[0].value, sweep.estimates[-1].value,
                     None, sweep.monotone))
    last = sweep.estimates[-1]
    out.append(close("laplace/slab/l1^2/limit", last.value, sweep.limit.value,
                     math.hypot(last.std_error, sweep.limit.std_error)))
    return out


def detlab_checks(samples=200_000, seed=0, workers=None, steps=4):
    mc = _mc(samples, seed, workers)
    out = []
    scalar = PSDSamplerSpec(1, kind="uniform", lo=1.0, hi=2.0)
    cols = det_schur_samples(scalar, [[0.5, 0.5], [1.0, 0.0]], 1.0, mc)
    mixed = Estimate.from_samples(cols[:, 0], seed)
    exact_mixed = 20 * math.log(2) - 12 * math.log(3)
    out.append(close("detlab/uniform-scalar/mean", mixed.value, exact_mixed, mixed.std_error))
    out.append(leq("detlab/uniform-scalar/mean<=ln2", mixed.value, math.log(2), mixed.std_error))
    r = one_sided(cols[:, 1], cols[:, 0], (0, 1))
    out.append(paired("detlab/uniform-scalar/paired", r, cols[:, 1], cols[:, 0]))

    wishart = PSDSamplerSpec(2, kind="wishart")
    alphas = np.array([t**2 for t in majorization_chain(3, steps)])
    for rr in (0.5, 1.0):
        cols = det_schur_samples(wishart, alphas, rr, mc)
        for rel in ordered_pairs([cols[:, k] for k in range(cols.shape[1])], increasing=True):
            i, j = rel.pair
            out.append(paired(f"detlab/wishart/m=2/n=3/r={rr:g}/step{i}<=step{j}", rel, cols[:, j], cols[:, i]))
    return out


def random_measure(rng, m_max=4, atoms_max=12):
    while True:
        m = int(rng.integers(1, m_max + 1))
        k = int(rng.integers(m, atoms_max + 1))
        u = rng.standard_normal((k, m))
        u /= np.linalg.norm(u, axis=1)[:, None]
        c = rng.uniform(0.1, 2.0, k)
        try:
            return DiscreteMeasure(c, u)
        except ValueError:
            continue


def lewis_checks(count=100, seed=0, workers=None, probes=100):
    out = []
    for p in (0.5, 1.0, 1.5, 2.0):
        rng = _rng(seed, int(p * 10))
        converged = whitened = identity = 0
        for _ in range(count):
            mu = random_measure(rng)
            res = lewis_solve(mu, p)
            converged += res.converged
            x = rng.standard_normal((probes, mu.m))
            before = LpDiscrete(p, mu).norm(x @ res.transform.T)
            after = LpDiscrete(p, res.measure).norm(x)
            identity += bool(np.max(np.abs(after - before) / before) < 1e-10)
            if p == 2.0:
                W = whitening(mu)
                whitened += bool(res.residual < 1e-10 and np.max(np.abs(res.transform - W)) < 1e-10)
        out.append(Check(f"lewis/p={p:g}/converged-fraction", converged / count, 0.95, None,
                         converged >= 0.95 * count))
        out.append(Check(f"lewis/p={p:g}/norm-identity-fraction", identity / count, 1.0, None,
                         identity == count))
        if p == 2.0:
            out.append(Check("lewis/p=2/whitening-fraction", whitened / count, 1.0, None, whitened == count))
    return out


def random_invertible(rng, m=2):
    while True:
        T = rng.standard_normal((m, m))
        if abs(np.linalg.det(T)) > 0.2:
            return T


def invariance_checks(count=20, samples=100_000, seed=0, workers=None):
    mc = _mc(samples, seed, workers)
    rng = _rng(seed, 8)
    out = []
    for k in range(count):
        T = random_invertible(rng)
        c = invariance_ratio_check(l1_plane(), 1.0, 3, T, "diag", "e1", mc)
        sigma = math.hypot(c.ratio_X.std_error, c.ratio_TX.std_error)
        out.append(Check(f"invariance/T{k}/ratio", c.ratio_TX.value, c.ratio_X.value,
                         abs(c.ratio_TX.value - c.ratio_X.value) / sigma if sigma > 0 else 0.0, c.agree))
        out.append(Check(f"invariance/T{k}/det-scaling", c.scale.value, c.expected_scale,
                         abs(c.scale.value - c.expected_scale) / c.scale.std_error if c.scale.std_error > 0 else 0.0,
                         c.scale_agree))
    return out


def projection_checks(count=10, samples=10_000, seed=0, workers=None):
    mc = _mc(samples, seed, workers)
    cfg = MembershipConfig()
    rng = _rng(seed, 9)
    out = []
    for K in (LqBall(1.0, 2), LqBall(2.0, 2), LqBall(math.inf, 2)):
        for n in (2, 3):
            for k in range(count):
                theta = rng.standard_normal(n)
                theta /= np.linalg.norm(theta)
                c = projection_lower_bound_check(K, n, theta, cfg, mc)
                out.append(Check(f"projections/{K}/n={n}/theta{k}", c.bound, c.proj.value,
                                 _margin(c.proj.value - c.bound, c.proj.std_error), c.holds))
            c = projection_lower_bound_check(K, n, "e1", cfg, mc)
            out.append(close(f"projections/{K}/n={n}/e1-equality", c.proj.value, c.bound, c.proj.std_error))
    seg = projection_volume(LqBall(math.inf, 1), 2, "diag", cfg, mc)
    out.append(close("projections/segment/diag", seg.value, 2 * math.sqrt(2), seg.std_error))
    out.append(leq("projections/segment/diag>=2", 2.0, seg.value, seg.std_error))
    disk = projection_volume(Euclidean(2), 2, "diag", cfg, mc)
    out.append(close("projections/disk/diag", disk.value, 2 * math.pi, disk.std_error))
    out.append(leq("projections/disk/diag>=pi", math.pi, disk.value, disk.std_error))
    return out


def random_subspace(rng, n, d):
    q, _ = np.linalg.qr(rng.standard_normal((n, d)))
    return Subspace(q.T)


def decomposition_checks(count=100, samples=10_000, seed=0, workers=None):
    mc = _mc(samples, seed, workers)
    cfg = MembershipConfig()
    rng = _rng(seed, 10)
    worst = 0.0
    for _ in range(count):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, 4))
        theta = rng.standard_normal(n)
        theta /= np.linalg.norm(theta)
        worst = max(worst, decomposition_identity_check(n, theta, m=m))
    out = [Check("decomposition/block/max-deviation", worst, 1e-12, None, worst < 1e-12)]
    worst = 0.0
    for _ in range(count):
        n = int(rng.integers(2, 7))
        d = int(rng.integers(1, n))
        worst = max(worst, decomposition_identity_check(n, F=random_subspace(rng, n, d)))
    out.append(Check("decomposition/symmetric/max-deviation", worst, 1e-12, None, worst < 1e-12))

    for q in (1.0, 2.0, math.inf):
        for n in range(2, 5):
            for d in range(1, n):
                c = onesym_projection_check(LqBall(q, n), random_subspace(rng, n, d), cfg, mc)
                out.append(Check(f"onesym/{LqBall(q, n)}/d={d}", c.bound, c.proj.value,
                                 _margin(c.proj.value - c.bound, c.proj.std_error), c.holds))

    axes = [(1.0, Subspace(np.eye(2)[[0]])), (1.0, Subspace(np.eye(2)[[1]]))]
    for label, L, scale in (("unit-square", LqBall(math.inf, 2), 0.5), ("disk", Euclidean(2), 1.0)):
        c = loomis_whitney_check(L, axes, 1.0, cfg, mc, scale=scale)
        out.append(Check(f"loomis-whitney/{label}/axes", c.lhs, c.rhs, _margin(c.rhs - c.lhs, c.rhs_std_error),
                         c.holds))
    pairs, s = block_decomposition(np.array([3.0, 2.0, 1.0]) / math.sqrt(14.0))
    c = loomis_whitney_check(LqBall(1.0, 3), pairs, s, cfg, mc.with_samples(max(samples // 4, 1000)))
    out.append(Check("loomis-whitney/l1^3/block-family", c.lhs, c.rhs, _margin(c.rhs - c.lhs, c.rhs_std_error),
                     c.holds))
    return out


def meanwidth_checks(samples=100_000, seed=0, workers=None, steps=4):
    mc = _mc(samples, seed, workers)
    R = Euclidean(1)
    wd = mean_width_estimate(R, 1.0, 2, "diag", mc)
    we = mean_width_estimate(R, 1.0, 2, "e1", mc)
    out = [
        close("meanwidth/R/p=1/diag", wd.value, math.sqrt(2), wd.std_error),
        close("meanwidth/R/p=1/e1", we.value, 1.0, we.std_error),
        leq("meanwidth/R/p=1/e1<=diag", we.value, wd.value, math.hypot(wd.std_error, we.std_error)),
    ]
    ball = mean_width_estimate(Euclidean(2), 2.0, 3, "diag", mc)
    out.append(close("meanwidth/l2^2/p=2/diag", ball.value, 1.0, ball.std_error))
    X = LpDiscrete(1.0, isotropic_three_atoms())
    chain = majorization_chain(3, steps)
    rep = meanwidth_schur_suite(X, 1.0, 3, chain, mc)
    for r in rep["relations"]:
        i, j = r.pair
        out.append(Check(f"meanwidth/3atom/n=3/step{j}<=step{i}", rep["estimates"][j].value,
                         rep["estimates"][i].value, r.slack_sigma, r.ordered))
    # first moments of the Gaussian norm follow the same order
    cols = [norm_power_samples(X, 1.0, 3, t, 1.0, mc) for t in chain]
    for r in ordered_pairs(cols, increasing=False):
        i, j = r.pair
        out.append(paired(f"meanwidth/3atom/n=3/first-moment/step{j}<=step{i}", r, cols[i], cols[j]))
    return out


def calibration_checks(samples=200_000, seed=0, workers=None):
    mc = _mc(samples, seed, workers)
    out = []
    for k, p in ((2, 1.0), (2, 2.0), (2, math.inf), (4, 1.0), (4, 2.0)):
        est = section_volume(LqBall(p, k), Subspace.full(k), mc)
        exact = lp_ball_volume(k, p).value
        out.append(close(f"calibration/{LqBall(p, k)}", est.value, exact, est.std_error))
    out.append(Check("calibration/diagonal-limit/m=2", diagonal_section_limit(2).value, 2.0, None, diagonal_section_limit(2).value == 2.0))
    return out


SUITES = {
    "exact": (exact_checks,),
    "schur-sections": (cross_polytope_section_checks, schur_section_checks),
    "laplace": (laplace_checks,),
    "detlab": (detlab_checks,),
    "projections": (projection_checks, decomposition_checks),
    "meanwidth": (meanwidth_checks,),
    "lewis": (lewis_checks,),
    "invariance": (invariance_checks,),
    "calibration": (calibration_checks,),
}
SUITE_NAMES = ("all",) + tuple(SUITES)


def run_suite(name, seed=0, workers=None):
    if name == "all":
        groups = [g for suite in SUITES.values() for g in suite]
    elif name in SUITES:
        groups = list(SUITES[name])
    else:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITE_NAMES)}")
    checks = []
    for group in groups:
        checks.extend(group(seed=seed, workers=workers))
    return checks


def to_csv(checks):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for c in checks:
        w.writerow(c.row())
    return buf.getvalue()


def timed(fn, *args, **kwargs):
    start = time.perf_counter()
    result = fn(*args, **kwargs)
    return result, time.perf_counter() - start
