import math

import numpy as np
import pytest

from lpsections.exact import lp_ball_volume
from lpsections.sections import (
    block_section_volume,
    invariance_ratio_check,
    question_probe,
    schur_section_suite,
    section_volume,
)
from lpsections.spaces import Euclidean, LpPower, LqBall, Subspace, hyperplane_basis, majorization_chain
from lpsections.streams import MCConfig

MC = MCConfig(samples=200_000, seed=2)


def within(est, value, k=4.0):
    return abs(est.value - value) <= k * est.std_error + 1e-12


def plane_rejection(norm, sub, radius, samples=400_000, seed=9):
    rng = np.random.default_rng(seed)
    c = rng.uniform(-radius, radius, (samples, sub.dim))
    frac = np.mean(norm(c @ sub.basis) <= 1.0)
    box = (2 * radius) ** sub.dim
    return box * frac, box * math.sqrt(frac * (1 - frac) / samples)


def test_square_full_space():
    assert within(section_volume(LqBall(math.inf, 2), Subspace.full(2), MC), 4.0)


@pytest.mark.parametrize("k,p", [(2, 1.0), (3, 0.5), (4, 2.0), (6, 1.0)])
def test_full_space_calibration(k, p):
    assert within(section_volume(LqBall(p, k), Subspace.full(k), MC), lp_ball_volume(k, p).value)


def test_cross_polytope_diag_section():
    assert within(block_section_volume(LqBall(1.0, 2), 1.0, 2, "diag", MC), 1.0)


def test_hexagon_against_rejection():
    H = hyperplane_basis(np.full(3, 1 / math.sqrt(3)), 1)
    body = LqBall(1.0, 3)
    est = section_volume(body, H, MC)
    ref, se = plane_rejection(body.norm, H, 1.0)
    assert abs(est.value - ref) < 4 * math.hypot(est.std_error, se)
    # regular hexagon with vertices (1/2, -1/2, 0) etc., circumradius 1/sqrt(2)
    assert est.value == pytest.approx(3 * math.sqrt(3) / 4, rel=0.01)


def test_quasi_norm_section_against_rejection():
    H = hyperplane_basis(np.array([0.6, 0.8, 0.0]), 1)
    body = LqBall(0.5, 3)
    est = section_volume(body, H, MC)
    ref, se = plane_rejection(body.norm, H, 1.0)
    assert abs(est.value - ref) < 4 * math.hypot(est.std_error, se)


def test_euclidean_disk_sections():
    diag = block_section_volume(Euclidean(2), 1.0, 2, "diag", MC)
    e1 = block_section_volume(Euclidean(2), 1.0, 2, "e1", MC)
    assert within(diag, math.pi / 2)
    assert within(e1, math.pi)


def test_segment_sections():
    rep = schur_section_suite(Euclidean(1), 1.0, 2, ["diag", "e1"], MC)
    assert within(rep.estimates[0], math.sqrt(2)) and within(rep.estimates[1], 2.0)
    assert rep.passed


@pytest.mark.parametrize("m,n", [(1, 3), (2, 2), (2, 3)])
def test_euclidean_p2_sections_constant(m, n):
    rep = schur_section_suite(Euclidean(m), 2.0, n, majorization_chain(n, 3), MC.with_samples(20_000))
    ball = lp_ball_volume(m * (n - 1), 2).value
    for e in rep.estimates:
        assert e.value == pytest.approx(ball, rel=1e-12)
    assert rep.passed


def test_diagonal_is_minimal_for_real_line():
    for p in (0.5, 1.0, 2.0):
        rep = schur_section_suite(Euclidean(1), p, 3, majorization_chain(3, 4), MC.with_samples(50_000))
        assert rep.passed
        first = rep.estimates[0].value
        assert all(e.value >= first - 4 * e.std_error for e in rep.estimates)


def test_euclidean_sections_below_lower_dim_ball():
    rng = np.random.default_rng(1)
    for p in (0.5, 1.0):
        theta = rng.standard_normal(3)
        theta /= np.linalg.norm(theta)
        rep = schur_section_suite(Euclidean(2), p, 3, ["diag", theta, "e1"], MC.with_samples(50_000))
        assert all(c.ordered for c in rep.bound_checks)


def test_lp_lq_sandwich():
    # X = l_2^2 as an L_1 subspace, n = 3: diag <= section <= e1
    rng = np.random.default_rng(4)
    theta = np.abs(rng.standard_normal(3))
    theta = np.sort(theta)[::-1] / np.linalg.norm(theta)
    chain = ["diag", theta, "e1"]
    rep = schur_section_suite(LqBall(2.0, 2), 1.0, 3, chain, MC.with_samples(50_000))
    assert rep.passed


def test_chain_must_be_ordered():
    with pytest.raises(ValueError):
        schur_section_suite(Euclidean(1), 1.0, 2, ["e1", "diag"], MC)


def test_high_dimension_warns():
    with pytest.warns(RuntimeWarning):
        section_volume(LqBall(1.0, 10), Subspace.full(10), MC.with_samples(100))


def test_invariance_identity_and_dilation():
    c = invariance_ratio_check(Euclidean(2), 1.0, 2, np.eye(2), "diag", "e1", MC)
    assert c.ratio_X.value == c.ratio_TX.value and c.agree
    c = invariance_ratio_check(Euclidean(2), 1.0, 2, 2 * np.eye(2), "diag", "e1", MC)
    assert c.expected_scale == pytest.approx(4.0)
    assert c.scale_agree and c.agree


def test_invariance_shear():
    T = np.array([[1.0, 0.7], [0.0, 1.0]])
    c = invariance_ratio_check(LqBall(1.0, 2), 1.0, 3, T, "diag", "e1", MC)
    assert c.agree and c.scale_agree


def test_invariance_rejects_singular():
    with pytest.raises(ValueError):
        invariance_ratio_check(Euclidean(2), 1.0, 2, np.ones((2, 2)), "diag", "e1", MC)


def test_question_probe_reports_both_sides():
    out = question_probe(LqBall(1.0, 1), 3.0, 3, "diag", MC.with_samples(10_000))
    assert out["section"].value > 0 and out["lower_dim_volume"].value > 0
    exact = lp_ball_volume(2, 3.0).value
    assert within(out["lower_dim_volume"], exact)


def test_section_of_power_body_matches_flat_norm():
    body = LpPower(1.0, 2, LqBall(1.0, 2))
    a = section_volume(body, hyperplane_basis(np.full(2, 1 / math.sqrt(2)), 2), MC)
    b = section_volume(LqBall(1.0, 4), hyperplane_basis(np.full(2, 1 / math.sqrt(2)), 2), MC)
    assert a.value == pytest.approx(b.value, rel=1e-12)


def test_section_independent_of_hyperplane_basis():
    theta = np.array([0.6, 0.0, 0.8])
    H = hyperplane_basis(theta, 2)
    Q, _ = np.linalg.qr(np.random.default_rng(7).standard_normal((H.dim, H.dim)))
    body = LpPower(1.0, 3, LqBall(1.0, 2))
    a = section_volume(body, H, MC)
    b = section_volume(body, Subspace(Q @ H.basis), MCConfig(samples=200_000, seed=77))
    assert abs(a.value - b.value) < 4 * math.hypot(a.std_error, b.std_error)
