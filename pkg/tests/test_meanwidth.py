import math

import numpy as np
import pytest

from lpsections.meanwidth import mean_width_estimate, meanwidth_schur_suite
from lpsections.spaces import DiscreteMeasure, Euclidean, LpDiscrete, LpPower, LqBall, hyperplane_basis, majorization_chain
from lpsections.streams import MCConfig, collect

MC = MCConfig(samples=100_000, seed=6)


def three_atoms():
    ang = np.array([0.0, math.pi / 3, 2 * math.pi / 3])
    return DiscreteMeasure(np.full(3, 2 / 3), np.column_stack([np.cos(ang), np.sin(ang)]))


def test_real_line_values():
    assert mean_width_estimate(Euclidean(1), 1.0, 2, "diag", MC).value == pytest.approx(math.sqrt(2))
    assert mean_width_estimate(Euclidean(1), 1.0, 2, "e1", MC).value == pytest.approx(1.0)


@pytest.mark.parametrize("theta", ["diag", "e1", [0.6, 0.8, 0.0]])
def test_euclidean_is_one(theta):
    assert mean_width_estimate(Euclidean(2), 2.0, 3, theta, MC).value == pytest.approx(1.0, rel=1e-12)


def test_rejects_quasi_norms():
    with pytest.raises(ValueError):
        mean_width_estimate(Euclidean(1), 0.5, 2, "diag", MC)


def test_rotation_invariance():
    X = LpDiscrete(1.0, three_atoms())
    theta = np.array([0.6, 0.8, 0.0])
    est = mean_width_estimate(X, 1.0, 3, theta, MC)
    H = hyperplane_basis(theta, 2)
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((H.dim, H.dim)))
    mixed = Q @ H.basis
    body = LpPower(1.0, 3, X)

    def draw(rng, size):
        g = rng.standard_normal((size, H.dim))
        return body.norm((g / np.linalg.norm(g, axis=1)[:, None]) @ mixed)

    vals = collect(draw, MCConfig(samples=100_000, seed=99))
    other = vals.mean()
    se = math.hypot(est.std_error, vals.std(ddof=1) / math.sqrt(vals.size))
    assert abs(est.value - other) < 4 * se


def test_schur_suite_discrete_measure():
    X = LpDiscrete(1.0, three_atoms())
    rep = meanwidth_schur_suite(X, 1.0, 3, majorization_chain(3, 4), MC)
    assert rep["passed"]
    values = [e.value for e in rep["estimates"]]
    assert values[0] > values[-1]


def test_schur_suite_euclidean_constant():
    rep = meanwidth_schur_suite(Euclidean(2), 2.0, 3, majorization_chain(3, 3), MC)
    assert rep["passed"]
    assert all(e.value == pytest.approx(1.0, rel=1e-12) for e in rep["estimates"])


def test_schur_suite_requires_lewis_position():
    X = LpDiscrete(1.0, DiscreteMeasure([2.0, 1.0], np.eye(2)))
    with pytest.raises(ValueError):
        meanwidth_schur_suite(X, 1.0, 3, majorization_chain(3, 2), MC)
    assert meanwidth_schur_suite(LqBall(1.0, 2), 1.0, 2, ["diag", "e1"], MC)["passed"]
