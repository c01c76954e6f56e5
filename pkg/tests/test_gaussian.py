import math
import numpy as np
import pytest
from scipy import integrate, special, stats

from lpsections.gaussian import (
    PSDSamplerSpec,
    det_identity_p2_check,
    det_schur_estimate,
    det_schur_samples,
    laplace_estimate,
    negative_moment_estimate,
    norm_moment_estimate,
    slab_laplace_estimate,
    slab_sweep,
)
from lpsections.spaces import DiscreteMeasure, Euclidean, LqBall
from lpsections.streams import MCConfig

MC = MCConfig(samples=200_000, seed=4)


def within(est, value, k=4.0):
    return abs(est.value - value) <= k * est.std_error + 1e-12


def test_laplace_coordinate_hyperplane():
    # G_{e1} = (0, g): E exp(-|g|) = e^(1/2) erfc(1/sqrt 2)
    oracle = math.exp(0.5) * special.erfc(1 / math.sqrt(2))
    assert oracle == pytest.approx(0.5231, abs=1e-4)
    assert within(laplace_estimate(Euclidean(1), 1.0, 2, "e1", 1.0, MC), oracle)


@pytest.mark.parametrize("m,n,lam", [(1, 2, 0.5), (2, 3, 1.0), (3, 2, 2.0)])
def test_laplace_euclidean_closed_form(m, n, lam):
    est = laplace_estimate(Euclidean(m), 2.0, n, "diag", lam, MC)
    assert within(est, (1 + 2 * lam) ** (-m * (n - 1) / 2))


def chi_moment(dim, power):
    dens = stats.chi(dim).pdf
    return integrate.quad(lambda r: r**power * dens(r), 0, np.inf)[0]


@pytest.mark.parametrize("dim_m,n,alpha", [(2, 2, 0.5), (2, 3, 1.5), (1, 4, 1.0)])
def test_negative_moment_against_chi_quadrature(dim_m, n, alpha):
    est = negative_moment_estimate(Euclidean(dim_m), 2.0, n, "diag", alpha, MC)
    assert within(est, chi_moment(dim_m * (n - 1), -alpha))


def test_first_moment_against_chi_quadrature():
    est = norm_moment_estimate(Euclidean(2), 2.0, 3, [0.6, 0.8, 0.0], 1.0, MC)
    assert within(est, chi_moment(4, 1.0))


def test_negative_moment_range():
    with pytest.raises(ValueError):
        negative_moment_estimate(Euclidean(1), 1.0, 3, "diag", 2.0, MC)
    with pytest.raises(ValueError):
        negative_moment_estimate(Euclidean(1), 1.0, 3, "diag", 0.0, MC)
    with pytest.warns(RuntimeWarning):
        negative_moment_estimate(Euclidean(1), 1.0, 3, "diag", 1.2, MC.with_samples(100))


def slab_oracle(lam, eps):
    # X = R, p = 1, n = 2, theta = diag: x = t h + w theta with h = (1, -1)/sqrt 2
    # |x1| + |x2| = sqrt(2) max(|t|, |w|); the t integral is closed form piecewise
    c = lam * math.sqrt(2)

    def inner(w):
        a = abs(w)
        near = math.exp(-c * a) * (special.ndtr(a) - special.ndtr(-a))
        # int_{|t|>a} phi(t) exp(-c|t|) dt = 2 exp(c^2/2) Phi(-a - c)
        far = 2 * math.exp(c * c / 2) * special.ndtr(-a - c)
        return math.exp(-w * w / 2) / math.sqrt(2 * math.pi) * (near + far)

    val, _ = integrate.quad(inner, -eps / 2, eps / 2, epsabs=1e-13, points=[0.0])
    return math.sqrt(2 * math.pi) / eps * val


def test_slab_oracle_by_direct_double_integral():
    lam, eps = 1.0, 0.5

    def f(t, w):
        x = math.sqrt(2) * max(abs(t), abs(w))
        return math.exp(-(t * t + w * w) / 2 - lam * x) / (2 * math.pi)

    val, _ = integrate.dblquad(f, -eps / 2, eps / 2, -8, 8, epsabs=1e-10)
    assert slab_oracle(lam, eps) == pytest.approx(math.sqrt(2 * math.pi) / eps * val, rel=1e-5)


@pytest.mark.parametrize("eps", [0.5, 0.1])
def test_slab_against_quadrature(eps):
    est = slab_laplace_estimate(Euclidean(1), 1.0, 2, "diag", 1.0, eps, MC)
    assert within(est, slab_oracle(1.0, eps))


def test_slab_sweep_approaches_section_transform():
    sweep = slab_sweep(LqBall(1.0, 2), 1.0, 2, "diag", 1.0, MC)
    assert sweep.monotone
    last = sweep.estimates[-1]
    assert abs(last.value - sweep.limit.value) < 4 * math.hypot(last.std_error, sweep.limit.std_error)


def test_uniform_scalar_det_example():
    s = PSDSamplerSpec(1, kind="uniform", lo=1.0, hi=2.0)
    est = det_schur_estimate(s, [0.5, 0.5], 1.0, 2, MC)
    assert within(est, 20 * math.log(2) - 12 * math.log(3))
    assert det_schur_estimate(s, [1.0, 0.0], 1.0, 2, MC).value == pytest.approx(math.log(2), abs=0.005)


def test_constant_sampler_is_exact():
    M = ((2.0, 0.5), (0.5, 1.0))
    s = PSDSamplerSpec(2, kind="constant", matrix=M)
    est = det_schur_estimate(s, [0.2, 0.3, 0.5], 0.75, 3, MC.with_samples(10))
    assert est.value == pytest.approx(np.linalg.det(np.array(M)) ** -0.75, rel=1e-12)


def test_det_columns_share_matrices():
    s = PSDSamplerSpec(2, kind="wishart")
    cols = det_schur_samples(s, [[1 / 3, 1 / 3, 1 / 3], [1.0, 0.0, 0.0]], 1.0, MC.with_samples(1000))
    assert cols.shape == (1000, 2)
    again = det_schur_samples(s, [[1.0, 0.0, 0.0]], 1.0, MC.with_samples(1000))
    np.testing.assert_array_equal(again[:, 0], cols[:, 1])


def test_sampler_validation():
    with pytest.raises(ValueError):
        PSDSamplerSpec(2, kind="cauchy")
    with pytest.raises(ValueError):
        PSDSamplerSpec(1, kind="uniform", lo=0.0)
    M = PSDSamplerSpec(3).sample(np.random.default_rng(0), (50,))
    assert np.all(np.linalg.eigvalsh(M) > 0)


def test_det_identity_p2():
    ang = np.array([0.0, math.pi / 3, 2 * math.pi / 3])
    mu = DiscreteMeasure(np.full(3, 2 / 3), np.column_stack([np.cos(ang), np.sin(ang)]))
    c = det_identity_p2_check(mu, 3, "diag", 1.0, MC)
    assert c.agree
    assert c.determinant_form == pytest.approx(c.closed_form, rel=1e-12)
    assert c.closed_form == pytest.approx(3.0**-2)
    with pytest.raises(ValueError):
        det_identity_p2_check(DiscreteMeasure([2.0, 1.0], np.eye(2)), 3, "diag", 1.0, MC)


def test_paired_streams_across_theta():
    a = laplace_estimate(LqBall(1.0, 2), 1.0, 3, "diag", 1.0, MC.with_samples(1000))
    b = laplace_estimate(LqBall(1.0, 2), 1.0, 3, "diag", 1.0, MC.with_samples(1000))
    assert a == b
