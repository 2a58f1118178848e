import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import kstest

from smoothcert.gnd import (
    ONE_PLUS,
    GaussianRenyi,
    GndKl,
    GndParams,
    LaplaceRenyi,
    eps_alpha_laplace,
    eps_gaussian,
    eps_kl_gnd,
    invert_divergence,
    numeric_renyi_divergence,
    pdf,
    sample_noise,
)

# Frozen from the quadrature oracle (KL between shape-4 noise and its
# one-standard-deviation shift).
KL_B4_T1 = 0.7996565168278116

# Kurtosis gamma(5/b) gamma(1/b) / gamma(3/b)^2, for the variance band.
_KURTOSIS = {1: 6.0, 2: 3.0, 4: 2.1884971, 10: 1.8842055}


def test_params_validation():
    with pytest.raises(ValueError):
        GndParams(0.0, -1.0, 2)
    with pytest.raises(ValueError):
        GndParams(0.0, 1.0, 3)
    with pytest.raises(ValueError):
        GndParams(0.0, 1.0, 0)
    assert GndParams(0.0, 1.0, 1).sigma_star == pytest.approx(1 / math.sqrt(2))
    assert GndParams(0.0, 1.0, 2).sigma_star == pytest.approx(math.sqrt(2))


def test_pdf_known_points():
    assert pdf(GndParams(0, 1, 2), 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-12)
    assert pdf(GndParams(0, 1, 1), 0.0) == pytest.approx(1 / math.sqrt(2), rel=1e-12)


@pytest.mark.parametrize("b", [1, 2, 4, 10])
def test_pdf_normalizes(b):
    params = GndParams(0.0, 1.0, b)
    ss = params.sigma_star
    pts = [k * ss for k in (-3, -1, -0.5, 0, 0.5, 1, 3)]
    total, _ = quad(lambda x: float(pdf(params, x)), -20 * ss, 20 * ss, points=pts, limit=400)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_sample_moments_gaussian_case():
    x = sample_noise(GndParams(0, 1, 2), 10**5, seed=123)
    assert abs(x.mean()) < 0.02
    assert abs(x.std() - 1.0) < 0.02


def test_sample_gaussian_reduction_ks():
    x = sample_noise(GndParams(0, 1, 2), 10**5, seed=7)
    stat, _ = kstest(x, "norm")
    assert stat < 0.01


def test_sample_deterministic():
    a = sample_noise(GndParams(0.5, 2.0, 4), 1000, seed=99)
    b = sample_noise(GndParams(0.5, 2.0, 4), 1000, seed=99)
    assert np.array_equal(a, b)
    c = sample_noise(GndParams(0.5, 2.0, 4), 1000, seed=100)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("b", [1, 2, 4, 10])
def test_sample_moments_converge(b):
    n = 10**5
    x = sample_noise(GndParams(0.0, 1.0, b), n, seed=b)
    assert abs(x.mean()) < 3.0 / math.sqrt(n)
    var = np.mean(x**2)
    band = 3.0 * math.sqrt((_KURTOSIS[b] - 1.0) / n)
    assert abs(var - 1.0) < band


def test_sample_rejects_bad_n():
    with pytest.raises(ValueError):
        sample_noise(GndParams(), 0, seed=0)


def test_laplace_divergence_values():
    assert eps_alpha_laplace(0.0, 2.0) == 0.0
    expected = math.log((2 / 3) * math.e**2 + (1 / 3) * math.e**-4)
    assert eps_alpha_laplace(math.sqrt(2), 2.0) == pytest.approx(expected, rel=1e-12)
    # sup-log-ratio limit
    assert eps_alpha_laplace(1.7, math.inf) == pytest.approx(math.sqrt(2) * 1.7, rel=1e-12)
    with pytest.raises(ValueError):
        eps_alpha_laplace(1.0, 1.0)
    with pytest.raises(ValueError):
        eps_alpha_laplace(-0.1, 2.0)


def test_gaussian_divergence_values():
    assert eps_gaussian(1.0, 2.0) == pytest.approx(1.0)
    assert eps_gaussian(0.0, 17.0) == 0.0
    assert eps_gaussian(2.0, 1.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        eps_gaussian(1.0, 0.5)


def test_kl_gnd_values():
    assert eps_kl_gnd(2, 1.0) == pytest.approx(0.5, rel=1e-12)
    assert eps_kl_gnd(4, 1.0) == pytest.approx(KL_B4_T1, rel=1e-12)
    assert eps_kl_gnd(4, 0.0) == 0.0
    assert eps_kl_gnd(10, 0.0) == 0.0
    with pytest.raises(ValueError):
        eps_kl_gnd(3, 1.0)
    with pytest.raises(ValueError):
        eps_kl_gnd(1, 1.0)


@pytest.mark.parametrize(
    "kind",
    [LaplaceRenyi(1.5), LaplaceRenyi(5.0), GaussianRenyi(2.0), GndKl(2), GndKl(4), GndKl(10)],
)
def test_forward_strictly_increasing(kind):
    ts = np.linspace(0.0, 3.0, 25)
    vals = [kind.forward(t) for t in ts]
    diffs = np.diff(vals)
    assert np.all(diffs > 0)


def test_invert_closed_forms():
    assert invert_divergence(GaussianRenyi(2.0), 1.0) == pytest.approx(1.0, abs=1e-8)
    assert invert_divergence(GndKl(2), 0.5) == pytest.approx(1.0, abs=1e-8)
    assert invert_divergence(LaplaceRenyi(2.0), 0.0) == 0.0
    with pytest.raises(ValueError):
        invert_divergence(GndKl(2), -1.0)


@pytest.mark.parametrize("kind", [LaplaceRenyi(2.0), GaussianRenyi(3.0), GndKl(4), GndKl(10)])
def test_invert_round_trip(kind):
    for t in np.linspace(0.0, 3.0, 13):
        eps = kind.forward(t)
        assert invert_divergence(kind, eps) == pytest.approx(t, abs=1e-8)


def test_numeric_divergence_gaussian_closed_form():
    val = numeric_renyi_divergence(GndParams(0, 1, 2), 1.0, 2.0)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_numeric_divergence_cross_checks_laplace():
    val = numeric_renyi_divergence(GndParams(0, 1, 1), math.sqrt(2), 2.0)
    assert val == pytest.approx(eps_alpha_laplace(math.sqrt(2), 2.0), abs=1e-6)


def test_numeric_divergence_zero_shift():
    assert numeric_renyi_divergence(GndParams(0, 1, 4), 0.0, 5.0) == 0.0
    assert numeric_renyi_divergence(GndParams(0, 1, 4), 0.0, ONE_PLUS) == 0.0


def test_numeric_divergence_kl_matches_closed_form():
    for b in (2, 4, 10):
        got = numeric_renyi_divergence(GndParams(0, 1, b), 1.0, ONE_PLUS)
        assert got == pytest.approx(eps_kl_gnd(b, 1.0), rel=1e-8)
