import numpy as np
import pytest
from scipy.stats import chi2

from heiswalk import hgroup as hg
from heiswalk.errors import ConfigInvalid


def test_group_mul_examples():
    np.testing.assert_allclose(hg.group_mul([1, 0, 0], [0, 1, 0]), [1, 1, 0.5])
    q = hg.point(0.3, -1.2, 0.7)
    np.testing.assert_allclose(hg.group_mul(q, [0, 0, 0]), q)
    np.testing.assert_allclose(hg.group_mul(q, hg.group_inv(q)), [0, 0, 0],
                               atol=1e-15)


def test_group_inv_examples():
    np.testing.assert_allclose(hg.group_inv([1, 2, 3]), [-1, -2, -3])
    np.testing.assert_allclose(hg.group_inv([0, 0, 0]), [0, 0, 0])
    q = hg.point(0.4, 0.5, -0.1)
    np.testing.assert_allclose(hg.group_inv(hg.group_inv(q)), q)


def test_associativity_randomized():
    rng = np.random.default_rng(7)
    a, b, c = rng.normal(size=(3, 10_000, 3))
    lhs = hg.group_mul(hg.group_mul(a, b), c)
    rhs = hg.group_mul(a, hg.group_mul(b, c))
    scale = 1.0 + np.abs(lhs)
    assert np.max(np.abs(lhs - rhs) / scale) < 1e-12


def test_gauge_examples():
    assert hg.gauge([3, 4, 0]) == pytest.approx(5.0)
    assert hg.gauge([0, 0, 1]) == pytest.approx(2.0)
    assert hg.gauge([0, 0, 0]) == 0.0


def test_gauge_dilation_homogeneity():
    rng = np.random.default_rng(8)
    q = rng.normal(size=(10_000, 3))
    lam = rng.uniform(0.1, 5.0, size=10_000)
    g1 = hg.gauge(hg.dilate(lam, q))
    g2 = lam * hg.gauge(q)
    assert np.max(np.abs(g1 - g2) / (1e-300 + g2)) < 1e-12


def test_dist_examples():
    q = hg.point(0.2, 0.4, -0.3)
    assert hg.dist(q, q) == 0.0
    assert hg.dist([0, 0, 0], [3, 4, 0]) == pytest.approx(5.0)
    # inv(1,0,0)*(1,1,0) = (0,1,-1/2), gauge (1 + 16/4)^(1/4)
    assert hg.dist([1, 0, 0], [1, 1, 0]) == pytest.approx(5.0**0.25)


def test_dist_left_invariance():
    rng = np.random.default_rng(9)
    g, a, b = rng.normal(size=(3, 10_000, 3))
    d1 = hg.dist(hg.group_mul(g, a), hg.group_mul(g, b))
    d2 = hg.dist(a, b)
    assert np.max(np.abs(d1 - d2) / (1e-300 + d2)) < 1e-12


def test_dilate_examples():
    np.testing.assert_allclose(hg.dilate(2.0, [1, 1, 1]), [2, 2, 4])
    q = hg.point(0.3, -0.4, 0.2)
    np.testing.assert_allclose(hg.dilate(1.0, q), q)
    comp = hg.dilate(2.0, hg.dilate(3.0, q))
    np.testing.assert_allclose(comp, hg.dilate(6.0, q))
    with pytest.raises(ConfigInvalid):
        hg.dilate(-1.0, q)


def test_ellipsoid_map():
    shape = hg.EllipsoidShape(1.0, 1.0, [0.0, 1.0, 0.0])
    p = np.array([0.3, -0.2, 0.1])
    np.testing.assert_allclose(hg.ellipsoid_map(p, shape), p)
    shape2 = hg.EllipsoidShape(1.0, 2.0, [1.0, 0.0, 0.0])
    np.testing.assert_allclose(hg.ellipsoid_map(np.array([0.0, 0.5, 0.2]),
                                                shape2), [0.0, 0.5, 0.2])
    np.testing.assert_allclose(hg.ellipsoid_map(np.array([1.0, 0.0, 0.0]),
                                                shape2), [2.0, 0.0, 0.0])


def test_ellipsoid_shape_normalizes_orientation():
    s = hg.EllipsoidShape(1.0, 0.5, [3.0, 0.0, 4.0])
    assert np.linalg.norm(s.orientation) == pytest.approx(1.0, abs=1e-12)


def test_sample_ball_containment_and_symmetry():
    rng = np.random.default_rng(10)
    center = hg.point(0.5, -0.25, 0.1)
    s = hg.sample_ball(center, 0.7, rng, 20_000)
    assert np.all(hg.dist(center, s) < 0.7)
    s0 = hg.sample_ball([0, 0, 0], 1.0, rng, 200_000)
    se = np.std(s0, axis=0, ddof=1) / np.sqrt(len(s0))
    assert np.all(np.abs(np.mean(s0, axis=0)) < 4 * se)


def test_sample_ball_second_moment():
    # mean of x^2 over the unit gauge ball is 2/(3 pi)
    rng = np.random.default_rng(11)
    s = hg.sample_ball([0, 0, 0], 1.0, rng, 400_000)
    m = np.mean(s[:, 0] ** 2)
    se = np.std(s[:, 0] ** 2, ddof=1) / np.sqrt(len(s))
    assert abs(m - 2.0 / (3.0 * np.pi)) < 4 * se


def test_sample_ball_chi_square_octants():
    # uniformity across the 8 sign octants at significance 0.001
    rng = np.random.default_rng(12)
    s = hg.sample_ball([0, 0, 0], 1.0, rng, 1_000_000)
    cell = ((s[:, 0] > 0).astype(int) * 4 + (s[:, 1] > 0).astype(int) * 2
            + (s[:, 2] > 0).astype(int))
    counts = np.bincount(cell, minlength=8)
    expected = len(s) / 8.0
    stat = np.sum((counts - expected) ** 2 / expected)
    assert stat < chi2.ppf(1.0 - 0.001, df=7)


def test_ball_volume():
    assert hg.ball_volume(2.0) / hg.ball_volume(1.0) == pytest.approx(16.0)
    with pytest.raises(ConfigInvalid):
        hg.ball_volume(0.0)
    # larger than the inscribed Euclidean ball of radius 1/4
    assert hg.ball_volume(1.0) > 4.0 / 3.0 * np.pi * 0.25**3


def test_ball_volume_rejection_oracle():
    # independent oracle: indicator integration over [-1,1]^2 x [-1/4,1/4]
    rng = np.random.default_rng(13)
    n = 2_000_000
    pts = rng.uniform(-1.0, 1.0, size=(n, 3))
    pts[:, 2] *= 0.25
    frac = np.mean(hg.gauge(pts) < 1.0)
    vol = 2.0 * frac
    se = 2.0 * np.sqrt(frac * (1 - frac) / n)
    assert abs(vol - hg.ball_volume(1.0)) < 4 * se
    assert hg.ball_volume(1.0) == pytest.approx(np.pi**2 / 8.0, rel=1e-15)


def test_ellipsoid_aspect_one_is_ball():
    # aspect 1 ellipsoid samples land in the gauge ball and share its moments
    rng = np.random.default_rng(14)
    shape = hg.EllipsoidShape(0.8, 1.0, [0.0, 0.6, 0.8])
    w = hg._rejection_ball(rng, 100_000)
    mapped = hg.ellipsoid_map(w, shape)
    pts = hg.group_mul([0.2, 0.1, 0.0], hg.dilate(0.8, mapped))
    assert np.all(hg.dist([0.2, 0.1, 0.0], pts) < 0.8 + 1e-12)
    m1 = np.mean(mapped[:, 0] ** 2)
    se = np.std(mapped[:, 0] ** 2, ddof=1) / np.sqrt(len(mapped))
    assert abs(m1 - 2.0 / (3 * np.pi)) < 3 * se


def test_tensor_offsets_symmetric():
    w = hg.tensor_ball_offsets(4096)
    assert np.all(hg.gauge(w) < 1.0)
    # midpoint grids are symmetric under w -> -w
    np.testing.assert_allclose(np.sum(w, axis=0), 0.0, atol=1e-10)
    assert abs(np.mean(w[:, 0] ** 2) - 2 / (3 * np.pi)) < 0.01
