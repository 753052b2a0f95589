import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from codatables.errors import DegenerateData, InvalidData, RankDeficient
from codatables.robust import (
    c_step,
    chi2_cutoff,
    classical_estimate,
    consistency_factor,
    default_h,
    detect_outliers,
    mahalanobis_distances,
    mcd_estimate,
)


def brute_mcd(Z, h):
    """Smallest covariance determinant over every h-subset, by direct loop."""
    best, best_set = math.inf, None
    for idx in itertools.combinations(range(len(Z)), h):
        d = np.linalg.det(np.cov(Z[list(idx)], rowvar=False))
        if d < best:
            best, best_set = d, idx
    return best, best_set


def contaminated(seed, n_in=80, n_out=20, where=(10.0, 10.0)):
    rng = np.random.default_rng(seed)
    return np.vstack([rng.standard_normal((n_in, 2)), np.tile(where, (n_out, 1)) + 0.1 * rng.standard_normal((n_out, 2))])


class TestClassical:
    def test_two_points(self):
        with pytest.raises(RankDeficient):
            classical_estimate([[0, 0], [2, 2]])

    def test_moments(self, rng):
        Z = rng.normal(size=(30, 3))
        est = classical_estimate(Z)
        np.testing.assert_allclose(est.center, Z.mean(axis=0))
        np.testing.assert_allclose(est.scatter, np.cov(Z, rowvar=False), rtol=1e-12)

    def test_identical_rows(self):
        est = classical_estimate(np.ones((6, 2)))
        np.testing.assert_array_equal(est.scatter, 0)
        with pytest.raises(RankDeficient):
            mahalanobis_distances(np.ones((6, 2)), est)

    def test_standard_normal(self):
        Z = np.random.default_rng(3).standard_normal((1000, 3))
        assert np.abs(classical_estimate(Z).scatter - np.eye(3)).max() < 0.15

    def test_non_finite(self):
        with pytest.raises(InvalidData):
            classical_estimate([[0, 1], [np.nan, 2], [3, 4]])


class TestSubsetSize:
    @pytest.mark.parametrize("n,p,alpha,h", [(100, 2, 0.75, 75), (10, 2, 0.5, 6), (10, 2, 1.0, 10), (7, 7, 0.75, 7)])
    def test_default_h(self, n, p, alpha, h):
        assert default_h(n, p, alpha) == h

    def test_alpha_range(self):
        with pytest.raises(ValueError):
            default_h(10, 2, 0.4)

    def test_consistency_factor(self):
        # at the normal model the h-subset covariance underestimates by F_{p+2}(q)/(h/n)
        assert consistency_factor(1.0, 3) == 1.0
        q = stats.chi2.ppf(0.75, 2)
        assert consistency_factor(0.75, 2) == pytest.approx(0.75 / stats.chi2.cdf(q, 4))
        Z = np.random.default_rng(0).standard_normal((200_000, 2))
        d2 = np.einsum("ij,ij->i", Z, Z)
        keep = Z[d2 <= np.quantile(d2, 0.75)]
        np.testing.assert_allclose(np.cov(keep, rowvar=False) * consistency_factor(0.75, 2), np.eye(2), atol=0.02)


class TestMcd:
    def test_alpha_one_is_classical(self, rng):
        Z = rng.normal(size=(40, 3))
        est, ref = mcd_estimate(Z, alpha=1.0), classical_estimate(Z)
        np.testing.assert_array_equal(est.center, ref.center)
        np.testing.assert_array_equal(est.scatter, ref.scatter)

    def test_contaminated_center(self):
        for seed in range(5):
            Z = contaminated(seed)
            assert np.linalg.norm(mcd_estimate(Z, seed=seed).center) < 0.3
            assert np.linalg.norm(classical_estimate(Z).center) > 1.5

    def test_duplicates(self):
        Z = np.vstack([np.tile([1.0, 2.0], (80, 1)), np.random.default_rng(0).normal(size=(20, 2))])
        with pytest.raises(DegenerateData):
            mcd_estimate(Z)

    def test_too_few(self):
        with pytest.raises(RankDeficient):
            mcd_estimate(np.random.default_rng(0).normal(size=(3, 3)))

    @pytest.mark.parametrize("trial", range(12))
    def test_exact_matches_brute_force(self, trial):
        rng = np.random.default_rng(100 + trial)
        n = int(rng.integers(6, 11))
        Z = rng.normal(size=(n, 2))
        Z[: n // 4] += 6
        h = default_h(n, 2, 0.75)
        det, subset = brute_mcd(Z, h)
        for exact in (True, False):
            est = mcd_estimate(Z, seed=trial, exact=exact)
            assert est.raw_determinant == pytest.approx(det, rel=1e-9)
            assert set(np.flatnonzero(est.raw_subset)) == set(subset)

    def test_c_step_monotone(self, rng):
        Z = rng.standard_t(2, size=(60, 3))
        h = default_h(60, 3, 0.75)
        subset = rng.choice(60, h, replace=False)
        last = np.linalg.slogdet(np.cov(Z[subset], rowvar=False))[1]
        for _ in range(10):
            subset, logdet = c_step(Z, subset, h)
            assert logdet <= last + 1e-12
            last = logdet

    def test_reproducible(self, rng):
        Z = rng.standard_t(3, size=(200, 4))
        a, b = mcd_estimate(Z, seed=7), mcd_estimate(Z, seed=7)
        assert a.center.tobytes() == b.center.tobytes()
        assert a.scatter.tobytes() == b.scatter.tobytes()
        assert a.seed == 7

    def test_affine_equivariance(self, rng):
        Z = rng.standard_t(3, size=(150, 3))
        A = rng.normal(size=(3, 3)) + 3 * np.eye(3)
        b = rng.normal(size=3)
        est, mapped = mcd_estimate(Z, seed=1), mcd_estimate(Z @ A.T + b, seed=1)
        np.testing.assert_allclose(mapped.center, A @ est.center + b, rtol=1e-6, atol=1e-9)
        np.testing.assert_allclose(mapped.scatter, A @ est.scatter @ A.T, rtol=1e-6, atol=1e-9)

    def test_raw_flag(self, rng):
        Z = rng.normal(size=(100, 2))
        raw = mcd_estimate(Z, reweight=False)
        assert raw.method == "mcd_raw"
        np.testing.assert_array_equal(raw.scatter, raw.raw_scatter)
        assert mcd_estimate(Z).method == "mcd_reweighted"

    def test_breakdown(self):
        # 25 of 200 points (below (n-h+1)/n) planted 20 sigma away
        for seed in range(3):
            rng = np.random.default_rng(seed)
            Z = rng.standard_normal((200, 3))
            Z[:25] = 20 + 0.5 * rng.standard_normal((25, 3))
            assert np.linalg.norm(mcd_estimate(Z, seed=seed).center) < 0.5


class TestDistances:
    def test_zero_at_center(self, rng):
        est = classical_estimate(rng.normal(size=(20, 2)))
        assert mahalanobis_distances(est.center[None, :], est)[0] == pytest.approx(0, abs=1e-12)

    def test_euclidean(self):
        est = classical_estimate([[1, 0], [-1, 0], [0, 1], [0, -1]])
        est = type(est)(np.zeros(2), np.eye(2), "classical")
        assert mahalanobis_distances([[3, 4]], est)[0] == pytest.approx(5)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_affine_invariance(self, seed):
        rng = np.random.default_rng(seed)
        Z = rng.normal(size=(25, 3))
        A = rng.normal(size=(3, 3)) + 2 * np.eye(3)
        if abs(np.linalg.det(A)) < 0.1:
            return
        b = rng.normal(size=3)
        est = classical_estimate(Z)
        moved = type(est)(A @ est.center + b, A @ est.scatter @ A.T, "classical")
        np.testing.assert_allclose(
            mahalanobis_distances(Z @ A.T + b, moved), mahalanobis_distances(Z, est), rtol=1e-8, atol=1e-8
        )


class TestDetect:
    def test_cutoff(self):
        assert chi2_cutoff(0.975, 7) == pytest.approx(math.sqrt(16.012764274629323))

    def test_clean_rate(self):
        Z = np.random.default_rng(11).standard_normal((500, 3))
        rate = detect_outliers(Z, seed=11).flags.mean()
        assert 0.005 <= rate <= 0.08

    def test_planted(self):
        rng = np.random.default_rng(5)
        Z = rng.standard_normal((210, 2))
        direction = rng.normal(size=(10, 2))
        Z[200:] = 20 * direction / np.linalg.norm(direction, axis=1, keepdims=True)
        report = detect_outliers(Z, seed=5)
        assert report.flags[200:].all()
        assert report.df == 2 and report.quantile_level == 0.975

    def test_limit_quantile(self, rng):
        report = detect_outliers(rng.standard_t(1, size=(100, 2)), quantile_level=1.0)
        assert math.isinf(report.cutoff) and report.n_outliers == 0

    def test_reuse_estimate(self, rng):
        Z = rng.normal(size=(50, 2))
        est = mcd_estimate(Z, seed=3)
        assert detect_outliers(Z, estimate=est).estimate is est
