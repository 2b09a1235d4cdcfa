import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.stats import norm

from dpminimax.core import (
    Dataset,
    GaussianMixtureSpec,
    Metric,
    PrivacyBudget,
    ProbVector,
    ProductDist,
    dist_from_json,
    distance,
    gaussian_component_kl,
    mixture_tv_mc,
    product_kl,
    product_tv_exact,
    sample_dataset,
)


def pmf(entries):
    return ProbVector(entries)


def random_full_support(rng, k):
    v = rng.random(k) + 0.05
    return ProbVector(v / v.sum())


class TestProbVector:
    def test_validates_and_renormalizes(self):
        p = ProbVector([0.5, 0.5 + 5e-7])
        assert abs(p.probs.sum() - 1.0) < 1e-12

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            ProbVector([0.5, 0.6])

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            ProbVector([-0.1, 1.1])

    def test_point_mass_and_uniform(self):
        assert ProbVector.point_mass(3, 2).probs[1] == 1.0
        assert np.allclose(ProbVector.uniform(4).probs, 0.25)

    def test_product_requires_common_alphabet(self):
        with pytest.raises(ValueError):
            ProductDist([ProbVector.uniform(2), ProbVector.uniform(3)])

    def test_gmix_norm_bound_enforced(self):
        with pytest.raises(ValueError):
            GaussianMixtureSpec([1.0], [[3.0, 0.0]], norm_bound=1.0)

    def test_privacy_budget_ranges(self):
        with pytest.raises(ValueError):
            PrivacyBudget(-1.0, 0.0)
        with pytest.raises(ValueError):
            PrivacyBudget(1.0, 1.5)


class TestDistance:
    def test_identity_tv_zero(self):
        p = pmf([0.2, 0.3, 0.5])
        assert distance(p, p, Metric.TV) == 0.0

    def test_disjoint_point_masses_tv_one(self):
        assert distance(ProbVector.point_mass(3, 1), ProbVector.point_mass(3, 3), Metric.TV) == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            distance(ProbVector.uniform(2), ProbVector.uniform(3), Metric.TV)

    def test_codeword_pair_tv_and_kl(self):
        # the +-24a/k perturbation along two weight-4 words of length 8 at
        # full Hamming distance 8: tv = 24a * 8 / 8, kl < 10000 a^2
        k, alpha = 8, 0.01
        c1 = np.array([1, 1, 1, 1, 0, 0, 0, 0])
        c2 = 1 - c1
        p = pmf((1 + 24 * alpha * (2 * c1 - 1)) / k)
        q = pmf((1 + 24 * alpha * (2 * c2 - 1)) / k)
        d_h = int((c1 != c2).sum())
        assert distance(p, q, Metric.TV) == pytest.approx(24 * alpha * d_h / k, abs=1e-14)
        assert distance(p, q, Metric.TV) >= 3 * alpha
        assert distance(p, q, Metric.KL) < 10000 * alpha**2

    def test_kl_zero_times_log_zero(self):
        p = pmf([1.0, 0.0])
        q = pmf([0.5, 0.5])
        assert distance(p, q, Metric.KL) == pytest.approx(math.log(2.0))

    def test_kl_infinite_on_support_violation(self):
        p = pmf([0.5, 0.5])
        q = pmf([1.0, 0.0])
        assert distance(p, q, Metric.KL) == math.inf

    def test_chi2_infinite_on_zero_denominator(self):
        assert distance(pmf([0.5, 0.5]), pmf([1.0, 0.0]), Metric.CHI2) == math.inf

    def test_chi2_shared_zero_coordinate_contributes_nothing(self):
        p = pmf([0.6, 0.4, 0.0])
        q = pmf([0.5, 0.5, 0.0])
        assert math.isfinite(distance(p, q, Metric.CHI2))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 10**6))
    def test_tv_is_half_l1(self, k, seed):
        rng = np.random.default_rng(seed)
        p, q = random_full_support(rng, k), random_full_support(rng, k)
        assert distance(p, q, Metric.TV) == pytest.approx(
            0.5 * distance(p, q, Metric.L1), abs=1e-14
        )

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 10**6))
    def test_kl_below_chi2_full_support(self, k, seed):
        rng = np.random.default_rng(seed)
        p, q = random_full_support(rng, k), random_full_support(rng, k)
        assert distance(p, q, Metric.KL) <= distance(p, q, Metric.CHI2) + 1e-12

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 10**6))
    def test_pinsker(self, k, seed):
        rng = np.random.default_rng(seed)
        p, q = random_full_support(rng, k), random_full_support(rng, k)
        assert distance(p, q, Metric.TV) <= math.sqrt(distance(p, q, Metric.KL) / 2) + 1e-12

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 4), st.integers(1, 3), st.integers(0, 10**6))
    def test_kl_additivity_against_joint_enumeration(self, k, d, seed):
        rng = np.random.default_rng(seed)
        P = ProductDist([random_full_support(rng, k) for _ in range(d)])
        Q = ProductDist([random_full_support(rng, k) for _ in range(d)])
        joint_p = np.ones(1)
        joint_q = np.ones(1)
        for pm, qm in zip(P.marginals, Q.marginals):
            joint_p = np.multiply.outer(joint_p, pm.probs).ravel()
            joint_q = np.multiply.outer(joint_q, qm.probs).ravel()
        joint_kl = distance(ProbVector(joint_p), ProbVector(joint_q), Metric.KL)
        assert product_kl(P, Q) == pytest.approx(joint_kl, rel=1e-9, abs=1e-12)

    def test_product_tv_exact_matches_manual(self):
        P = ProductDist([pmf([0.7, 0.3]), pmf([0.4, 0.6])])
        Q = ProductDist([pmf([0.5, 0.5]), pmf([0.4, 0.6])])
        # second coordinate shared, so tv equals the first marginal's tv
        assert product_tv_exact(P, Q) == pytest.approx(0.2, abs=1e-12)


class TestGaussianKL:
    def test_equal_means_zero(self):
        assert gaussian_component_kl([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_one_dimensional_value_and_quadrature_oracle(self):
        closed = gaussian_component_kl([0.0], [2.0])
        assert closed == pytest.approx(2.0, abs=1e-14)
        integrand = lambda x: norm.pdf(x) * (norm.logpdf(x) - norm.logpdf(x, loc=2.0))
        oracle, _ = quad(integrand, -30, 30)
        assert closed == pytest.approx(oracle, abs=1e-8)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            gaussian_component_kl([0.0], [0.0, 1.0])

    def test_codeword_mean_family_average_kl(self):
        # means with entries alpha/sqrt(d) along weight-(d/2) words keep the
        # averaged component kl below 4 alpha^2
        d, alpha = 4, 0.1
        words = np.array([[1, 1, 0, 0], [0, 0, 1, 1], [1, 0, 1, 0]])
        means = words * alpha / math.sqrt(d)
        kls = [
            gaussian_component_kl(means[i], means[j])
            for i in range(3)
            for j in range(3)
            if i != j
        ]
        assert np.mean(kls) <= 4 * alpha**2
        assert all(v <= (alpha / math.sqrt(d)) ** 2 * d for v in kls)


class TestMixtureTV:
    def test_identical_mixtures_near_zero(self):
        m = GaussianMixtureSpec([0.5, 0.5], [[0.0, 0.0], [1.0, 0.0]], 2.0)
        est, se = mixture_tv_mc(m, m, 5000, np.random.default_rng(0))
        assert est <= 3 * se + 1e-12

    def test_two_unit_gaussians_closed_form(self):
        m1 = GaussianMixtureSpec([1.0], [[0.0]], 3.0)
        m2 = GaussianMixtureSpec([1.0], [[2.0]], 3.0)
        est, se = mixture_tv_mc(m1, m2, 40000, np.random.default_rng(1))
        closed = 2 * norm.cdf(1.0) - 1
        oracle, _ = quad(lambda x: 0.5 * abs(norm.pdf(x) - norm.pdf(x, loc=2.0)), -30, 30)
        assert closed == pytest.approx(oracle, abs=1e-9)
        assert abs(est - closed) <= 3 * se

    def test_mean_axis_reduction_in_higher_dimension(self):
        # tv between identity-covariance gaussians depends only on the mean
        # distance, so the 1-d closed form applies along that axis
        mu = np.array([0.6, -0.8, 0.0])  # norm 1
        m1 = GaussianMixtureSpec([1.0], [[0.0, 0.0, 0.0]], 3.0)
        m2 = GaussianMixtureSpec([1.0], [mu * 2.0], 3.0)
        est, se = mixture_tv_mc(m1, m2, 40000, np.random.default_rng(2))
        assert abs(est - (2 * norm.cdf(1.0) - 1)) <= 3 * se

    def test_requires_enough_samples(self):
        m = GaussianMixtureSpec([1.0], [[0.0]], 1.0)
        with pytest.raises(ValueError):
            mixture_tv_mc(m, m, 10, np.random.default_rng(0))

    def test_dimension_mismatch(self):
        m1 = GaussianMixtureSpec([1.0], [[0.0]], 1.0)
        m2 = GaussianMixtureSpec([1.0], [[0.0, 0.0]], 1.0)
        with pytest.raises(ValueError):
            mixture_tv_mc(m1, m2, 2000, np.random.default_rng(0))

    def test_estimate_stays_in_unit_interval(self):
        m1 = GaussianMixtureSpec([1.0], [[0.0]], 40.0)
        m2 = GaussianMixtureSpec([1.0], [[30.0]], 40.0)
        est, se = mixture_tv_mc(m1, m2, 2000, np.random.default_rng(3))
        assert -3 * se <= est <= 1 + 3 * se


class TestSampling:
    def test_empty(self):
        ds = sample_dataset(ProbVector.uniform(3), 0, np.random.default_rng(0))
        assert ds.n == 0

    def test_point_mass_constant(self):
        ds = sample_dataset(ProbVector.point_mass(5, 4), 200, np.random.default_rng(0))
        assert np.all(ds.values == 4)

    def test_uniform_frequencies(self):
        ds = sample_dataset(ProbVector.uniform(4), 10**5, np.random.default_rng(0))
        freq = np.bincount(ds.values - 1, minlength=4) / ds.n
        assert np.abs(freq - 0.25).max() < 0.01

    def test_negative_n_rejected(self):
        with pytest.raises(ValueError):
            sample_dataset(ProbVector.uniform(2), -1, np.random.default_rng(0))

    def test_product_shape_and_range(self):
        dist = ProductDist([ProbVector.uniform(3)] * 5)
        ds = sample_dataset(dist, 50, np.random.default_rng(0))
        assert ds.values.shape == (50, 5)
        assert ds.values.min() >= 1 and ds.values.max() <= 3

    def test_gaussian_mixture_shape(self):
        mix = GaussianMixtureSpec([0.5, 0.5], [[0.0, 0.0], [1.0, 1.0]], 3.0)
        ds = sample_dataset(mix, 40, np.random.default_rng(0))
        assert ds.values.shape == (40, 2)

    def test_seeded_reproducibility(self):
        dist = ProbVector([0.1, 0.2, 0.7])
        a = sample_dataset(dist, 500, np.random.default_rng(42))
        b = sample_dataset(dist, 500, np.random.default_rng(42))
        assert np.array_equal(a.values, b.values)


class TestSerde:
    def test_kary_roundtrip(self):
        p = ProbVector([0.2, 0.8])
        obj = json.loads(json.dumps(p.to_json()))
        assert obj["type"] == "kary"
        q = dist_from_json(obj)
        assert np.allclose(q.probs, p.probs)

    def test_product_roundtrip(self):
        d = ProductDist([ProbVector([0.3, 0.7]), ProbVector([0.5, 0.5])])
        r = dist_from_json(json.loads(json.dumps(d.to_json())))
        assert isinstance(r, ProductDist) and r.d == 2

    def test_gmix_roundtrip(self):
        g = GaussianMixtureSpec([0.4, 0.6], [[0.0, 1.0], [1.0, 0.0]], 2.5)
        r = dist_from_json(json.loads(json.dumps(g.to_json())))
        assert isinstance(r, GaussianMixtureSpec)
        assert r.norm_bound == 2.5
        assert np.allclose(r.means, g.means)

    def test_unknown_type(self):
        with pytest.raises(ValueError):
            dist_from_json({"type": "exotic"})
