import numpy as np
import pytest

from dpminimax.core import ProbVector
from dpminimax.couplings import (
    assouad_kary_coupling,
    dataset_hamming,
    empirical_hamming,
    marginal_check,
    maximal_coupling_iid,
    product_flip_coupling,
)

TV_03_PAIR = (ProbVector([0.4, 0.3, 0.2, 0.1]), ProbVector([0.1, 0.3, 0.3, 0.3]))


class TestMaximalCoupling:
    def test_identical_marginals_never_differ(self):
        p = ProbVector([0.3, 0.7])
        s = maximal_coupling_iid(p, p, 40)
        x, y = s.draw(np.random.default_rng(0))
        assert dataset_hamming(x, y) == 0
        mean, stderr = empirical_hamming(s, 200, np.random.default_rng(1))
        assert mean == 0.0 and stderr == 0.0

    def test_disjoint_point_masses_always_differ(self):
        s = maximal_coupling_iid(ProbVector.point_mass(3, 1), ProbVector.point_mass(3, 2), 25)
        x, y = s.draw(np.random.default_rng(0))
        assert dataset_hamming(x, y) == 25
        assert s.expected_hamming == 25.0

    def test_expected_hamming_matches_tv(self):
        p, q = TV_03_PAIR
        s = maximal_coupling_iid(p, q, 50)
        assert s.expected_hamming == pytest.approx(15.0, abs=1e-12)
        mean, stderr = empirical_hamming(s, 10_000, np.random.default_rng(2))
        assert abs(mean - 15.0) <= 3 * stderr

    def test_marginals_reproduced(self):
        p, q = TV_03_PAIR
        s = maximal_coupling_iid(p, q, 50)
        rng = np.random.default_rng(3)
        assert marginal_check(s, "left", 10**5, rng) <= 0.02
        assert marginal_check(s, "right", 10**5, rng) <= 0.02

    def test_point_mass_marginal_exact(self):
        pm = ProbVector.point_mass(4, 2)
        s = maximal_coupling_iid(pm, pm, 10)
        assert marginal_check(s, "left", 10**4, np.random.default_rng(4)) == 0.0

    def test_alphabet_mismatch(self):
        with pytest.raises(ValueError):
            maximal_coupling_iid(ProbVector.uniform(2), ProbVector.uniform(3), 5)

    def test_n_guard(self):
        with pytest.raises(ValueError):
            maximal_coupling_iid(ProbVector.uniform(2), ProbVector.uniform(2), 0)


class TestAssouadKaryCoupling:
    def test_zero_alpha_is_identity(self):
        s = assouad_kary_coupling(10, 0.0, 100, 1)
        x, y = s.draw(np.random.default_rng(0))
        assert dataset_hamming(x, y) == 0

    def test_expected_hamming(self):
        k, alpha, n = 10, 0.05, 200
        s = assouad_kary_coupling(k, alpha, n, 1)
        assert s.expected_hamming == pytest.approx(20 * alpha * n / k, abs=1e-12)
        mean, stderr = empirical_hamming(s, 10_000, np.random.default_rng(1))
        assert abs(mean - s.expected_hamming) <= 3 * stderr

    def test_only_the_paired_symbol_moves(self):
        s = assouad_kary_coupling(8, 0.05, 500, 3)
        x, y = s.draw(np.random.default_rng(2))
        moved = x.values != y.values
        assert np.all(x.values[moved] == 5)  # symbol 2i-1 with i = 3
        assert np.all(y.values[moved] == 6)

    def test_right_marginal_matches_closed_form(self):
        s = assouad_kary_coupling(10, 0.05, 200, 2)
        tv = marginal_check(s, "right", 10**5, np.random.default_rng(3))
        assert tv <= 0.02

    def test_left_marginal(self):
        s = assouad_kary_coupling(10, 0.05, 200, 2)
        assert marginal_check(s, "left", 10**5, np.random.default_rng(4)) <= 0.02

    def test_coordinate_guard(self):
        with pytest.raises(ValueError):
            assouad_kary_coupling(10, 0.05, 100, 6)


class TestProductFlipCoupling:
    def test_zero_alpha_is_identity(self):
        s = product_flip_coupling(8, 0.0, 50, 1)
        x, y = s.draw(np.random.default_rng(0))
        assert dataset_hamming(x, y) == 0

    def test_expected_hamming(self):
        d, alpha, n = 20, 0.005, 1000
        s = product_flip_coupling(d, alpha, n, 1)
        assert s.expected_hamming == pytest.approx(40 * alpha * n / d, abs=1e-12)
        mean, stderr = empirical_hamming(s, 3000, np.random.default_rng(1))
        assert abs(mean - s.expected_hamming) <= 3 * stderr

    def test_flip_only_lowers_coordinate_i(self):
        s = product_flip_coupling(12, 0.01, 800, 4)
        x, y = s.draw(np.random.default_rng(2))
        diff = x.values != y.values
        rows, cols = np.nonzero(diff)
        assert np.all(cols == 3)
        assert np.all(x.values[rows, cols] == 2)
        assert np.all(y.values[rows, cols] == 1)

    def test_marginals(self):
        s = product_flip_coupling(10, 0.004, 500, 1)
        rng = np.random.default_rng(3)
        assert marginal_check(s, "left", 10**5, rng) <= 0.02
        assert marginal_check(s, "right", 10**5, rng) <= 0.02


class TestEmpirics:
    def test_trials_guard(self):
        p, q = TV_03_PAIR
        s = maximal_coupling_iid(p, q, 10)
        with pytest.raises(ValueError):
            empirical_hamming(s, 50, np.random.default_rng(0))

    def test_marginal_trials_guard(self):
        p, q = TV_03_PAIR
        s = maximal_coupling_iid(p, q, 10)
        with pytest.raises(ValueError):
            marginal_check(s, "left", 100, np.random.default_rng(0))

    def test_side_guard(self):
        p, q = TV_03_PAIR
        s = maximal_coupling_iid(p, q, 10)
        with pytest.raises(ValueError):
            marginal_check(s, "middle", 10**4, np.random.default_rng(0))

    def test_deterministic_under_fixed_seed(self):
        s = assouad_kary_coupling(6, 0.05, 50, 1)
        a = empirical_hamming(s, 500, np.random.default_rng(9))
        b = empirical_hamming(s, 500, np.random.default_rng(9))
        assert a == b

    def test_hamming_shape_guard(self):
        from dpminimax.core import Dataset

        with pytest.raises(ValueError):
            dataset_hamming(Dataset(np.array([1, 2])), Dataset(np.array([1, 2, 3])))
