import math

import numpy as np
import pytest

import oracles
from slicascade.stats import (
    ConstantInputError,
    fractional_ranks,
    median,
    quartile,
    spearman,
    std_normal_cdf,
    wald_p_value,
)


class TestFractionalRanks:
    def test_distinct_values(self):
        assert np.array_equal(fractional_ranks([30.0, 10.0, 20.0]), [3.0, 1.0, 2.0])

    def test_ties_share_average_rank(self):
        ranks = fractional_ranks([5.0, 1.0, 5.0, 2.0])
        assert np.array_equal(ranks, [3.5, 1.0, 3.5, 2.0])

    def test_matches_oracle_on_random_draws(self):
        rng = np.random.default_rng(2024)
        for trial in range(60):
            n = int(rng.integers(1, 40))
            # heavy ties thanks to the coarse grid
            x = rng.integers(0, 6, size=n).astype(np.float64)
            got = fractional_ranks(x)
            assert np.allclose(got, oracles.rank_oracle(x), rtol=0, atol=0)
            assert math.isclose(got.sum(), n * (n + 1) / 2, rel_tol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            fractional_ranks([])


class TestSpearman:
    def test_perfect_agreement(self):
        assert spearman([1.0, 2.0, 3.0], [10.0, 20.0, 30.0]) == 1.0

    def test_perfect_reversal(self):
        assert spearman([1.0, 2.0, 3.0], [3.0, 2.0, 1.0]) == -1.0

    def test_small_example(self):
        r = spearman([1, 2, 3, 4, 5], [1, 3, 2, 5, 4])
        assert abs(r - 0.8) < 1e-12

    def test_symmetry(self):
        rng = np.random.default_rng(10)
        x = rng.normal(size=25)
        y = rng.normal(size=25)
        assert spearman(x, y) == spearman(y, x)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=30)
        y = rng.normal(size=30)
        assert abs(spearman(x, y) - spearman(np.exp(x), y)) < 1e-15

    def test_closed_form_agreement_without_ties(self):
        rng = np.random.default_rng(12)
        for trial in range(200):
            n = int(rng.integers(3, 51))
            x = rng.permutation(n).astype(np.float64)
            y = rng.normal(size=n)
            want = oracles.spearman_closed_form(x, y)
            assert abs(spearman(x, y) - want) < 1e-12

    def test_rank_pearson_agreement_with_ties(self):
        rng = np.random.default_rng(13)
        for trial in range(200):
            n = int(rng.integers(3, 40))
            x = rng.integers(0, 5, size=n).astype(np.float64)
            y = rng.integers(0, 4, size=n).astype(np.float64)
            if np.all(x == x[0]) or np.all(y == y[0]):
                continue
            want = oracles.pearson_on_ranks(x, y)
            assert abs(spearman(x, y) - want) < 1e-12

    def test_constant_input_rejected(self):
        with pytest.raises(ConstantInputError):
            spearman([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with pytest.raises(ConstantInputError):
            spearman([1.0, 2.0, 3.0], [4.0, 4.0, 4.0])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            spearman([1.0, 2.0], [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            spearman([1.0], [2.0])


class TestMedianAndQuartile:
    def test_median_examples(self):
        assert median([3.0, 1.0, 2.0]) == 2.0
        assert median([1.0, 2.0, 3.0, 4.0]) == 2.5
        assert median([7.0]) == 7.0

    def test_median_matches_sort_oracle(self):
        rng = np.random.default_rng(20)
        for trial in range(100):
            n = int(rng.integers(1, 101))
            x = rng.normal(size=n)
            assert median(x) == oracles.median_oracle(x)

    def test_quartile_examples(self):
        assert quartile([1.0, 2.0, 3.0, 4.0], 25) == 1.0
        assert quartile(np.arange(1.0, 9.0), 75) == 6.0
        assert quartile([5.0, 5.0, 5.0], 25) == 5.0

    def test_quartile_p50_is_the_median(self):
        rng = np.random.default_rng(21)
        for trial in range(50):
            n = int(rng.integers(1, 60))
            x = rng.normal(size=n)
            assert quartile(x, 50) == median(x)

    def test_quartile_matches_sort_oracle(self):
        rng = np.random.default_rng(22)
        for trial in range(100):
            n = int(rng.integers(1, 80))
            x = rng.normal(size=n)
            for p in (25, 75):
                assert quartile(x, p) == oracles.quartile_oracle(x, p)

    def test_quartile_rejects_bad_percentile(self):
        with pytest.raises(ValueError):
            quartile([1.0, 2.0], 0)
        with pytest.raises(ValueError):
            quartile([1.0, 2.0], 101)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            median([])
        with pytest.raises(ValueError):
            quartile([], 25)


class TestNormalCdf:
    def test_centre(self):
        assert std_normal_cdf(0.0) == 0.5

    def test_reference_point(self):
        assert abs(std_normal_cdf(2.385) - 0.991465) < 1e-5

    def test_symmetry(self):
        rng = np.random.default_rng(30)
        for z in rng.normal(scale=3.0, size=50):
            assert abs(std_normal_cdf(z) + std_normal_cdf(-z) - 1.0) < 1e-15

    def test_quadrature_agreement(self):
        for z in np.linspace(-8.0, 8.0, 33):
            want = oracles.normal_cdf_quadrature(float(z))
            assert abs(std_normal_cdf(float(z)) - want) < 1e-10

    def test_monotone(self):
        # stop short of the region where the value rounds to exactly 1.0
        zs = np.linspace(-10.0, 5.0, 151)
        values = [std_normal_cdf(float(z)) for z in zs]
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            std_normal_cdf(float("nan"))
        with pytest.raises(ValueError):
            std_normal_cdf(float("inf"))


class TestWaldPValue:
    def test_zero_coefficient(self):
        assert wald_p_value(0.0, 1.0) == 1.0

    def test_reference_pairs(self):
        # hand-checked two-sided tail probabilities
        for coef, se, want in [
            (-2.64640, 1.10947, 0.01707),
            (-2.73838, 0.91128, 0.00266),
            (-0.05929, 0.01623, 0.00026),
        ]:
            assert abs(wald_p_value(coef, se) - want) < 5e-5

    def test_matches_cdf_identity(self):
        rng = np.random.default_rng(40)
        for trial in range(100):
            coef = float(rng.normal(scale=2.0))
            se = float(rng.uniform(0.1, 3.0))
            z = coef / se
            want = 2.0 * (1.0 - std_normal_cdf(abs(z)))
            assert abs(wald_p_value(coef, se) - want) < 1e-12

    def test_decreasing_in_evidence(self):
        ps = [wald_p_value(z, 1.0) for z in np.linspace(0.0, 30.0, 61)]
        assert all(a > b for a, b in zip(ps, ps[1:]))

    def test_extreme_underflow_stays_positive(self):
        p = wald_p_value(60.0, 1.0)
        assert p > 0.0

    def test_infinite_se_gives_one(self):
        assert wald_p_value(1.5, float("inf")) == 1.0

    def test_bad_se_rejected(self):
        with pytest.raises(ValueError):
            wald_p_value(1.0, 0.0)
        with pytest.raises(ValueError):
            wald_p_value(1.0, -2.0)
