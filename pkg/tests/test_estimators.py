# test_estimators.py
import math

import numpy as np
import pytest

from estimators import (
    Status,
    classical_correlation,
    cond_moments_on,
    known_set_scaling,
    population_moments_mc,
    qcc_bar,
    qcc_hat,
    qcc_population_mc,
    running_estimate,
    set_error_decomposition,
)
from models import BivariateNormalSampler
from oracles import brute_qcc, brute_qcc_hat
from quantile_core import Interval, QuantileSplit, Rectangle, rectangle_hat
from validators import LengthMismatch, RequiresKnownQuantiles


def box(x_lo, x_hi, y_lo, y_hi):
    return Rectangle(Interval(x_lo, x_hi), Interval(y_lo, y_hi))


class TestCondMoments:
    def test_direct_evaluation(self):
        moments = cond_moments_on([1, 2, 3], [1, 2, 3], box(1, 3, 1, 3))
        assert moments.mean_x == pytest.approx(2.0)
        assert moments.mean_y == pytest.approx(2.0)
        assert moments.var_x == pytest.approx(2 / 3)
        assert moments.cov == pytest.approx(2 / 3)
        assert moments.count == 3
        assert moments.status is Status.OK

    def test_empty_set_convention(self):
        moments = cond_moments_on([1, 2, 3], [1, 2, 3], box(10, 20, 10, 20))
        assert moments.status is Status.EMPTY_SET
        assert moments.count == 0
        assert (moments.mean_x, moments.mean_y, moments.var_x, moments.var_y, moments.cov) == (0, 0, 0, 0, 0)

    def test_degenerate_variance(self):
        moments = cond_moments_on([0, 0, 5], [1, 2, 9], box(-1, 1, 0, 3))
        assert moments.mean_x == 0.0
        assert moments.var_x == 0.0
        assert moments.count == 2
        assert moments.status is Status.DEGENERATE_VARIANCE

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            cond_moments_on([1, 2, 3], [1, 2], box(0, 1, 0, 1))

    def test_cauchy_schwarz(self, rng):
        X, Y = rng.standard_normal((2, 300))
        moments = cond_moments_on(X, Y, box(-1, 1, -1, 1))
        assert abs(moments.cov) <= math.sqrt(moments.var_x * moments.var_y) + 1e-12


class TestQccBar:
    def test_perfect_affinity(self, rng):
        X = rng.uniform(size=50)
        value = qcc_bar(X, 2 * X + 1, box(0, 1, 1, 3))
        assert value.status is Status.OK
        assert value.value == pytest.approx(1.0, abs=1e-12)

    def test_five_point_oracle(self):
        X = [0.1, 0.4, 0.5, 0.8, 0.9]
        Y = [0.2, 0.1, 0.6, 0.5, 0.95]
        value = qcc_bar(X, Y, box(0.1, 0.8, 0.1, 0.6))
        # 閉矩形なので (0.1,0.2) と (0.4,0.1) も境界上で含まれる
        assert value.count == 4
        assert value.value == pytest.approx(brute_qcc(X, Y, (0.1, 0.8), (0.1, 0.6)), abs=1e-12)

    def test_empty_rectangle(self):
        value = qcc_bar([1, 2], [1, 2], box(5, 6, 5, 6))
        assert value.value == 0.0
        assert value.status is Status.EMPTY_SET
        assert not value.ok


class TestQccHat:
    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            n = int(rng.integers(1, 13))
            X = rng.standard_normal(n).tolist()
            Y = rng.standard_normal(n).tolist()
            p_x, q_x = sorted(rng.uniform(0.001, 0.999, 2))
            p_y, q_y = sorted(rng.uniform(0.001, 0.999, 2))
            if p_x == q_x or p_y == q_y:
                continue
            value = qcc_hat(X, Y, QuantileSplit(p_x, q_x), QuantileSplit(p_y, q_y)).value
            assert value == pytest.approx(brute_qcc_hat(X, Y, p_x, q_x, p_y, q_y), abs=1e-12)

    def test_eight_point_sample(self, rng):
        X = rng.standard_normal(8)
        Y = rng.standard_normal(8)
        split = QuantileSplit(0.25, 0.75)
        value = qcc_hat(X, Y, split, split).value
        assert value == pytest.approx(brute_qcc_hat(X.tolist(), Y.tolist(), 0.25, 0.75, 0.25, 0.75), abs=1e-12)

    def test_affine_invariance(self, rng):
        X, Y = rng.standard_normal((2, 500))
        sx, sy = QuantileSplit(0.1, 0.8), QuantileSplit(0.2, 0.9)
        base = qcc_hat(X, Y, sx, sy).value
        assert qcc_hat(3.5 * X - 2.0, 0.25 * Y + 7.0, sx, sy).value == pytest.approx(base, abs=1e-12)

    def test_symmetry(self, rng):
        X, Y = rng.standard_normal((2, 400))
        sx, sy = QuantileSplit(0.05, 0.75), QuantileSplit(0.3, 0.95)
        assert qcc_hat(X, Y, sx, sy).value == pytest.approx(qcc_hat(Y, X, sy, sx).value, abs=1e-15)

    def test_bounds(self, rng):
        for _ in range(50):
            X, Y = rng.standard_t(2, (2, 30))
            value = qcc_hat(X, Y, QuantileSplit(0.1, 0.9), QuantileSplit(0.1, 0.9)).value
            assert -1.0 <= value <= 1.0

    def test_epsilon_split_drops_only_maximum(self, rng):
        n = 200
        X, Y = rng.standard_normal((2, n))
        eps = 1 / (4 * n)
        split = QuantileSplit(eps, 1 - eps)
        rect = rectangle_hat(X, Y, split, split)
        assert rect.x == Interval(np.sort(X)[0], np.sort(X)[n - 2])
        assert rect.y == Interval(np.sort(Y)[0], np.sort(Y)[n - 2])

        keep = (X < X.max()) & (Y < Y.max())
        expected = np.corrcoef(X[keep], Y[keep])[0, 1]
        assert qcc_hat(X, Y, split, split).value == pytest.approx(expected, abs=1e-12)

    def test_inverted_indices_give_empty_set(self):
        split = QuantileSplit(0.4, 0.5)
        value = qcc_hat([1.0, 2.0, 3.0], [3.0, 1.0, 2.0], split, split)
        assert value.status is Status.EMPTY_SET
        assert value.value == 0.0


def test_classical_correlation_matches_numpy(rng):
    X, Y = rng.standard_normal((2, 300))
    assert classical_correlation(X, Y).value == pytest.approx(np.corrcoef(X, Y)[0, 1], abs=1e-12)


class TestPopulationStudies:
    def test_population_moments_normal_example(self, example_split):
        moments = population_moments_mc(BivariateNormalSampler(), example_split, example_split, N=200_000, seed=7)
        assert moments.mean_x == pytest.approx(0.16, abs=0.02)
        assert moments.var_x == pytest.approx(0.37, abs=0.02)
        assert moments.cov == pytest.approx(0.06, abs=0.01)

    def test_qcc_population_normal_example(self, example_split):
        value = qcc_population_mc(BivariateNormalSampler(), example_split, example_split, N=200_000, seed=8)
        assert value == pytest.approx(0.16, abs=0.03)

    def test_running_estimate_layout(self, example_split):
        table = running_estimate(BivariateNormalSampler(), example_split, example_split, [2000, 100, 500], seed=3)
        assert table['n'].tolist() == [100, 500, 2000]
        assert list(table.columns) == ['n', 'value', 'status']
        assert abs(table['value'].iloc[-1] - 0.16) < 0.1

    def test_set_error_requires_known_quantiles(self, example_split):
        class NoQuantiles:
            def draw(self, n, rng):
                return rng.standard_normal(n), rng.standard_normal(n)

        with pytest.raises(RequiresKnownQuantiles):
            set_error_decomposition(NoQuantiles(), example_split, example_split, 100, 100, seed=1)

    def test_set_error_decomposition(self, example_split):
        result = set_error_decomposition(BivariateNormalSampler(), example_split, example_split,
                                         n=200, reps=300, seed=11, rho_ref=0.16)
        assert result['rho_ref'] == 0.16
        assert 0.0 < result['ratio'] < 1.0

    def test_set_error_decomposition_is_deterministic(self, example_split):
        kwargs = dict(n=100, reps=100, seed=5, rho_ref=0.16)
        first = set_error_decomposition(BivariateNormalSampler(), example_split, example_split, threads=1, **kwargs)
        second = set_error_decomposition(BivariateNormalSampler(), example_split, example_split, threads=4, **kwargs)
        assert first == second

    def test_known_set_scaling_ratio(self, example_split):
        result = known_set_scaling(BivariateNormalSampler(), example_split, example_split,
                                   n_small=400, n_large=1600, reps=400, seed=13)
        assert result['expected_ratio'] == 2.0
        assert result['ratio'] == pytest.approx(2.0, rel=0.2)
