import math

import numpy as np
import pytest

from confpred.bayes import LinearModelSpec, generate
from confpred.core import ClassAlphabet, Dataset, RealLine
from confpred.icp import (
    IcpModel,
    InductiveConformalPredictor,
    constant_learner,
    default_split,
    icp_fit,
    icp_p_table,
    icp_p_value,
    icp_p_value_from_score,
    icp_predict,
    kernel_ridge_learner,
    nearest_neighbour_learner,
)
from confpred.kernels import RBF
from confpred.nonconformity import RidgeConfig
from confpred.synthetic import gaussian_classes


def model_with(scores, centre=0.0):
    return IcpModel(
        rule=lambda objects: [centre] * len(objects),
        calibration_scores=tuple(sorted(scores)),
        delta="absolute",
        m=1,
        label_space=RealLine(),
        dim=1,
    )


def naive_p(scores, alpha):
    return (sum(s >= alpha for s in scores) + 1) / (len(scores) + 1)


class TestFit:
    def test_minimal_split(self):
        d = Dataset([[0.0], [1.0]], [0.0, 1.0], RealLine(), dim=1)
        model = icp_fit(d, 1, constant_learner(0.0), "absolute")
        assert model.n_calibration == 1

    def test_constant_learner_scores(self):
        d = Dataset(np.zeros((5, 1)), [1.0, 4.0, -2.0, 3.5, 0.0], RealLine(), dim=1)
        model = icp_fit(d, 2, constant_learner(1.5), "absolute")
        assert model.calibration_scores == (1.5, 2.0, 3.5)

    @pytest.mark.parametrize("m", [0, 5, 7, 2.5])
    def test_split_range(self, m):
        d = Dataset(np.zeros((5, 1)), [0.0] * 5, RealLine(), dim=1)
        with pytest.raises(ValueError):
            icp_fit(d, m, constant_learner(0.0), "absolute")

    def test_default_split(self):
        assert default_split(3) == 2
        assert default_split(300) == 200
        assert default_split(2) == 1

    def test_kernel_ridge_rule(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(30, 2))
        y = X @ np.array([1.0, -1.0])
        d = Dataset(X, y, RealLine(), dim=2)
        model = icp_fit(d, 20, kernel_ridge_learner(RidgeConfig(1e-8)), "absolute")
        assert model.predict_label(X[25]) == pytest.approx(y[25], abs=1e-6)
        model = icp_fit(d, 20, kernel_ridge_learner(RidgeConfig(1e-3, RBF(0.1))), "absolute")
        assert abs(model.predict_label(X[0]) - y[0]) < 0.1


class TestPValue:
    def test_examples(self):
        model = model_with([1, 2, 3])
        assert icp_p_value_from_score(model, 2.5) == 0.5
        assert icp_p_value_from_score(model, 0.0) == 1.0
        assert icp_p_value_from_score(model, 10.0) == 0.25

    def test_through_rule(self):
        model = model_with([1, 2, 3], centre=5.0)
        assert icp_p_value(model, [0.0], 7.5) == 0.5

    def test_bisect_matches_naive(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            scores = rng.integers(0, 10, size=rng.integers(1, 30)).astype(float)
            alpha = float(rng.integers(-1, 11))
            if rng.random() < 0.5:
                alpha += rng.random()
            model = model_with(scores)
            assert icp_p_value_from_score(model, alpha) == naive_p(scores, alpha)


class TestPredict:
    def test_regression_example(self):
        model = model_with([1, 2, 3], centre=10.0)
        assert icp_predict(model, [0.0], 0.5).intervals == ((8.0, 12.0),)

    def test_below_floor_is_everything(self):
        model = model_with([1, 2, 3])
        assert icp_predict(model, [0.0], 0.2).intervals == ((-math.inf, math.inf),)
        d = gaussian_classes(30, seed=0)
        cmodel = icp_fit(d, 20, nearest_neighbour_learner(), "zero_one")
        assert icp_predict(cmodel, [0.0, 0.0], 0.05).labels == ("A", "B")

    def test_perfect_rule(self):
        alphabet = ClassAlphabet(("A", "B"))
        d = Dataset([[0.0], [10.0], [0.1], [9.9], [0.2]], ["A", "B", "A", "B", "A"], alphabet, dim=1)
        model = icp_fit(d, 2, nearest_neighbour_learner(), "zero_one")
        assert model.calibration_scores == (0.0, 0.0, 0.0)
        table = icp_p_table(model, [0.05])
        assert table["A"] == 1.0
        assert table["B"] == 0.25

    @pytest.mark.parametrize("seed", range(5))
    def test_closed_form_matches_definition_on_grid(self, seed):
        rng = np.random.default_rng(seed)
        scores = np.round(rng.exponential(size=rng.integers(1, 25)), 2)
        model = model_with(scores, centre=float(rng.normal()))
        centre = model.predict_label([0.0])
        ys = centre + np.linspace(-20, 20, 40_001)
        for eps in (0.01, 0.05, 0.1, 0.25, 0.5, 0.9):
            (lo, hi), = icp_predict(model, [0.0], eps).intervals
            member = (ys >= lo) & (ys <= hi)
            defined = np.array([naive_p(scores, abs(y - centre)) > eps for y in ys])
            near = np.minimum(np.abs(ys - lo), np.abs(ys - hi)) <= 1e-3
            assert np.array_equal(member[~near], defined[~near])

    def test_nesting(self):
        rng = np.random.default_rng(7)
        model = model_with(rng.exponential(size=40))
        hulls = [icp_predict(model, [0.0], e).intervals[0] for e in (0.02, 0.05, 0.1, 0.3)]
        for (a, b), (c, d) in zip(hulls, hulls[1:]):
            assert a <= c and d <= b

    def test_coverage_on_linear_model(self):
        misses, total = {0.1: 0, 0.05: 0}, 0
        for trial in range(20):
            train, test = generate(LinearModelSpec(), 150, 100, [3, trial])
            model = icp_fit(train, 100, kernel_ridge_learner(RidgeConfig(1.0)), "absolute")
            for ex in test:
                total += 1
                for eps in misses:
                    misses[eps] += ex.label not in icp_predict(model, ex.object, eps)
        for eps, k in misses.items():
            assert k / total <= eps + 3 * math.sqrt(eps * (1 - eps) / total)


class TestWrapper:
    def test_freezes_after_prediction(self):
        d = gaussian_classes(20, seed=2)
        icp = InductiveConformalPredictor(nearest_neighbour_learner(), "zero_one", d.label_space, 2)
        for ex in d:
            icp.learn(ex.object, ex.label)
        icp.predict([0.0, 0.0], [0.1])
        with pytest.raises(RuntimeError):
            icp.learn([0.0, 0.0], "A")
