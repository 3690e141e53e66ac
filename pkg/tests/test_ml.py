from __future__ import annotations

import numpy as np
import pytest

from prefnet.features import FORMATION, LabeledDataset
from prefnet.graph import BEHAVIORAL
from prefnet.ml import (KINDS, KNN, LINEAR_REGRESSION, LINEAR_SVM, NAIVE_BAYES,
                        RANDOM_FOREST, EvaluationReport, FeatureTransform, Model,
                        SplitSpec, TrainOptions, _Tree, downsample_negatives,
                        evaluate, predict, roc_auc, roc_curve, select_model,
                        selection_score, split, train, train_all)

import _planted


def make_dataset(X, y, names=None) -> LabeledDataset:
    X = np.asarray(X, dtype=float)
    names = tuple(names or (f"f{i}" for i in range(X.shape[1])))
    dyads = [(f"u{i:04d}", f"v{i:04d}") for i in range(len(X))]
    return LabeledDataset(task=FORMATION, network=BEHAVIORAL, method="equal_preference",
                          feature_names=names, dyads=dyads, X=X,
                          y=np.asarray(y, dtype=np.int8), source_semesters=(1, 2))


def random_dataset(n, seed=0, weights=(2.0, -1.0), noise=0.0):
    rng = np.random.default_rng(seed)
    X = rng.random((n, len(weights)))
    score = X @ np.asarray(weights) + noise * rng.standard_normal(n)
    y = (score > np.median(score)).astype(np.int8)
    return make_dataset(X, y)


class TestSplit:
    def test_eighty_twenty(self):
        ds = random_dataset(100)
        fit, val = split(ds, SplitSpec(validation_fraction=0.2, rng_seed=1))
        assert fit.n_rows == 80
        assert val.n_rows == 20

    def test_deterministic_for_fixed_seed(self):
        ds = random_dataset(60)
        a = split(ds, SplitSpec(rng_seed=5))
        b = split(ds, SplitSpec(rng_seed=5))
        assert a[0].dyads == b[0].dyads and a[1].dyads == b[1].dyads

    def test_stratification_keeps_minority(self):
        y = np.array([1] * 95 + [0] * 5, dtype=np.int8)
        X = np.arange(100, dtype=float).reshape(-1, 1)
        ds = make_dataset(X, y)
        for seed in range(25):
            _, val = split(ds, SplitSpec(rng_seed=seed))
            assert (val.y == 0).sum() >= 1
            assert (val.y == 1).sum() >= 1

    def test_single_class_rejected(self):
        ds = make_dataset(np.zeros((20, 1)), np.ones(20))
        with pytest.raises(ValueError):
            split(ds, SplitSpec())

    def test_tiny_dataset_rejected(self):
        ds = make_dataset(np.zeros((8, 1)), [0, 1] * 4)
        with pytest.raises(ValueError):
            split(ds, SplitSpec())


class TestDownsample:
    def test_caps_negatives(self):
        y = np.array([1] * 10 + [0] * 500, dtype=np.int8)
        ds = make_dataset(np.zeros((510, 1)), y)
        out = downsample_negatives(ds, 10.0, rng_seed=0)
        assert (out.y == 1).sum() == 10
        assert (out.y == 0).sum() == 100

    def test_noop_when_balanced(self):
        ds = random_dataset(50)
        assert downsample_negatives(ds, 10.0, 0) is ds

    def test_disabled(self):
        y = np.array([1] * 2 + [0] * 100, dtype=np.int8)
        ds = make_dataset(np.zeros((102, 1)), y)
        assert downsample_negatives(ds, None, 0) is ds


class TestRegression:
    def test_recovers_noiseless_weights(self):
        weights = np.array([0.7, -0.3, 1.4])
        rng = np.random.default_rng(3)
        X = rng.random((400, 3))
        y = X @ weights  # continuous targets exercise the least-squares core
        ds = make_dataset(X, (y > np.median(y)).astype(np.int8))
        fit, val = split(ds, SplitSpec(rng_seed=0))
        # solve on the raw continuous target through the private path
        from prefnet.ml import _solve_least_squares
        beta = _solve_least_squares(X, y, ridge=1e-8)
        assert beta[0] == pytest.approx(0.0, abs=1e-6)
        np.testing.assert_allclose(beta[1:], weights, atol=1e-6)

    def test_constant_feature_gets_zero_coefficient(self):
        rng = np.random.default_rng(1)
        X = np.hstack([rng.random((200, 1)), np.full((200, 1), 0.37)])
        y = (X[:, 0] > 0.5).astype(np.int8)
        ds = make_dataset(X, y)
        fit, val = split(ds, SplitSpec(rng_seed=0))
        model = train(LINEAR_REGRESSION, fit, val, SplitSpec(rng_seed=0),
                      TrainOptions(expansion_sweep=False))
        # a constant column is collinear with the intercept; ridge pins it near 0
        assert abs(model.params["coef"][1]) < 1e-3

    def test_threshold_in_unit_interval(self):
        ds = random_dataset(200, seed=7)
        fit, val = split(ds, SplitSpec(rng_seed=0))
        model = train(LINEAR_REGRESSION, fit, val, SplitSpec(rng_seed=0))
        assert 0.0 <= model.threshold <= 1.0

    def test_predict_example(self):
        model = Model(kind=LINEAR_REGRESSION, feature_names=("a", "b"), task=FORMATION,
                      network=BEHAVIORAL,
                      transform=FeatureTransform(None, 0.0, 0.0, False),
                      params={"coef": np.zeros(2), "intercept": 0.7}, threshold=0.5)
        labels, scores = predict(model, np.array([[0.1, 0.9]]))
        assert labels[0] and scores[0] == pytest.approx(0.7)

    def test_predict_rejects_dimension_mismatch(self):
        model = Model(kind=LINEAR_REGRESSION, feature_names=("a", "b"), task=FORMATION,
                      network=BEHAVIORAL,
                      transform=FeatureTransform(None, 0.0, 0.0, False),
                      params={"coef": np.zeros(2), "intercept": 0.7}, threshold=0.5)
        with pytest.raises(ValueError, match="features"):
            predict(model, np.array([[0.1, 0.9, 0.3]]))


class TestSvm:
    def test_separable_data_fits_perfectly(self):
        rng = np.random.default_rng(0)
        X = rng.random((300, 2))
        y = (X[:, 0] + X[:, 1] > 1.0).astype(np.int8)
        keep = np.abs(X[:, 0] + X[:, 1] - 1.0) > 0.15  # margin
        ds = make_dataset(X[keep], y[keep])
        fit, val = split(ds, SplitSpec(rng_seed=0))
        model = train(LINEAR_SVM, fit, val, SplitSpec(rng_seed=0))
        report = evaluate(model, val)
        assert report.recall == 1.0
        assert report.accuracy == 1.0


class TestKnn:
    def test_self_neighbor_memorizes_training_set(self):
        ds = random_dataset(80, seed=2)
        fit, val = split(ds, SplitSpec(rng_seed=0))
        model = train(KNN, fit, val, SplitSpec(rng_seed=0),
                      TrainOptions(knn_k_grid=(1,)))
        report = evaluate(model, fit)
        assert report.recall == 1.0
        assert report.accuracy == 1.0

    def test_majority_vote_example(self):
        train_X = np.array([[0.0], [0.1], [10.0]])
        train_y = np.array([1.0, 1.0, 0.0])
        model = Model(kind=KNN, feature_names=("f0",), task=FORMATION, network=BEHAVIORAL,
                      transform=FeatureTransform(None, 0.0, 0.0, False),
                      params={"train_X": train_X, "train_y": train_y, "k": 3},
                      threshold=None)
        labels, scores = predict(model, np.array([[0.05]]))
        assert scores[0] == pytest.approx(2 / 3)
        assert labels[0]

    def test_distance_ties_break_by_index(self):
        train_X = np.array([[0.0], [0.0], [0.0], [5.0]])
        train_y = np.array([1.0, 0.0, 0.0, 1.0])
        model = Model(kind=KNN, feature_names=("f0",), task=FORMATION, network=BEHAVIORAL,
                      transform=FeatureTransform(None, 0.0, 0.0, False),
                      params={"train_X": train_X, "train_y": train_y, "k": 3},
                      threshold=None)
        _, scores = predict(model, np.array([[0.0]]))
        assert scores[0] == pytest.approx(1 / 3)  # rows 0,1,2; never row 3


class TestForest:
    def test_vote_fraction_example(self):
        trees = []
        for vote in [1] * 4 + [0] * 6:
            trees.append(_Tree(feature=np.array([-1]), threshold=np.array([0.0]),
                               left=np.array([-1]), right=np.array([-1]),
                               value=np.array([float(vote)])))
        model = Model(kind=RANDOM_FOREST, feature_names=("f0",), task=FORMATION,
                      network=BEHAVIORAL,
                      transform=FeatureTransform(None, 0.0, 0.0, False),
                      params={"trees": trees, "n_trees": 10}, threshold=None)
        labels, scores = predict(model, np.array([[0.3]]))
        assert scores[0] == pytest.approx(0.4)
        assert not labels[0]

    def test_learns_threshold_rule(self):
        rng = np.random.default_rng(5)
        X = rng.random((500, 2))
        y = (X[:, 0] > 0.55).astype(np.int8)
        ds = make_dataset(X, y)
        fit, val = split(ds, SplitSpec(rng_seed=0))
        model = train(RANDOM_FOREST, fit, val, SplitSpec(rng_seed=0),
                      TrainOptions(forest_tree_grid=(10, 50)))
        report = evaluate(model, val)
        assert report.accuracy >= 0.95
        assert report.recall >= 0.95


class TestBayes:
    def test_separated_gaussians(self):
        rng = np.random.default_rng(6)
        X = np.vstack([rng.normal(0.2, 0.05, (200, 1)), rng.normal(0.8, 0.05, (200, 1))])
        y = np.array([0] * 200 + [1] * 200, dtype=np.int8)
        ds = make_dataset(X, y)
        fit, val = split(ds, SplitSpec(rng_seed=0))
        model = train(NAIVE_BAYES, fit, val, SplitSpec(rng_seed=0))
        report = evaluate(model, val)
        assert report.accuracy == 1.0


class TestEvaluate:
    def _stub(self, scores):
        # regression stub whose score equals the single input feature
        return Model(kind=LINEAR_REGRESSION, feature_names=("f0",), task=FORMATION,
                     network=BEHAVIORAL,
                     transform=FeatureTransform(None, 0.0, 0.0, False),
                     params={"coef": np.array([1.0]), "intercept": 0.0}, threshold=0.5)

    def test_hand_confusion_case(self):
        # TP=3 FP=1 FN=1 TN=3 -> accuracy 0.75, recall 0.75, precision 0.75
        scores = np.array([0.9, 0.8, 0.7, 0.6, 0.4, 0.3, 0.2, 0.1])
        y = np.array([1, 1, 1, 0, 1, 0, 0, 0], dtype=np.int8)
        ds = make_dataset(scores.reshape(-1, 1), y)
        report = evaluate(self._stub(scores), ds)
        assert (report.tp, report.fp, report.fn, report.tn) == (3, 1, 1, 3)
        assert report.accuracy == pytest.approx(0.75)
        assert report.recall == pytest.approx(0.75)
        assert report.precision == pytest.approx(0.75)
        assert report.selection_score == pytest.approx(5 * 0.75 + 0.75)

    def test_perfect_classifier(self):
        scores = np.array([0.9, 0.8, 0.1, 0.2])
        y = np.array([1, 1, 0, 0], dtype=np.int8)
        report = evaluate(self._stub(scores), make_dataset(scores.reshape(-1, 1), y))
        assert report.accuracy == report.recall == report.precision == 1.0
        assert report.selection_score == pytest.approx(6.0)

    def test_all_negative_predictor(self):
        scores = np.array([0.1, 0.2, 0.3, 0.4])
        y = np.array([1, 0, 1, 0], dtype=np.int8)
        report = evaluate(self._stub(scores), make_dataset(scores.reshape(-1, 1), y))
        assert report.accuracy == pytest.approx(0.5)
        assert report.recall == 0.0
        assert report.precision is None  # nothing predicted positive
        assert report.selection_score == pytest.approx(0.5)

    def test_single_class_test_reported_not_raised(self):
        scores = np.array([0.9, 0.8, 0.7])
        y = np.array([0, 0, 0], dtype=np.int8)
        report = evaluate(self._stub(scores), make_dataset(scores.reshape(-1, 1), y))
        assert report.recall is None
        assert report.selection_score is None
        assert report.roc == []
        assert report.auc is None


class TestRoc:
    def test_endpoints_and_monotonicity(self):
        rng = np.random.default_rng(0)
        scores = rng.random(500)
        y = (rng.random(500) < 0.3).astype(bool)
        points = roc_curve(y, scores)
        assert (points[0].fpr, points[0].tpr) == (0.0, 0.0)
        assert (points[-1].fpr, points[-1].tpr) == (1.0, 1.0)
        fprs = [p.fpr for p in points]
        tprs = [p.tpr for p in points]
        assert fprs == sorted(fprs)
        assert tprs == sorted(tprs)
        thresholds = [p.threshold for p in points]
        assert thresholds == sorted(thresholds, reverse=True)

    def test_auc_of_perfect_ranking(self):
        y = np.array([0, 0, 1, 1], dtype=bool)
        points = roc_curve(y, np.array([0.1, 0.2, 0.8, 0.9]))
        assert roc_auc(points) == pytest.approx(1.0)

    def test_auc_of_random_ranking_near_half(self):
        rng = np.random.default_rng(1)
        y = rng.random(4000) < 0.5
        points = roc_curve(y, rng.random(4000))
        assert roc_auc(points) == pytest.approx(0.5, abs=0.05)


def _report(kind, sel, acc):
    return EvaluationReport(kind=kind, task=FORMATION, network=BEHAVIORAL,
                            method="equal_preference", accuracy=acc, recall=None,
                            precision=None, selection_score=sel, tp=0, fp=0, fn=0,
                            tn=0, roc=[], auc=None)


class TestSelectModel:
    def test_argmax(self):
        reports = {LINEAR_SVM: _report(LINEAR_SVM, 5.2, 0.9),
                   KNN: _report(KNN, 5.9, 0.9)}
        assert select_model(reports) == KNN

    def test_tie_broken_by_accuracy(self):
        reports = {LINEAR_SVM: _report(LINEAR_SVM, 5.0, 0.9),
                   KNN: _report(KNN, 5.0, 0.8)}
        assert select_model(reports) == LINEAR_SVM

    def test_full_tie_uses_kind_order(self):
        reports = {KNN: _report(KNN, 5.0, 0.9),
                   LINEAR_REGRESSION: _report(LINEAR_REGRESSION, 5.0, 0.9)}
        assert select_model(reports) == LINEAR_REGRESSION

    def test_single_candidate(self):
        assert select_model({KNN: _report(KNN, 1.0, 0.5)}) == KNN

    def test_all_undefined_is_an_error(self):
        with pytest.raises(ValueError):
            select_model({KNN: _report(KNN, None, 0.5)})


class TestMetricIdentities:
    def test_confusion_arithmetic_on_random_vectors(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            y = rng.random(200) < 0.4
            pred_scores = rng.random(200)
            ds = make_dataset(pred_scores.reshape(-1, 1), y.astype(np.int8))
            model = Model(kind=LINEAR_REGRESSION, feature_names=("f0",), task=FORMATION,
                          network=BEHAVIORAL,
                          transform=FeatureTransform(None, 0.0, 0.0, False),
                          params={"coef": np.array([1.0]), "intercept": 0.0},
                          threshold=0.5)
            report = evaluate(model, ds)
            pred = pred_scores >= 0.5
            tp = int(np.sum(pred & y)); fp = int(np.sum(pred & ~y))
            fn = int(np.sum(~pred & y)); tn = int(np.sum(~pred & ~y))
            assert (report.tp, report.fp, report.fn, report.tn) == (tp, fp, fn, tn)
            assert report.accuracy == pytest.approx((tp + tn) / 200)
            if tp + fn:
                assert report.recall == pytest.approx(tp / (tp + fn))
            if tp + fp:
                assert report.precision == pytest.approx(tp / (tp + fp))


class TestDeterminism:
    def test_identical_runs(self):
        ds = random_dataset(300, seed=4, noise=0.2)
        spec = SplitSpec(rng_seed=9)
        fit, val = split(ds, spec)
        for kind in KINDS:
            a = train(kind, fit, val, spec)
            b = train(kind, fit, val, spec)
            la, sa = predict(a, ds.X)
            lb, sb = predict(b, ds.X)
            np.testing.assert_array_equal(la, lb)
            np.testing.assert_array_equal(sa, sb)

    def test_threaded_training_matches_serial(self):
        ds = random_dataset(240, seed=12, noise=0.3)
        spec = SplitSpec(rng_seed=3)
        fit, val = split(ds, spec)
        serial = train_all(fit, val, spec, jobs=1)
        threaded = train_all(fit, val, spec, jobs=4)
        for kind in KINDS:
            _, s1 = predict(serial[kind], ds.X)
            _, s2 = predict(threaded[kind], ds.X)
            np.testing.assert_array_equal(s1, s2)


class TestPlantedSignalRecovery:
    def test_every_kind_clears_planted_bar(self):
        # formation probability is monotone in the dominant attribute's
        # agreement; each classifier should clear 5*0.9 + 0.9
        reports, best, _ = _planted.run_formation_pipeline(seed=0)
        for kind, report in reports.items():
            assert report.selection_score is not None
            assert report.selection_score > selection_score(0.9, 0.9), kind
        assert reports[best].selection_score == max(
            r.selection_score for r in reports.values())
