import math

import numpy as np
import pytest
from scipy.optimize import minimize

from gearlens.classifier import (
    CLASS_NAMES,
    ModelFormatError,
    Probabilities,
    SoftmaxHead,
    TrainConfig,
    classify,
    cross_entropy,
    evaluate,
    load_model,
    loss_and_grad,
    predict,
    save_model,
    softmax,
    train,
    train_on_features,
    zero_head,
)
from gearlens.dataset import Label, LabeledImage, SplitRatios, ingest_directory
from gearlens.features import ExtractorConfig, FeatureVector, extract_features, feature_dimension
from gearlens.imagecore import RgbImage
from gearlens.synthgear import generate_dataset

from oracles import finite_difference_grads

TOY_CONFIG = ExtractorConfig(canonical_size=8, grid=1)  # dimension 6
TOY_DIM = feature_dimension(TOY_CONFIG)


def vec(*values):
    return FeatureVector(tuple(float(v) for v in values))


def toy_batch():
    """Linearly separable 2+2 points in the 6-dimensional toy feature space."""
    return [
        (vec(0.9, 0.1, 0.5, 0.0, 0.2, 0.1), Label.NORMAL_GEAR),
        (vec(0.8, 0.2, 0.4, 0.1, 0.3, 0.0), Label.NORMAL_GEAR),
        (vec(0.1, 0.9, 0.5, 0.0, 0.2, 0.1), Label.BROKEN_GEAR),
        (vec(0.2, 0.8, 0.6, 0.1, 0.1, 0.2), Label.BROKEN_GEAR),
    ]


def random_head(rng, config=TOY_CONFIG, scale=1.0):
    d = feature_dimension(config)
    return SoftmaxHead(
        CLASS_NAMES, scale * rng.normal(size=(2, d)), scale * rng.normal(size=2), config
    )


def random_batch(rng, n, config=TOY_CONFIG):
    d = feature_dimension(config)
    labels = (Label.NORMAL_GEAR, Label.BROKEN_GEAR)
    return [
        (FeatureVector(tuple(rng.uniform(0, 1, size=d))), labels[rng.integers(0, 2)])
        for _ in range(n)
    ]


class TestSoftmax:
    def test_symmetric(self):
        assert softmax([0.0, 0.0]).values == (0.5, 0.5)

    def test_two_logits(self):
        p = softmax([1.0, 0.0])
        assert p.values[0] == pytest.approx(0.731059, abs=1e-5)
        assert p.values[1] == pytest.approx(0.268941, abs=1e-5)

    def test_shift_invariance(self):
        a = softmax([2.0, -1.0, 0.5]).values
        b = softmax([2.0 + 37.5, -1.0 + 37.5, 0.5 + 37.5]).values
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_extreme_logits_stable(self):
        p = softmax([1000.0, 0.0]).values
        assert p[0] == pytest.approx(1.0)
        assert sum(p) == pytest.approx(1.0, abs=1e-9)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            softmax([float("nan"), 0.0])
        with pytest.raises(ValueError, match="finite"):
            softmax([float("inf"), 0.0])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            softmax([])


class TestProbabilities:
    def test_sum_tolerance_admits_float32_pairs(self):
        Probabilities((0.99599946, 0.0040006186))  # sums to 1.0000000786

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError, match="sum"):
            Probabilities((0.7, 0.2))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Probabilities((1.2, -0.2))


class TestCrossEntropy:
    def test_perfect_prediction(self):
        assert cross_entropy(Probabilities((1.0, 0.0)), Label.NORMAL_GEAR) == 0.0

    def test_half(self):
        assert cross_entropy(Probabilities((0.5, 0.5)), Label.BROKEN_GEAR) == pytest.approx(
            math.log(2), abs=1e-6
        )

    def test_zero_probability_clamped(self):
        ce = cross_entropy(Probabilities((0.0, 1.0)), Label.NORMAL_GEAR)
        assert ce == pytest.approx(-math.log(1e-12))
        assert math.isfinite(ce)


class TestLossAndGrad:
    def test_confident_correct_prediction_has_tiny_gradient(self):
        x = vec(0.9, 0.1, 0.0, 0.0, 0.0, 0.0)
        weights = np.zeros((2, TOY_DIM))
        weights[0, 0], weights[1, 1] = 60.0, 60.0  # p_true > 1 - 1e-7
        head = SoftmaxHead(CLASS_NAMES, weights, np.zeros(2), TOY_CONFIG)
        loss, dw, db = loss_and_grad(head, [(x, Label.NORMAL_GEAR)])
        assert loss < 1e-6
        assert np.linalg.norm(dw) <= 1e-6 and np.linalg.norm(db) <= 1e-6

    def test_zero_head_balanced_batch_has_zero_bias_gradient(self):
        head = zero_head(TOY_CONFIG)
        batch = random_batch(np.random.default_rng(0), 6)
        batch = [(x, Label.NORMAL_GEAR) for x, _ in batch[:3]] + [
            (x, Label.BROKEN_GEAR) for x, _ in batch[3:]
        ]
        loss, _, db = loss_and_grad(head, batch)
        assert loss == pytest.approx(math.log(2), abs=1e-12)
        np.testing.assert_array_equal(db, np.zeros(2))

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(123)
        for _ in range(10):
            head = random_head(rng)
            batch = random_batch(rng, int(rng.integers(1, 5)))

            def loss_fn(weights, bias):
                h = SoftmaxHead(CLASS_NAMES, weights.copy(), bias.copy(), TOY_CONFIG)
                return loss_and_grad(h, batch)[0]

            _, dw, db = loss_and_grad(head, batch)
            num_dw, num_db = finite_difference_grads(loss_fn, head.weights, head.bias)
            np.testing.assert_allclose(dw, num_dw, rtol=1e-5, atol=1e-8)
            np.testing.assert_allclose(db, num_db, rtol=1e-5, atol=1e-8)

    def test_dimension_mismatch(self):
        head = zero_head(TOY_CONFIG)
        with pytest.raises(ValueError, match="dimension"):
            loss_and_grad(head, [(vec(0.5), Label.NORMAL_GEAR)])

    def test_empty_batch(self):
        with pytest.raises(ValueError, match="non-empty"):
            loss_and_grad(zero_head(TOY_CONFIG), [])


class TestTrainOnFeatures:
    def test_toy_set_reaches_perfect_training_accuracy(self):
        batch = toy_batch()
        cfg = TrainConfig(steps=500, learning_rate=0.1, seed=0, eval_interval=500)
        head, trace = train_on_features(batch, cfg, TOY_CONFIG)
        assert trace.step_records[-1].train_acc == 1.0

        # independent oracle: an unconstrained optimizer drives the logistic
        # loss toward zero, so the four points are linearly separable
        X = np.array([x.as_array() for x, _ in batch])
        y = np.array([CLASS_NAMES.index(label.value) for _, label in batch])

        def logistic_loss(theta):
            w, b = theta[:TOY_DIM], theta[TOY_DIM]
            z = X @ w + b
            return np.logaddexp(0, np.where(y == 1, -z, z)).mean()

        result = minimize(logistic_loss, np.zeros(TOY_DIM + 1), method="BFGS")
        assert result.fun < 1e-3

    def test_steps_one_trace_shape(self):
        cfg = TrainConfig(steps=1, learning_rate=0.1, seed=0, eval_interval=1)
        _, trace = train_on_features(toy_batch(), cfg, TOY_CONFIG, validation=toy_batch())
        assert len(trace.step_records) == 1
        assert len(trace.validation_records) == 1
        assert trace.validation_records[0].step == 1

    def test_validation_records_at_interval_and_final_step(self):
        cfg = TrainConfig(steps=95, learning_rate=0.1, seed=0, eval_interval=10)
        _, trace = train_on_features(toy_batch(), cfg, TOY_CONFIG, validation=toy_batch())
        assert [r.step for r in trace.validation_records] == [
            10, 20, 30, 40, 50, 60, 70, 80, 90, 95,
        ]
        assert len(trace.step_records) == cfg.steps

    def test_descent_is_monotone_at_small_learning_rate(self):
        rng = np.random.default_rng(9)
        batch = random_batch(rng, 24)
        cfg = TrainConfig(steps=200, learning_rate=0.01, seed=0, eval_interval=200)
        _, trace = train_on_features(batch, cfg, TOY_CONFIG)
        losses = [math.log(2)] + [r.train_ce for r in trace.step_records]
        assert all(b <= a + 1e-9 for a, b in zip(losses, losses[1:]))

    def test_deterministic(self):
        cfg = TrainConfig(steps=50, learning_rate=0.1, seed=4, eval_interval=10)
        h1, t1 = train_on_features(toy_batch(), cfg, TOY_CONFIG, validation=toy_batch())
        h2, t2 = train_on_features(toy_batch(), cfg, TOY_CONFIG, validation=toy_batch())
        np.testing.assert_array_equal(h1.weights, h2.weights)
        np.testing.assert_array_equal(h1.bias, h2.bias)
        assert t1 == t2

    def test_single_class_rejected(self):
        batch = [(x, Label.NORMAL_GEAR) for x, _ in toy_batch()]
        cfg = TrainConfig(steps=5, learning_rate=0.1, seed=0, eval_interval=5)
        with pytest.raises(ValueError, match="both classes"):
            train_on_features(batch, cfg, TOY_CONFIG)


class TestTrainEndToEnd:
    def test_benchmark_metric_trends(self, benchmark):
        records = benchmark["trace"].step_records
        assert records[-1].train_ce < records[0].train_ce
        assert records[-1].train_acc >= records[0].train_acc
        assert all(0.0 <= r.train_acc <= 1.0 and r.train_ce >= 0.0 for r in records)
        assert all(
            0.0 <= r.val_acc <= 1.0 and r.val_ce >= 0.0
            for r in benchmark["trace"].validation_records
        )

    def test_small_pipeline_run(self, tmp_path):
        generate_dataset(12, 5, str(tmp_path))
        items = ingest_directory(str(tmp_path))
        cfg = TrainConfig(steps=40, learning_rate=0.1, seed=5, eval_interval=20)
        head, trace, test_acc = train(items, cfg, ExtractorConfig())
        assert len(trace.step_records) == 40
        assert 0.0 <= test_acc <= 1.0
        assert head.weights.shape == (2, 66)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(steps=0)
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            TrainConfig(steps=5, eval_interval=6)


class TestPredictClassifyEvaluate:
    def test_zero_head_is_uniform(self, gear_fixtures):
        head = zero_head(ExtractorConfig())
        assert predict(head, gear_fixtures["intact"]).values == (0.5, 0.5)

    def test_probabilities_sum_to_one(self, gear_fixtures):
        rng = np.random.default_rng(8)
        head = random_head(rng, ExtractorConfig(), scale=3.0)
        for img in gear_fixtures.values():
            assert sum(predict(head, img).values) == pytest.approx(1.0, abs=1e-9)

    def test_classify_paper_examples(self):
        assert classify(Probabilities((0.99599946, 0.0040006186))) is Label.NORMAL_GEAR
        assert classify(Probabilities((0.1334645, 0.86653554))) is Label.BROKEN_GEAR

    def test_classify_tie_goes_to_broken(self):
        assert classify(Probabilities((0.5, 0.5))) is Label.BROKEN_GEAR

    def test_classify_requires_two_classes(self):
        with pytest.raises(ValueError):
            classify(Probabilities((1.0,)))

    def test_evaluate_zero_head_cross_entropy(self, gear_fixtures):
        items = [
            LabeledImage("normal_gear/i.ppm", Label.NORMAL_GEAR, gear_fixtures["intact"]),
            LabeledImage("broken_gear/m.ppm", Label.BROKEN_GEAR, gear_fixtures["missing"]),
        ]
        accuracy, ce = evaluate(zero_head(ExtractorConfig()), items)
        assert ce == pytest.approx(math.log(2), abs=1e-9)
        assert accuracy == 0.5  # ties classify as broken

    def test_evaluate_all_right_and_all_wrong(self, benchmark, gear_fixtures):
        right = [
            LabeledImage("normal_gear/i.ppm", Label.NORMAL_GEAR, gear_fixtures["intact"]),
            LabeledImage("broken_gear/m.ppm", Label.BROKEN_GEAR, gear_fixtures["missing"]),
        ]
        wrong = [
            LabeledImage("normal_gear/i.ppm", Label.BROKEN_GEAR, gear_fixtures["intact"]),
            LabeledImage("broken_gear/m.ppm", Label.NORMAL_GEAR, gear_fixtures["missing"]),
        ]
        assert evaluate(benchmark["head"], right)[0] == 1.0
        assert evaluate(benchmark["head"], wrong)[0] == 0.0

    def test_evaluate_empty_rejected(self):
        with pytest.raises(ValueError):
            evaluate(zero_head(ExtractorConfig()), [])


class TestModelFile:
    def test_round_trip_preserves_predictions_bitwise(self, tmp_path, gear_fixtures):
        rng = np.random.default_rng(21)
        head = random_head(rng, ExtractorConfig(), scale=2.5)
        path = tmp_path / "model.txt"
        save_model(head, str(path))
        loaded = load_model(str(path))
        np.testing.assert_array_equal(loaded.weights, head.weights)
        np.testing.assert_array_equal(loaded.bias, head.bias)
        for img in gear_fixtures.values():
            assert predict(loaded, img).values == predict(head, img).values

    def test_header_layout(self, tmp_path):
        path = tmp_path / "model.txt"
        save_model(zero_head(ExtractorConfig()), str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == "gearlens-model v1"
        assert lines[1] == "classes\tnormal gear\tbroken gear"
        assert lines[2] == "128 4 1.0 1.0 - -"
        assert len(lines) == 5

    def test_explicit_blur_sizes_round_trip(self, tmp_path):
        from gearlens.filters import GaussianSpec

        config = ExtractorConfig(canonical_size=64, blur=GaussianSpec(1.5, 2.0, 9, 11), grid=2)
        head = zero_head(config)
        path = tmp_path / "model.txt"
        save_model(head, str(path))
        assert load_model(str(path)).extractor_config == config

    def test_version_error(self, tmp_path):
        path = tmp_path / "model.txt"
        save_model(zero_head(ExtractorConfig()), str(path))
        text = path.read_text().replace("gearlens-model v1", "gearlens-model v2")
        path.write_text(text)
        with pytest.raises(ModelFormatError, match="line 1"):
            load_model(str(path))

    def test_missing_bias_is_dimension_error_with_line(self, tmp_path):
        path = tmp_path / "model.txt"
        save_model(zero_head(ExtractorConfig()), str(path))
        lines = path.read_text().splitlines()
        lines[3] = " ".join(lines[3].split(" ")[:-1])  # drop the bias value
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ModelFormatError, match="line 4: expected 67 values"):
            load_model(str(path))

    def test_unparsable_number_reports_line(self, tmp_path):
        path = tmp_path / "model.txt"
        save_model(zero_head(ExtractorConfig()), str(path))
        lines = path.read_text().splitlines()
        parts = lines[4].split(" ")
        parts[2] = "half"
        lines[4] = " ".join(parts)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ModelFormatError, match="line 5"):
            load_model(str(path))

    def test_wrong_line_count(self, tmp_path):
        path = tmp_path / "model.txt"
        save_model(zero_head(ExtractorConfig()), str(path))
        path.write_text(path.read_text() + "0.0 0.0\n")
        with pytest.raises(ModelFormatError, match="lines"):
            load_model(str(path))
