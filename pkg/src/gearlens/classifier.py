"""The trainable final layer: a softmax head over fixed feature vectors.

Training is full-batch gradient descent on mean cross-entropy from a zero
initialization, which makes the whole procedure a pure function of
(items, config): the only randomness is the seeded dataset split. Step
records hold the training loss and accuracy AFTER each update, so a trace
of S steps shows the descent from the first update onwards; validation
metrics are recorded at every multiple of eval_interval and at the final
step.

Model files are plain text (UTF-8, LF): a magic/version line, the class
list, the extractor configuration, then one line per class of D weights
followed by the bias, each number printed as the shortest decimal that
round-trips the double, so a reloaded head predicts bit-identically.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Label, LabeledImage, SplitRatios, split_dataset
from .features import ExtractorConfig, FeatureVector, extract_features, feature_dimension
from .filters import GaussianSpec
from .imagecore import RgbImage

CLASS_NAMES = ("normal gear", "broken gear")

_MODEL_MAGIC = "gearlens-model v1"
_CE_EPSILON = 1e-12
_PROB_SUM_TOL = 1e-6  # admits 32-bit-rounded pairs such as the report values


class ModelFormatError(ValueError):
    """Model file cannot be parsed; message carries the line number."""


@dataclass(frozen=True)
class Probabilities:
    """Per-class probabilities ordered as CLASS_NAMES."""

    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) < 1:
            raise ValueError("need at least one probability")
        if any(not (0.0 <= v <= 1.0) for v in self.values):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(sum(self.values) - 1.0) > _PROB_SUM_TOL:
            raise ValueError("probabilities must sum to 1")


@dataclass(frozen=True)
class SoftmaxHead:
    class_names: tuple[str, ...]
    weights: np.ndarray  # (C, D)
    bias: np.ndarray  # (C,)
    extractor_config: ExtractorConfig

    def __post_init__(self):
        c = len(self.class_names)
        d = feature_dimension(self.extractor_config)
        if self.weights.shape != (c, d):
            raise ValueError(f"weights must be {(c, d)}, got {self.weights.shape}")
        if self.bias.shape != (c,):
            raise ValueError(f"bias must be ({c},), got {self.bias.shape}")
        self.weights.flags.writeable = False
        self.bias.flags.writeable = False


def zero_head(extractor_config: ExtractorConfig) -> SoftmaxHead:
    d = feature_dimension(extractor_config)
    return SoftmaxHead(CLASS_NAMES, np.zeros((2, d)), np.zeros(2), extractor_config)


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 1000
    learning_rate: float = 0.1
    seed: int = 0
    eval_interval: int = 10
    ratios: SplitRatios = field(default_factory=SplitRatios)

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (1 <= self.eval_interval <= self.steps):
            raise ValueError("eval_interval must lie in [1, steps]")


@dataclass(frozen=True)
class StepRecord:
    step: int
    train_ce: float
    train_acc: float


@dataclass(frozen=True)
class ValidationRecord:
    step: int
    val_ce: float
    val_acc: float


@dataclass(frozen=True)
class TrainingTrace:
    step_records: tuple[StepRecord, ...]
    validation_records: tuple[ValidationRecord, ...]


def softmax(logits) -> Probabilities:
    """Numerically stable softmax (max-subtracted)."""
    z = np.asarray(logits, dtype=np.float64)
    if z.size < 1:
        raise ValueError("need at least one logit")
    if not np.all(np.isfinite(z)):
        raise ValueError("logits must be finite")
    e = np.exp(z - z.max())
    p = e / e.sum()
    return Probabilities(tuple(float(v) for v in p))


def cross_entropy(probs: Probabilities, true_label: Label) -> float:
    """-ln of the probability assigned to the true class, clamped at 1e-12."""
    p_true = probs.values[CLASS_NAMES.index(true_label.value)]
    return -math.log(max(p_true, _CE_EPSILON))


def _batch_arrays(batch: list[tuple[FeatureVector, Label]], dim: int) -> tuple[np.ndarray, np.ndarray]:
    xs = np.empty((len(batch), dim), dtype=np.float64)
    ys = np.empty(len(batch), dtype=np.int64)
    for row, (vec, label) in enumerate(batch):
        arr = vec.as_array()
        if arr.shape != (dim,):
            raise ValueError(f"feature dimension mismatch: expected {dim}, got {arr.shape[0]}")
        xs[row] = arr
        ys[row] = CLASS_NAMES.index(label.value)
    return xs, ys


def _forward(weights: np.ndarray, bias: np.ndarray, xs: np.ndarray) -> np.ndarray:
    logits = xs @ weights.T + bias
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    return e / e.sum(axis=1, keepdims=True)


def _metrics(probs: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    """(mean cross-entropy, accuracy) under the 0.5-threshold decision rule."""
    p_true = probs[np.arange(len(ys)), ys]
    ce = float(np.mean(-np.log(np.maximum(p_true, _CE_EPSILON))))
    predicted = np.where(probs[:, 0] > 0.5, 0, 1)  # tie resolves to broken
    acc = float(np.mean(predicted == ys))
    return ce, acc


def loss_and_grad(
    head: SoftmaxHead, batch: list[tuple[FeatureVector, Label]]
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy over the batch and its gradients w.r.t. W and b."""
    if not batch:
        raise ValueError("batch must be non-empty")
    xs, ys = _batch_arrays(batch, feature_dimension(head.extractor_config))
    probs = _forward(head.weights, head.bias, xs)
    loss, _ = _metrics(probs, ys)
    delta = probs.copy()
    delta[np.arange(len(ys)), ys] -= 1.0
    dw = delta.T @ xs / len(ys)
    db = delta.mean(axis=0)
    return loss, dw, db


def train_on_features(
    batch: list[tuple[FeatureVector, Label]],
    cfg: TrainConfig,
    extractor_config: ExtractorConfig,
    validation: list[tuple[FeatureVector, Label]] | None = None,
) -> tuple[SoftmaxHead, TrainingTrace]:
    """Gradient-descent core over pre-extracted features."""
    if not batch:
        raise ValueError("training batch must be non-empty")
    dim = feature_dimension(extractor_config)
    xs, ys = _batch_arrays(batch, dim)
    if len(set(ys.tolist())) < 2:
        raise ValueError("training set must contain both classes")
    if validation:
        xv, yv = _batch_arrays(validation, dim)
    weights = np.zeros((2, dim))
    bias = np.zeros(2)

    step_records = []
    validation_records = []
    probs = _forward(weights, bias, xs)
    for step in range(1, cfg.steps + 1):
        delta = probs.copy()
        delta[np.arange(len(ys)), ys] -= 1.0
        weights -= cfg.learning_rate * (delta.T @ xs) / len(ys)
        bias -= cfg.learning_rate * delta.mean(axis=0)
        probs = _forward(weights, bias, xs)
        ce, acc = _metrics(probs, ys)
        step_records.append(StepRecord(step, ce, acc))
        if validation and (step % cfg.eval_interval == 0 or step == cfg.steps):
            vce, vacc = _metrics(_forward(weights, bias, xv), yv)
            validation_records.append(ValidationRecord(step, vce, vacc))

    head = SoftmaxHead(CLASS_NAMES, weights, bias, extractor_config)
    return head, TrainingTrace(tuple(step_records), tuple(validation_records))


def _featurize(items: list[LabeledImage], config: ExtractorConfig) -> list[tuple[FeatureVector, Label]]:
    return [(extract_features(item.image, config), item.label) for item in items]


def train(
    items: list[LabeledImage], cfg: TrainConfig, extractor: ExtractorConfig
) -> tuple[SoftmaxHead, TrainingTrace, float]:
    """Split, extract features once per item, descend, and test.

    Returns the trained head, the metric trace, and the accuracy on the
    held-out test part, evaluated once after the final step.
    """
    split = split_dataset(items, cfg.ratios, cfg.seed)
    train_batch = _featurize(split.train, extractor)
    val_batch = _featurize(split.validation, extractor)
    head, trace = train_on_features(train_batch, cfg, extractor, validation=val_batch)

    test_batch = _featurize(split.test, extractor)
    if test_batch:
        xt, yt = _batch_arrays(test_batch, feature_dimension(extractor))
        _, test_acc = _metrics(_forward(head.weights, head.bias, xt), yt)
    else:
        test_acc = float("nan")
    return head, trace, test_acc


def predict(head: SoftmaxHead, image: RgbImage) -> Probabilities:
    """Class probabilities for one image."""
    x = extract_features(image, head.extractor_config).as_array()
    return softmax(head.weights @ x + head.bias)


def classify(probs: Probabilities) -> Label:
    """The class whose probability strictly exceeds 0.5; ties go to broken."""
    if len(probs.values) != 2:
        raise ValueError("classify expects two-class probabilities")
    return Label.NORMAL_GEAR if probs.values[0] > 0.5 else Label.BROKEN_GEAR


def evaluate(head: SoftmaxHead, items: list[LabeledImage]) -> tuple[float, float]:
    """(accuracy, mean cross-entropy) of the head over labeled images."""
    if not items:
        raise ValueError("cannot evaluate on an empty item list")
    xs, ys = _batch_arrays(_featurize(items, head.extractor_config), feature_dimension(head.extractor_config))
    ce, acc = _metrics(_forward(head.weights, head.bias, xs), ys)
    return acc, ce


def _format_real(value: float) -> str:
    return repr(float(value))


def save_model(head: SoftmaxHead, path: str) -> None:
    """Write the text model format described in the module docstring."""
    cfg = head.extractor_config
    size_x = "-" if cfg.blur.size_x is None else str(cfg.blur.size_x)
    size_y = "-" if cfg.blur.size_y is None else str(cfg.blur.size_y)
    lines = [
        _MODEL_MAGIC,
        "classes\t" + "\t".join(head.class_names),
        f"{cfg.canonical_size} {cfg.grid} {_format_real(cfg.blur.sigma_x)} "
        f"{_format_real(cfg.blur.sigma_y)} {size_x} {size_y}",
    ]
    for row, b in zip(head.weights, head.bias):
        lines.append(" ".join(_format_real(v) for v in row) + " " + _format_real(b))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path: str) -> SoftmaxHead:
    """Read a model file back; the head predicts bit-identically."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _MODEL_MAGIC:
        found = lines[0] if lines else "<empty file>"
        raise ModelFormatError(f"line 1: expected {_MODEL_MAGIC!r}, found {found!r}")
    if len(lines) < 2 or lines[1] != "classes\t" + "\t".join(CLASS_NAMES):
        raise ModelFormatError("line 2: expected the two-class header")
    if len(lines) < 3:
        raise ModelFormatError("line 3: missing extractor configuration")

    tokens = lines[2].split(" ")
    if len(tokens) != 6:
        raise ModelFormatError("line 3: expected 6 fields of extractor configuration")
    try:
        canonical_size, grid = int(tokens[0]), int(tokens[1])
        sigma_x, sigma_y = float(tokens[2]), float(tokens[3])
        size_x = None if tokens[4] == "-" else int(tokens[4])
        size_y = None if tokens[5] == "-" else int(tokens[5])
        config = ExtractorConfig(
            canonical_size=canonical_size,
            blur=GaussianSpec(sigma_x, sigma_y, size_x, size_y),
            grid=grid,
        )
    except ValueError as exc:
        raise ModelFormatError(f"line 3: {exc}") from exc

    dim = feature_dimension(config)
    if len(lines) != 3 + len(CLASS_NAMES):
        raise ModelFormatError(f"expected exactly {3 + len(CLASS_NAMES)} lines, found {len(lines)}")
    weights = np.zeros((len(CLASS_NAMES), dim))
    bias = np.zeros(len(CLASS_NAMES))
    for row, line in enumerate(lines[3:]):
        lineno = 4 + row
        tokens = line.split(" ")
        if len(tokens) != dim + 1:
            raise ModelFormatError(f"line {lineno}: expected {dim + 1} values, found {len(tokens)}")
        try:
            values = [float(t) for t in tokens]
        except ValueError as exc:
            raise ModelFormatError(f"line {lineno}: {exc}") from exc
        weights[row] = values[:-1]
        bias[row] = values[-1]
    return SoftmaxHead(CLASS_NAMES, weights, bias, config)
