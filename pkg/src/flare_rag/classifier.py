"""Linear routing classifiers over hashed n-gram features.

Word unigrams and bigrams from the shared tokenizer are hashed into a
fixed-dimension count vector with seeded 64-bit FNV-1a, so feature vectors
are reproducible across runs and implementations (Python's builtin hash is
salted per process and is deliberately not used). On top sits a multinomial
softmax classifier trained by mini-batch gradient descent, and two trained
classifiers sharing a feature space can be blended elementwise:

    W_alpha = (1 - alpha) * W_cost + alpha * W_reliability

which makes the blended logits the same convex combination of the two
classifiers' logits. Routing takes the argmax, ties broken toward the
cheaper strategy by the fixed class order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .bm25 import tokenize
from .engine import Strategy
from .errors import DataError

DEFAULT_DIMENSION = 2**18
DEFAULT_HASH_SEED = 42

WEIGHTS_VERSION = 1

CLASSES_3 = (Strategy.NO_RETRIEVAL, Strategy.SINGLE_STEP, Strategy.MULTI_STEP)
CLASSES_4 = CLASSES_3 + (Strategy.UNANSWERABLE,)

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(text: str, seed: int = 0) -> int:
    """Seeded 64-bit FNV-1a over the seed's 8 little-endian bytes then utf-8 text."""
    h = _FNV_OFFSET
    for byte in (seed & _MASK64).to_bytes(8, "little") + text.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class FeatureConfig:
    dimension: int = DEFAULT_DIMENSION
    hash_seed: int = DEFAULT_HASH_SEED

    def __post_init__(self):
        if self.dimension < 2 or self.dimension & (self.dimension - 1):
            raise DataError(f"dimension must be a power of two >= 2, got {self.dimension}")


def featurize(config: FeatureConfig, text: str) -> dict[int, int]:
    """Sparse hashed counts of word unigrams and bigrams.

    Colliding n-grams accumulate into the same bucket, so the counts always
    sum to (#unigrams + #bigrams). Empty text gives the zero vector.
    """
    tokens = tokenize(text)
    ngrams = list(tokens)
    ngrams.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    vector: dict[int, int] = {}
    for gram in ngrams:
        index = fnv1a64(gram, config.hash_seed) % config.dimension
        vector[index] = vector.get(index, 0) + 1
    return vector


@dataclass
class ClassifierWeights:
    """A K x D weight matrix plus bias, tied to its feature space and class order."""

    weights: np.ndarray
    bias: np.ndarray
    config: FeatureConfig
    classes: tuple[Strategy, ...] = CLASSES_3

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        k = len(self.classes)
        if self.weights.shape != (k, self.config.dimension):
            raise DataError(
                f"weight shape {self.weights.shape} does not match "
                f"K={k}, D={self.config.dimension}"
            )
        if self.bias.shape != (k,):
            raise DataError(f"bias shape {self.bias.shape} does not match K={k}")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise DataError("weights must be finite")

    @property
    def n_classes(self) -> int:
        return len(self.classes)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 64
    learning_rate: float = 0.1  # decayed as lr / sqrt(step)
    l2: float = 1e-4
    seed: int = 42


@dataclass
class TrainResult:
    weights: ClassifierWeights
    losses: list[float] = field(default_factory=list)  # mean regularized loss per epoch


@dataclass(frozen=True)
class RouteDecision:
    strategy: Strategy  # what gets executed
    predicted: Strategy  # raw argmax class (unanswerable maps to no_retrieval above)
    logits: np.ndarray
    probabilities: np.ndarray


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def loss_and_gradients(
    weights: np.ndarray,
    bias: np.ndarray,
    features: sparse.csr_matrix,
    targets: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy plus (l2/2)||W||^2 (bias unpenalized), with gradients."""
    n = features.shape[0]
    logits = features @ weights.T + bias
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(n)
    data_loss = float(np.mean(log_norm - shifted[rows, targets]))
    loss = data_loss + 0.5 * l2 * float(np.sum(weights * weights))
    delta = _softmax(logits)
    delta[rows, targets] -= 1.0
    grad_w = (features.T @ delta).T / n + l2 * weights
    grad_b = delta.mean(axis=0)
    return loss, grad_w, grad_b


def feature_matrix(config: FeatureConfig, texts: Sequence[str]) -> sparse.csr_matrix:
    data: list[int] = []
    rows: list[int] = []
    cols: list[int] = []
    for row, text in enumerate(texts):
        for col, count in featurize(config, text).items():
            rows.append(row)
            cols.append(col)
            data.append(count)
    return sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64), (rows, cols)),
        shape=(len(texts), config.dimension),
    )


def train(
    examples: Sequence[tuple[str, Strategy]],
    config: FeatureConfig | None = None,
    hyper: TrainConfig | None = None,
    classes: tuple[Strategy, ...] = CLASSES_3,
    allow_absent: Iterable[Strategy] = (),
) -> TrainResult:
    """Fit the softmax classifier with mini-batch gradient descent.

    Deterministic for a fixed seed: weights start at zero and the per-epoch
    shuffle comes from the seeded generator. Every class must appear in the
    data unless listed in allow_absent (reliability training has no
    no_retrieval examples; its row stays near zero under the L2 penalty, so
    blending with a cost classifier remains well defined).
    """
    config = config or FeatureConfig()
    hyper = hyper or TrainConfig()
    if not examples:
        raise DataError("no training examples")
    class_index = {c: i for i, c in enumerate(classes)}
    exempt = set(allow_absent)
    counts = {c: 0 for c in classes}
    for text, label in examples:
        if label not in class_index:
            raise DataError(f"label {label.value} is not in the class order {[c.value for c in classes]}")
        counts[label] += 1
    missing = [c.value for c in classes if counts[c] == 0 and c not in exempt]
    if missing:
        raise DataError(f"missing training examples for classes: {', '.join(missing)}")

    features = feature_matrix(config, [text for text, _ in examples])
    targets = np.asarray([class_index[label] for _, label in examples], dtype=np.int64)
    n = len(examples)
    k = len(classes)
    weights = np.zeros((k, config.dimension), dtype=np.float64)
    bias = np.zeros(k, dtype=np.float64)
    rng = np.random.default_rng(hyper.seed)
    step = 0
    losses: list[float] = []
    for _ in range(hyper.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        batches = 0
        for start in range(0, n, hyper.batch_size):
            batch = order[start : start + hyper.batch_size]
            step += 1
            loss, grad_w, grad_b = loss_and_gradients(
                weights, bias, features[batch], targets[batch], hyper.l2
            )
            lr = hyper.learning_rate / math.sqrt(step)
            weights -= lr * grad_w
            bias -= lr * grad_b
            epoch_loss += loss
            batches += 1
        losses.append(epoch_loss / batches)
    return TrainResult(
        weights=ClassifierWeights(weights=weights, bias=bias, config=config, classes=classes),
        losses=losses,
    )


def interpolate(coc: ClassifierWeights, roc: ClassifierWeights, alpha: float) -> ClassifierWeights:
    """Elementwise blend of two classifiers sharing a feature space.

    alpha=0 is exactly the first (cost-optimized) classifier, alpha=1
    exactly the second; logits blend linearly in between.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if coc.config != roc.config:
        raise DataError(
            f"feature config mismatch: {coc.config.dimension}/{coc.config.hash_seed} "
            f"vs {roc.config.dimension}/{roc.config.hash_seed}"
        )
    if coc.classes != roc.classes:
        raise DataError("class order mismatch between classifiers")
    return ClassifierWeights(
        weights=(1.0 - alpha) * coc.weights + alpha * roc.weights,
        bias=(1.0 - alpha) * coc.bias + alpha * roc.bias,
        config=coc.config,
        classes=coc.classes,
    )


def logits_for(weights: ClassifierWeights, text: str) -> np.ndarray:
    logits = weights.bias.copy()
    for index, count in featurize(weights.config, text).items():
        logits += weights.weights[:, index] * count
    return logits


def route(weights: ClassifierWeights, text: str) -> RouteDecision:
    """Pick the strategy for a query: argmax of the logits.

    np.argmax keeps the first maximum, and the fixed class order runs from
    cheap to dear, so exact ties resolve toward the cheaper strategy. An
    unanswerable argmax executes as no_retrieval.
    """
    logits = logits_for(weights, text)
    probabilities = _softmax(logits)
    predicted = weights.classes[int(np.argmax(logits))]
    strategy = Strategy.NO_RETRIEVAL if predicted is Strategy.UNANSWERABLE else predicted
    return RouteDecision(
        strategy=strategy, predicted=predicted, logits=logits, probabilities=probabilities
    )


def save_weights(weights: ClassifierWeights, path: str | Path) -> Path:
    path = Path(path)
    payload = {
        "version": WEIGHTS_VERSION,
        "K": weights.n_classes,
        "D": weights.config.dimension,
        "seed": weights.config.hash_seed,
        "classes": [c.value for c in weights.classes],
        "W": weights.weights.tolist(),
        "b": weights.bias.tolist(),
    }
    path.write_text(json.dumps(payload, separators=(",", ":")) + "\n", encoding="utf-8")
    return path


def load_weights(path: str | Path, expected_config: FeatureConfig | None = None) -> ClassifierWeights:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"unreadable weight file {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise DataError(f"{path}: weight file is not an object")
    version = payload.get("version")
    if version != WEIGHTS_VERSION:
        raise DataError(f"{path}: unsupported weight file version {version!r}")
    try:
        k = int(payload["K"])
        dimension = int(payload["D"])
        seed = int(payload["seed"])
        classes = tuple(Strategy(name) for name in payload["classes"])
        weights = np.asarray(payload["W"], dtype=np.float64)
        bias = np.asarray(payload["b"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed weight payload: {exc}") from exc
    if classes not in (CLASSES_3, CLASSES_4):
        raise DataError(f"{path}: unsupported class order {[c.value for c in classes]}")
    if len(classes) != k:
        raise DataError(f"{path}: K={k} does not match {len(classes)} classes")
    config = FeatureConfig(dimension=dimension, hash_seed=seed)
    if expected_config is not None:
        if config.dimension != expected_config.dimension:
            raise DataError(
                f"{path}: dimension mismatch: file has D={config.dimension}, "
                f"expected D={expected_config.dimension}"
            )
        if config.hash_seed != expected_config.hash_seed:
            raise DataError(
                f"{path}: hash seed mismatch: file has {config.hash_seed}, "
                f"expected {expected_config.hash_seed}"
            )
    return ClassifierWeights(weights=weights, bias=bias, config=config, classes=classes)
