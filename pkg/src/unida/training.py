"""Linear-head training on frozen features.

Two trainers share one SGD-with-momentum loop over soft cross-entropy:
source-only training uses one-hot targets from source labels, distillation
uses the temperature-scaled softmax of fixed teacher logits and never sees a
label.  The fixed-model variant skips training entirely and serves the scaled
teacher logits directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .data import DomainView, load_logit_container, save_logit_container
from .exceptions import ConfigError, DomainError, FormatError, ShapeError
from .scoring import (
    NEG_ENTROPY,
    LinearHead,
    PrototypeBank,
    ScoreRule,
    default_threshold,
    prototype_logits,
    predict_with_reject,
    sample_scores,
    softmax,
)
from .validation import as_float_matrix, as_int_vector, check_lengths_match


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    momentum: float = 0.9
    batch_size: int = 32
    iterations: int = 500
    warmup_iters: int = 50
    seed: int = 0
    tau: float = 1.0

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if not (0.0 <= self.momentum < 1.0):
            raise ConfigError("momentum must lie in [0, 1)")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if not (0 <= self.warmup_iters <= self.iterations):
            raise ConfigError("need 0 <= warmup_iters <= iterations")
        if self.tau <= 0:
            raise ConfigError("tau must be positive")


@dataclass(frozen=True)
class TrainTrace:
    losses: np.ndarray
    head: LinearHead


def lr_schedule(iteration: int, config: TrainConfig) -> float:
    """Linear warmup from 0, then cosine decay to 0 at the final iteration."""
    if iteration < config.warmup_iters:
        return config.lr * iteration / config.warmup_iters
    span = config.iterations - config.warmup_iters
    progress = (iteration - config.warmup_iters) / span
    return config.lr * 0.5 * (1.0 + np.cos(np.pi * progress))


def _soft_ce(weights: np.ndarray, bias: np.ndarray, feats: np.ndarray,
             targets: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    probs = softmax(feats @ weights.T + bias, 1.0)
    losses = -(targets * np.log(np.maximum(probs, 1e-300))).sum(axis=1)
    delta = probs - targets
    grad_w = delta.T @ feats / len(feats)
    grad_b = delta.mean(axis=0)
    return float(losses.mean()), grad_w, grad_b


def ce_loss_and_grad(head: LinearHead, features, targets
                     ) -> tuple[float, tuple[np.ndarray, np.ndarray]]:
    """Mean cross-entropy H(q, softmax(Wx+b)) and its exact gradient.

    Targets are per-row distributions q; the gradient is the batch mean of
    (softmax(Wx+b) - q) outer x for the weights and (softmax(Wx+b) - q) for
    the bias.
    """
    feats = as_float_matrix(features, "features")
    targets = as_float_matrix(targets, "targets")
    check_lengths_match(feats, targets, names=("features", "targets"))
    if feats.shape[1] != head.dim or targets.shape[1] != head.n_classes:
        raise ShapeError(
            f"batch ({feats.shape}, targets {targets.shape}) does not match "
            f"head ({head.n_classes} x {head.dim})"
        )
    if np.any(targets < 0) or np.any(np.abs(targets.sum(axis=1) - 1.0) > 1e-6):
        raise DomainError("target rows must be probability distributions")
    loss, grad_w, grad_b = _soft_ce(head.weights, head.bias, feats, targets)
    return loss, (grad_w, grad_b)


def _run_sgd(feats: np.ndarray, targets: np.ndarray, config: TrainConfig) -> TrainTrace:
    n, d = feats.shape
    k = targets.shape[1]
    weights = np.zeros((k, d))
    bias = np.zeros(k)
    vel_w = np.zeros_like(weights)
    vel_b = np.zeros_like(bias)
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(n)
    cursor = 0
    losses = np.empty(config.iterations)
    for it in range(config.iterations):
        if cursor >= n:
            order = rng.permutation(n)
            cursor = 0
        batch = order[cursor:cursor + config.batch_size]
        cursor += config.batch_size
        loss, grad_w, grad_b = _soft_ce(weights, bias, feats[batch], targets[batch])
        losses[it] = loss
        lr_t = lr_schedule(it, config)
        vel_w = config.momentum * vel_w + grad_w
        vel_b = config.momentum * vel_b + grad_b
        weights = weights - lr_t * vel_w
        bias = bias - lr_t * vel_b
    return TrainTrace(losses=losses, head=LinearHead(weights, bias))


def train_source_only(source: DomainView, config: TrainConfig) -> TrainTrace:
    """Cross-entropy training of a linear head on labeled source features."""
    if source.n == 0:
        raise ConfigError("cannot train on an empty source view")
    feats = as_float_matrix(source.features, "features")
    labels = as_int_vector(source.labels)
    k = source.n_source_classes
    if labels.max() >= k:
        raise ConfigError("source view contains non-source labels")
    targets = np.zeros((source.n, k))
    targets[np.arange(source.n), labels] = 1.0
    return _run_sgd(feats, targets, config)


def distill(target: DomainView | np.ndarray, teacher_logits, tau: float,
            config: TrainConfig) -> TrainTrace:
    """Train a student head toward softmax(teacher_logits / tau).

    The teacher matrix is fixed for the whole run.  Target labels are never
    read: the view is stripped before any access, so this code path cannot
    observe them even by accident.
    """
    if isinstance(target, DomainView):
        target = target.without_labels()
    feats = as_float_matrix(getattr(target, "features", target), "features")
    teacher = as_float_matrix(teacher_logits, "teacher_logits")
    if teacher.shape[0] != feats.shape[0]:
        raise ShapeError(
            f"teacher has {teacher.shape[0]} rows for {feats.shape[0]} target samples"
        )
    if feats.shape[0] == 0:
        raise ConfigError("cannot distill onto an empty target view")
    targets = softmax(teacher, tau)
    return _run_sgd(feats, targets, config)


@dataclass(frozen=True)
class FixedHead:
    """The no-training variant: scaled teacher logits served as a classifier."""

    bank: PrototypeBank
    tau: float

    def logits(self, x) -> np.ndarray:
        return prototype_logits(self.bank, x) / self.tau


def fixed_model_head(bank: PrototypeBank, tau: float) -> FixedHead:
    if tau <= 0:
        raise DomainError("tau must be positive")
    return FixedHead(bank=bank, tau=float(tau))


class _RejectingClassifierMixin:
    """Shared prediction surface over a fitted linear head."""

    def decision_function(self, X):
        head = self.head_
        return as_float_matrix(X, "X") @ head.weights.T + head.bias

    def predict(self, X):
        return self.decision_function(X).argmax(axis=1)

    def score_samples(self, X):
        rule = ScoreRule(NEG_ENTROPY, None)
        return sample_scores(self.decision_function(X), 1.0, rule)

    def predict_with_reject(self, X):
        logits = self.decision_function(X)
        rule = ScoreRule(NEG_ENTROPY, default_threshold(NEG_ENTROPY, logits.shape[1]))
        return predict_with_reject(logits, 1.0, rule)


class SourceOnlyClassifier(_RejectingClassifierMixin, ClassifierMixin, BaseEstimator):
    """Linear probe trained by cross-entropy on labeled features."""

    def __init__(self, lr: float = 0.01, momentum: float = 0.9, batch_size: int = 32,
                 iterations: int = 500, warmup_iters: int = 50, seed: int = 0):
        self.lr = lr
        self.momentum = momentum
        self.batch_size = batch_size
        self.iterations = iterations
        self.warmup_iters = warmup_iters
        self.seed = seed

    def _config(self) -> TrainConfig:
        return TrainConfig(lr=self.lr, momentum=self.momentum, batch_size=self.batch_size,
                           iterations=self.iterations, warmup_iters=self.warmup_iters,
                           seed=self.seed)

    def fit(self, X, y):
        feats = as_float_matrix(X, "X")
        labels = as_int_vector(y)
        check_lengths_match(feats, labels, names=("X", "y"))
        self.classes_ = np.unique(labels)
        index = np.searchsorted(self.classes_, labels)
        targets = np.zeros((len(labels), len(self.classes_)))
        targets[np.arange(len(labels)), index] = 1.0
        trace = _run_sgd(feats, targets, self._config())
        self.head_ = trace.head
        self.trace_ = trace
        return self

    def predict(self, X):
        return self.classes_[self.decision_function(X).argmax(axis=1)]


class DistillationClassifier(_RejectingClassifierMixin, BaseEstimator):
    """Linear student trained toward a fixed teacher's scaled soft targets."""

    def __init__(self, tau: float = 1.0, lr: float = 0.01, momentum: float = 0.9,
                 batch_size: int = 32, iterations: int = 500, warmup_iters: int = 50,
                 seed: int = 0):
        self.tau = tau
        self.lr = lr
        self.momentum = momentum
        self.batch_size = batch_size
        self.iterations = iterations
        self.warmup_iters = warmup_iters
        self.seed = seed

    def fit(self, X, teacher_logits):
        config = TrainConfig(lr=self.lr, momentum=self.momentum,
                             batch_size=self.batch_size, iterations=self.iterations,
                             warmup_iters=self.warmup_iters, seed=self.seed,
                             tau=self.tau)
        trace = distill(np.asarray(X, dtype=np.float64), teacher_logits, self.tau, config)
        self.head_ = trace.head
        self.trace_ = trace
        return self


class FixedTeacherClassifier(_RejectingClassifierMixin, BaseEstimator):
    """Prototype-bank classifier with temperature scaling and no training."""

    def __init__(self, prototypes=None, logit_scale: float = 100.0, tau: float = 1.0):
        self.prototypes = prototypes
        self.logit_scale = logit_scale
        self.tau = tau

    def fit(self, X=None, y=None):
        bank = PrototypeBank(self.prototypes, self.logit_scale)
        self.fixed_head_ = fixed_model_head(bank, self.tau)
        return self

    def decision_function(self, X):
        return self.fixed_head_.logits(X)


def save_linear_head(path, head: LinearHead, metadata: dict[str, str] | None = None) -> None:
    """Serialize a head: the d x K transposed weights plus the bias as a final row."""
    payload = np.vstack([head.weights.T, head.bias[None, :]])
    meta = {"kind": "linear_head", "n_classes": str(head.n_classes)}
    meta.update(metadata or {})
    save_logit_container(path, payload, meta)


def load_linear_head(path) -> tuple[LinearHead, dict[str, str]]:
    values, meta = load_logit_container(path)
    if meta.get("kind") != "linear_head":
        raise FormatError(f"{path}: container is not a linear head (kind={meta.get('kind')!r})")
    if values.shape[0] < 2:
        raise FormatError(f"{path}: head container needs weight rows plus a bias row")
    return LinearHead(values[:-1].T, values[-1]), meta
