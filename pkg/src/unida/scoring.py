"""Classifier forward passes, confidence scores, and the threshold reject rule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DomainError, ShapeError
from .validation import as_float_matrix, check_positive_scalar

NEG_ENTROPY = "neg_entropy"
MAX_LOGIT = "max_logit"


@dataclass(frozen=True)
class LinearHead:
    """A linear classifier: weights (K x d) and bias (K,)."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
            raise ShapeError(f"head shapes do not line up: W {w.shape}, b {b.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise DomainError("head parameters must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class PrototypeBank:
    """Unit-norm class prototypes scored by scaled cosine similarity."""

    prototypes: np.ndarray
    logit_scale: float = 100.0

    def __post_init__(self):
        p = as_float_matrix(self.prototypes, "prototypes")
        norms = np.linalg.norm(p, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise DomainError(
                f"prototype rows must be unit norm (max deviation {np.abs(norms - 1.0).max():.3g})"
            )
        check_positive_scalar(self.logit_scale, "logit_scale")
        object.__setattr__(self, "prototypes", p)

    @property
    def n_classes(self) -> int:
        return self.prototypes.shape[0]


@dataclass(frozen=True)
class ScoreRule:
    """Which per-sample score to use and the reject threshold, if any."""

    kind: str
    threshold: float | None = None

    def __post_init__(self):
        if self.kind not in (NEG_ENTROPY, MAX_LOGIT):
            raise ConfigError(f"unknown score rule {self.kind!r}")


def softmax(logits, tau: float = 1.0) -> np.ndarray:
    """Temperature-scaled softmax with max-subtraction, row-wise on matrices."""
    check_positive_scalar(tau, "tau")
    z = np.asarray(logits, dtype=np.float64) / tau
    if not np.all(np.isfinite(z)):
        raise DomainError("logits must be finite")
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _features_of(x) -> np.ndarray:
    feats = getattr(x, "features", x)
    return as_float_matrix(feats, "features")


def head_logits(head: LinearHead, x) -> np.ndarray:
    """Logit matrix W x + b for every row of a view or feature matrix."""
    feats = _features_of(x)
    if feats.shape[1] != head.dim:
        raise ShapeError(f"feature dim {feats.shape[1]} != head dim {head.dim}")
    return feats @ head.weights.T + head.bias


def prototype_logits(bank: PrototypeBank, x) -> np.ndarray:
    """Scaled cosine similarity of each row against every prototype.

    Rows are normalized here, so the loader's normalization flag may be off.
    """
    feats = _features_of(x)
    if feats.shape[1] != bank.prototypes.shape[1]:
        raise ShapeError(
            f"feature dim {feats.shape[1]} != prototype dim {bank.prototypes.shape[1]}"
        )
    norms = np.linalg.norm(feats, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise DomainError("zero-norm feature row cannot be cosine-scored")
    return bank.logit_scale * ((feats / norms) @ bank.prototypes.T)


def neg_entropy_score(probs) -> np.ndarray | float:
    """Sum of p*log(p) (natural log, 0*log0 := 0); higher means more in-class.

    Accepts a single probability vector or a matrix of row vectors.
    """
    p = np.asarray(probs, dtype=np.float64)
    plogp = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    out = plogp.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def max_logit_score(logits) -> np.ndarray | float:
    z = np.asarray(logits, dtype=np.float64)
    if z.shape[-1] == 0:
        raise DomainError("cannot score an empty logit vector")
    out = z.max(axis=-1)
    return float(out) if out.ndim == 0 else out


def default_threshold(rule_kind: str, n_source_classes: int) -> float | None:
    """-log(K)/2 for the entropy rule; the max-logit rule is threshold-free."""
    if rule_kind == MAX_LOGIT:
        return None
    if rule_kind != NEG_ENTROPY:
        raise ConfigError(f"unknown score rule {rule_kind!r}")
    if n_source_classes < 2:
        raise ConfigError("entropy threshold needs at least 2 classes")
    return -np.log(n_source_classes) / 2.0


def sample_scores(logits: np.ndarray, tau: float, rule: ScoreRule) -> np.ndarray:
    logits = as_float_matrix(logits, "logits")
    if rule.kind == NEG_ENTROPY:
        return neg_entropy_score(softmax(logits, tau))
    return max_logit_score(np.asarray(logits) / tau)


def predict_with_reject(logits, tau: float, rule: ScoreRule) -> tuple[np.ndarray, np.ndarray]:
    """Argmax labels with the OUT sentinel where the score fails the threshold.

    Returns ``(labels, scores)``; a sample is kept in-class iff its score is
    strictly above ``rule.threshold``.  Rejected samples get label K (the
    number of logit columns).  Argmax ties resolve to the lowest class index.
    """
    if rule.threshold is None:
        raise ConfigError(f"score rule {rule.kind!r} has no threshold to reject with")
    logits = as_float_matrix(logits, "logits")
    scores = sample_scores(logits, tau, rule)
    labels = logits.argmax(axis=1)
    out_index = logits.shape[1]
    labels = np.where(scores > rule.threshold, labels, out_index)
    return labels.astype(np.int64), scores
