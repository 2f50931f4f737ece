"""Confidence calibration: binned ECE, OOD uniformity, NLL, and the 1-D
temperature search that minimizes their sum.

The temperature is fit on source data alone.  The source classes are split
into two halves: the first half plays the in-distribution role (binned ECE +
NLL against true labels), the second half plays the out-of-distribution role
(confidence pulled toward uniform).  Both halves are scored against only the
in-half's logit columns, so the out-half genuinely looks foreign to the
restricted classifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .data import CalibrationSplit
from .exceptions import ConfigError, DomainError, ShapeError
from .scoring import softmax
from .validation import (
    as_float_matrix,
    as_int_vector,
    check_lengths_match,
    check_positive_scalar,
    check_probability_rows,
)

_PROB_FLOOR = 1e-12
_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ReliabilityBins:
    """Equal-width confidence bins with per-bin count, confidence, accuracy."""

    n_bins: int
    edges: np.ndarray
    counts: np.ndarray
    mean_confidence: np.ndarray
    mean_accuracy: np.ndarray

    @property
    def n_samples(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class CalibrationResult:
    tau_opt: float
    ece_in: float
    ece_out: float
    nll_in: float
    objective: float
    bins_in: ReliabilityBins


@dataclass(frozen=True)
class CalibrationConfig:
    n_bins: int = 15
    grid_size: int = 200
    tau_lo: float = 1e-3
    tau_hi: float = 1e2
    refine_tol: float = 1e-4

    def __post_init__(self):
        if self.n_bins < 1 or self.grid_size < 2:
            raise ConfigError("n_bins must be >= 1 and grid_size >= 2")
        if not (0.0 < self.tau_lo < self.tau_hi):
            raise ConfigError("need 0 < tau_lo < tau_hi")

    def grid(self) -> np.ndarray:
        return np.logspace(np.log10(self.tau_lo), np.log10(self.tau_hi), self.grid_size)


def _bin_index(confidence: np.ndarray, n_bins: int) -> np.ndarray:
    # A confidence exactly on an interior edge belongs to the upper bin.
    idx = np.floor(confidence * n_bins).astype(np.int64)
    return np.clip(idx, 0, n_bins - 1)


def reliability_bins(probs, labels, n_bins: int = 15) -> ReliabilityBins:
    """Bin samples by max-probability confidence over equal-width bins."""
    probs = check_probability_rows(probs)
    labels = as_int_vector(labels)
    check_lengths_match(probs, labels, names=("probs", "labels"))
    if probs.shape[0] == 0:
        raise DomainError("cannot bin an empty batch")
    if n_bins < 1:
        raise DomainError("n_bins must be >= 1")
    confidence = probs.max(axis=1)
    correct = (probs.argmax(axis=1) == labels).astype(np.float64)
    idx = _bin_index(confidence, n_bins)
    counts = np.bincount(idx, minlength=n_bins).astype(np.int64)
    conf_sum = np.bincount(idx, weights=confidence, minlength=n_bins)
    acc_sum = np.bincount(idx, weights=correct, minlength=n_bins)
    nonempty = counts > 0
    mean_conf = np.zeros(n_bins)
    mean_acc = np.zeros(n_bins)
    mean_conf[nonempty] = conf_sum[nonempty] / counts[nonempty]
    mean_acc[nonempty] = acc_sum[nonempty] / counts[nonempty]
    return ReliabilityBins(
        n_bins=n_bins,
        edges=np.linspace(0.0, 1.0, n_bins + 1),
        counts=counts,
        mean_confidence=mean_conf,
        mean_accuracy=mean_acc,
    )


def ece_from_bins(bins: ReliabilityBins) -> float:
    n = bins.n_samples
    weights = bins.counts / n
    return float(np.sum(weights * np.abs(bins.mean_accuracy - bins.mean_confidence)))


def ece_in(probs, labels, n_bins: int = 15) -> float:
    """Weighted average |accuracy - confidence| over equal-width bins."""
    return ece_from_bins(reliability_bins(probs, labels, n_bins))


def ece_out(probs, n_inclass_categories: int) -> float:
    """Mean deviation of max-probability confidence from the uniform value 1/N."""
    probs = check_probability_rows(probs)
    if probs.shape[0] == 0:
        raise DomainError("cannot score an empty batch")
    if probs.shape[1] != n_inclass_categories:
        raise ShapeError(
            f"probs has {probs.shape[1]} columns, expected {n_inclass_categories}"
        )
    confidence = probs.max(axis=1)
    return float(np.mean(np.abs(confidence - 1.0 / n_inclass_categories)))


def nll_in(probs, labels) -> float:
    """Mean negative log-probability of the true label (floored at 1e-12)."""
    probs = check_probability_rows(probs)
    labels = as_int_vector(labels)
    check_lengths_match(probs, labels, names=("probs", "labels"))
    if probs.shape[0] == 0:
        raise DomainError("cannot score an empty batch")
    picked = probs[np.arange(len(labels)), labels]
    return float(np.mean(-np.log(np.maximum(picked, _PROB_FLOOR))))


def calibration_objective(tau: float, logits_in, labels_in, logits_out,
                          n_bins: int = 15) -> float:
    """ECE_in + ECE_out + NLL_in of the temperature-scaled softmax outputs."""
    check_positive_scalar(tau, "tau")
    logits_in = as_float_matrix(logits_in, "logits_in")
    logits_out = as_float_matrix(logits_out, "logits_out")
    probs_in = softmax(logits_in, tau)
    probs_out = softmax(logits_out, tau)
    return (
        ece_in(probs_in, labels_in, n_bins)
        + ece_out(probs_out, logits_out.shape[1])
        + nll_in(probs_in, labels_in)
    )


def _golden_section(fn, lo: float, hi: float, rel_tol: float) -> tuple[float, float]:
    """Minimize fn over [lo, hi] (log-tau coordinates); returns (x, fn(x))."""
    a, b = lo, hi
    x1 = b - _INV_GOLDEN * (b - a)
    x2 = a + _INV_GOLDEN * (b - a)
    f1, f2 = fn(x1), fn(x2)
    best = (x1, f1) if f1 <= f2 else (x2, f2)
    while (b - a) > rel_tol:
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_GOLDEN * (b - a)
            f1 = fn(x1)
            if f1 < best[1]:
                best = (x1, f1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_GOLDEN * (b - a)
            f2 = fn(x2)
            if f2 < best[1]:
                best = (x2, f2)
    return best


def restrict_to_in_classes(teacher_logits, source_labels, split: CalibrationSplit
                           ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Slice the calibration problem down to the in-half's class columns.

    Returns (logits_in, relabeled_in, logits_out): rows of the in/out halves
    with only the in-class columns kept, and in-half labels renumbered into
    that restricted column space.
    """
    logits = as_float_matrix(teacher_logits, "teacher_logits")
    labels = as_int_vector(source_labels)
    check_lengths_match(logits, labels, names=("teacher_logits", "source_labels"))
    in_classes = np.asarray(split.in_classes, dtype=np.int64)
    out_classes = np.asarray(split.out_classes, dtype=np.int64)
    if len(in_classes) == 0 or len(out_classes) == 0:
        raise ConfigError("calibration split must have classes on both sides")
    if logits.shape[1] <= max(in_classes.max(), out_classes.max()):
        raise ConfigError(
            f"teacher logits have {logits.shape[1]} columns but the split "
            f"references class {max(in_classes.max(), out_classes.max())}"
        )
    in_rows = np.isin(labels, in_classes)
    out_rows = np.isin(labels, out_classes)
    logits_in = logits[in_rows][:, in_classes]
    logits_out = logits[out_rows][:, in_classes]
    relabeled = np.searchsorted(in_classes, labels[in_rows])
    if logits_in.shape[0] == 0 or logits_out.shape[0] == 0:
        raise ConfigError("both calibration halves need at least one sample")
    return logits_in, relabeled, logits_out


def fit_temperature(teacher_logits_source, source_labels, split: CalibrationSplit,
                    config: CalibrationConfig | None = None) -> CalibrationResult:
    """Fit the scaling temperature by log-grid search plus golden-section refinement.

    The search evaluates the objective on a log-spaced grid, refines between
    the best grid point's neighbors, and additionally probes tau=1; the
    returned optimum therefore never exceeds the objective at any grid point
    or at tau=1.  A flat objective resolves to the grid point nearest 1.
    """
    config = config or CalibrationConfig()
    logits_in, labels_in, logits_out = restrict_to_in_classes(
        teacher_logits_source, source_labels, split
    )

    def objective(tau: float) -> float:
        return calibration_objective(tau, logits_in, labels_in, logits_out, config.n_bins)

    grid = config.grid()
    values = np.array([objective(t) for t in grid])
    minimal = np.nonzero(values == values.min())[0]
    best_i = int(minimal[np.argmin(np.abs(grid[minimal] - 1.0))])
    tau_opt, f_opt = float(grid[best_i]), float(values[best_i])

    lo = math.log(grid[max(best_i - 1, 0)])
    hi = math.log(grid[min(best_i + 1, len(grid) - 1)])
    if hi > lo:
        log_tau, f_ref = _golden_section(
            lambda t: objective(math.exp(t)), lo, hi, math.log1p(config.refine_tol)
        )
        if f_ref < f_opt:
            tau_opt, f_opt = math.exp(log_tau), f_ref
    if config.tau_lo <= 1.0 <= config.tau_hi:
        f_one = objective(1.0)
        if f_one < f_opt:
            tau_opt, f_opt = 1.0, f_one

    probs_in = softmax(logits_in, tau_opt)
    bins = reliability_bins(probs_in, labels_in, config.n_bins)
    term_in = ece_from_bins(bins)
    term_out = ece_out(softmax(logits_out, tau_opt), logits_out.shape[1])
    term_nll = nll_in(probs_in, labels_in)
    return CalibrationResult(
        tau_opt=float(tau_opt),
        ece_in=term_in,
        ece_out=term_out,
        nll_in=term_nll,
        objective=term_in + term_out + term_nll,
        bins_in=bins,
    )


class TemperatureScaler(BaseEstimator):
    """Sklearn-style wrapper: learn tau from logits + labels, scale by 1/tau.

    ``fit(X, y)`` treats X as teacher logits over labeled data, splits the
    observed classes into two halves by the ascending-id rule, and fits the
    temperature; ``transform`` divides logits by the fitted temperature.
    """

    def __init__(self, n_bins: int = 15, grid_size: int = 200,
                 tau_lo: float = 1e-3, tau_hi: float = 1e2, refine_tol: float = 1e-4):
        self.n_bins = n_bins
        self.grid_size = grid_size
        self.tau_lo = tau_lo
        self.tau_hi = tau_hi
        self.refine_tol = refine_tol

    def _config(self) -> CalibrationConfig:
        return CalibrationConfig(
            n_bins=self.n_bins,
            grid_size=self.grid_size,
            tau_lo=self.tau_lo,
            tau_hi=self.tau_hi,
            refine_tol=self.refine_tol,
        )

    def fit(self, X, y):
        labels = as_int_vector(y)
        classes = np.unique(labels)
        if len(classes) < 2:
            raise ConfigError("temperature fitting needs at least 2 classes")
        n_in = math.ceil(len(classes) / 2)
        split = CalibrationSplit(
            calib_in=None, calib_out=None,
            in_classes=tuple(int(c) for c in classes[:n_in]),
            out_classes=tuple(int(c) for c in classes[n_in:]),
        )
        self.result_ = fit_temperature(X, labels, split, self._config())
        self.tau_ = self.result_.tau_opt
        return self

    def transform(self, X):
        return as_float_matrix(X, "X") / self.tau_
