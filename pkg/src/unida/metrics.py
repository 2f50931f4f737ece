"""Open-set adaptation metrics: average class accuracy, H-score, H3-score
with NMI, and the threshold-free UCR with its CCR/FPR curve.

Ground truth enters in the remapped label space: shared-class samples carry
their source-class index, target-private samples carry the OUT sentinel, and
:func:`evaluate` additionally receives the original private class ids so the
private-sample clustering quality (NMI) can be measured.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import LabelSplit
from .exceptions import DomainError, IntegrityError
from .validation import as_float_vector, as_int_vector, check_lengths_match


@dataclass(frozen=True)
class EvalInputs:
    """Per-sample predictions, scores, and remapped ground truth.

    ``predictions`` may contain the OUT sentinel (the hard metrics read it);
    ``argmax`` holds the classifier's raw argmax, which the threshold-free
    curve sweeps instead.  When ``argmax`` is omitted it falls back to
    ``predictions``, which is only exact if those were never rejected.
    """

    predictions: np.ndarray
    scores: np.ndarray
    truth: np.ndarray
    n_shared: int
    out_index: int
    argmax: np.ndarray | None = None

    def __post_init__(self):
        preds = as_int_vector(self.predictions, "predictions")
        scores = as_float_vector(self.scores, "scores")
        truth = as_int_vector(self.truth, "truth")
        check_lengths_match(preds, scores, truth, names=("predictions", "scores", "truth"))
        object.__setattr__(self, "predictions", preds)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "truth", truth)
        if self.argmax is not None:
            argmax = as_int_vector(self.argmax, "argmax")
            check_lengths_match(preds, argmax, names=("predictions", "argmax"))
            object.__setattr__(self, "argmax", argmax)

    @property
    def curve_predictions(self) -> np.ndarray:
        return self.predictions if self.argmax is None else self.argmax

    @property
    def out_mask(self) -> np.ndarray:
        return self.truth == self.out_index

    @property
    def in_mask(self) -> np.ndarray:
        return ~self.out_mask


@dataclass(frozen=True)
class CurvePoint:
    threshold: float
    ccr: float
    fpr: float


@dataclass(frozen=True)
class EvalReport:
    acc_in: float
    acc_out: float
    nmi: float
    h_score: float
    h3_score: float
    ucr: float
    avg_class_acc: float
    curve: list[CurvePoint] = field(default_factory=list)

    METRIC_FIELDS = ("acc_in", "acc_out", "nmi", "h_score", "h3_score", "ucr", "avg_class_acc")

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in self.METRIC_FIELDS}


def _per_class_accuracies(inputs: EvalInputs) -> tuple[list[float], float | None]:
    """Accuracy per shared class with target samples, plus OUT accuracy if any."""
    shared_accs = []
    for cls in range(inputs.n_shared):
        mask = inputs.truth == cls
        if mask.any():
            shared_accs.append(float(np.mean(inputs.predictions[mask] == cls)))
    out_mask = inputs.out_mask
    out_acc = float(np.mean(inputs.predictions[out_mask] == inputs.out_index)) if out_mask.any() else None
    return shared_accs, out_acc


def avg_class_accuracy(inputs: EvalInputs) -> float:
    """Macro accuracy over the shared classes plus the unknown superclass."""
    shared_accs, out_acc = _per_class_accuracies(inputs)
    if not shared_accs:
        raise DomainError("no in-class samples to evaluate")
    accs = shared_accs + ([out_acc] if out_acc is not None else [])
    return float(np.mean(accs))


def h_score(acc_in: float, acc_out: float) -> float:
    """Harmonic mean of in-class and out-class accuracy; 0 at the boundary."""
    if acc_in + acc_out == 0.0:
        return 0.0
    return 2.0 * acc_in * acc_out / (acc_in + acc_out)


def h3_score(acc_in: float, acc_out: float, nmi_value: float) -> float:
    """Harmonic mean of acc_in, acc_out, and private-sample NMI."""
    if acc_in == 0.0 or acc_out == 0.0 or nmi_value == 0.0:
        return 0.0
    return 3.0 / (1.0 / acc_in + 1.0 / acc_out + 1.0 / nmi_value)


def nmi(pred_assignments, true_labels) -> float:
    """Normalized mutual information with arithmetic-mean normalization.

    Invariant to relabeling of either partition; 1 when the partitions match
    up to relabeling, and by convention 1 when both sides are a single
    cluster.
    """
    pred = as_int_vector(pred_assignments, "pred_assignments")
    true = as_int_vector(true_labels, "true_labels")
    check_lengths_match(pred, true, names=("pred_assignments", "true_labels"))
    n = len(pred)
    if n == 0:
        raise DomainError("nmi of empty partitions is undefined")
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(true, return_inverse=True)
    n_p, n_t = pi.max() + 1, ti.max() + 1
    joint = np.zeros((n_p, n_t))
    np.add.at(joint, (pi, ti), 1.0)
    pxy = joint / n
    px = pxy.sum(axis=1)
    py = pxy.sum(axis=0)
    h_p = float(-np.sum(px * np.log(px)))
    h_t = float(-np.sum(py * np.log(py)))
    if h_p == 0.0 and h_t == 0.0:
        return 1.0
    nz = pxy > 0
    rows, cols = np.nonzero(nz)
    info = float(np.sum(pxy[nz] * (np.log(pxy[nz]) - np.log(px[rows]) - np.log(py[cols]))))
    value = max(info, 0.0) / (0.5 * (h_p + h_t))
    return min(value, 1.0)


def _closed_set_accuracy(inputs: EvalInputs) -> float:
    in_mask = inputs.in_mask
    if not in_mask.any():
        raise DomainError("no in-class samples to evaluate")
    preds = inputs.curve_predictions
    return float(np.mean(preds[in_mask] == inputs.truth[in_mask]))


def ccr_fpr_curve(inputs: EvalInputs) -> list[CurvePoint]:
    """Correct-classification rate vs false-positive rate over all thresholds.

    A sample passes a threshold iff its score is strictly greater, and
    samples with equal scores cross together.  The curve starts at the
    all-rejected point (theta = +inf) and ends at the all-admitted point
    (theta = -inf).
    """
    out_mask = inputs.out_mask
    in_mask = inputs.in_mask
    n_out = int(out_mask.sum())
    n_in = int(in_mask.sum())
    if n_out == 0:
        raise DomainError("no out-class samples; the degenerate ucr branch applies")
    if n_in == 0:
        raise DomainError("no in-class samples to evaluate")
    correct = in_mask & (inputs.curve_predictions == inputs.truth)
    points = [CurvePoint(np.inf, 0.0, 0.0)]
    for theta in np.unique(inputs.scores)[::-1]:
        above = inputs.scores > theta
        ccr = float(np.sum(above & correct)) / n_in
        fpr = float(np.sum(above & out_mask)) / n_out
        points.append(CurvePoint(float(theta), ccr, fpr))
    points.append(CurvePoint(-np.inf, float(np.sum(correct)) / n_in, 1.0))
    return points


def ucr(inputs: EvalInputs) -> float:
    """Area under the CCR-vs-FPR step curve; closed-set accuracy if no out samples.

    The step integral pairs each FPR increment with the CCR at the higher
    threshold, descending over distinct scores.
    """
    if len(inputs.predictions) == 0:
        raise DomainError("empty target set")
    if not inputs.out_mask.any():
        return _closed_set_accuracy(inputs)
    curve = ccr_fpr_curve(inputs)
    area = 0.0
    for left, right in zip(curve[:-1], curve[1:]):
        area += left.ccr * (right.fpr - left.fpr)
    return area


def evaluate(predictions, scores, truth, split: LabelSplit, with_curve: bool = True,
             argmax_predictions=None) -> EvalReport:
    """Compute every metric for one run.

    ``truth`` holds original class ids from the target domain (shared or
    target-private); predictions live in the remapped source space with the
    OUT sentinel at index ``split.out_index``.  Pass the classifier's raw
    argmax as ``argmax_predictions`` whenever ``predictions`` went through a
    reject rule, so the threshold-free curve stays threshold-free.  When the
    target carries no private samples, H-score and H3-score degenerate to
    acc_in and the curve is empty.
    """
    truth = as_int_vector(truth, "truth")
    remap = {cid: i for i, cid in enumerate(split.source_classes)}
    shared_set = set(split.shared)
    private_set = set(split.target_private)
    mapped = np.empty(len(truth), dtype=np.int64)
    for i, y in enumerate(truth):
        y = int(y)
        if y in shared_set:
            mapped[i] = remap[y]
        elif y in private_set:
            mapped[i] = split.out_index
        else:
            raise IntegrityError(f"label {y} is not a target-domain class for this split")
    inputs = EvalInputs(
        predictions=predictions,
        scores=scores,
        truth=mapped,
        n_shared=len(split.shared),
        out_index=split.out_index,
        argmax=argmax_predictions,
    )

    shared_accs, out_acc = _per_class_accuracies(inputs)
    if not shared_accs:
        raise DomainError("no in-class samples to evaluate")
    acc_in = float(np.mean(shared_accs))
    avg_acc = avg_class_accuracy(inputs)
    ucr_value = ucr(inputs)

    if out_acc is None:
        return EvalReport(
            acc_in=acc_in, acc_out=0.0, nmi=0.0,
            h_score=acc_in, h3_score=acc_in,
            ucr=ucr_value, avg_class_acc=avg_acc, curve=[],
        )

    out_mask = inputs.out_mask
    nmi_value = nmi(np.asarray(inputs.predictions)[out_mask], truth[out_mask])
    curve = ccr_fpr_curve(inputs) if with_curve else []
    return EvalReport(
        acc_in=acc_in,
        acc_out=out_acc,
        nmi=nmi_value,
        h_score=h_score(acc_in, out_acc),
        h3_score=h3_score(acc_in, out_acc, nmi_value),
        ucr=ucr_value,
        avg_class_acc=avg_acc,
        curve=curve,
    )
