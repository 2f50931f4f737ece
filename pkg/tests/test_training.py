import numpy as np
import pytest

from unida.data import FeatureSet, make_label_split, project_domain
from unida.exceptions import ConfigError, DomainError, IntegrityError, ShapeError
from unida.scoring import LinearHead, PrototypeBank, head_logits, prototype_logits, softmax
from unida.training import (
    DistillationClassifier,
    FixedTeacherClassifier,
    SourceOnlyClassifier,
    TrainConfig,
    ce_loss_and_grad,
    distill,
    fixed_model_head,
    load_linear_head,
    lr_schedule,
    save_linear_head,
    train_source_only,
)

from conftest import make_blobs


def finite_difference_grad(head, feats, targets, step=1e-4):
    """Central-difference oracle for the cross-entropy gradient."""

    def loss_at(weights, bias):
        loss, _ = ce_loss_and_grad(LinearHead(weights, bias), feats, targets)
        return loss

    grad_w = np.zeros_like(head.weights)
    for idx in np.ndindex(*head.weights.shape):
        bump = np.zeros_like(head.weights)
        bump[idx] = step
        grad_w[idx] = (
            loss_at(head.weights + bump, head.bias) - loss_at(head.weights - bump, head.bias)
        ) / (2 * step)
    grad_b = np.zeros_like(head.bias)
    for k in range(len(head.bias)):
        bump = np.zeros_like(head.bias)
        bump[k] = step
        grad_b[k] = (
            loss_at(head.weights, head.bias + bump) - loss_at(head.weights, head.bias - bump)
        ) / (2 * step)
    return grad_w, grad_b


def source_view(rng, n_per=50, d=6, n_classes=3, spread=3.0, noise=0.4):
    centers = rng.normal(size=(n_classes, d)) * spread
    feats, labels = make_blobs(rng, centers, n_per, noise)
    fs = FeatureSet(feats.astype(np.float32), labels, [f"c{i}" for i in range(n_classes)], "t")
    split = make_label_split(n_classes, n_classes, 0)
    return project_domain(fs, split, "source")


# ------------------------------------------------------------ lr_schedule


def test_lr_schedule_warmup_start_is_zero():
    config = TrainConfig(lr=0.01, iterations=200, warmup_iters=50)
    assert lr_schedule(0, config) == 0.0


def test_lr_schedule_peak_at_warmup_end():
    config = TrainConfig(lr=0.01, iterations=200, warmup_iters=50)
    assert lr_schedule(50, config) == pytest.approx(0.01, abs=1e-15)


def test_lr_schedule_final_iteration_closed_form():
    config = TrainConfig(lr=0.01, iterations=200, warmup_iters=50)
    it = 199
    progress = (it - 50) / (200 - 50)
    expected = 0.01 * 0.5 * (1 + np.cos(np.pi * progress))
    assert lr_schedule(it, config) == pytest.approx(expected, abs=1e-15)
    assert lr_schedule(it, config) < 0.01 * 0.01


def test_lr_schedule_linear_ramp():
    config = TrainConfig(lr=0.8, iterations=100, warmup_iters=10)
    for it in range(10):
        assert lr_schedule(it, config) == pytest.approx(0.8 * it / 10, abs=1e-15)


# ------------------------------------------------------- ce_loss_and_grad


def test_gradient_zero_at_fixed_point(rng):
    head = LinearHead(rng.normal(size=(3, 4)), rng.normal(size=3))
    feats = rng.normal(size=(6, 4))
    targets = softmax(head_logits(head, feats), 1.0)
    loss, (grad_w, grad_b) = ce_loss_and_grad(head, feats, targets)
    assert np.abs(grad_w).max() < 1e-12
    assert np.abs(grad_b).max() < 1e-12
    entropies = -(targets * np.log(targets)).sum(axis=1)
    assert loss == pytest.approx(entropies.mean(), abs=1e-12)


def test_zero_head_one_hot_loss_is_log_k(rng):
    k = 7
    head = LinearHead(np.zeros((k, 5)), np.zeros(k))
    feats = rng.normal(size=(10, 5))
    targets = np.eye(k)[rng.integers(0, k, 10)]
    loss, _ = ce_loss_and_grad(head, feats, targets)
    assert loss == pytest.approx(np.log(k), abs=1e-12)


def test_gradient_matches_finite_differences(rng):
    worst = 0.0
    for _ in range(20):
        k = int(rng.integers(2, 6))
        d = int(rng.integers(2, 8))
        b = int(rng.integers(1, 6))
        head = LinearHead(rng.normal(size=(k, d)), rng.normal(size=k))
        feats = rng.normal(size=(b, d))
        targets = softmax(rng.normal(size=(b, k)) * 2, 1.0)
        _, (gw, gb) = ce_loss_and_grad(head, feats, targets)
        fw, fb = finite_difference_grad(head, feats, targets)
        num = np.linalg.norm(np.concatenate([(gw - fw).ravel(), gb - fb]))
        den = max(np.linalg.norm(np.concatenate([fw.ravel(), fb])), 1e-12)
        worst = max(worst, num / den)
    assert worst < 1e-5


def test_invalid_targets_rejected(rng):
    head = LinearHead(np.zeros((2, 3)), np.zeros(2))
    feats = rng.normal(size=(4, 3))
    with pytest.raises(DomainError):
        ce_loss_and_grad(head, feats, np.full((4, 2), 0.9))
    with pytest.raises(ShapeError):
        ce_loss_and_grad(head, feats, np.full((4, 3), 1 / 3))


# ------------------------------------------------------ train_source_only


def test_train_separable_blobs_high_accuracy(rng):
    view = source_view(rng, n_per=100, n_classes=2, spread=3.0, noise=0.3)
    trace = train_source_only(view, TrainConfig(iterations=500, seed=0))
    logits = head_logits(trace.head, view)
    acc = (logits.argmax(axis=1) == view.labels).mean()
    assert acc >= 0.99
    assert len(trace.losses) == 500


def test_first_step_is_identity_with_warmup(rng):
    view = source_view(rng)
    trace = train_source_only(view, TrainConfig(iterations=1, warmup_iters=1, seed=0))
    assert np.all(trace.head.weights == 0.0)
    assert np.all(trace.head.bias == 0.0)


def test_training_deterministic_given_seed(rng):
    view = source_view(rng)
    config = TrainConfig(iterations=120, seed=9)
    a = train_source_only(view, config)
    b = train_source_only(view, config)
    assert np.array_equal(a.losses, b.losses)
    assert np.array_equal(a.head.weights, b.head.weights)
    assert np.array_equal(a.head.bias, b.head.bias)
    c = train_source_only(view, TrainConfig(iterations=120, seed=10))
    assert not np.array_equal(a.losses, c.losses)


def test_full_batch_loss_nonincreasing(rng):
    view = source_view(rng, n_per=30, n_classes=3)
    config = TrainConfig(iterations=600, batch_size=90, lr=0.05, seed=1)
    trace = train_source_only(view, config)
    checkpoints = trace.losses[::100]
    diffs = np.diff(checkpoints)
    assert np.all(diffs <= 1e-6)


def test_empty_view_rejected(rng):
    view = source_view(rng)
    empty = view.take(np.array([], dtype=int))
    with pytest.raises(ConfigError):
        train_source_only(empty, TrainConfig())


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(lr=0.0)
    with pytest.raises(ConfigError):
        TrainConfig(momentum=1.0)
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0)
    with pytest.raises(ConfigError):
        TrainConfig(warmup_iters=100, iterations=50)


# ---------------------------------------------------------------- distill


def test_distill_recovers_linear_teacher(rng):
    d, n, k = 16, 600, 5
    feats = rng.normal(size=(n, d))
    teacher_head = LinearHead(rng.normal(size=(k, d)) / np.sqrt(d), rng.normal(size=k) * 0.1)
    teacher = head_logits(teacher_head, feats)
    trace = distill(feats, teacher, 1.0, TrainConfig(iterations=2000, lr=0.1, seed=0))
    p = softmax(teacher, 1.0)
    q = softmax(head_logits(trace.head, feats), 1.0)
    kl = np.sum(p * (np.log(p) - np.log(np.maximum(q, 1e-300))), axis=1)
    assert kl.mean() < 1e-3


def test_distill_huge_tau_gives_flat_student(rng):
    feats = rng.normal(size=(200, 8))
    teacher = rng.normal(size=(200, 4)) * 5
    trace = distill(feats, teacher, 1e6, TrainConfig(iterations=800, lr=0.5, seed=0))
    probs = softmax(head_logits(trace.head, feats), 1.0)
    assert np.all(np.abs(probs - 0.25) < 0.05)


def test_distill_descends(rng):
    for seed in range(5):
        local = np.random.default_rng(seed)
        feats = local.normal(size=(150, 6))
        teacher = local.normal(size=(150, 4)) * 2
        trace = distill(feats, teacher, 1.0, TrainConfig(iterations=400, seed=seed))
        assert trace.losses[-50:].mean() < trace.losses[:50].mean()


def test_distill_never_touches_labels(rng):
    view = source_view(rng, n_per=20, n_classes=4)
    stripped = view.without_labels()
    teacher = rng.normal(size=(view.n, 4))
    trace = distill(stripped, teacher, 1.0, TrainConfig(iterations=20, warmup_iters=5, seed=0))
    assert trace.head.weights.shape == (4, view.dim)
    with pytest.raises(IntegrityError):
        _ = stripped.labels


def test_distill_strips_labeled_views(rng):
    view = source_view(rng, n_per=20, n_classes=4)
    teacher = rng.normal(size=(view.n, 4))
    a = distill(view, teacher, 1.0, TrainConfig(iterations=20, warmup_iters=5, seed=0))
    b = distill(view.without_labels(), teacher, 1.0, TrainConfig(iterations=20, warmup_iters=5, seed=0))
    assert np.array_equal(a.head.weights, b.head.weights)


def test_distill_row_mismatch(rng):
    with pytest.raises(ShapeError):
        distill(rng.normal(size=(10, 3)), rng.normal(size=(9, 2)), 1.0, TrainConfig())


def test_distill_same_seed_bit_identical(rng):
    feats = rng.normal(size=(100, 5))
    teacher = rng.normal(size=(100, 3))
    config = TrainConfig(iterations=150, seed=4)
    a = distill(feats, teacher, 0.7, config)
    b = distill(feats, teacher, 0.7, config)
    assert a.losses.tobytes() == b.losses.tobytes()
    assert a.head.weights.tobytes() == b.head.weights.tobytes()


# ------------------------------------------------------- fixed_model_head


def _unit_rows(mat):
    return mat / np.linalg.norm(mat, axis=1, keepdims=True)


def test_fixed_head_matches_teacher_argmax(rng):
    protos = _unit_rows(rng.normal(size=(5, 8)))
    bank = PrototypeBank(protos, 100.0)
    feats = rng.normal(size=(30, 8))
    fixed = fixed_model_head(bank, tau=0.37)
    teacher = prototype_logits(bank, feats)
    assert np.array_equal(fixed.logits(feats).argmax(axis=1), teacher.argmax(axis=1))


def test_fixed_head_tau_changes_scores_not_argmax(rng):
    protos = _unit_rows(rng.normal(size=(4, 6)))
    bank = PrototypeBank(protos, 100.0)
    feats = rng.normal(size=(20, 6))
    one = fixed_model_head(bank, 1.0)
    calibrated = fixed_model_head(bank, 0.05)
    assert np.array_equal(one.logits(feats).argmax(axis=1),
                          calibrated.logits(feats).argmax(axis=1))
    assert not np.allclose(one.logits(feats), calibrated.logits(feats))


def test_fixed_head_rejects_bad_tau(rng):
    bank = PrototypeBank(np.eye(3), 1.0)
    with pytest.raises(DomainError):
        fixed_model_head(bank, 0.0)


# ----------------------------------------------------- head serialization


def test_head_round_trip(tmp_path, rng):
    head = LinearHead(rng.normal(size=(4, 9)).astype(np.float32).astype(np.float64),
                      rng.normal(size=4).astype(np.float32).astype(np.float64))
    path = tmp_path / "head.udfs"
    save_linear_head(path, head, {"tau": "0.25"})
    loaded, meta = load_linear_head(path)
    assert np.array_equal(loaded.weights, head.weights)
    assert np.array_equal(loaded.bias, head.bias)
    assert meta["tau"] == "0.25"
    assert meta["kind"] == "linear_head"


# -------------------------------------------------------------- estimators


def test_source_only_classifier_estimator(rng):
    centers = rng.normal(size=(3, 5)) * 3
    feats, labels = make_blobs(rng, centers, 60, 0.3)
    clf = SourceOnlyClassifier(iterations=400, seed=0).fit(feats, labels + 10)
    assert set(clf.classes_) == {10, 11, 12}
    preds = clf.predict(feats)
    assert (preds == labels + 10).mean() >= 0.99
    rejected, scores = clf.predict_with_reject(feats)
    assert rejected.max() <= 3  # 3 == OUT for a 3-class head
    assert len(scores) == len(feats)
    assert clf.get_params()["iterations"] == 400


def test_distillation_classifier_estimator(rng):
    feats = rng.normal(size=(200, 6))
    teacher = rng.normal(size=(200, 3)) * 2
    clf = DistillationClassifier(tau=1.0, iterations=300, lr=0.1, seed=0).fit(feats, teacher)
    assert clf.decision_function(feats).shape == (200, 3)


def test_fixed_teacher_classifier_estimator(rng):
    protos = _unit_rows(rng.normal(size=(4, 5)))
    clf = FixedTeacherClassifier(prototypes=protos, logit_scale=1.0, tau=0.1).fit()
    feats = rng.normal(size=(12, 5))
    assert clf.decision_function(feats).shape == (12, 4)
    labels, scores = clf.predict_with_reject(feats)
    assert len(labels) == len(scores) == 12
