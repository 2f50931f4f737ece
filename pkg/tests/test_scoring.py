import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unida.exceptions import ConfigError, DomainError, ShapeError
from unida.scoring import (
    MAX_LOGIT,
    NEG_ENTROPY,
    LinearHead,
    PrototypeBank,
    ScoreRule,
    default_threshold,
    head_logits,
    max_logit_score,
    neg_entropy_score,
    predict_with_reject,
    prototype_logits,
    softmax,
)


def high_precision_softmax(logits, tau=1.0, dps=50):
    """Independent oracle: softmax evaluated in arbitrary-precision arithmetic."""
    import mpmath

    with mpmath.workdps(dps):
        exps = [mpmath.exp(mpmath.mpf(repr(z)) / mpmath.mpf(repr(tau))) for z in logits]
        total = sum(exps)
        return [float(e / total) for e in exps]


def test_softmax_uniform_on_equal_logits():
    assert np.allclose(softmax([0.0, 0.0, 0.0]), [1 / 3] * 3, atol=1e-15)


def test_softmax_shift_invariance():
    base = softmax([1.0, -2.0], 1.0)
    shifted = softmax([1.0 + 7.5, -2.0 + 7.5], 1.0)
    assert np.allclose(base, shifted, atol=1e-15)


def test_softmax_matches_high_precision_oracle():
    got = softmax([2.0, 1.0, 0.0], 1.0)
    oracle = high_precision_softmax([2.0, 1.0, 0.0])
    assert np.allclose(got, oracle, atol=1e-12)
    # frozen reference values
    assert np.allclose(got, [0.66524, 0.24473, 0.09003], atol=1e-5)


def test_softmax_overflow_safe():
    probs = softmax([1e4, 0.0], 1.0)
    assert np.isfinite(probs).all()
    assert probs[0] == pytest.approx(1.0)


def test_softmax_rejects_bad_tau():
    with pytest.raises(DomainError):
        softmax([1.0, 2.0], 0.0)
    with pytest.raises(DomainError):
        softmax([1.0, 2.0], -3.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=10),
       st.floats(0.2, 100.0), st.floats(-100, 100))
def test_softmax_properties(logits, tau, shift):
    # tau >= 0.2 keeps every scaled gap below the float64 exp underflow point,
    # so strict positivity is actually representable
    probs = softmax(logits, tau)
    assert abs(probs.sum() - 1.0) <= 1e-12
    assert (probs > 0).all()
    shifted = softmax(np.asarray(logits) + shift, tau)
    assert np.allclose(probs, shifted, atol=1e-9)


def test_softmax_extreme_sharpening_underflows_to_valid_distribution():
    probs = softmax([0.0, 24.0], 0.03125)
    assert probs.sum() == pytest.approx(1.0, abs=1e-15)
    assert probs[1] == pytest.approx(1.0)
    assert probs[0] >= 0.0


def test_softmax_monotone_sharpening(rng):
    for _ in range(30):
        logits = rng.normal(size=rng.integers(2, 8)) * rng.uniform(0.1, 5)
        if np.allclose(logits, logits[0]):
            continue
        taus = [4.0, 2.0, 1.0, 0.5, 0.25]
        max_probs = [softmax(logits, t).max() for t in taus]
        assert all(a < b for a, b in zip(max_probs, max_probs[1:]))


def test_head_logits_zero_head():
    head = LinearHead(np.zeros((3, 4)), np.zeros(3))
    assert np.array_equal(head_logits(head, np.ones((5, 4))), np.zeros((5, 3)))


def test_head_logits_identity_on_one_hot():
    head = LinearHead(np.eye(4), np.zeros(4))
    x = np.eye(4)[[2, 0, 3]]
    assert np.array_equal(head_logits(head, x), x)


def test_head_logits_matches_triple_loop_oracle(rng):
    head = LinearHead(rng.normal(size=(5, 8)), rng.normal(size=5))
    x = rng.normal(size=(3, 8))
    got = head_logits(head, x)
    expected = np.zeros((3, 5))
    for i in range(3):
        for k in range(5):
            acc = 0.0
            for j in range(8):
                acc += head.weights[k, j] * x[i, j]
            expected[i, k] = acc + head.bias[k]
    assert np.allclose(got, expected, atol=1e-6)


def test_head_logits_dim_mismatch():
    head = LinearHead(np.zeros((2, 3)), np.zeros(2))
    with pytest.raises(ShapeError):
        head_logits(head, np.zeros((4, 5)))


def _unit_rows(mat):
    return mat / np.linalg.norm(mat, axis=1, keepdims=True)


def test_prototype_logits_identical_vector(rng):
    protos = _unit_rows(rng.normal(size=(4, 6)))
    bank = PrototypeBank(protos, logit_scale=100.0)
    logits = prototype_logits(bank, protos[0][None, :] * 2.5)
    assert logits[0, 0] == pytest.approx(100.0, abs=1e-9)
    assert logits[0].argmax() == 0


def test_prototype_logits_orthogonal():
    protos = np.eye(3)
    bank = PrototypeBank(protos, logit_scale=10.0)
    logits = prototype_logits(bank, np.array([[0.0, 1.0, 0.0]]))
    assert logits[0, 0] == pytest.approx(0.0, abs=1e-12)
    assert logits[0, 2] == pytest.approx(0.0, abs=1e-12)


def test_prototype_logits_matches_cosine_oracle(rng):
    protos = _unit_rows(rng.normal(size=(5, 7)))
    bank = PrototypeBank(protos, logit_scale=37.0)
    x = rng.normal(size=(6, 7)) * 3
    got = prototype_logits(bank, x)
    for i in range(6):
        for k in range(5):
            cos = np.dot(x[i], protos[k]) / (np.linalg.norm(x[i]) * np.linalg.norm(protos[k]))
            assert got[i, k] == pytest.approx(37.0 * cos, abs=1e-5)


def test_prototype_logits_scale_equivariance(rng):
    protos = _unit_rows(rng.normal(size=(3, 5)))
    x = rng.normal(size=(4, 5))
    one = prototype_logits(PrototypeBank(protos, 50.0), x)
    two = prototype_logits(PrototypeBank(protos, 100.0), x)
    assert np.allclose(two, 2.0 * one, atol=1e-12)


def test_prototype_logits_zero_norm_row():
    bank = PrototypeBank(np.eye(2), 1.0)
    with pytest.raises(DomainError):
        prototype_logits(bank, np.zeros((1, 2)))


def test_prototype_bank_requires_unit_rows():
    with pytest.raises(DomainError):
        PrototypeBank(np.ones((2, 3)), 1.0)


def test_neg_entropy_bounds():
    assert neg_entropy_score([1.0, 0.0, 0.0]) == 0.0
    k = 7
    assert neg_entropy_score([1 / k] * k) == pytest.approx(-np.log(k), abs=1e-12)
    assert neg_entropy_score([0.5, 0.5]) == pytest.approx(-np.log(2), abs=1e-12)


def test_neg_entropy_range_property(rng):
    for _ in range(50):
        k = rng.integers(2, 10)
        probs = softmax(rng.normal(size=k) * 3)
        score = neg_entropy_score(probs)
        assert -np.log(k) - 1e-12 <= score <= 0.0


def test_max_logit_score():
    assert max_logit_score([1.0, 2.0, 3.0]) == 3.0
    assert max_logit_score([4.0, 4.0]) == 4.0
    vec = np.random.default_rng(3).normal(size=17)
    best = vec[0]
    for v in vec[1:]:
        if v > best:
            best = v
    assert max_logit_score(vec) == best


def test_default_threshold_values():
    assert default_threshold(NEG_ENTROPY, 10) == pytest.approx(-np.log(10) / 2, abs=1e-12)
    assert default_threshold(NEG_ENTROPY, 2) == pytest.approx(-np.log(2) / 2, abs=1e-12)
    assert default_threshold(MAX_LOGIT, 10) is None
    with pytest.raises(ConfigError):
        default_threshold(NEG_ENTROPY, 1)


def test_predict_with_reject_one_hot_accepted():
    rule = ScoreRule(NEG_ENTROPY, default_threshold(NEG_ENTROPY, 4))
    logits = np.array([[50.0, 0.0, 0.0, 0.0]])
    labels, scores = predict_with_reject(logits, 1.0, rule)
    assert labels[0] == 0
    assert scores[0] > rule.threshold


def test_predict_with_reject_uniform_rejected():
    rule = ScoreRule(NEG_ENTROPY, default_threshold(NEG_ENTROPY, 4))
    logits = np.zeros((1, 4))
    labels, scores = predict_with_reject(logits, 1.0, rule)
    assert labels[0] == 4  # OUT sentinel
    assert scores[0] == pytest.approx(-np.log(4), abs=1e-12)


def test_predict_with_reject_argmax_stable_under_scaling(rng):
    rule = ScoreRule(NEG_ENTROPY, default_threshold(NEG_ENTROPY, 5))
    logits = rng.normal(size=(40, 5)) * 4
    base_labels, _ = predict_with_reject(logits, 1.0, rule)
    for factor in (0.5, 2.0, 9.0):
        labels, _ = predict_with_reject(logits * factor, 1.0, rule)
        keep = (labels != 5) & (base_labels != 5)
        assert np.array_equal(labels[keep], base_labels[keep])
        # non-OUT labels always equal the plain argmax
        assert np.array_equal(labels[labels != 5], logits.argmax(axis=1)[labels != 5])


def test_predict_with_reject_needs_threshold():
    with pytest.raises(ConfigError):
        predict_with_reject(np.zeros((1, 3)), 1.0, ScoreRule(MAX_LOGIT, None))


def test_argmax_tie_breaks_to_lowest_index():
    rule = ScoreRule(NEG_ENTROPY, -10.0)
    logits = np.array([[2.0, 2.0, 1.0]])
    labels, _ = predict_with_reject(logits, 1.0, rule)
    assert labels[0] == 0
