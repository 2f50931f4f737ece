import numpy as np
import pytest

from unida.data import FeatureSet, save_feature_set


def random_feature_set(rng, n=20, d=6, n_classes=4, tag="synthetic"):
    feats = rng.normal(size=(n, d)).astype(np.float32)
    labels = rng.integers(0, n_classes, n)
    names = [f"class_{i}" for i in range(n_classes)]
    return FeatureSet(feats, labels.astype(np.int64), names, tag)


def make_blobs(rng, centers, n_per, noise=0.3):
    """Gaussian blobs around the given center matrix; returns (X, y)."""
    feats, labels = [], []
    for idx, center in enumerate(centers):
        feats.append(center + rng.normal(size=(n_per, len(center))) * noise)
        labels.append(np.full(n_per, idx))
    return np.vstack(feats), np.concatenate(labels)


def make_unida_fixture(tmp_path, seed=7, d=32, n_src_per=40, n_tgt_per=40,
                       noise=0.35, total=12):
    """Cosine-geometry embedding files mimicking an open-partial task.

    Classes 0-5 are shared, 6-8 source-private, 9-11 target-private; the
    prototype bank row for each class is the class's true direction, so the
    raw-cosine teacher is accurate but low-margin.
    """
    rng = np.random.default_rng(seed)
    protos = rng.normal(size=(total, d))
    protos /= np.linalg.norm(protos, axis=1, keepdims=True)

    def sample(classes, n_per, jitter):
        feats, labels = [], []
        for c in classes:
            pts = protos[c] + rng.normal(size=(n_per, d)) * jitter
            feats.append(pts)
            labels.append(np.full(n_per, c))
        x = np.vstack(feats)
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        return x.astype(np.float32), np.concatenate(labels)

    src_x, src_y = sample(list(range(9)), n_src_per, noise)
    tgt_x, tgt_y = sample(list(range(6)) + [9, 10, 11], n_tgt_per, noise * 1.1)
    names = [f"class_{i}" for i in range(total)]
    paths = {
        "source": tmp_path / "source.udfs",
        "target": tmp_path / "target.udfs",
        "bank": tmp_path / "bank.udfs",
    }
    save_feature_set(FeatureSet(src_x, src_y, names, "syn-source"), paths["source"])
    save_feature_set(FeatureSet(tgt_x, tgt_y, names, "syn-target"), paths["target"])
    save_feature_set(
        FeatureSet(protos.astype(np.float32), np.arange(total), names, "syn-bank"),
        paths["bank"],
    )
    return paths


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
