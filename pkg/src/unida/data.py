"""Embedding containers, label-set splits, and domain views.

File format
-----------
An embedding container is a little-endian binary file::

    magic   4 bytes  ASCII "UDFS"
    version u32      always 1
    n       u64      number of rows
    d       u64      number of columns
    classes u32      number of classes (0 for raw logit/weight containers)
    data    n*d float32, row-major
    labels  n int64  class index per row, or -1 when rows are unlabeled

A companion UTF-8 metadata file at ``<path>.meta`` holds one ``key=value``
pair per line: ``class.<id>=<name>`` entries for every class, ``source_tag``,
and free-form keys such as ``kind`` or ``tau``.

Raw logit and weight containers reuse the same layout with ``classes=0`` and
all labels set to -1; they are read through :func:`load_logit_container` and
never become :class:`FeatureSet` instances.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, FormatError, IntegrityError
from .validation import as_int_vector, check_lengths_match

MAGIC = b"UDFS"
VERSION = 1
_HEADER = struct.Struct("<4sIQQI")

SOURCE = "source"
TARGET = "target"


@dataclass(frozen=True)
class FeatureSet:
    """An n x d embedding matrix with integer labels and class names."""

    features: np.ndarray
    labels: np.ndarray
    class_names: list[str]
    source_tag: str = ""

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def normalized(self) -> "FeatureSet":
        """Return a copy with L2-normalized feature rows."""
        norms = np.linalg.norm(self.features.astype(np.float64), axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise IntegrityError("cannot normalize: zero-norm feature row")
        feats = (self.features / norms).astype(self.features.dtype)
        return replace(self, features=feats)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureSet):
            return NotImplemented
        return (
            self.features.dtype == other.features.dtype
            and self.features.shape == other.features.shape
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and self.class_names == other.class_names
            and self.source_tag == other.source_tag
        )


@dataclass(frozen=True)
class LabelSplit:
    """Partition of class ids into shared, source-private and target-private sets."""

    shared: tuple[int, ...]
    source_private: tuple[int, ...]
    target_private: tuple[int, ...]
    setting_name: str = ""

    @property
    def source_classes(self) -> tuple[int, ...]:
        """Y^s = shared followed by source-private, in ascending id order each."""
        return self.shared + self.source_private

    @property
    def n_source_classes(self) -> int:
        return len(self.shared) + len(self.source_private)

    @property
    def out_index(self) -> int:
        """Reserved prediction index for the rejected / unknown superclass."""
        return self.n_source_classes

    def __post_init__(self):
        sets = [set(self.shared), set(self.source_private), set(self.target_private)]
        total = sum(len(s) for s in sets)
        if len(set().union(*sets)) != total:
            raise ConfigError("label split parts must be pairwise disjoint")
        if not self.shared and not self.source_private:
            raise ConfigError("source label set must be nonempty")


@dataclass(frozen=True)
class DomainView:
    """A row selection over a FeatureSet with remapped labels.

    Source views remap original class ids to contiguous indices
    0..n_source_classes-1; target views additionally send target-private
    labels to the OUT sentinel (== n_source_classes).  A view produced by
    :meth:`without_labels` exposes features only; touching its labels raises.
    """

    base: FeatureSet
    row_index: np.ndarray
    role: str
    label_remap: dict[int, int]
    n_source_classes: int
    labels_available: bool = True

    @property
    def n(self) -> int:
        return len(self.row_index)

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def out_index(self) -> int:
        return self.n_source_classes

    @property
    def features(self) -> np.ndarray:
        return self.base.features[self.row_index]

    @property
    def original_labels(self) -> np.ndarray:
        if not self.labels_available:
            raise IntegrityError("labels were stripped from this view")
        return self.base.labels[self.row_index]

    @property
    def labels(self) -> np.ndarray:
        """Remapped labels; target-private rows carry the OUT sentinel."""
        orig = self.original_labels
        return np.array([self.label_remap[int(y)] for y in orig], dtype=np.int64)

    def without_labels(self) -> "DomainView":
        return replace(self, labels_available=False)

    def take(self, positions: np.ndarray) -> "DomainView":
        return replace(self, row_index=self.row_index[positions])


@dataclass(frozen=True)
class CalibrationSplit:
    """Class-disjoint halves of a source view used for temperature fitting."""

    calib_in: DomainView
    calib_out: DomainView
    in_classes: tuple[int, ...] = field(default=())
    out_classes: tuple[int, ...] = field(default=())

    def __iter__(self):
        return iter((self.calib_in, self.calib_out))


def _validate_feature_set(fs: FeatureSet) -> None:
    if not fs.class_names:
        raise FormatError("feature set has no class names")
    if fs.features.ndim != 2 or fs.features.shape[0] < 1 or fs.features.shape[1] < 1:
        raise IntegrityError(f"features must be a nonempty matrix, got shape {fs.features.shape}")
    if not np.all(np.isfinite(fs.features)):
        raise IntegrityError("features contain NaN or Inf")
    labels = as_int_vector(fs.labels)
    check_lengths_match(fs.features, labels, names=("features", "labels"))
    if labels.size and (labels.min() < 0 or labels.max() >= len(fs.class_names)):
        raise IntegrityError(
            f"labels must lie in [0, {len(fs.class_names)}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )


def _meta_path(path) -> Path:
    return Path(str(path) + ".meta")


def _write_metadata(path, entries: dict[str, str]) -> None:
    lines = []
    for key, value in entries.items():
        if "\n" in key or "\n" in value or "=" in key:
            raise FormatError(f"metadata key/value may not contain '=' in key or newlines: {key!r}")
        lines.append(f"{key}={value}")
    _meta_path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_metadata(path) -> dict[str, str]:
    meta_file = _meta_path(path)
    if not meta_file.exists():
        return {}
    entries: dict[str, str] = {}
    for line in meta_file.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        if "=" not in line:
            raise FormatError(f"malformed metadata line in {meta_file}: {line!r}")
        key, value = line.split("=", 1)
        entries[key] = value
    return entries


def write_container(path, features: np.ndarray, labels: np.ndarray, n_classes: int,
                    metadata: dict[str, str] | None = None) -> None:
    """Write the raw binary container (no FeatureSet-level validation)."""
    feats = np.ascontiguousarray(features, dtype=np.float32)
    labs = np.ascontiguousarray(labels, dtype=np.int64)
    n, d = feats.shape
    header = _HEADER.pack(MAGIC, VERSION, n, d, n_classes)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(feats.tobytes(order="C"))
        fh.write(labs.tobytes())
    if metadata is not None:
        _write_metadata(path, metadata)


def read_container(path) -> tuple[np.ndarray, np.ndarray, int, dict[str, str]]:
    """Read the raw binary container; returns (features, labels, n_classes, metadata)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file shorter than container header")
    magic, version, n, d, n_classes = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported container version {version}")
    if n < 1 or d < 1:
        raise FormatError(f"{path}: container dimensions must be >= 1, got n={n} d={d}")
    expected = _HEADER.size + n * d * 4 + n * 8
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, file has {len(raw)}")
    feats = np.frombuffer(raw, dtype="<f4", count=n * d, offset=_HEADER.size).reshape(n, d)
    labels = np.frombuffer(raw, dtype="<i8", count=n, offset=_HEADER.size + n * d * 4)
    return feats.copy(), labels.copy(), n_classes, _read_metadata(path)


def save_feature_set(fs: FeatureSet, path) -> None:
    """Serialize a FeatureSet to the container format (bit-exact round trip)."""
    _validate_feature_set(fs)
    meta = {f"class.{i}": name for i, name in enumerate(fs.class_names)}
    meta["source_tag"] = fs.source_tag
    write_container(path, fs.features, fs.labels, len(fs.class_names), meta)


def load_feature_set(path, normalize: bool = False) -> FeatureSet:
    """Load a FeatureSet, enforcing every container invariant.

    ``normalize=True`` L2-normalizes rows after reading; leave it off when a
    bit-exact round trip matters (pipelines default it on for cosine-space
    embeddings via their config).
    """
    feats, labels, n_classes, meta = read_container(path)
    names = []
    for i in range(n_classes):
        key = f"class.{i}"
        if key not in meta:
            raise FormatError(f"{path}: metadata missing {key}")
        names.append(meta[key])
    extra = sum(1 for k in meta if k.startswith("class."))
    if extra != n_classes:
        raise FormatError(f"{path}: metadata lists {extra} classes, header says {n_classes}")
    fs = FeatureSet(
        features=feats,
        labels=labels.astype(np.int64),
        class_names=names,
        source_tag=meta.get("source_tag", ""),
    )
    _validate_feature_set(fs)
    if normalize:
        fs = fs.normalized()
    return fs


def save_logit_container(path, values: np.ndarray, metadata: dict[str, str] | None = None) -> None:
    """Store a raw real matrix (teacher logits, head weights) as a container."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise FormatError(f"logit container payload must be 2-D, got shape {values.shape}")
    labels = np.full(values.shape[0], -1, dtype=np.int64)
    write_container(path, values, labels, 0, metadata or {})


def load_logit_container(path) -> tuple[np.ndarray, dict[str, str]]:
    values, labels, n_classes, meta = read_container(path)
    if n_classes != 0 or np.any(labels != -1):
        raise FormatError(f"{path}: not a raw logit container (labeled rows present)")
    if not np.all(np.isfinite(values)):
        raise IntegrityError(f"{path}: container has non-finite entries")
    return values.astype(np.float64), meta


def make_label_split(total_classes: int, n_shared: int, n_source_private: int,
                     setting_name: str = "") -> LabelSplit:
    """Deterministic class split: shared ids first, then source-private, rest target-private."""
    if n_shared < 1:
        raise ConfigError("need at least one shared class")
    if n_source_private < 0 or n_shared + n_source_private > total_classes:
        raise ConfigError(
            f"split ({n_shared}/{n_source_private}) does not fit in {total_classes} classes"
        )
    shared = tuple(range(n_shared))
    source_private = tuple(range(n_shared, n_shared + n_source_private))
    target_private = tuple(range(n_shared + n_source_private, total_classes))
    return LabelSplit(shared, source_private, target_private, setting_name)


def project_domain(fs: FeatureSet, split: LabelSplit, role: str) -> DomainView:
    """Select the rows a domain may contain and build its label remap.

    Source views keep rows labeled in Y^st or Y^s/t; target views keep rows in
    Y^st or Y^t/s, sending target-private ids to the OUT sentinel.
    """
    if role not in (SOURCE, TARGET):
        raise ConfigError(f"role must be '{SOURCE}' or '{TARGET}', got {role!r}")
    remap = {cid: i for i, cid in enumerate(split.source_classes)}
    if role == SOURCE:
        keep = set(split.shared) | set(split.source_private)
    else:
        keep = set(split.shared) | set(split.target_private)
        for cid in split.target_private:
            remap[cid] = split.out_index
    mask = np.isin(fs.labels, sorted(keep))
    rows = np.nonzero(mask)[0]
    return DomainView(
        base=fs,
        row_index=rows,
        role=role,
        label_remap=remap,
        n_source_classes=split.n_source_classes,
    )


def split_source_by_class(view: DomainView) -> CalibrationSplit:
    """Divide a source view into two class-disjoint halves.

    Classes (in the remapped source index space) are sorted ascending; the
    first ceil(C/2) become the in-class half, the rest the out-class half.
    """
    if view.role != SOURCE:
        raise ConfigError("calibration split requires a source view")
    labels = view.labels
    classes = np.unique(labels)
    if len(classes) < 2:
        raise ConfigError(f"need at least 2 source classes to split, got {len(classes)}")
    n_in = math.ceil(len(classes) / 2)
    in_classes = tuple(int(c) for c in classes[:n_in])
    out_classes = tuple(int(c) for c in classes[n_in:])
    in_view = view.take(np.nonzero(np.isin(labels, in_classes))[0])
    out_view = view.take(np.nonzero(np.isin(labels, out_classes))[0])
    return CalibrationSplit(in_view, out_view, in_classes, out_classes)
