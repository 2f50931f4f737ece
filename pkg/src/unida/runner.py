"""Experiment orchestration: configs, the four method pipelines, multi-seed
aggregation, and table emission.

A config file is line-oriented ``key=value`` text, one experiment per file.
Relative paths resolve against the config file's directory.  Recognized keys:

    name, method, source_features, target_features, teacher_bank,
    teacher_logits_source, teacher_logits_target, total_classes, n_shared,
    n_source_private, setting_name, lr, momentum, batch_size, iterations,
    warmup_iters, seeds, n_bins, normalize, logit_scale, tau_override,
    head_path
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .calibration import CalibrationConfig, CalibrationResult, fit_temperature
from .data import (
    SOURCE,
    TARGET,
    DomainView,
    LabelSplit,
    load_feature_set,
    load_logit_container,
    make_label_split,
    project_domain,
    split_source_by_class,
)
from .exceptions import ConfigError, ShapeError
from .metrics import EvalReport, evaluate
from .scoring import (
    MAX_LOGIT,
    NEG_ENTROPY,
    PrototypeBank,
    ScoreRule,
    default_threshold,
    head_logits,
    max_logit_score,
    predict_with_reject,
    prototype_logits,
)
from .training import TrainConfig, distill, train_source_only

SOURCE_ONLY = "source_only"
ZERO_SHOT = "zero_shot"
DISTILL = "distill"
DISTILL_FIXED = "distill_fixed"
METHODS = (SOURCE_ONLY, ZERO_SHOT, DISTILL, DISTILL_FIXED)

# Class-split presets (total, shared, source-private) and iteration budgets
# for the four standard UniDA benchmarks, per setting.
DATASET_SPLITS = {
    "office": {"open-partial": (31, 10, 10), "open": (31, 10, 0),
               "closed": (31, 31, 0), "partial": (31, 10, 21)},
    "officehome": {"open-partial": (65, 10, 5), "open": (65, 15, 0),
                   "closed": (65, 65, 0), "partial": (65, 25, 40)},
    "visda": {"open-partial": (12, 6, 3), "open": (12, 6, 0),
              "closed": (12, 12, 0), "partial": (12, 6, 6)},
    "domainnet": {"open-partial": (345, 150, 50), "open": (345, 150, 0),
                  "closed": (345, 345, 0), "partial": (345, 150, 195)},
}
ITERATION_PRESETS = {
    "office": {"open-partial": 5000, "open": 5000, "closed": 10000, "partial": 10000},
    "officehome": {"open-partial": 5000, "open": 5000, "closed": 10000, "partial": 10000},
    "visda": {"open-partial": 10000, "open": 10000, "closed": 20000, "partial": 20000},
    "domainnet": {"open-partial": 10000, "open": 10000, "closed": 20000, "partial": 20000},
}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    method: str = SOURCE_ONLY
    source_features: str = ""
    target_features: str = ""
    teacher_bank: str | None = None
    teacher_logits_source: str | None = None
    teacher_logits_target: str | None = None
    total_classes: int = 0
    n_shared: int = 0
    n_source_private: int = 0
    setting_name: str = ""
    train: TrainConfig = field(default_factory=TrainConfig)
    seeds: tuple[int, ...] = (0, 1, 2)
    n_bins: int = 15
    normalize: bool = True
    logit_scale: float = 100.0
    tau_override: float | None = None
    head_path: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if self.method != SOURCE_ONLY and not (
            self.teacher_bank or (self.teacher_logits_source and self.teacher_logits_target)
        ):
            raise ConfigError(
                f"method {self.method!r} needs teacher_bank or both teacher_logits files"
            )

    @property
    def uses_calibration(self) -> bool:
        return self.method in (DISTILL, DISTILL_FIXED) and self.tau_override is None

    def split(self) -> LabelSplit:
        return make_label_split(self.total_classes, self.n_shared,
                                self.n_source_private, self.setting_name)


@dataclass(frozen=True)
class AggregateReport:
    name: str
    method: str
    setting: str
    seeds: tuple[int, ...]
    reports: tuple[EvalReport, ...]
    mean: dict[str, float]
    std: dict[str, float]
    tau: float | None = None

    def to_json(self) -> str:
        payload = {
            "name": self.name,
            "method": self.method,
            "setting": self.setting,
            "seeds": list(self.seeds),
            "per_seed": [r.as_dict() for r in self.reports],
            "mean": self.mean,
            "std": self.std,
            "tau": self.tau,
        }
        return json.dumps(payload, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "AggregateReport":
        data = json.loads(text)
        reports = tuple(EvalReport(**d, curve=[]) for d in data["per_seed"])
        return cls(
            name=data["name"], method=data["method"], setting=data["setting"],
            seeds=tuple(data["seeds"]), reports=reports,
            mean=data["mean"], std=data["std"], tau=data.get("tau"),
        )


_TRAIN_KEYS = {f.name for f in dataclasses.fields(TrainConfig)} - {"seed", "tau"}
_BOOL_VALUES = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def parse_config(path) -> ExperimentConfig:
    """Parse a key=value experiment config file."""
    path = Path(path)
    base = path.parent
    raw: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        raw[key.strip()] = value.strip()

    def path_of(value: str) -> str:
        p = Path(value)
        return str(p if p.is_absolute() else base / p)

    kwargs: dict = {}
    train_kwargs: dict = {}
    for key, value in raw.items():
        if key in _TRAIN_KEYS:
            train_kwargs[key] = int(value) if key in ("batch_size", "iterations", "warmup_iters") else float(value)
        elif key in ("source_features", "target_features", "teacher_bank",
                     "teacher_logits_source", "teacher_logits_target", "head_path"):
            kwargs[key] = path_of(value)
        elif key in ("total_classes", "n_shared", "n_source_private", "n_bins"):
            kwargs[key] = int(value)
        elif key == "seeds":
            kwargs[key] = tuple(int(s) for s in value.split(",") if s.strip())
        elif key == "normalize":
            if value.lower() not in _BOOL_VALUES:
                raise ConfigError(f"{path}: normalize must be true/false, got {value!r}")
            kwargs[key] = _BOOL_VALUES[value.lower()]
        elif key in ("logit_scale", "tau_override"):
            kwargs[key] = float(value)
        elif key in ("name", "method", "setting_name"):
            kwargs[key] = value
        else:
            raise ConfigError(f"{path}: unknown config key {key!r}")
    try:
        kwargs["train"] = TrainConfig(**train_kwargs)
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


@dataclass
class PipelineContext:
    """Everything the seed loop needs, resolved once per experiment."""

    config: ExperimentConfig
    split: LabelSplit
    source_view: DomainView
    target_view: DomainView
    teacher_source: np.ndarray | None
    teacher_target: np.ndarray | None
    calibration: CalibrationResult | None
    tau: float


def _load_teacher(config: ExperimentConfig, split: LabelSplit,
                  source_view: DomainView, target_view: DomainView
                  ) -> tuple[np.ndarray, np.ndarray]:
    if config.teacher_bank:
        bank_fs = load_feature_set(config.teacher_bank)
        if len(bank_fs.class_names) < max(split.source_classes) + 1:
            raise ConfigError(
                f"teacher bank has {len(bank_fs.class_names)} classes, split needs "
                f"class {max(split.source_classes)}"
            )
        by_class = {int(lbl): i for i, lbl in enumerate(bank_fs.labels)}
        try:
            rows = [by_class[cid] for cid in split.source_classes]
        except KeyError as exc:
            raise ConfigError(f"teacher bank is missing a prototype for class {exc}") from exc
        protos = bank_fs.features[rows].astype(np.float64)
        protos /= np.linalg.norm(protos, axis=1, keepdims=True)
        bank = PrototypeBank(protos, config.logit_scale)
        return prototype_logits(bank, source_view), prototype_logits(bank, target_view)
    src, _ = load_logit_container(config.teacher_logits_source)
    tgt, _ = load_logit_container(config.teacher_logits_target)
    for mat, view, label in ((src, source_view, "source"), (tgt, target_view, "target")):
        if mat.shape != (view.n, split.n_source_classes):
            raise ShapeError(
                f"teacher {label} logits have shape {mat.shape}, expected "
                f"({view.n}, {split.n_source_classes})"
            )
    return src, tgt


def prepare_pipeline(config: ExperimentConfig) -> PipelineContext:
    """Load data, build views, resolve the teacher and the temperature."""
    stage = "loading features"
    try:
        source_fs = load_feature_set(config.source_features, normalize=config.normalize)
        target_fs = load_feature_set(config.target_features, normalize=config.normalize)
        stage = "building views"
        split = config.split()
        source_view = project_domain(source_fs, split, SOURCE)
        target_view = project_domain(target_fs, split, TARGET)

        teacher_source = teacher_target = None
        calibration = None
        tau = 1.0
        if config.method != SOURCE_ONLY:
            stage = "resolving teacher"
            teacher_source, teacher_target = _load_teacher(config, split, source_view, target_view)
        if config.method in (DISTILL, DISTILL_FIXED):
            if config.tau_override is not None:
                tau = config.tau_override
            else:
                stage = "fitting temperature"
                calib_split = split_source_by_class(source_view)
                calibration = fit_temperature(
                    teacher_source, source_view.labels, calib_split,
                    CalibrationConfig(n_bins=config.n_bins),
                )
                tau = calibration.tau_opt
    except Exception as exc:
        raise type(exc)(f"[{stage}] {exc}") from exc
    return PipelineContext(
        config=config, split=split, source_view=source_view, target_view=target_view,
        teacher_source=teacher_source, teacher_target=teacher_target,
        calibration=calibration, tau=tau,
    )


def run_seed(ctx: PipelineContext, seed: int) -> EvalReport:
    """Execute one method run for one seed and evaluate it."""
    config = ctx.config
    k = ctx.split.n_source_classes
    train_config = replace(config.train, seed=seed)
    entropy_rule = ScoreRule(NEG_ENTROPY, default_threshold(NEG_ENTROPY, k))

    if config.method == SOURCE_ONLY:
        trace = train_source_only(ctx.source_view, train_config)
        logits = head_logits(trace.head, ctx.target_view)
        predictions, scores = predict_with_reject(logits, 1.0, entropy_rule)
    elif config.method == ZERO_SHOT:
        logits = ctx.teacher_target
        predictions = logits.argmax(axis=1).astype(np.int64)
        scores = max_logit_score(logits)
    elif config.method == DISTILL:
        trace = distill(ctx.target_view.without_labels(), ctx.teacher_target,
                        ctx.tau, train_config)
        logits = head_logits(trace.head, ctx.target_view)
        predictions, scores = predict_with_reject(logits, 1.0, entropy_rule)
    else:  # DISTILL_FIXED
        logits = ctx.teacher_target / ctx.tau
        predictions, scores = predict_with_reject(logits, 1.0, entropy_rule)

    return evaluate(predictions, scores, ctx.target_view.original_labels, ctx.split,
                    argmax_predictions=logits.argmax(axis=1))


def aggregate(config: ExperimentConfig, reports: list[EvalReport],
              tau: float | None) -> AggregateReport:
    table = {name: [r.as_dict()[name] for r in reports] for name in EvalReport.METRIC_FIELDS}
    mean = {name: float(np.mean(vals)) for name, vals in table.items()}
    # identical per-seed values (e.g. the no-training path) must give exactly 0
    std = {name: 0.0 if len(set(vals)) == 1 else float(np.std(vals))
           for name, vals in table.items()}
    return AggregateReport(
        name=config.name, method=config.method,
        setting=config.setting_name or f"({config.n_shared}/{config.n_source_private})",
        seeds=config.seeds, reports=tuple(reports), mean=mean, std=std, tau=tau,
    )


def run_experiment(config: ExperimentConfig) -> AggregateReport:
    """Run the configured method for every seed and aggregate the metrics."""
    ctx = prepare_pipeline(config)
    reports = [run_seed(ctx, seed) for seed in config.seeds]
    tau = ctx.tau if config.method in (DISTILL, DISTILL_FIXED) else None
    return aggregate(config, reports, tau)


def _cell(mean: float, std: float) -> str:
    return f"{mean:.9f}±{std:.9f}"


def emit_tables(reports: list[AggregateReport], fmt: str = "csv") -> str:
    """Render aggregate reports as one row per (method, setting)."""
    if not reports:
        raise ConfigError("no reports to emit")
    if fmt not in ("csv", "markdown"):
        raise ConfigError(f"unknown table format {fmt!r}")
    columns = list(EvalReport.METRIC_FIELDS)
    rows = []
    for rep in sorted(reports, key=lambda r: (r.method, r.setting, r.name)):
        cells = [_cell(rep.mean[c], rep.std[c]) for c in columns]
        rows.append([rep.method, rep.setting] + cells)
    header = ["method", "setting"] + columns
    if fmt == "csv":
        lines = [",".join(header)] + [",".join(row) for row in rows]
        return "\n".join(lines) + "\n"
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join(["---"] * len(header)) + "|"]
    lines += ["| " + " | ".join(row) + " |" for row in rows]
    return "\n".join(lines) + "\n"
