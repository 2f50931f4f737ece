"""Universal domain adaptation on precomputed embeddings.

Linear-probe baselines, teacher distillation with self-calibrated temperature
scaling, and the open-set evaluation stack (H-score, H3-score, UCR), all
operating on binary embedding containers.
"""

from .calibration import (
    CalibrationConfig,
    CalibrationResult,
    ReliabilityBins,
    TemperatureScaler,
    calibration_objective,
    ece_from_bins,
    ece_in,
    ece_out,
    fit_temperature,
    nll_in,
    reliability_bins,
)
from .data import (
    CalibrationSplit,
    DomainView,
    FeatureSet,
    LabelSplit,
    load_feature_set,
    load_logit_container,
    make_label_split,
    project_domain,
    save_feature_set,
    save_logit_container,
    split_source_by_class,
)
from .exceptions import (
    ConfigError,
    DomainError,
    FormatError,
    IntegrityError,
    ShapeError,
    UnidaError,
)
from .metrics import (
    CurvePoint,
    EvalInputs,
    EvalReport,
    avg_class_accuracy,
    ccr_fpr_curve,
    evaluate,
    h3_score,
    h_score,
    nmi,
    ucr,
)
from .runner import (
    AggregateReport,
    ExperimentConfig,
    emit_tables,
    parse_config,
    run_experiment,
)
from .scoring import (
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
from .training import (
    DistillationClassifier,
    FixedTeacherClassifier,
    SourceOnlyClassifier,
    TrainConfig,
    TrainTrace,
    ce_loss_and_grad,
    distill,
    fixed_model_head,
    load_linear_head,
    lr_schedule,
    save_linear_head,
    train_source_only,
)

__version__ = "0.1.0"
