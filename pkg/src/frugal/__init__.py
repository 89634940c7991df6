"""Semi-supervised CLA learners tuned on a small labeled slice."""

from .cla import ClaCutoffs, Prediction, Predictions, cla_fit, cla_label, cla_predict, percentile
from .clafi import (
    ViolationReport,
    clafi_select,
    project,
    select_features,
    select_instances,
    violation_scores,
)
from .dataset import (
    UNKNOWN,
    Dataset,
    LabelCounter,
    SplitPlan,
    load_csv,
    make_split_plan,
    reveal_labels,
    stratified_split,
    write_csv,
)
from .dimension import DimProfile, correlation_sum, estimate_dimension
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    budget_sweep,
    emit_report,
    generate_synthetic,
    run_experiment,
)
from .forest import ForestModel, ForestParams, entropy, forest_fit, forest_predict
from .metrics import (
    Confusion,
    EvalReport,
    aggregate,
    auc,
    confusion,
    cost,
    medium_effect,
    scalar_metrics,
    similar,
)
from .tuner import ClaConfig, Mode, TunedModel, fit_config, frugal_tune, predict_test

__version__ = "0.1.0"
