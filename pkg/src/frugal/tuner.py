"""Grid search over CLA modes and percentile cutoffs, scored on a small labeled slice.

The grid is every mode in ``MODES`` crossed with C = 5, 10, ..., 95, visited
modes-outer, C-inner ascending. A config replaces the incumbent only on a
strictly better validation score, so ties keep the earlier config.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .cla import ClaCutoffs, Predictions, cla_fit, cla_label, cla_predict
from .clafi import ViolationReport, clafi_select, project
from .dataset import Dataset
from .errors import ContractError, FrugalError, TuningError
from .forest import ForestModel, ForestParams, forest_fit, forest_predict
from .metrics import auc, confusion, scalar_metrics

log = logging.getLogger(__name__)


class Mode(str, Enum):
    CLA = "CLA"
    CLA_ML = "CLA_ML"
    CLAFI_ML = "CLAFI_ML"


MODES = (Mode.CLA, Mode.CLA_ML, Mode.CLAFI_ML)
PERCENTILES = tuple(range(5, 100, 5))
SELECTION_METRICS = ("auc", "accuracy", "f1", "recall")


class ConstantModelWarning(UserWarning):
    """Pseudo-labels came out single-class, so the forest can only echo that class."""


@dataclass(frozen=True)
class ClaConfig:
    mode: Mode
    c_percentile: float
    selection_metric: str = "auc"

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not 0 < self.c_percentile < 100:
            raise ContractError(f"C must lie in (0, 100), got {self.c_percentile}")
        if self.selection_metric not in SELECTION_METRICS:
            raise ContractError(f"unknown selection metric {self.selection_metric!r}")


def grid(metric: str = "auc") -> list[ClaConfig]:
    return [ClaConfig(mode, c, metric) for mode in MODES for c in PERCENTILES]


@dataclass(frozen=True, eq=False)
class FittedConfig:
    config: ClaConfig
    cutoffs: ClaCutoffs
    feature_count: int
    forest: ForestModel | None = None
    selection: ViolationReport | None = None
    cla_cutoffs: str = "target"
    notes: tuple[str, ...] = ()

    @property
    def selected_features(self) -> np.ndarray | None:
        return None if self.selection is None else self.selection.selected_features


def fit_config(
    cfg: ClaConfig,
    tuning: Dataset,
    forest_params: ForestParams = ForestParams(),
    literal_violations: bool = False,
    cla_cutoffs: str = "target",
) -> FittedConfig:
    """Fit one grid point on unlabeled tuning rows.

    ``cla_cutoffs`` controls CLA-mode prediction: ``"target"`` recomputes the
    cutoffs on whatever rows are being labeled, ``"fit"`` reuses the tuning
    cutoffs.
    """
    if tuning.n_rows == 0:
        raise ContractError("cannot fit a config on an empty tuning set")
    if cla_cutoffs not in ("target", "fit"):
        raise ContractError(f"cla_cutoffs must be 'target' or 'fit', got {cla_cutoffs!r}")
    tuning = tuning.without_labels()
    cutoffs = cla_fit(tuning, cfg.c_percentile)
    if cfg.mode is Mode.CLA:
        return FittedConfig(cfg, cutoffs, tuning.n_features, cla_cutoffs=cla_cutoffs)

    pseudo = tuning.with_labels(cla_label(cutoffs, tuning).labels)
    selection = None
    train = pseudo
    if cfg.mode is Mode.CLAFI_ML:
        selection = clafi_select(pseudo, cutoffs, literal=literal_violations)
        keep = np.setdiff1d(np.arange(pseudo.n_rows), selection.removed_instances)
        train = project(pseudo.take(keep), selection.selected_features)

    notes = ()
    if len(np.unique(train.labels)) < 2:
        msg = f"{cfg.mode.value} C={cfg.c_percentile}: single-class pseudo-labels, constant model"
        warnings.warn(msg, ConstantModelWarning, stacklevel=2)
        notes = (msg,)
    forest = forest_fit(train, forest_params)
    return FittedConfig(cfg, cutoffs, tuning.n_features, forest, selection, cla_cutoffs, notes)


def predict(fitted: FittedConfig, target) -> Predictions:
    X = target.X if isinstance(target, Dataset) else np.asarray(target, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != fitted.feature_count:
        raise ContractError(f"expected {fitted.feature_count} features, got {X.shape[-1]}")
    if fitted.config.mode is Mode.CLA:
        if fitted.cla_cutoffs == "target":
            return cla_predict(X, fitted.config.c_percentile)
        return cla_label(fitted.cutoffs, X)
    if fitted.selection is not None:
        X = X[:, fitted.selection.selected_features]
    return forest_predict(fitted.forest, X)


def score_predictions(pred: Predictions, truth, metric: str) -> float | None:
    if metric == "auc":
        return auc(pred.scores, truth)
    m = scalar_metrics(confusion(pred.labels, truth))
    return getattr(m, metric)


@dataclass(frozen=True)
class TraceEntry:
    mode: Mode
    c: float
    score: float | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        out = {"mode": self.mode.value, "c": self.c, "score": self.score}
        if self.error is not None:
            out["error"] = self.error
        return out


@dataclass(frozen=True, eq=False)
class TunedModel:
    config: ClaConfig
    fitted: FittedConfig
    score: float
    trace: list[TraceEntry]
    metric: str
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        winner = {
            "mode": self.config.mode.value,
            "c": self.config.c_percentile,
            "score": self.score,
            "metric": self.metric,
        }
        if self.fitted.selection is not None:
            winner["selected_features"] = self.fitted.selection.selected_features.tolist()
            winner["fallback_depth"] = self.fitted.selection.fallback_depth
        return {
            "trace": [e.to_dict() for e in self.trace],
            "winner": winner,
            "warnings": list(self.warnings),
        }


def config_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0] % (2**31))


def frugal_tune(
    tuning: Dataset,
    validation: Dataset,
    metric: str = "auc",
    seed: int = 0,
    forest_params: ForestParams = ForestParams(),
    literal_violations: bool = False,
    cla_cutoffs: str = "target",
    configs: list[ClaConfig] | None = None,
) -> TunedModel:
    """Fit every grid config on ``tuning`` and keep the best on ``validation``.

    Only ``validation`` labels are ever read. Configs that fail are kept in the
    trace with their error; if all of them fail, :class:`TuningError` is raised.
    """
    if metric not in SELECTION_METRICS:
        raise ContractError(f"unknown selection metric {metric!r}")
    if validation.n_rows == 0:
        raise ContractError("validation slice is empty")
    truth = validation.require_labels()
    notes: list[str] = []
    if metric == "auc" and len(np.unique(truth)) < 2:
        notes.append("validation slice is single-class; AUC undefined, selecting on accuracy")
        log.warning(notes[-1])
        metric = "accuracy"
    tuning = tuning.without_labels()
    configs = grid(metric) if configs is None else configs

    trace: list[TraceEntry] = []
    best_score, best = -1.0, None
    for index, cfg in enumerate(configs):
        cfg = ClaConfig(cfg.mode, cfg.c_percentile, metric)
        params = replace(forest_params, seed=config_seed(seed, index))
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConstantModelWarning)
                fitted = fit_config(cfg, tuning, params, literal_violations, cla_cutoffs)
            score = score_predictions(predict(fitted, validation), truth, metric)
        except FrugalError as exc:
            trace.append(TraceEntry(cfg.mode, cfg.c_percentile, None, f"{type(exc).__name__}: {exc}"))
            continue
        notes.extend(fitted.notes)
        if score is None:
            trace.append(TraceEntry(cfg.mode, cfg.c_percentile, None, f"{metric} undefined"))
            continue
        trace.append(TraceEntry(cfg.mode, cfg.c_percentile, float(score)))
        if score > best_score:
            best_score, best = float(score), fitted

    if best is None:
        raise TuningError("every grid configuration failed")
    return TunedModel(best.config, best, best_score, trace, metric, notes)


def predict_test(m: TunedModel, test) -> Predictions:
    return predict(m.fitted, test)
