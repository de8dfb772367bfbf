"""Mini-batch training with valid-set model selection, plus evaluation.

Classifier variants train with focal loss (inverse-frequency class weights
by default); the VAD-regression variant trains with MSE against the target
emotion's anchor. After every epoch the model is scored on the Valid split
and the checkpoint returned is the one from the best epoch under the
selection metric (weighted F1 by default, ties to the earliest epoch).
Identical configs and seeds reproduce identical trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import nn
from .affect import Sentiment, emotion_to_sentiment
from .dataset import Dataset, DataError, DialogTriple, Split
from .features import FeaturizerConfig
from .metrics import MetricsReport, evaluate_predictions
from .models import (
    ANCHORS,
    ConfigError,
    Model,
    ModelConfig,
    Task,
    Variant,
    target_index,
    task_labels,
)

SELECTION_METRICS = ("w-avg", "m-avg")
ALPHA_MODES = ("balanced", "uniform")


@dataclass(frozen=True)
class TrainConfig:
    variant: Variant
    task: Task = Task.EMOTION
    epochs: int = 50
    batch_size: int = 32
    seed: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    hidden: int = 64
    gamma: float = 2.0
    alpha_mode: str = "balanced"
    selection_metric: str = "w-avg"
    featurizer: FeaturizerConfig = field(default_factory=FeaturizerConfig)

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch size must be >= 1")
        if self.gamma < 0:
            raise ConfigError("gamma must be >= 0")
        if self.selection_metric not in SELECTION_METRICS:
            raise ConfigError(f"selection metric must be one of {SELECTION_METRICS}")
        if self.alpha_mode not in ALPHA_MODES:
            raise ConfigError(f"alpha mode must be one of {ALPHA_MODES}")
        if self.variant is Variant.PET_VAD and self.task is Task.SENTIMENT:
            raise ConfigError(
                "pet-vad only supports the emotion task: sentiments have no VAD anchors"
            )

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            variant=self.variant,
            task=self.task,
            featurizer=self.featurizer,
            hidden=self.hidden,
            seed=self.seed,
        )

    def to_json_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "task": self.task.value,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "hidden": self.hidden,
            "gamma": self.gamma,
            "alpha_mode": self.alpha_mode,
            "selection_metric": self.selection_metric,
            "featurizer": self.featurizer.to_json_dict(),
        }


@dataclass(frozen=True)
class EpochRecord:
    epoch: int  # 1-based
    train_loss: float
    valid_macro_f1: float
    valid_weighted_f1: float


@dataclass(frozen=True)
class TrainHistory:
    records: tuple[EpochRecord, ...]
    selected_epoch: int
    selection_metric: str

    @property
    def selected(self) -> EpochRecord:
        return self.records[self.selected_epoch - 1]

    def to_json_dict(self) -> dict:
        return {
            "selection_metric": self.selection_metric,
            "selected_epoch": self.selected_epoch,
            "epochs": [
                {
                    "epoch": r.epoch,
                    "train_loss": r.train_loss,
                    "valid_macro_f1": r.valid_macro_f1,
                    "valid_weighted_f1": r.valid_weighted_f1,
                }
                for r in self.records
            ],
        }


def class_alpha(counts: np.ndarray, mode: str = "balanced") -> np.ndarray:
    """Focal-loss class weights from training-split class counts.

    Balanced mode uses inverse frequency total/(K*count), clipped to
    [0.25, 4]; absent classes take the upper clip.
    """
    counts = np.asarray(counts, dtype=np.float64)
    if mode == "uniform":
        return np.ones_like(counts)
    total = counts.sum()
    k = len(counts)
    raw = np.divide(total, k * counts, out=np.full(k, np.inf), where=counts > 0)
    return np.clip(raw, 0.25, 4.0)


def sentiment_view(d: Dataset) -> list[tuple[DialogTriple, Sentiment]]:
    """Pair every triple with its coarsened (sentiment) prediction target.

    Only the target granularity changes: the triples keep their full
    emotion labels, so transition variants still consume the 7-emotion VAD
    anchor of e1. The class count under this view is len(SENTIMENTS) == 3.
    """
    return [(t, emotion_to_sentiment(t.e3)) for t in d.triples]


def _target_indices(triples: Sequence[DialogTriple], task: Task) -> np.ndarray:
    return np.array([target_index(t, task) for t in triples], dtype=np.int64)


def _valid_report(model: Model, inputs: dict, true_idx: np.ndarray) -> MetricsReport:
    preds = model.predict_indices(inputs)
    return evaluate_predictions(true_idx.tolist(), preds.tolist(), task_labels(model.config.task))


def train(d: Dataset, cfg: TrainConfig) -> tuple[Model, TrainHistory]:
    """Train one variant on the Train split with per-epoch Valid selection.

    Returns the model restored to its best epoch plus the full history.
    """
    train_triples = d.subset(Split.TRAIN)
    valid_triples = d.subset(Split.VALID)
    if not train_triples:
        raise DataError("Train split is empty")
    if not valid_triples:
        raise DataError("Valid split is empty")

    model = Model(cfg.model_config())
    train_inputs = model.encode_triples(train_triples)
    valid_inputs = model.encode_triples(valid_triples)
    train_targets = _target_indices(train_triples, cfg.task)
    valid_targets = _target_indices(valid_triples, cfg.task)

    is_vad = cfg.variant is Variant.PET_VAD
    if is_vad:
        target_anchors = ANCHORS[[t.e3.index for t in train_triples]]
        alpha = None
    else:
        counts = np.bincount(train_targets, minlength=model.config.num_classes)
        alpha = class_alpha(counts, cfg.alpha_mode)

    state = nn.adam_init(model.params, lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
    rng = np.random.default_rng(cfg.seed)
    n = len(train_triples)

    records: list[EpochRecord] = []
    best_score = -np.inf
    best_epoch = 0
    best_params = model.copy_params()
    best_valid: float | None = None

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        total_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            batch = {
                "ctx": train_inputs["ctx"][idx],
                "ocean": train_inputs["ocean"][idx],
                "anchors": train_inputs["anchors"][idx],
            }
            out, cache = model.forward_batch(batch)
            if is_vad:
                loss, d_out = nn.mse_loss_batch(out, target_anchors[idx])
            else:
                loss, d_out = nn.focal_loss_batch(out, train_targets[idx], alpha, cfg.gamma)
            grads = model.backward_batch(cache, d_out)
            nn.adam_step(model.params, grads, state)
            total_loss += loss * len(idx)
        train_loss = total_loss / n

        report = _valid_report(model, valid_inputs, valid_targets)
        records.append(
            EpochRecord(epoch, train_loss, report.macro_f1, report.weighted_f1)
        )
        score = report.weighted_f1 if cfg.selection_metric == "w-avg" else report.macro_f1
        if score > best_score:
            best_score = score
            best_epoch = epoch
            best_params = model.copy_params()
            best_valid = score

    model.params = best_params
    model.epoch = best_epoch
    model.valid_score = best_valid
    history = TrainHistory(tuple(records), best_epoch, cfg.selection_metric)
    return model, history


def evaluate(
    model: Model, d: Dataset, split: Split, task: Task | None = None
) -> MetricsReport:
    """Score a model on one split of the dataset."""
    if task is not None and task is not model.config.task:
        raise ConfigError(
            f"model was trained for the {model.config.task.value} task, not {task.value}"
        )
    triples = d.subset(split)
    if not triples:
        raise DataError(f"{split.value} split is empty")
    inputs = model.encode_triples(triples)
    preds = model.predict_indices(inputs)
    true = _target_indices(triples, model.config.task)
    return evaluate_predictions(true.tolist(), preds.tolist(), task_labels(model.config.task))
