"""The four emotion-selection model variants and their checkpoints.

Two baselines classify straight from the dialog context (optionally
concatenated with the responder's big-five vector). The two transition
variants compose a response VAD point from the preceding emotion's anchor
plus a personality-gated context delta:

    weights  = A_p(temperament prior)          # 3->3 affine, identity-init
    delta    = E_a(context representation)     # three parallel heads, |d|<=2
    composed = anchor(e1) + weights * delta    # elementwise
    output   = classifier(composed)            # pet-cls: affine 3->K + softmax
               or the raw composed point       # pet-vad: nearest-anchor decode

The affective-encoder heads have zero-initialized final layers, so an
untrained model composes exactly the preceding emotion's anchor ("emotion
persists") and training learns an explicit correction from there.

Checkpoints are single JSON documents; floats are rendered with 17
significant digits so save -> load -> save round-trips byte-identically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import nn
from .affect import (
    EMOTIONS,
    SENTIMENTS,
    VAD_ANCHORS,
    Emotion,
    PersonalityTraits,
    Sentiment,
    VadVector,
    emotion_to_sentiment,
)
from .dataset import DialogTriple
from .features import Featurizer, FeaturizerConfig, build_featurizer


class ConfigError(ValueError):
    """Invalid model/training configuration."""


class CheckpointError(Exception):
    """Unreadable, corrupt, or mismatched checkpoint file."""


class Variant(str, Enum):
    CONTEXT_CLS = "context-cls"
    CONTEXT_PERSONA_CLS = "context-persona-cls"
    PET_VAD = "pet-vad"
    PET_CLS = "pet-cls"

    @property
    def is_pet(self) -> bool:
        return self in (Variant.PET_VAD, Variant.PET_CLS)

    @property
    def is_classifier(self) -> bool:
        return self is not Variant.PET_VAD


class Task(str, Enum):
    EMOTION = "emotion"
    SENTIMENT = "sentiment"


def task_labels(task: Task) -> tuple[str, ...]:
    if task is Task.EMOTION:
        return tuple(e.value for e in EMOTIONS)
    return tuple(s.value for s in SENTIMENTS)


def task_num_classes(task: Task) -> int:
    return 7 if task is Task.EMOTION else 3


def target_index(t: DialogTriple, task: Task) -> int:
    """Class index of the response label under the task granularity."""
    if task is Task.EMOTION:
        return t.e3.index
    return emotion_to_sentiment(t.e3).index


# (7, 3) anchor matrix in canonical emotion order.
ANCHORS = np.array([VAD_ANCHORS[e].to_tuple() for e in EMOTIONS])

# (5, 3) OCEAN -> VAD temperament coefficients (same linear form as
# affect.temperament_prior, laid out for batched matmul).
TEMPERAMENT_COEFFS = np.array(
    [
        [0.00, 0.15, 0.25],  # O
        [0.00, 0.00, 0.17],  # C
        [0.21, 0.00, 0.60],  # E
        [0.59, 0.30, -0.32],  # A
        [0.19, -0.57, 0.00],  # N
    ]
)

DELTA_BOUND = 2.0  # |delta| cap per VAD dimension (anchors live in [-1, 1])
_HEAD_NAMES = ("head_v", "head_a", "head_d")


@dataclass(frozen=True)
class ModelConfig:
    variant: Variant
    task: Task = Task.EMOTION
    featurizer: FeaturizerConfig = field(default_factory=FeaturizerConfig)
    hidden: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if self.variant is Variant.PET_VAD and self.task is Task.SENTIMENT:
            raise ConfigError(
                "pet-vad only supports the emotion task: sentiments have no VAD anchors"
            )
        if self.hidden < 1:
            raise ConfigError("hidden width must be >= 1")

    @property
    def ctx_dim(self) -> int:
        return 2 * self.featurizer.dim

    @property
    def num_classes(self) -> int:
        return task_num_classes(self.task)

    def to_json_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "task": self.task.value,
            "featurizer": self.featurizer.to_json_dict(),
            "hidden": self.hidden,
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ModelConfig":
        return cls(
            variant=Variant(d["variant"]),
            task=Task(d["task"]),
            featurizer=FeaturizerConfig.from_json_dict(d["featurizer"]),
            hidden=int(d["hidden"]),
            seed=int(d["seed"]),
        )


def _module_specs(config: ModelConfig) -> dict[str, nn.MlpSpec]:
    """MLP spec per named submodule, in deterministic init order."""
    k = config.num_classes
    if config.variant.is_pet:
        specs = {"adapt": nn.MlpSpec((3, 3))}
        for name in _HEAD_NAMES:
            specs[name] = nn.MlpSpec(
                (config.ctx_dim, config.hidden, 1),
                hidden="tanh",
                output="scaled_tanh",
                output_scale=DELTA_BOUND,
            )
        if config.variant is Variant.PET_CLS:
            specs["cls"] = nn.MlpSpec((3, k), output="softmax")
        return specs
    if config.variant is Variant.CONTEXT_CLS:
        return {"cls": nn.MlpSpec((config.ctx_dim, k), output="softmax")}
    return {"cls": nn.MlpSpec((config.ctx_dim + 5, k), output="softmax")}


def _split_params(params: nn.Params, module: str) -> nn.Params:
    prefix = module + "."
    return {k[len(prefix):]: v for k, v in params.items() if k.startswith(prefix)}


@dataclass(frozen=True)
class PetTrace:
    """Every intermediate of one transition forward pass."""

    prior: VadVector  # temperament prior from the OCEAN traits
    weights: VadVector  # prior after the adaptation layer
    delta: VadVector  # context-driven transition variation
    anchor: VadVector  # preceding emotion's anchor
    composed: VadVector  # anchor + weights * delta
    probs: np.ndarray | None  # classifier distribution (pet-cls only)

    def to_json_dict(self) -> dict:
        d = {
            "prior": list(self.prior.to_tuple()),
            "weights": list(self.weights.to_tuple()),
            "delta": list(self.delta.to_tuple()),
            "anchor": list(self.anchor.to_tuple()),
            "composed": list(self.composed.to_tuple()),
        }
        if self.probs is not None:
            d["probs"] = [float(p) for p in self.probs]
        return d


@dataclass(frozen=True)
class Prediction:
    """Outcome of a single-triple forward pass."""

    label: "Emotion | Sentiment"
    probs: np.ndarray | None  # class distribution (None for pet-vad)
    trace: "PetTrace | None"  # transition intermediates (None for baselines)

    def to_json_dict(self) -> dict:
        d: dict = {"label": self.label.value}
        if self.probs is not None:
            names = EMOTIONS if len(self.probs) == 7 else SENTIMENTS
            d["distribution"] = {
                n.value: float(p) for n, p in zip(names, self.probs)
            }
        if self.trace is not None:
            d["trace"] = self.trace.to_json_dict()
        return d


class Model:
    """One variant instance: config, parameter tensors, featurizer."""

    def __init__(
        self,
        config: ModelConfig,
        params: nn.Params | None = None,
        epoch: int = 0,
        valid_score: float | None = None,
    ):
        self.config = config
        self.specs = _module_specs(config)
        self.params = params if params is not None else self._init_params()
        self._check_shapes()
        self.epoch = epoch
        self.valid_score = valid_score
        self._featurizer: Featurizer | None = None

    def _init_params(self) -> nn.Params:
        rng = np.random.default_rng(self.config.seed)
        params: nn.Params = {}
        for module, spec in self.specs.items():
            if module == "adapt":
                layer_init = {0: "identity"}
            elif module in _HEAD_NAMES:
                layer_init = {spec.n_layers - 1: "zero"}
            else:
                layer_init = None
            for local, arr in nn.init_mlp_params(spec, rng, layer_init).items():
                params[f"{module}.{local}"] = arr
        return params

    def _check_shapes(self) -> None:
        expected = {
            f"{module}.{local}": shape
            for module, spec in self.specs.items()
            for local, shape in spec.param_shapes().items()
        }
        got = {name: arr.shape for name, arr in self.params.items()}
        if got != expected:
            raise CheckpointError(
                f"parameter set does not match the {self.config.variant.value} layout"
            )

    @property
    def featurizer(self) -> Featurizer:
        if self._featurizer is None:
            self._featurizer = build_featurizer(self.config.featurizer)
        return self._featurizer

    def copy_params(self) -> nn.Params:
        return {k: v.copy() for k, v in self.params.items()}

    # -- batched forward/backward -------------------------------------

    def encode_triples(self, triples) -> dict[str, np.ndarray]:
        """Assemble the input arrays for a batch of triples."""
        feats = self.featurizer
        ctx = np.stack(
            [np.concatenate([feats.encode(t.u1), feats.encode(t.u2)]) for t in triples]
        )
        ocean = np.array([t.personality.to_tuple() for t in triples])
        anchors = ANCHORS[[t.e1.index for t in triples]]
        return {"ctx": ctx, "ocean": ocean, "anchors": anchors}

    def forward_batch(self, inputs: dict[str, np.ndarray]) -> tuple[np.ndarray, dict]:
        """Forward pass over assembled arrays.

        Returns (output, cache): class distributions (B, K) for classifier
        variants, composed VAD points (B, 3) for pet-vad.
        """
        ctx = inputs["ctx"]
        cache: dict = {}
        if self.config.variant.is_pet:
            prior = inputs["ocean"] @ TEMPERAMENT_COEFFS
            weights, cache["adapt"] = nn.mlp_apply(
                self.specs["adapt"], _split_params(self.params, "adapt"), prior
            )
            deltas = []
            for name in _HEAD_NAMES:
                d_k, cache[name] = nn.mlp_apply(
                    self.specs[name], _split_params(self.params, name), ctx
                )
                deltas.append(d_k)
            delta = np.concatenate(deltas, axis=1)
            composed = inputs["anchors"] + weights * delta
            cache.update(prior=prior, weights=weights, delta=delta, composed=composed)
            if self.config.variant is Variant.PET_VAD:
                return composed, cache
            probs, cache["cls"] = nn.mlp_apply(
                self.specs["cls"], _split_params(self.params, "cls"), composed
            )
            return probs, cache
        x = ctx
        if self.config.variant is Variant.CONTEXT_PERSONA_CLS:
            x = np.concatenate([ctx, inputs["ocean"]], axis=1)
        probs, cache["cls"] = nn.mlp_apply(
            self.specs["cls"], _split_params(self.params, "cls"), x
        )
        return probs, cache

    def backward_batch(self, cache: dict, d_out: np.ndarray) -> nn.Params:
        """Gradient of the batch loss w.r.t. every parameter tensor.

        ``d_out`` is the loss gradient w.r.t. the forward output: logits for
        classifier variants (softmax folded into the loss), composed VAD
        points for pet-vad.
        """
        grads: nn.Params = {}
        if not self.config.variant.is_pet:
            g, _ = nn.mlp_backprop(
                self.specs["cls"], _split_params(self.params, "cls"), cache["cls"], d_out
            )
            return {f"cls.{k}": v for k, v in g.items()}

        if self.config.variant is Variant.PET_CLS:
            g_cls, d_composed = nn.mlp_backprop(
                self.specs["cls"], _split_params(self.params, "cls"), cache["cls"], d_out
            )
            grads.update({f"cls.{k}": v for k, v in g_cls.items()})
        else:
            d_composed = d_out
        d_weights = d_composed * cache["delta"]
        d_delta = d_composed * cache["weights"]
        g_adapt, _ = nn.mlp_backprop(
            self.specs["adapt"], _split_params(self.params, "adapt"), cache["adapt"], d_weights
        )
        grads.update({f"adapt.{k}": v for k, v in g_adapt.items()})
        for i, name in enumerate(_HEAD_NAMES):
            g_head, _ = nn.mlp_backprop(
                self.specs[name],
                _split_params(self.params, name),
                cache[name],
                d_delta[:, i : i + 1],
            )
            grads.update({f"{name}.{k}": v for k, v in g_head.items()})
        return grads

    # -- prediction ----------------------------------------------------

    def predict_indices(self, inputs: dict[str, np.ndarray]) -> np.ndarray:
        """Predicted class indices; ties break to the lowest index."""
        out, _ = self.forward_batch(inputs)
        if self.config.variant is Variant.PET_VAD:
            sq = ((out[:, None, :] - ANCHORS[None, :, :]) ** 2).sum(axis=2)
            return np.argmin(sq, axis=1)
        return np.argmax(out, axis=1)

    def predict(self, t: DialogTriple) -> Emotion | Sentiment:
        idx = int(self.predict_indices(self.encode_triples([t]))[0])
        if self.config.task is Task.EMOTION:
            return Emotion.from_index(idx)
        return Sentiment.from_index(idx)

    def encode_parts(
        self, u1: str, u2: str, personality: PersonalityTraits, e1: Emotion
    ) -> dict[str, np.ndarray]:
        """Single-sample input arrays from the prediction-relevant parts of
        a triple; the response utterance is never an input."""
        feats = self.featurizer
        return {
            "ctx": np.concatenate([feats.encode(u1), feats.encode(u2)])[None, :],
            "ocean": np.array([personality.to_tuple()]),
            "anchors": ANCHORS[[e1.index]],
        }

    def predict_parts(
        self, u1: str, e1: Emotion, u2: str, personality: PersonalityTraits
    ) -> "Prediction":
        """Predict the response label with the class distribution
        (classifier variants) and the full transition trace (PET variants)."""
        inputs = self.encode_parts(u1, u2, personality, e1)
        out, cache = self.forward_batch(inputs)
        if self.config.variant is Variant.PET_VAD:
            sq = ((out[0][None, :] - ANCHORS) ** 2).sum(axis=1)
            idx = int(np.argmin(sq))
            probs = None
        else:
            idx = int(np.argmax(out[0]))
            probs = out[0]
        label: Emotion | Sentiment = (
            Emotion.from_index(idx)
            if self.config.task is Task.EMOTION
            else Sentiment.from_index(idx)
        )
        trace = None
        if self.config.variant.is_pet:
            trace = PetTrace(
                prior=VadVector(*cache["prior"][0]),
                weights=VadVector(*cache["weights"][0]),
                delta=VadVector(*cache["delta"][0]),
                anchor=VadVector(*inputs["anchors"][0]),
                composed=VadVector(*cache["composed"][0]),
                probs=probs,
            )
        return Prediction(label=label, probs=probs, trace=trace)

    def predict_full(self, t: DialogTriple) -> "Prediction":
        return self.predict_parts(t.u1, t.e1, t.u2, t.personality)


def pet_forward(t: DialogTriple, ctx: np.ndarray, model: Model) -> tuple[np.ndarray, PetTrace]:
    """Transition forward pass for one triple with every intermediate
    exposed; returns the distribution (pet-cls) or composed point (pet-vad)."""
    if not model.config.variant.is_pet:
        raise ConfigError("pet_forward needs a pet-vad or pet-cls model")
    inputs = {
        "ctx": ctx[None, :],
        "ocean": np.array([t.personality.to_tuple()]),
        "anchors": ANCHORS[[t.e1.index]],
    }
    out, cache = model.forward_batch(inputs)
    probs = out[0] if model.config.variant is Variant.PET_CLS else None
    trace = PetTrace(
        prior=VadVector(*cache["prior"][0]),
        weights=VadVector(*cache["weights"][0]),
        delta=VadVector(*cache["delta"][0]),
        anchor=VadVector(*inputs["anchors"][0]),
        composed=VadVector(*cache["composed"][0]),
        probs=probs,
    )
    return out[0], trace


def baseline_forward(
    ctx: np.ndarray, personality: PersonalityTraits | None, model: Model
) -> np.ndarray:
    """Class distribution of a baseline variant for one context vector."""
    if model.config.variant.is_pet:
        raise ConfigError("baseline_forward needs a context-cls or context-persona-cls model")
    if model.config.variant is Variant.CONTEXT_PERSONA_CLS:
        if personality is None:
            raise ConfigError("context-persona-cls requires a personality vector")
        x = np.concatenate([ctx, np.array(personality.to_tuple())])
    else:
        x = ctx
    probs, _ = nn.mlp_apply(model.specs["cls"], _split_params(model.params, "cls"), x)
    return probs


# ---------------------------------------------------------------------------
# Checkpoints


_CHECKPOINT_FORMAT = "emotrans-checkpoint"
_CHECKPOINT_VERSION = 1


def _render_json(obj, indent: int = 0) -> str:
    """Minimal JSON renderer with deterministic float formatting.

    Floats are written with 17 significant digits, which parses back to the
    identical double, so save -> load -> save is byte-stable.
    """
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f'{pad}  {json.dumps(k)}: {_render_json(v, indent + 1)}' for k, v in obj.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in obj):
            return "[" + ", ".join(_render_number(x) for x in obj) + "]"
        items = ",\n".join(f"{pad}  {_render_json(v, indent + 1)}" for v in obj)
        return "[\n" + items + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, float)):
        return _render_number(obj)
    raise TypeError(f"cannot render {type(obj)!r}")


def _render_number(x) -> str:
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    if not math.isfinite(x):
        raise ValueError("cannot serialize a non-finite number")
    return format(float(x), ".17g")


def checkpoint_document(model: Model) -> dict:
    return {
        "format": _CHECKPOINT_FORMAT,
        "version": _CHECKPOINT_VERSION,
        "config": model.config.to_json_dict(),
        "seed": model.config.seed,
        "epoch": model.epoch,
        "valid_score": model.valid_score,
        "params": {
            name: {
                "shape": list(model.params[name].shape),
                "data": [float(v) for v in model.params[name].reshape(-1)],
            }
            for name in sorted(model.params)
        },
    }


def save_checkpoint(model: Model, path: str) -> None:
    text = _render_json(checkpoint_document(model)) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def load_checkpoint(
    path: str,
    expect_variant: Variant | None = None,
    expect_task: Task | None = None,
) -> Model:
    """Load and validate a checkpoint.

    Raises :class:`CheckpointError` for unreadable/corrupt files, parameter
    shapes that do not match the declared variant, or a variant/task other
    than the expected one.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise CheckpointError(f"cannot open checkpoint {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from exc

    if not isinstance(doc, dict) or doc.get("format") != _CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not an emotrans checkpoint")
    if doc.get("version") != _CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version: {doc.get('version')!r}")
    try:
        config = ModelConfig.from_json_dict(doc["config"])
        params: nn.Params = {}
        for name, entry in doc["params"].items():
            arr = np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
            params[name] = arr
        epoch = int(doc["epoch"])
        valid_score = doc["valid_score"]
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from exc

    if expect_variant is not None and config.variant is not expect_variant:
        raise CheckpointError(
            f"checkpoint holds a {config.variant.value} model, expected {expect_variant.value}"
        )
    if expect_task is not None and config.task is not expect_task:
        raise CheckpointError(
            f"checkpoint holds a {config.task.value} model, expected {expect_task.value}"
        )
    return Model(config, params, epoch=epoch, valid_score=valid_score)
