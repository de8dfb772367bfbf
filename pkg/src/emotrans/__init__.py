"""Personality-affected emotion transition for dialog response selection.

Library + CLI: VAD emotion algebra, big-five temperament weighting, PELD
triple analytics, four trainable emotion-selection model variants, and the
training/evaluation pipeline around them.
"""

from .affect import (
    EMOTIONS,
    SENTIMENTS,
    VAD_ANCHORS,
    Emotion,
    PersonalityTraits,
    Sentiment,
    VadVector,
    average_personality,
    emotion_to_sentiment,
    emotion_to_vad,
    temperament_prior,
    vad_to_emotion,
)
from .dataset import (
    MAIN_ROLE_PERSONALITIES,
    DataError,
    Dataset,
    DialogTriple,
    Split,
    dataset_stats,
    parse_triples,
    transition_dispersion,
    transition_matrix,
    write_triples,
)
from .features import (
    EmbeddingTable,
    FeaturizerConfig,
    HashFeaturizer,
    context_representation,
    featurize_hash,
    load_embeddings,
)
from .metrics import MetricsReport, evaluate_predictions, render_results_table
from .models import (
    CheckpointError,
    ConfigError,
    Model,
    ModelConfig,
    Task,
    Variant,
    baseline_forward,
    load_checkpoint,
    pet_forward,
    save_checkpoint,
)
from .training import TrainConfig, TrainHistory, evaluate, sentiment_view, train

__version__ = "0.1.0"
