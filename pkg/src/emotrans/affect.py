"""Emotion, sentiment, VAD, and big-five temperament algebra.

Everything in this module is a pure function on immutable values: the seven
basic emotion categories, their fixed anchor points in Valence-Arousal-
Dominance space (affect norms going back to Russell & Mehrabian), the
three-way sentiment coarsening, and the linear temperament model that maps
OCEAN trait strengths into VAD space (Mehrabian's regression coefficients).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable


class Emotion(str, Enum):
    """The seven basic emotions. Definition order is the canonical index
    order used by every vector and matrix in this package."""

    ANGER = "Anger"
    DISGUST = "Disgust"
    FEAR = "Fear"
    JOY = "Joy"
    NEUTRAL = "Neutral"
    SADNESS = "Sadness"
    SURPRISE = "Surprise"

    @property
    def index(self) -> int:
        return _EMOTION_INDEX[self]

    @classmethod
    def from_index(cls, i: int) -> "Emotion":
        return EMOTIONS[i]

    @classmethod
    def parse(cls, label: str) -> "Emotion":
        try:
            return cls(label)
        except ValueError:
            raise ValueError(f"unknown emotion label: {label!r}") from None


EMOTIONS: tuple[Emotion, ...] = tuple(Emotion)
_EMOTION_INDEX = {e: i for i, e in enumerate(EMOTIONS)}


class Sentiment(str, Enum):
    """Three-way sentiment polarity; definition order is canonical."""

    NEGATIVE = "Negative"
    NEUTRAL = "Neutral"
    POSITIVE = "Positive"

    @property
    def index(self) -> int:
        return _SENTIMENT_INDEX[self]

    @classmethod
    def from_index(cls, i: int) -> "Sentiment":
        return SENTIMENTS[i]


SENTIMENTS: tuple[Sentiment, ...] = tuple(Sentiment)
_SENTIMENT_INDEX = {s: i for i, s in enumerate(SENTIMENTS)}

# Joy and Surprise are the positive emotions (anchor valence > 0); all other
# non-neutral emotions are negative (anchor valence < 0).
POSITIVE_EMOTIONS = frozenset({Emotion.JOY, Emotion.SURPRISE})


def _require_finite(name: str, *values: float) -> None:
    for x in values:
        if not math.isfinite(x):
            raise ValueError(f"{name} component must be finite, got {x!r}")


@dataclass(frozen=True)
class VadVector:
    """A point or delta in Valence-Arousal-Dominance space.

    Anchor points lie in [-1, 1] per dimension; deltas and composed points
    may leave that range. Components must be finite.
    """

    v: float
    a: float
    d: float

    def __post_init__(self) -> None:
        _require_finite("VAD", self.v, self.a, self.d)

    def to_tuple(self) -> tuple[float, float, float]:
        return (self.v, self.a, self.d)

    def mse_to(self, other: "VadVector") -> float:
        """Mean squared error to another point."""
        return (
            (self.v - other.v) ** 2
            + (self.a - other.a) ** 2
            + (self.d - other.d) ** 2
        ) / 3.0


@dataclass(frozen=True)
class PersonalityTraits:
    """Big-five (OCEAN) trait strengths.

    Dataset-sourced traits live in [0, 1] per component (the parser enforces
    this); the type itself accepts any finite reals so that linearity of the
    temperament map is testable on arbitrary inputs.
    """

    o: float
    c: float
    e: float
    a: float
    n: float

    def __post_init__(self) -> None:
        _require_finite("OCEAN", self.o, self.c, self.e, self.a, self.n)

    def to_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.o, self.c, self.e, self.a, self.n)

    def in_unit_range(self) -> bool:
        return all(0.0 <= x <= 1.0 for x in self.to_tuple())


# Fixed VAD anchors of the basic emotions (Russell & Mehrabian norms; Fear
# and Joy correspond to "Terrified" and "Happy" in the source table).
VAD_ANCHORS: dict[Emotion, VadVector] = {
    Emotion.ANGER: VadVector(-0.51, 0.59, 0.25),
    Emotion.DISGUST: VadVector(-0.60, 0.35, 0.11),
    Emotion.FEAR: VadVector(-0.62, 0.82, -0.43),
    Emotion.JOY: VadVector(0.81, 0.51, 0.46),
    Emotion.NEUTRAL: VadVector(0.00, 0.00, 0.00),
    Emotion.SADNESS: VadVector(-0.63, -0.27, -0.33),
    Emotion.SURPRISE: VadVector(0.40, 0.67, -0.13),
}


def emotion_to_vad(e: Emotion) -> VadVector:
    """Return the fixed VAD anchor of a basic emotion."""
    return VAD_ANCHORS[e]


def vad_to_emotion(p: VadVector) -> Emotion:
    """Decode a VAD point to the emotion whose anchor is nearest by MSE.

    Ties break to the lowest canonical index, so the result is deterministic
    for equidistant inputs.
    """
    best = EMOTIONS[0]
    best_err = p.mse_to(VAD_ANCHORS[best])
    for e in EMOTIONS[1:]:
        err = p.mse_to(VAD_ANCHORS[e])
        if err < best_err:
            best, best_err = e, err
    return best


def emotion_to_sentiment(e: Emotion) -> Sentiment:
    """Coarsen an emotion to its sentiment polarity."""
    if e is Emotion.NEUTRAL:
        return Sentiment.NEUTRAL
    if e in POSITIVE_EMOTIONS:
        return Sentiment.POSITIVE
    return Sentiment.NEGATIVE


def temperament_prior(p: PersonalityTraits) -> VadVector:
    """Project OCEAN trait strengths into VAD space.

    Mehrabian's linear temperament regression:

        P_V = 0.21*E + 0.59*A + 0.19*N
        P_A = 0.15*O + 0.30*A - 0.57*N
        P_D = 0.25*O + 0.17*C + 0.60*E - 0.32*A
    """
    return VadVector(
        0.21 * p.e + 0.59 * p.a + 0.19 * p.n,
        0.15 * p.o + 0.30 * p.a - 0.57 * p.n,
        0.25 * p.o + 0.17 * p.c + 0.60 * p.e - 0.32 * p.a,
    )


def average_personality(annotations: Iterable[PersonalityTraits]) -> PersonalityTraits:
    """Componentwise arithmetic mean of a non-empty set of annotations."""
    items = list(annotations)
    if not items:
        raise ValueError("cannot average an empty list of personality annotations")
    k = float(len(items))
    return PersonalityTraits(
        sum(p.o for p in items) / k,
        sum(p.c for p in items) / k,
        sum(p.e for p in items) / k,
        sum(p.a for p in items) / k,
        sum(p.n for p in items) / k,
    )
