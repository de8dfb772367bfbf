"""PELD-format dialog triples: ingestion, statistics, transition analytics.

A triple is one dyadic exchange (u1 with emotion e1, u2, u3 with emotion e3)
spoken back to a responder role with known big-five traits. The interchange
format is a UTF-8 CSV with header ``role,O,C,E,A,N,split,u1,e1,u2,e2,u3,e3``;
columns may appear in any order (the header decides), ``e2`` may be empty,
and fields containing commas use standard CSV double-quoting.

Analytics mirror the usual corpus summaries: per-split counts, unique
utterances, emotion/sentiment tallies, per-role triple counts, and per-role
emotion transition matrices with their cross-role dispersion.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .affect import (
    EMOTIONS,
    SENTIMENTS,
    Emotion,
    PersonalityTraits,
    emotion_to_sentiment,
)


class DataError(Exception):
    """Raised for unreadable or malformed triple data."""


class Split(str, Enum):
    TRAIN = "Train"
    VALID = "Valid"
    TEST = "Test"

    @classmethod
    def parse(cls, tag: str) -> "Split":
        for s in cls:
            if tag.strip().lower() == s.value.lower():
                return s
        raise ValueError(f"unknown split tag: {tag!r}")


SPLITS: tuple[Split, ...] = tuple(Split)

# Averaged trait annotations of the six Friends main roles that ship with
# the PELD release; used as the fallback personality lookup when no dataset
# is loaded (e.g. single-triple prediction).
MAIN_ROLE_PERSONALITIES: dict[str, PersonalityTraits] = {
    "Chandler": PersonalityTraits(0.648, 0.375, 0.386, 0.58, 0.477),
    "Joey": PersonalityTraits(0.574, 0.614, 0.297, 0.545, 0.455),
    "Monica": PersonalityTraits(0.713, 0.457, 0.457, 0.66, 0.511),
    "Phoebe": PersonalityTraits(0.6, 0.48, 0.31, 0.46, 0.56),
    "Rachel": PersonalityTraits(0.635, 0.354, 0.521, 0.552, 0.469),
    "Ross": PersonalityTraits(0.722, 0.489, 0.6, 0.533, 0.356),
}


@dataclass(frozen=True)
class DialogTriple:
    """One PELD sample: (u1, e1) -> u2 -> (u3, e3) answered by ``role``."""

    role: str
    personality: PersonalityTraits
    u1: str
    u2: str
    u3: str
    e1: Emotion
    e2: Emotion | None
    e3: Emotion
    split: Split


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of triples plus the role personality table."""

    triples: tuple[DialogTriple, ...]
    role_table: dict[str, PersonalityTraits]
    skipped_rows: int = 0

    def subset(self, split: Split) -> tuple[DialogTriple, ...]:
        return tuple(t for t in self.triples if t.split is split)

    def __len__(self) -> int:
        return len(self.triples)


COLUMNS = ("role", "O", "C", "E", "A", "N", "split", "u1", "e1", "u2", "e2", "u3", "e3")


def _parse_trait(raw: str, name: str) -> float:
    try:
        x = float(raw)
    except ValueError:
        raise ValueError(f"trait {name} is not a number: {raw!r}") from None
    if not math.isfinite(x) or not (0.0 <= x <= 1.0):
        raise ValueError(f"trait {name} outside [0,1]: {raw!r}")
    return x


def _parse_row(cells: list[str], col: dict[str, int]) -> DialogTriple:
    need = max(col.values()) + 1
    if len(cells) < need:
        raise ValueError(f"expected at least {need} fields, got {len(cells)}")
    get = lambda name: cells[col[name]]

    role = get("role").strip()
    if not role:
        raise ValueError("empty role name")
    personality = PersonalityTraits(*(_parse_trait(get(n), n) for n in "OCEAN"))
    split = Split.parse(get("split"))
    utterances = [get(k).strip() for k in ("u1", "u2", "u3")]
    if any(not u for u in utterances):
        raise ValueError("empty utterance")
    e1 = Emotion.parse(get("e1").strip())
    e3 = Emotion.parse(get("e3").strip())
    raw_e2 = get("e2").strip()
    e2 = Emotion.parse(raw_e2) if raw_e2 else None
    return DialogTriple(role, personality, *utterances, e1, e2, e3, split)


def parse_triples(path: str, strict: bool = False) -> Dataset:
    """Read a triple CSV.

    In non-strict mode malformed rows are skipped and counted on the
    returned dataset; in strict mode the first malformed row aborts with a
    :class:`DataError` naming the line and the problem. A missing file or a
    bad header is always fatal. A role whose personality disagrees with an
    earlier row of the same role counts as malformed.
    """
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot open triple file {path}: {exc}") from exc

    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        col = {name.strip(): i for i, name in enumerate(header)}
        missing = [name for name in COLUMNS if name not in col]
        if missing:
            raise DataError(f"{path}: header is missing columns {missing}")

        triples: list[DialogTriple] = []
        role_table: dict[str, PersonalityTraits] = {}
        skipped = 0
        for lineno, cells in enumerate(reader, start=2):
            if not cells:
                continue
            try:
                t = _parse_row(cells, col)
                known = role_table.get(t.role)
                if known is not None and known != t.personality:
                    raise ValueError(
                        f"role {t.role!r} personality disagrees with an earlier row"
                    )
            except ValueError as exc:
                if strict:
                    raise DataError(f"{path}:{lineno}: {exc}") from None
                skipped += 1
                continue
            role_table.setdefault(t.role, t.personality)
            triples.append(t)
    return Dataset(tuple(triples), role_table, skipped)


def write_triples(dataset: Dataset, path: str) -> None:
    """Write a dataset back out in the interchange CSV format."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        for t in dataset.triples:
            p = t.personality
            writer.writerow(
                [
                    t.role,
                    p.o,
                    p.c,
                    p.e,
                    p.a,
                    p.n,
                    t.split.value,
                    t.u1,
                    t.e1.value,
                    t.u2,
                    t.e2.value if t.e2 else "",
                    t.u3,
                    t.e3.value,
                ]
            )


# ---------------------------------------------------------------------------
# Statistics


_SPLIT_KEYS = ("train", "valid", "test", "total")


def _per_split_dict() -> dict[str, int]:
    return {k: 0 for k in _SPLIT_KEYS}


@dataclass(frozen=True)
class StatsReport:
    """Corpus summary.

    Emotion tallies come in two conventions: ``emotion_counts`` counts every
    labeled utterance slot of every triple (e1, e2 when present, e3, with
    repetition across triples), while ``emotion_counts_endpoints`` counts
    only the transition endpoints e1 and e3. Sentiment counts are the exact
    image of the slot tally under the emotion->sentiment coarsening.
    Utterance figures are over the unique (trimmed, exact-match) utterance
    set of each split; the total column is the union over the whole corpus.
    """

    triple_counts: dict[str, int]
    unique_utterances: dict[str, int]
    avg_utterance_length: dict[str, float]
    emotion_counts: dict[str, dict[str, int]]
    emotion_counts_endpoints: dict[str, dict[str, int]]
    sentiment_counts: dict[str, dict[str, int]]
    role_counts: dict[str, dict[str, int]]
    position_emotions: dict[str, dict[str, int]]  # "e_i" / "e_r" -> label -> count
    position_sentiments: dict[str, dict[str, int]]  # "s_i" / "s_r"

    def to_json_dict(self) -> dict:
        return {
            "total_triples": self.triple_counts["total"],
            "triples": self.triple_counts,
            "unique_utterances": self.unique_utterances,
            "avg_utterance_length": self.avg_utterance_length,
            "emotions": self.emotion_counts,
            "emotions_endpoints_only": self.emotion_counts_endpoints,
            "sentiments": self.sentiment_counts,
            "roles": self.role_counts,
            "triple_emotions": self.position_emotions,
            "triple_sentiments": self.position_sentiments,
        }


def _token_count(utterance: str) -> int:
    return len(utterance.split())


def dataset_stats(d: Dataset) -> StatsReport:
    """Compute the corpus summary over all splits."""
    triple_counts = _per_split_dict()
    emotion_counts = {e.value: _per_split_dict() for e in EMOTIONS}
    endpoint_counts = {e.value: _per_split_dict() for e in EMOTIONS}
    role_counts = {r: _per_split_dict() for r in sorted(d.role_table)}
    unique: dict[str, set[str]] = {k: set() for k in _SPLIT_KEYS}
    position_emotions = {
        "e_i": {e.value: 0 for e in EMOTIONS},
        "e_r": {e.value: 0 for e in EMOTIONS},
    }

    for t in d.triples:
        keys = (t.split.value.lower(), "total")
        for key in keys:
            triple_counts[key] += 1
            role_counts[t.role][key] += 1
            for e in (t.e1, t.e2, t.e3):
                if e is not None:
                    emotion_counts[e.value][key] += 1
            for e in (t.e1, t.e3):
                endpoint_counts[e.value][key] += 1
        for u in (t.u1.strip(), t.u2.strip(), t.u3.strip()):
            unique[t.split.value.lower()].add(u)
            unique["total"].add(u)
        position_emotions["e_i"][t.e1.value] += 1
        position_emotions["e_r"][t.e3.value] += 1

    unique_counts = {k: len(v) for k, v in unique.items()}
    avg_lengths = {
        k: (sum(_token_count(u) for u in v) / len(v) if v else 0.0)
        for k, v in unique.items()
    }

    sentiment_counts = {s.value: _per_split_dict() for s in SENTIMENTS}
    for e in EMOTIONS:
        s = emotion_to_sentiment(e).value
        for key in _SPLIT_KEYS:
            sentiment_counts[s][key] += emotion_counts[e.value][key]

    position_sentiments = {"s_i": {s.value: 0 for s in SENTIMENTS},
                           "s_r": {s.value: 0 for s in SENTIMENTS}}
    for pos_in, pos_out in (("e_i", "s_i"), ("e_r", "s_r")):
        for e in EMOTIONS:
            s = emotion_to_sentiment(e).value
            position_sentiments[pos_out][s] += position_emotions[pos_in][e.value]

    return StatsReport(
        triple_counts=triple_counts,
        unique_utterances=unique_counts,
        avg_utterance_length=avg_lengths,
        emotion_counts=emotion_counts,
        emotion_counts_endpoints=endpoint_counts,
        sentiment_counts=sentiment_counts,
        role_counts=role_counts,
        position_emotions=position_emotions,
        position_sentiments=position_sentiments,
    )


# ---------------------------------------------------------------------------
# Transitions


@dataclass(frozen=True)
class TransitionMatrix:
    """7x7 emotion transition counts (row = preceding e1, col = response e3)
    and their row-normalized ratios in canonical emotion order.

    A row with no observations keeps an all-zero ratio row and is flagged
    empty rather than being filled uniformly."""

    role: str | None
    counts: np.ndarray  # (7, 7) int64
    ratios: np.ndarray  # (7, 7) float64

    @property
    def row_empty(self) -> np.ndarray:
        return self.counts.sum(axis=1) == 0

    def to_json_dict(self) -> dict:
        return {
            "role": self.role,
            "labels": [e.value for e in EMOTIONS],
            "counts": self.counts.tolist(),
            "ratios": self.ratios.tolist(),
            "empty_rows": [
                e.value for e, empty in zip(EMOTIONS, self.row_empty) if empty
            ],
        }


def transition_matrix(d: Dataset, role: str | None = None) -> TransitionMatrix:
    """Count e1 -> e3 transitions, optionally filtered to one responder role."""
    if role is not None and role not in d.role_table:
        raise DataError(f"unknown role name: {role!r}")
    k = len(EMOTIONS)
    counts = np.zeros((k, k), dtype=np.int64)
    for t in d.triples:
        if role is not None and t.role != role:
            continue
        counts[t.e1.index, t.e3.index] += 1
    row_sums = counts.sum(axis=1)
    ratios = np.zeros((k, k))
    nonzero = row_sums > 0
    ratios[nonzero] = counts[nonzero] / row_sums[nonzero, None]
    return TransitionMatrix(role, counts, ratios)


@dataclass(frozen=True)
class RowDispersion:
    emotion: str
    contributing: int  # matrices whose row was nonempty
    inf_norm_std: float | None  # population std of the row max ratio
    l2_norm_std: float | None  # population std of the row L2 norm

    def to_json_dict(self) -> dict:
        return {
            "emotion": self.emotion,
            "contributing_matrices": self.contributing,
            "inf_norm_std": self.inf_norm_std,
            "l2_norm_std": self.l2_norm_std,
        }


@dataclass(frozen=True)
class DispersionReport:
    """Cross-matrix spread of each emotion's transition row: how differently
    the sources (e.g. roles) move on from the same preceding emotion."""

    rows: tuple[RowDispersion, ...]

    def to_json_dict(self) -> dict:
        return {"rows": [r.to_json_dict() for r in self.rows]}


def transition_dispersion(matrices: Sequence[TransitionMatrix]) -> DispersionReport:
    """Per-emotion population standard deviation of the row infinity norms
    and L2 norms across matrices.

    Rows empty in a given matrix are excluded from that emotion's
    collection; an emotion with fewer than two contributing matrices gets
    its dispersions reported as absent (None).
    """
    if len(matrices) < 2:
        raise ValueError("dispersion needs at least 2 transition matrices")
    rows = []
    for i, e in enumerate(EMOTIONS):
        inf_norms = []
        l2_norms = []
        for m in matrices:
            if m.row_empty[i]:
                continue
            row = m.ratios[i]
            inf_norms.append(float(np.max(row)))
            l2_norms.append(float(np.linalg.norm(row)))
        if len(inf_norms) < 2:
            rows.append(RowDispersion(e.value, len(inf_norms), None, None))
        else:
            rows.append(
                RowDispersion(
                    e.value,
                    len(inf_norms),
                    float(np.std(inf_norms)),
                    float(np.std(l2_norms)),
                )
            )
    return DispersionReport(tuple(rows))
