"""Shared fixtures: synthetic triple corpora and the optional real dataset.

The full PELD corpus is not redistributable with this repository; tests that
reproduce its published statistics look for a converted CSV at
$EMOTRANS_PELD_CSV (or data/peld.csv under the repo root) and skip with an
explanation when it is absent.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from emotrans.affect import EMOTIONS
from emotrans.dataset import (
    MAIN_ROLE_PERSONALITIES,
    Dataset,
    DialogTriple,
    Split,
    write_triples,
)

PELD_ENV = "EMOTRANS_PELD_CSV"

_VOCAB = (
    "oh", "come", "on", "you", "know", "what", "happened", "coffee", "really",
    "never", "again", "sorry", "wait", "dinosaurs", "museum", "date", "fine",
    "totally", "okay", "why", "would", "anyone", "do", "that", "cafe,latte",
)


def make_corpus(
    n: int = 120,
    seed: int = 7,
    splits: tuple[Split, ...] = (Split.TRAIN, Split.VALID, Split.TEST),
    split_weights: tuple[float, ...] = (0.8, 0.1, 0.1),
) -> Dataset:
    """Random but deterministic triple corpus over the six stock roles."""
    rng = np.random.default_rng(seed)
    roles = sorted(MAIN_ROLE_PERSONALITIES)
    triples = []
    for i in range(n):
        role = roles[int(rng.integers(len(roles)))]
        # guarantee every emotion appears as both e1 and e3 early on
        e1 = EMOTIONS[i % 7] if i < 14 else EMOTIONS[int(rng.integers(7))]
        e3 = EMOTIONS[(i // 7) % 7] if i < 14 else EMOTIONS[int(rng.integers(7))]
        e2 = EMOTIONS[int(rng.integers(7))] if rng.random() < 0.7 else None
        words = lambda: " ".join(
            _VOCAB[int(j)] for j in rng.integers(len(_VOCAB), size=int(rng.integers(3, 9)))
        )
        split = splits[int(rng.choice(len(splits), p=np.array(split_weights) / sum(split_weights)))]
        if i < len(splits):  # every split non-empty
            split = splits[i]
        triples.append(
            DialogTriple(
                role=role,
                personality=MAIN_ROLE_PERSONALITIES[role],
                u1=f"{words()} #{i}",
                u2=words(),
                u3=words(),
                e1=e1,
                e2=e2,
                e3=e3,
                split=split,
            )
        )
    return Dataset(tuple(triples), dict(MAIN_ROLE_PERSONALITIES))


@pytest.fixture(scope="session")
def corpus() -> Dataset:
    return make_corpus()


@pytest.fixture
def corpus_csv(tmp_path, corpus) -> str:
    path = tmp_path / "triples.csv"
    write_triples(corpus, str(path))
    return str(path)


def peld_csv_path() -> str | None:
    env = os.environ.get(PELD_ENV)
    if env and Path(env).exists():
        return env
    fallback = Path(__file__).resolve().parent.parent / "data" / "peld.csv"
    if fallback.exists():
        return str(fallback)
    return None


@pytest.fixture(scope="session")
def peld_csv() -> str:
    path = peld_csv_path()
    if path is None:
        pytest.skip(
            f"released PELD corpus not available; set ${PELD_ENV} to a converted "
            "triple CSV to run dataset-reproduction tests"
        )
    return path
