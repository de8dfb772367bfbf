#!/usr/bin/env python3
"""Generate a synthetic triple corpus in the interchange CSV format.

The output mimics the shape of a real dyadic-dialog corpus (Neutral-heavy
emotion marginals, role-dependent transition kernels, learnable lexical
cues in the context) so the CLI and training pipeline can be exercised at
scale without the real data. It is random text: do not use it to reproduce
published statistics.

Usage: python scripts/make_demo_data.py out.csv [--triples 6510] [--seed 0]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from emotrans.affect import EMOTIONS, Emotion
from emotrans.dataset import MAIN_ROLE_PERSONALITIES, Dataset, DialogTriple, Split, write_triples

# rough preceding-emotion marginal of a Neutral-heavy dialog corpus
E1_WEIGHTS = {
    Emotion.NEUTRAL: 0.447, Emotion.JOY: 0.191, Emotion.ANGER: 0.115,
    Emotion.SURPRISE: 0.092, Emotion.FEAR: 0.070, Emotion.SADNESS: 0.067,
    Emotion.DISGUST: 0.018,
}

FILLER = (
    "well you know it was just one of those days",
    "come on we talked about this already",
    "i cannot believe you did that again",
    "so how did the interview go yesterday",
    "maybe we should order some food first",
    "that is exactly what i was trying to say",
    "did you see what happened at the coffee house",
    "please tell me you remembered the tickets",
)

# emotion-indicative tokens dropped into the context so there is signal
CUES = {
    Emotion.ANGER: ("furious", "unbelievable", "stop"),
    Emotion.DISGUST: ("gross", "disgusting", "eww"),
    Emotion.FEAR: ("scared", "terrified", "danger"),
    Emotion.JOY: ("wonderful", "amazing", "yay"),
    Emotion.NEUTRAL: ("okay", "fine", "right"),
    Emotion.SADNESS: ("miserable", "crying", "lost"),
    Emotion.SURPRISE: ("what", "seriously", "no-way"),
}


def _transition_kernel(role_idx: int, e1: Emotion, rng: np.random.Generator) -> Emotion:
    probs = np.full(7, 0.02)
    probs[Emotion.NEUTRAL.index] += 0.38  # most transitions land on Neutral
    probs[e1.index] += 0.30  # emotions tend to persist
    probs[(e1.index + role_idx) % 7] += 0.16  # role-flavored drift
    probs /= probs.sum()
    return EMOTIONS[int(rng.choice(7, p=probs))]


def _utterance(rng: np.random.Generator, cue: Emotion | None = None) -> str:
    words = list(FILLER[int(rng.integers(len(FILLER)))].split())
    n = int(rng.integers(4, min(10, len(words) + 1)))
    picked = words[:n]
    if cue is not None and rng.random() < 0.8:
        cues = CUES[cue]
        picked.insert(int(rng.integers(len(picked) + 1)), cues[int(rng.integers(len(cues)))])
    return " ".join(picked)


def make_demo_dataset(n_triples: int = 6510, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    roles = sorted(MAIN_ROLE_PERSONALITIES)
    e1_labels = list(E1_WEIGHTS)
    e1_probs = np.array(list(E1_WEIGHTS.values()))
    e1_probs /= e1_probs.sum()

    n_valid = round(n_triples * 0.09)
    n_test = round(n_triples * 0.10)
    splits = (
        [Split.VALID] * n_valid + [Split.TEST] * n_test
        + [Split.TRAIN] * (n_triples - n_valid - n_test)
    )
    rng.shuffle(splits)  # type: ignore[arg-type]

    triples = []
    for i in range(n_triples):
        role_idx = int(rng.integers(len(roles)))
        role = roles[role_idx]
        e1 = e1_labels[int(rng.choice(len(e1_labels), p=e1_probs))]
        e3 = _transition_kernel(role_idx, e1, rng)
        e2 = EMOTIONS[int(rng.integers(7))] if rng.random() < 0.9 else None
        triples.append(
            DialogTriple(
                role=role,
                personality=MAIN_ROLE_PERSONALITIES[role],
                u1=_utterance(rng, e1),
                u2=_utterance(rng, e3),  # the context cue the model can learn
                u3=_utterance(rng),
                e1=e1,
                e2=e2,
                e3=e3,
                split=splits[i],
            )
        )
    return Dataset(tuple(triples), dict(MAIN_ROLE_PERSONALITIES))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out", help="output CSV path")
    parser.add_argument("--triples", type=int, default=6510)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    dataset = make_demo_dataset(args.triples, args.seed)
    write_triples(dataset, args.out)
    print(f"wrote {len(dataset)} triples to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
