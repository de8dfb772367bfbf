"""Utterance featurization and dialog-context representation.

The default featurizer is signed feature hashing: vocabulary-free,
deterministic for a fixed (dim, seed), and cheap enough to run anywhere.
Precomputed embeddings (e.g. exported from a transformer encoder by an
external toolchain) can be ingested from a TSV file instead; both modes
expose the same ``encode`` surface.

The context representation of a dialog triple is the concatenation of the
first two utterance vectors, in order. The third utterance is the response
being predicted and is never encoded as input.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

import numpy as np

from .dataset import DialogTriple

DEFAULT_DIM = 4096
DEFAULT_SEED = 17

_TOKEN_SPLIT = re.compile(r"[\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on runs of non-alphanumeric characters."""
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


def _hash_token(token: str, seed: int) -> int:
    key = seed.to_bytes(8, "little", signed=True)
    digest = hashlib.blake2b(token.encode("utf-8"), key=key, digest_size=9).digest()
    return int.from_bytes(digest, "little")


def featurize_hash(text: str, dim: int = DEFAULT_DIM, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Signed feature hashing of one utterance, L2-normalized.

    Each token lands in a bucket in [0, dim) with a +/-1 sign drawn from an
    independent hash bit; signing keeps colliding tokens from always piling
    up in the same direction. The zero vector (no tokens) stays zero.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    vec = np.zeros(dim)
    for token in tokenize(text):
        h = _hash_token(token, seed)
        bucket = (h >> 8) % dim
        sign = 1.0 if h & 1 else -1.0
        vec[bucket] += sign
    norm = np.linalg.norm(vec)
    if norm > 0.0:
        vec /= norm
    return vec


def _escape_key(key: str) -> str:
    return key.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def _unescape_key(raw: str) -> str:
    out = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "\\" and i + 1 < len(raw):
            nxt = raw[i + 1]
            if nxt == "t":
                out.append("\t")
                i += 2
                continue
            if nxt == "n":
                out.append("\n")
                i += 2
                continue
            if nxt == "\\":
                out.append("\\")
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


class EmbeddingError(Exception):
    """Raised for malformed embedding files or missing keys."""


@dataclass
class EmbeddingTable:
    """Precomputed utterance embeddings keyed by exact utterance text."""

    dim: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)
    duplicate_count: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, text: str) -> np.ndarray:
        try:
            return self.entries[text]
        except KeyError:
            raise EmbeddingError(f"no embedding for utterance: {text[:80]!r}") from None


def load_embeddings(path: str) -> EmbeddingTable:
    """Load a TSV embedding file.

    First line declares the dimension as ``#dim <D>``; each record is
    ``key<TAB>f1<TAB>...<TAB>fD`` with tabs/newlines/backslashes in the key
    escaped as ``\\t``/``\\n``/``\\\\``. Duplicate keys keep the last record
    and bump ``duplicate_count``.
    """
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise EmbeddingError(f"cannot open embedding file {path}: {exc}") from exc
    with fh:
        header = fh.readline().rstrip("\n")
        m = re.fullmatch(r"#dim (\d+)", header)
        if not m:
            raise EmbeddingError(f"bad embedding header (want '#dim <D>'): {header!r}")
        dim = int(m.group(1))
        if dim < 1:
            raise EmbeddingError("declared embedding dim must be >= 1")
        table = EmbeddingTable(dim=dim)
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) - 1 != dim:
                raise EmbeddingError(
                    f"line {lineno}: expected {dim} floats, got {len(parts) - 1}"
                )
            key = _unescape_key(parts[0])
            try:
                values = np.array([float(x) for x in parts[1:]])
            except ValueError as exc:
                raise EmbeddingError(f"line {lineno}: unparseable float ({exc})") from None
            if not np.all(np.isfinite(values)):
                raise EmbeddingError(f"line {lineno}: non-finite embedding value")
            if key in table.entries:
                table.duplicate_count += 1
            table.entries[key] = values
    return table


def save_embeddings(table: EmbeddingTable, path: str) -> None:
    """Write a table back out in the same TSV format."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#dim {table.dim}\n")
        for key, values in table.entries.items():
            rendered = "\t".join(format(v, ".17g") for v in values)
            fh.write(f"{_escape_key(key)}\t{rendered}\n")


@dataclass(frozen=True)
class FeaturizerConfig:
    """Serializable featurizer selection: hashing by default, or a path to a
    precomputed embedding table."""

    mode: str = "hash"  # "hash" | "embeddings"
    dim: int = DEFAULT_DIM
    seed: int = DEFAULT_SEED
    embeddings_path: str | None = None

    def to_json_dict(self) -> dict:
        d = {"mode": self.mode, "dim": self.dim, "seed": self.seed}
        if self.mode == "embeddings":
            d["embeddings_path"] = self.embeddings_path
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "FeaturizerConfig":
        return cls(
            mode=d["mode"],
            dim=int(d["dim"]),
            seed=int(d.get("seed", DEFAULT_SEED)),
            embeddings_path=d.get("embeddings_path"),
        )


class HashFeaturizer:
    def __init__(self, dim: int = DEFAULT_DIM, seed: int = DEFAULT_SEED):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self.seed = seed

    def encode(self, text: str) -> np.ndarray:
        return featurize_hash(text, self.dim, self.seed)

    @property
    def config(self) -> FeaturizerConfig:
        return FeaturizerConfig(mode="hash", dim=self.dim, seed=self.seed)


class EmbeddingFeaturizer:
    def __init__(self, table: EmbeddingTable, path: str | None = None):
        self.table = table
        self.dim = table.dim
        self.path = path

    def encode(self, text: str) -> np.ndarray:
        return self.table.lookup(text)

    @property
    def config(self) -> FeaturizerConfig:
        return FeaturizerConfig(
            mode="embeddings", dim=self.dim, seed=0, embeddings_path=self.path
        )


Featurizer = HashFeaturizer | EmbeddingFeaturizer


def build_featurizer(config: FeaturizerConfig) -> Featurizer:
    if config.mode == "hash":
        return HashFeaturizer(config.dim, config.seed)
    if config.mode == "embeddings":
        if not config.embeddings_path:
            raise EmbeddingError("embeddings mode needs an embeddings_path")
        table = load_embeddings(config.embeddings_path)
        if table.dim != config.dim:
            raise EmbeddingError(
                f"embedding file dim {table.dim} != configured dim {config.dim}"
            )
        return EmbeddingFeaturizer(table, config.embeddings_path)
    raise ValueError(f"unknown featurizer mode: {config.mode}")


def context_representation(t: DialogTriple, featurizer: Featurizer) -> np.ndarray:
    """Concatenate the encodings of the two context utterances, in order."""
    return np.concatenate([featurizer.encode(t.u1), featurizer.encode(t.u2)])
