"""Self-consistency selection: pick the candidate nearest the embedding centroid.

Generating k candidate pathways per step and keeping the one whose
embedding lies closest (by cosine similarity) to the centroid of all k
suppresses outlier generations. The embedding source is pluggable: a
deterministic hashed term-frequency embedder keeps tests and offline runs
free of any model or network dependency, and an HTTP embedder can stand
in for a real sentence-embedding service.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol, Sequence

from .errors import DimensionMismatch, EmbeddingProviderError, EmptyInput

_WORD = re.compile(r"\w+")


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    norm: float

    @property
    def dimension(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SelectionResult:
    chosen_index: int
    chosen_text: str
    similarity_to_centroid: float
    all_similarities: tuple[float, ...]


class Embedder(Protocol):
    def embed_texts(self, texts: Sequence[str]) -> list[list[float]]: ...


def vector(values: Sequence[float]) -> EmbeddingVector:
    vals = tuple(float(v) for v in values)
    return EmbeddingVector(values=vals, norm=math.sqrt(sum(v * v for v in vals)))


@lru_cache(maxsize=65536)
def _bucket(token: str, dimension: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dimension


class HashedTfEmbedder:
    """Deterministic fallback embedder: hashed, L2-normalized term counts.

    Word tokens of the lowercased text are bucketed by a 64-bit string
    hash into a fixed-dimension count vector, then L2-normalized. Empty
    text maps to the zero vector (norm 0).
    """

    def __init__(self, dimension: int = 256):
        self.dimension = dimension

    def embed_texts(self, texts: Sequence[str]) -> list[list[float]]:
        out = []
        for text in texts:
            counts = [0.0] * self.dimension
            for token in _WORD.findall(text.lower()):
                counts[_bucket(token, self.dimension)] += 1.0
            norm = math.sqrt(sum(c * c for c in counts))
            if norm > 0.0:
                counts = [c / norm for c in counts]
            out.append(counts)
        return out


class HttpEmbedder:
    """Remote embedding provider: POST a text list, get equal-length vectors."""

    def __init__(self, url: str, api_key: str | None = None, timeout: float = 60.0):
        self.url = url
        self.api_key = api_key
        self.timeout = timeout

    def embed_texts(self, texts: Sequence[str]) -> list[list[float]]:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = requests.post(
                self.url, json={"texts": list(texts)}, headers=headers, timeout=self.timeout
            )
            response.raise_for_status()
            payload = response.json()
        except Exception as exc:
            raise EmbeddingProviderError(str(exc)) from exc
        vectors = payload.get("vectors")
        if not isinstance(vectors, list):
            raise EmbeddingProviderError("response missing 'vectors' list")
        return vectors


def embed(texts: Sequence[str], provider: Embedder) -> list[EmbeddingVector]:
    """Embed each text, enforcing one vector per text and a shared dimension."""
    if not texts:
        raise EmptyInput("no texts to embed")
    raw = provider.embed_texts(texts)
    if len(raw) != len(texts):
        raise EmbeddingProviderError(f"expected {len(texts)} vectors, got {len(raw)}")
    vectors = [vector(values) for values in raw]
    dimensions = {v.dimension for v in vectors}
    if len(dimensions) > 1:
        raise EmbeddingProviderError(f"mixed dimensions from provider: {sorted(dimensions)}")
    return vectors


def centroid(vectors: Sequence[EmbeddingVector]) -> EmbeddingVector:
    """Component-wise arithmetic mean."""
    if not vectors:
        raise EmptyInput("no vectors")
    dimension = vectors[0].dimension
    for v in vectors[1:]:
        if v.dimension != dimension:
            raise DimensionMismatch(f"{v.dimension} != {dimension}")
    k = len(vectors)
    mean = tuple(sum(v.values[i] for v in vectors) / k for i in range(dimension))
    return vector(mean)


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """a.b / (|a||b|), defined as 0 when either norm is 0."""
    if a.dimension != b.dimension:
        raise DimensionMismatch(f"{a.dimension} != {b.dimension}")
    if a.norm == 0.0 or b.norm == 0.0:
        return 0.0
    dot = sum(x * y for x, y in zip(a.values, b.values))
    return dot / (a.norm * b.norm)


def select_representative(candidates: Sequence[str], embedder: Embedder) -> SelectionResult:
    """Choose the candidate whose embedding is closest to the centroid.

    Ties break to the lowest index, so replays are order-stable.
    """
    if not candidates:
        raise EmptyInput("no candidates")
    vectors = embed(candidates, embedder)
    center = centroid(vectors)
    similarities = tuple(cosine(v, center) for v in vectors)
    best = 0
    for i in range(1, len(similarities)):
        if similarities[i] > similarities[best]:
            best = i
    return SelectionResult(
        chosen_index=best,
        chosen_text=candidates[best],
        similarity_to_centroid=similarities[best],
        all_similarities=similarities,
    )
