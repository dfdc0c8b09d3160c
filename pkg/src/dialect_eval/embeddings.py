"""Embedding providers: deterministic synthetic vectors and a gateway-backed
provider, both behind a content-hash disk cache.

The synthetic provider exists so indexing, retrieval, and the whole test
suite run offline and reproducibly; identical text always maps to an
identical vector.
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .judging import GatewayClient, GatewayRequest

logger = logging.getLogger(__name__)


class EmbeddingProvider(Protocol):
    dim: int

    def embed(self, texts: Sequence[str]) -> list[list[float]]: ...


class SyntheticEmbedding:
    """Deterministic unit vectors seeded from a content hash."""

    def __init__(self, dim: int = 32) -> None:
        self.dim = dim

    def _one(self, text: str) -> list[float]:
        digest = hashlib.sha256(text.encode("utf-8")).digest()
        seed = int.from_bytes(digest[:8], "big")
        rng = np.random.default_rng(seed)
        vec = rng.standard_normal(self.dim)
        vec /= np.linalg.norm(vec)
        return [float(x) for x in vec]

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        return [self._one(text) for text in texts]


class GatewayEmbedding:
    """Embedding requests transported over the model gateway.

    The request prompt is a JSON array of texts; the response text must be
    a JSON array of equal-dimension vectors, one per input.
    """

    def __init__(self, client: GatewayClient, model_name: str, dim: int, batch_size: int = 32) -> None:
        self.client = client
        self.model_name = model_name
        self.dim = dim
        self.batch_size = batch_size

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        vectors: list[list[float]] = []
        for start in range(0, len(texts), self.batch_size):
            batch = list(texts[start : start + self.batch_size])
            req = GatewayRequest(
                model_name=self.model_name,
                prompt=json.dumps(batch, ensure_ascii=False),
                response_format_hint="json",
            )
            raw = self.client.call(req)
            parsed = json.loads(raw)
            if not isinstance(parsed, list) or len(parsed) != len(batch):
                raise ValueError(
                    f"embedding gateway returned {len(parsed) if isinstance(parsed, list) else 'non-list'}"
                    f" vectors for {len(batch)} texts"
                )
            for vec in parsed:
                if len(vec) != self.dim:
                    raise ValueError(f"embedding dim {len(vec)} != expected {self.dim}")
                vectors.append([float(x) for x in vec])
        return vectors


class CachedEmbedding:
    """Disk cache in front of any provider, keyed by content hash.

    One JSON file per (namespace, text) hash, fanned out over two-hex
    subdirectories. Corrupt entries are re-fetched with a warning.
    """

    def __init__(self, inner: EmbeddingProvider, cache_dir: str | Path, namespace: str = "") -> None:
        self.inner = inner
        self.dim = inner.dim
        self.cache_dir = Path(cache_dir)
        self.namespace = namespace
        self.fetches = 0  # texts actually sent to the inner provider

    def _path(self, text: str) -> Path:
        digest = hashlib.sha256(f"{self.namespace}\x1f{self.dim}\x1f{text}".encode("utf-8")).hexdigest()
        return self.cache_dir / digest[:2] / f"{digest}.json"

    def _read(self, path: Path) -> list[float] | None:
        if not path.exists():
            return None
        try:
            vec = json.loads(path.read_text("utf-8"))
            if not isinstance(vec, list) or len(vec) != self.dim:
                raise ValueError("wrong shape")
            return [float(x) for x in vec]
        except (ValueError, json.JSONDecodeError):
            logger.warning("corrupt embedding cache entry %s; re-fetching", path.name)
            return None

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        results: list[list[float] | None] = []
        missing: list[tuple[int, str]] = []
        for idx, text in enumerate(texts):
            cached = self._read(self._path(text))
            results.append(cached)
            if cached is None:
                missing.append((idx, text))
        if missing:
            fetched = self.inner.embed([text for _, text in missing])
            self.fetches += len(missing)
            for (idx, text), vec in zip(missing, fetched):
                path = self._path(text)
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(json.dumps(vec), "utf-8")
                results[idx] = vec
        return [vec for vec in results if vec is not None]
