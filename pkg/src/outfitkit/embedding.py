"""Embedding providers and the vector math used across the pipeline.

Two backends are available: a deterministic offline mock (hash-seeded, so
every run of the pipeline is replayable with no model weights) and a remote
HTTP service. Item features are the plain mean of image and text embeddings;
cosine similarity is the single scoring primitive everything else builds on.
"""

from __future__ import annotations

import base64
import json
import os
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "EmbeddingError",
    "EmbedderConfig",
    "MockEmbedder",
    "RemoteEmbedder",
    "EmbeddingCache",
    "CachingEmbedder",
    "FeatureCache",
    "mock_embed",
    "cosine",
    "item_feature",
    "make_embedder",
    "DEFAULT_DIM",
]

DEFAULT_DIM = 512

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = (1 << 64) - 1


class EmbeddingError(Exception):
    """Raised for unusable embedding inputs or backend failures."""


def _fnv1a_64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _U64
    return h


def _splitmix64(state: int) -> tuple[int, int]:
    """Advance the splitmix64 state once; returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _U64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64
    z = z ^ (z >> 31)
    return state, z


def mock_embed(seed_string: str, dim: int) -> np.ndarray:
    """Deterministic unit vector derived from a string.

    The seed string is hashed with 64-bit FNV-1a; the hash seeds a splitmix64
    stream expanded into `dim` reals uniform in [-1, 1], which are then
    L2-normalized. Pure integer/double arithmetic keeps the output bit-stable
    across platforms.
    """
    if dim < 2:
        raise ValueError(f"mock embedding dim must be >= 2, got {dim}")
    state = _fnv1a_64(seed_string.encode("utf-8"))
    values = np.empty(dim, dtype=np.float64)
    for i in range(dim):
        state, z = _splitmix64(state)
        # Top 53 bits -> [0, 1) exactly representable, then map to [-1, 1).
        values[i] = 2.0 * ((z >> 11) * (2.0**-53)) - 1.0
    norm = float(np.linalg.norm(values))
    return values / norm


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity in [-1, 1], clamped against rounding."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero-norm input")
    value = float(np.dot(a, b)) / (na * nb)
    return max(-1.0, min(1.0, value))


@dataclass
class EmbedderConfig:
    dim: int = DEFAULT_DIM
    backend: str = "mock"  # "mock" | "remote"
    endpoint: Optional[str] = None
    cache_path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.backend not in ("mock", "remote"):
            raise ValueError(f"unknown embedding backend {self.backend!r}")
        if self.backend == "remote" and not self.endpoint:
            raise ValueError("remote embedding backend requires an endpoint")


class MockEmbedder:
    """Offline deterministic embedder.

    Text is keyed by its content, images by their locator string, with no
    kind prefix: identical seed strings produce identical vectors regardless
    of modality.
    """

    backend_id = "mock"

    def __init__(self, dim: int = DEFAULT_DIM):
        self.dim = dim

    def embed_text(self, text: str) -> np.ndarray:
        if not text:
            raise EmbeddingError("cannot embed empty text")
        return mock_embed(text, self.dim)

    def embed_image(self, image_ref: str) -> np.ndarray:
        if not image_ref:
            raise EmbeddingError("cannot embed empty image ref")
        return mock_embed(image_ref, self.dim)


class RemoteEmbedder:
    """HTTP embedder: POST {endpoint} with {"kind", "payload"}.

    Local image paths are read and sent base64-encoded; http(s) locators are
    passed through as-is. The response must match the configured dimension.
    """

    backend_id = "remote"

    def __init__(self, endpoint: str, dim: int = DEFAULT_DIM, timeout: float = 30.0):
        self.endpoint = endpoint
        self.dim = dim
        self.timeout = timeout

    def _post(self, kind: str, payload: str) -> np.ndarray:
        import httpx

        try:
            resp = httpx.post(
                self.endpoint,
                json={"kind": kind, "payload": payload},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            body = resp.json()
        except httpx.HTTPError as exc:
            raise EmbeddingError(f"remote embedder unreachable: {exc}") from exc
        except ValueError as exc:
            raise EmbeddingError(f"remote embedder returned invalid JSON: {exc}") from exc
        dim = body.get("dim")
        values = body.get("values")
        if dim != self.dim or values is None or len(values) != self.dim:
            raise EmbeddingError(
                f"remote embedder dimension mismatch: expected {self.dim}, got {dim}"
            )
        vec = np.asarray(values, dtype=np.float64)
        if not np.all(np.isfinite(vec)):
            raise EmbeddingError("remote embedder returned non-finite values")
        return vec

    def embed_text(self, text: str) -> np.ndarray:
        if not text:
            raise EmbeddingError("cannot embed empty text")
        return self._post("text", text)

    def embed_image(self, image_ref: str) -> np.ndarray:
        if not image_ref:
            raise EmbeddingError("cannot embed empty image ref")
        if image_ref.startswith(("http://", "https://")):
            return self._post("image", image_ref)
        if not os.path.isfile(image_ref):
            raise EmbeddingError(f"image file not found: {image_ref}")
        with open(image_ref, "rb") as fh:
            payload = base64.b64encode(fh.read()).decode("ascii")
        return self._post("image", payload)


class EmbeddingCache:
    """JSONL-backed embedding cache, keyed by (backend-id, kind, seed).

    Single-writer multi-reader; identical keys are last-write-wins so
    re-appending the same entry is harmless.
    """

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()
        self._entries: dict[str, np.ndarray] = {}
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    record = json.loads(line)
                    self._entries[record["key"]] = np.asarray(
                        record["values"], dtype=np.float64
                    )

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: str) -> Optional[np.ndarray]:
        return self._entries.get(key)

    def put(self, key: str, values: np.ndarray) -> None:
        with self._lock:
            self._entries[key] = values
            record = {"key": key, "dim": len(values), "values": [float(v) for v in values]}
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record) + "\n")


class CachingEmbedder:
    """Wraps any embedder with a persistent JSONL cache."""

    def __init__(self, inner, cache: EmbeddingCache):
        self.inner = inner
        self.cache = cache
        self.dim = inner.dim
        self.backend_id = inner.backend_id

    def _lookup(self, kind: str, seed: str, compute) -> np.ndarray:
        key = f"{self.backend_id}:{kind}:{seed}"
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        vec = compute(seed)
        self.cache.put(key, vec)
        return vec

    def embed_text(self, text: str) -> np.ndarray:
        return self._lookup("text", text, self.inner.embed_text)

    def embed_image(self, image_ref: str) -> np.ndarray:
        return self._lookup("image", image_ref, self.inner.embed_image)


def item_feature(item, embedder) -> np.ndarray:
    """Item feature: elementwise mean of image and text embeddings.

    The mean is intentionally not re-normalized; cosine scoring downstream is
    scale-invariant so only the direction matters.
    """
    e_v = embedder.embed_image(item.image_ref)
    e_t = embedder.embed_text(item.description)
    if e_v.shape != e_t.shape:
        raise EmbeddingError(
            f"image/text embedding dims differ for item {item.id}: "
            f"{e_v.shape} vs {e_t.shape}"
        )
    return (e_v + e_t) / 2.0


@dataclass
class FeatureCache:
    """Memoizes per-item features for one (catalog, embedder) pairing."""

    embedder: object
    _features: dict = field(default_factory=dict)

    def feature(self, item) -> np.ndarray:
        cached = self._features.get(item.id)
        if cached is None:
            cached = item_feature(item, self.embedder)
            self._features[item.id] = cached
        return cached


def make_embedder(config: EmbedderConfig):
    """Build the configured embedder, wrapping it with a cache if requested."""
    if config.backend == "mock":
        embedder = MockEmbedder(dim=config.dim)
    else:
        embedder = RemoteEmbedder(endpoint=config.endpoint, dim=config.dim)
    if config.cache_path:
        return CachingEmbedder(embedder, EmbeddingCache(config.cache_path))
    return embedder
