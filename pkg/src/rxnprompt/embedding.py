"""Embedding providers, vector composition and the binary EMBS store.

All providers expose ``dim`` and ``embed(texts) -> list of float32 vectors``.
The file-store provider resolves its inputs as store keys; pipeline code
keys record fields as "{record_id}:{field}" and templates as
"template:{task}:{index}" via the helpers below.
"""

from __future__ import annotations

import enum
import struct
import time
from pathlib import Path

import numpy as np
import requests

from .errors import BackendError, ConfigError, DataError
from .smiles.fingerprint import fnv1a_64
from .smiles.tokens import coarse_tokenize
from .validation import as_float_matrix


class EncodingMethod(enum.Enum):
    """Composition of input/output vectors fed to the clusterer."""

    OUTPUT_ONLY = "output_only"
    OUTPUT_MINUS_INPUT = "output_minus_input"
    CONCAT = "concat"
    ELEMENTWISE_PRODUCT = "elementwise_product"

    @classmethod
    def parse(cls, value: str) -> "EncodingMethod":
        try:
            return cls(value)
        except ValueError:
            raise ConfigError(f"unknown encoding method: {value!r}") from None

    @property
    def tag(self) -> int:
        return _ENCODING_ORDER.index(self)

    def composed_dim(self, dim: int) -> int:
        return 2 * dim if self is EncodingMethod.CONCAT else dim


_ENCODING_ORDER = [
    EncodingMethod.OUTPUT_ONLY,
    EncodingMethod.OUTPUT_MINUS_INPUT,
    EncodingMethod.CONCAT,
    EncodingMethod.ELEMENTWISE_PRODUCT,
]


def encoding_order(method: EncodingMethod) -> int:
    """Stable tie-break order of the four methods."""
    return _ENCODING_ORDER.index(method)


def encoding_from_tag(tag: int) -> EncodingMethod:
    if not 0 <= tag < len(_ENCODING_ORDER):
        raise DataError(f"unknown encoding tag byte: {tag}")
    return _ENCODING_ORDER[tag]


def compose(
    method: EncodingMethod, input_vec: np.ndarray, output_vec: np.ndarray
) -> np.ndarray:
    """Combine one record's input/output embeddings per the chosen method."""
    input_vec = np.asarray(input_vec)
    output_vec = np.asarray(output_vec)
    if input_vec.shape != output_vec.shape:
        raise DataError(
            f"dimension mismatch: input {input_vec.shape} vs output {output_vec.shape}"
        )
    if method is EncodingMethod.OUTPUT_ONLY:
        return output_vec.copy()
    if method is EncodingMethod.OUTPUT_MINUS_INPUT:
        return output_vec - input_vec
    if method is EncodingMethod.CONCAT:
        return np.concatenate([input_vec, output_vec])
    return input_vec * output_vec


def record_key(record_id: str, field: str) -> str:
    return f"{record_id}:{field}"


def template_key(task_value: str, index: int) -> str:
    return f"template:{task_value}:{index}"


def hash_embed(text: str, dim: int) -> np.ndarray:
    """Deterministic signed bag-of-tokens embedding, L2-normalized.

    Tokens come from the SMILES-aware splitter with whitespace fallback;
    each token lands in bucket fnv1a_64 mod dim with the hash's top bit
    choosing the sign. The all-zero vector (empty text or full
    cancellation) is returned unnormalized.
    """
    if dim < 2:
        raise ConfigError(f"hash embedding dim must be >= 2, got {dim}")
    vec = np.zeros(dim, dtype=np.float64)
    for token in coarse_tokenize(text):
        h = fnv1a_64(token.encode("utf-8"))
        sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
        vec[h % dim] += sign
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec.astype(np.float32)


class HashEmbeddingProvider:
    """Self-contained deterministic provider; the offline test substitute."""

    uses_keys = False

    def __init__(self, dim: int = 64):
        if dim < 2:
            raise ConfigError(f"hash embedding dim must be >= 2, got {dim}")
        self.dim = dim

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        return [hash_embed(text, self.dim) for text in texts]


class EmbeddingStore:
    """In-memory key -> vector map with the binary EMBS file format.

    Layout: magic "EMBS", version u32 LE (=1), dim u32 LE, count u64 LE,
    then per entry [key_len u16 LE][key UTF-8][dim x f32 LE]. Entry order
    is preserved so write/read round-trips are byte exact.
    """

    MAGIC = b"EMBS"
    VERSION = 1

    def __init__(self, dim: int):
        if dim <= 0:
            raise ConfigError(f"store dim must be positive, got {dim}")
        self.dim = dim
        self.entries: dict[str, np.ndarray] = {}

    def put(self, key: str, vector: np.ndarray) -> None:
        vec = np.asarray(vector, dtype=np.float32)
        if vec.shape != (self.dim,):
            raise DataError(
                f"vector for key {key!r} has shape {vec.shape}, expected ({self.dim},)"
            )
        self.entries[key] = vec

    def get(self, key: str) -> np.ndarray:
        try:
            return self.entries[key]
        except KeyError:
            raise DataError(f"embedding store is missing key {key!r}") from None

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def save(self, path: str | Path) -> None:
        path = Path(path)
        with path.open("wb") as fh:
            fh.write(self.MAGIC)
            fh.write(struct.pack("<IIQ", self.VERSION, self.dim, len(self.entries)))
            for key, vec in self.entries.items():
                raw = key.encode("utf-8")
                if len(raw) > 0xFFFF:
                    raise DataError(f"key too long for store format: {key[:40]!r}...")
                fh.write(struct.pack("<H", len(raw)))
                fh.write(raw)
                fh.write(vec.astype("<f4").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingStore":
        path = Path(path)
        data = path.read_bytes()
        if data[:4] != cls.MAGIC:
            raise DataError(f"{path}: not an EMBS store (bad magic)")
        version, dim, count = struct.unpack_from("<IIQ", data, 4)
        if version != cls.VERSION:
            raise DataError(f"{path}: unsupported EMBS version {version}")
        store = cls(dim)
        offset = 4 + 16
        for entry in range(count):
            if offset + 2 > len(data):
                raise DataError(f"{path}: truncated store at entry {entry}")
            (key_len,) = struct.unpack_from("<H", data, offset)
            offset += 2
            if offset + key_len + 4 * dim > len(data):
                raise DataError(f"{path}: truncated store at entry {entry}")
            key = data[offset : offset + key_len].decode("utf-8")
            offset += key_len
            vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
            offset += 4 * dim
            store.entries[key] = vec
        if offset != len(data):
            raise DataError(f"{path}: trailing bytes after {count} entries")
        return store


class FileStoreProvider:
    """Read-only provider backed by an EMBS store; inputs are store keys."""

    uses_keys = True

    def __init__(self, store: EmbeddingStore):
        self.store = store
        self.dim = store.dim

    @classmethod
    def open(cls, path: str | Path) -> "FileStoreProvider":
        return cls(EmbeddingStore.load(path))

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        return [self.store.get(key) for key in texts]


class HttpEmbeddingProvider:
    """Client for an embedding service: POST {base}/embed {"texts": [...]}.

    Responses carry {"dim": d, "vectors": [[...], ...]}. Requests are
    batched; transient failures retry with exponential backoff.
    """

    uses_keys = False

    def __init__(
        self,
        base_url: str,
        dim: int | None = None,
        batch_size: int = 64,
        retries: int = 3,
        backoff: float = 0.25,
        timeout: float = 120.0,
    ):
        self.base_url = base_url.rstrip("/")
        self.dim = dim
        self.batch_size = batch_size
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout

    def _post(self, texts: list[str]) -> dict:
        url = f"{self.base_url}/embed"
        delay = self.backoff
        last_error: Exception | None = None
        for attempt in range(self.retries):
            try:
                response = requests.post(url, json={"texts": texts}, timeout=self.timeout)
                if response.status_code != 200:
                    raise BackendError(
                        f"embedding service returned status {response.status_code}"
                    )
                return response.json()
            except (requests.RequestException, ValueError) as exc:
                last_error = exc
                if attempt + 1 < self.retries:
                    time.sleep(delay)
                    delay *= 2
        raise BackendError(f"embedding service unreachable at {url}: {last_error}")

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        vectors: list[np.ndarray] = []
        for start in range(0, len(texts), self.batch_size):
            batch = texts[start : start + self.batch_size]
            payload = self._post(batch)
            dim = int(payload.get("dim", -1))
            if self.dim is None:
                self.dim = dim
            if dim != self.dim:
                raise BackendError(
                    f"embedding dimension mismatch: service sent {dim}, expected {self.dim}"
                )
            rows = payload.get("vectors", [])
            if len(rows) != len(batch):
                raise BackendError(
                    f"embedding count mismatch: sent {len(batch)} texts, got {len(rows)}"
                )
            for row in rows:
                vec = np.asarray(row, dtype=np.float32)
                if vec.shape != (self.dim,):
                    raise BackendError(
                        f"embedding vector of length {vec.shape[0]}, expected {self.dim}"
                    )
                vectors.append(vec)
        return vectors


def embed_record_field(provider, records, field: str) -> np.ndarray:
    """Matrix of embeddings for one field of every record, file order.

    Keyed providers (the file store) receive "{id}:{field}" keys, text
    providers the raw field text.
    """
    if getattr(provider, "uses_keys", False):
        texts = [record_key(rec.id, field) for rec in records]
    else:
        texts = [getattr(rec, field) for rec in records]
    return _embedding_matrix(provider, texts, f"{field} embeddings")


def embed_templates(provider, task_value: str, templates: list[str]) -> np.ndarray:
    """Matrix of embeddings for one task's instruction templates."""
    if getattr(provider, "uses_keys", False):
        texts = [template_key(task_value, i) for i in range(len(templates))]
    else:
        texts = list(templates)
    return _embedding_matrix(provider, texts, "template embeddings")


def _embedding_matrix(provider, texts: list[str], what: str) -> np.ndarray:
    vectors = provider.embed(texts)
    return as_float_matrix(np.stack(vectors), what)
