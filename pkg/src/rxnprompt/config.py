"""Run configuration: flat JSON file, flag overrides, env fallbacks."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .elicitation import SweepPolicy
from .embedding import (
    EncodingMethod,
    FileStoreProvider,
    HashEmbeddingProvider,
    HttpEmbeddingProvider,
)
from .errors import ConfigError
from .genbackend import EchoBackend, HttpGenerationBackend

EMBED_URL_ENV = "RXN_EMBED_URL"
GEN_URL_ENV = "RXN_GEN_URL"

_ALL_ENCODINGS = [method.value for method in EncodingMethod]


@dataclass
class RunConfig:
    provider: str = "hash:64"
    seed: int = 0
    n_min: int = 3
    n_max: int = 12
    encodings: list[str] = field(default_factory=lambda: list(_ALL_ENCODINGS))
    accuracy_floor: float = 0.70
    epochs: int = 30
    lr: float = 0.05
    batch_size: int = 128
    l2: float = 0.0
    rounds_max: int = 3
    sweep_rounds: int = 1
    min_gain: float = 0.005
    normalize: bool = False
    train: str | None = None
    valid: str | None = None
    test: str | None = None
    templates: str | None = None
    out_dir: str = "out"
    backend: str | None = None
    max_new_tokens: int = 512
    temperature: float = 0.0
    static_template: bool = False

    def check(self) -> None:
        if not (2 <= self.n_min <= self.n_max <= 64):
            raise ConfigError(
                f"n range must satisfy 2 <= min <= max <= 64, got ({self.n_min}, {self.n_max})"
            )
        for name in self.encodings:
            EncodingMethod.parse(name)
        if not self.encodings:
            raise ConfigError("encodings must not be empty")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")

    def encoding_methods(self) -> list[EncodingMethod]:
        return [EncodingMethod.parse(name) for name in self.encodings]

    def policy(self) -> SweepPolicy:
        """Sweep policy; rounds come from sweep_rounds, not rounds_max."""
        return SweepPolicy(
            rounds_max=self.sweep_rounds,
            min_gain=self.min_gain,
            accuracy_floor=self.accuracy_floor,
            epochs=self.epochs,
            lr=self.lr,
            batch_size=self.batch_size,
            l2=self.l2,
            normalize=self.normalize,
        )


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from an optional JSON file plus flag overrides.

    Flags win over the file; the file wins over environment defaults
    (which only supply service URLs).
    """
    values: dict = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: malformed config: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        for key, value in raw.items():
            if key not in _FIELD_TYPES:
                raise ConfigError(f"{path}: unknown config key {key!r}")
            values[key] = value
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    config = RunConfig(**values)
    config.check()
    return config


def require_path(value: str | None, what: str) -> Path:
    if value is None:
        raise ConfigError(f"missing required path for {what}")
    path = Path(value)
    if not path.exists():
        raise ConfigError(f"{what} path does not exist: {path}")
    return path


def make_provider(config: RunConfig):
    """Provider factory for the 'hash:<dim>' / 'file:<path>' / http forms."""
    spec = config.provider
    if spec.startswith("hash:"):
        return HashEmbeddingProvider(dim=int(spec.split(":", 1)[1]))
    if spec.startswith("file:"):
        path = require_path(spec.split(":", 1)[1], "embedding store")
        return FileStoreProvider.open(path)
    if spec.startswith(("http://", "https://")):
        return HttpEmbeddingProvider(spec)
    if spec == "http":
        url = os.environ.get(EMBED_URL_ENV)
        if not url:
            raise ConfigError(f"provider 'http' needs {EMBED_URL_ENV} set")
        return HttpEmbeddingProvider(url)
    raise ConfigError(f"unknown provider spec: {spec!r}")


def make_backend(config: RunConfig):
    """Generation backend or None when no backend is configured."""
    spec = config.backend
    if spec is None:
        url = os.environ.get(GEN_URL_ENV)
        if url:
            return HttpGenerationBackend(url, timeout=120.0)
        return None
    if spec == "echo":
        return EchoBackend()
    if spec.startswith(("http://", "https://")):
        return HttpGenerationBackend(spec, timeout=120.0)
    if spec == "http":
        url = os.environ.get(GEN_URL_ENV)
        if not url:
            raise ConfigError(f"backend 'http' needs {GEN_URL_ENV} set")
        return HttpGenerationBackend(url, timeout=120.0)
    raise ConfigError(f"unknown backend spec: {spec!r}")
