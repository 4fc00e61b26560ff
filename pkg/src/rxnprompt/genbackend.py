"""Clients for the text-generation service behind the prediction stage."""

from __future__ import annotations

from dataclasses import dataclass

import requests

from .errors import BackendError, DataError
from .prompting import INPUT_TAG


@dataclass
class GenerationRequest:
    prompts: list[str]
    max_new_tokens: int = 512
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if not self.prompts:
            raise DataError("generation request needs at least one prompt")
        if self.max_new_tokens <= 0:
            raise DataError(f"max_new_tokens must be positive, got {self.max_new_tokens}")
        if self.temperature < 0:
            raise DataError(f"temperature must be non-negative, got {self.temperature}")


class EchoBackend:
    """Offline test double: echoes the text after the last input marker."""

    def generate(self, request: GenerationRequest) -> list[str]:
        outputs = []
        for prompt in request.prompts:
            _, found, tail = prompt.rpartition(INPUT_TAG)
            outputs.append(tail if found else "")
        return outputs


class HttpGenerationBackend:
    """POST {base}/generate {"prompts": [...], ...} -> {"outputs": [...]}."""

    def __init__(self, base_url: str, timeout: float = 120.0, batch_size: int = 64):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.batch_size = batch_size

    def generate(self, request: GenerationRequest) -> list[str]:
        outputs: list[str] = []
        url = f"{self.base_url}/generate"
        for start in range(0, len(request.prompts), self.batch_size):
            batch = request.prompts[start : start + self.batch_size]
            try:
                response = requests.post(
                    url,
                    json={
                        "prompts": batch,
                        "max_new_tokens": request.max_new_tokens,
                        "temperature": request.temperature,
                    },
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                raise BackendError(f"generation service unreachable at {url}: {exc}") from None
            if response.status_code != 200:
                raise BackendError(
                    f"generation service returned status {response.status_code}"
                )
            try:
                rows = response.json().get("outputs", [])
            except ValueError as exc:
                raise BackendError(f"generation service sent bad JSON: {exc}") from None
            if len(rows) != len(batch):
                raise BackendError(
                    f"generation count mismatch: sent {len(batch)} prompts, "
                    f"got {len(rows)} outputs"
                )
            outputs.extend(str(row) for row in rows)
        return outputs
