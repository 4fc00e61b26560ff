"""Text encoders: a deterministic hash fallback plus HF transformer models."""

from __future__ import annotations

import numpy as np


class EncoderError(RuntimeError):
    pass


class HashEncoder:
    """Signed bag-of-words via 64-bit FNV-1a; deterministic, dependency-free.

    Development/test substitute so the pipeline runs without model weights.
    """

    def __init__(self, dim: int):
        if dim < 2:
            raise EncoderError(f"hash encoder dim must be >= 2, got {dim}")
        self.dim = dim

    @staticmethod
    def _fnv(data: bytes) -> int:
        h = 0xCBF29CE484222325
        for byte in data:
            h = ((h ^ byte) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
        return h

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float32)
        for row, text in enumerate(texts):
            for token in text.split():
                h = self._fnv(token.encode("utf-8"))
                sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
                out[row, h % self.dim] += sign
            norm = float(np.linalg.norm(out[row]))
            if norm > 0:
                out[row] /= norm
        return out


class TransformerEncoder:
    """Frozen Hugging Face encoder with mean or first-token pooling."""

    def __init__(self, name_or_path: str, pooling: str = "mean", max_length: int = 256):
        if pooling not in ("mean", "first-token"):
            raise EncoderError(f"unknown pooling {pooling!r}")
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise EncoderError(f"transformers/torch not installed: {exc}") from None
        self._torch = torch
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(name_or_path)
            self.model = AutoModel.from_pretrained(name_or_path)
        except Exception as exc:
            raise EncoderError(f"cannot load encoder {name_or_path!r}: {exc}") from None
        self.model.eval()
        self.pooling = pooling
        self.max_length = max_length
        self.dim = int(self.model.config.hidden_size)

    def encode(self, texts: list[str]) -> np.ndarray:
        torch = self._torch
        batch = self.tokenizer(
            texts,
            padding=True,
            truncation=True,
            max_length=self.max_length,
            return_tensors="pt",
        )
        with torch.no_grad():
            output = self.model(**batch)
        hidden = output.last_hidden_state
        if self.pooling == "first-token":
            pooled = hidden[:, 0, :]
        else:
            mask = batch["attention_mask"].unsqueeze(-1).to(hidden.dtype)
            pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1e-9)
        return pooled.cpu().numpy().astype(np.float32)


def build_encoder(name: str, pooling: str = "mean"):
    """'hash:<dim>' -> HashEncoder, anything else -> HF model name or path."""
    if name.startswith("hash:"):
        return HashEncoder(dim=int(name.split(":", 1)[1]))
    return TransformerEncoder(name, pooling=pooling)
