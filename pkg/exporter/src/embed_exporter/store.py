"""Binary EMBS store writer/reader.

Layout: magic "EMBS", version u32 LE (=1), dim u32 LE, count u64 LE, then
per entry [key_len u16 LE][key UTF-8][dim x f32 LE]. Entry order is
preserved, so rewriting parsed content reproduces the file bit for bit.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"EMBS"
VERSION = 1


class StoreFormatError(ValueError):
    pass


def write_store(path: str | Path, dim: int, entries: dict[str, np.ndarray]) -> None:
    """Atomically write the store (temp file in place, then rename)."""
    path = Path(path)
    payload = bytearray()
    payload += MAGIC
    payload += struct.pack("<IIQ", VERSION, dim, len(entries))
    for key, vec in entries.items():
        vec = np.asarray(vec, dtype="<f4")
        if vec.shape != (dim,):
            raise StoreFormatError(f"vector for {key!r} has shape {vec.shape}, want ({dim},)")
        raw = key.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise StoreFormatError(f"key too long: {key[:40]!r}...")
        payload += struct.pack("<H", len(raw))
        payload += raw
        payload += vec.tobytes()
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def read_store(path: str | Path) -> tuple[int, dict[str, np.ndarray]]:
    """Return (dim, entries) preserving on-disk entry order."""
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise StoreFormatError(f"{path}: bad magic")
    version, dim, count = struct.unpack_from("<IIQ", data, 4)
    if version != VERSION:
        raise StoreFormatError(f"{path}: unsupported version {version}")
    entries: dict[str, np.ndarray] = {}
    offset = 20
    for i in range(count):
        if offset + 2 > len(data):
            raise StoreFormatError(f"{path}: truncated at entry {i}")
        (key_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + key_len + 4 * dim > len(data):
            raise StoreFormatError(f"{path}: truncated at entry {i}")
        key = data[offset : offset + key_len].decode("utf-8")
        offset += key_len
        entries[key] = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += 4 * dim
    if offset != len(data):
        raise StoreFormatError(f"{path}: {len(data) - offset} trailing bytes")
    return dim, entries
