"""Binary checkpoint container.

Byte layout (all integers little-endian)::

    offset 0   8 bytes   magic b"VRANCKPT"
    offset 8   uint32    format version (currently 1)
    offset 12  uint32    header length L in bytes
    offset 16  L bytes   UTF-8 JSON header
    offset 16+L          payload: tensors back to back, each as raw '<f8' in C order

The header is ``{"tensors": [{"name", "shape", "offset", "nbytes"}, ...],
"meta": {...}}`` with ``offset`` counted from the start of the payload.
JSON keys are sorted so identical contents produce identical bytes.
"""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from ..errors import CheckpointFormatError, MissingCheckpoint

MAGIC = b"VRANCKPT"
VERSION = 1
_PREFIX = struct.Struct("<8sII")


def encode(tensors: dict, meta: dict | None = None) -> bytes:
    entries, chunks, offset = [], [], 0
    for name, arr in tensors.items():
        data = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        entries.append({"name": name, "shape": list(np.shape(arr)), "offset": offset, "nbytes": len(data)})
        chunks.append(data)
        offset += len(data)
    header = json.dumps({"tensors": entries, "meta": meta or {}}, sort_keys=True,
                        separators=(",", ":")).encode()
    return _PREFIX.pack(MAGIC, VERSION, len(header)) + header + b"".join(chunks)


def decode(blob: bytes) -> tuple[dict, dict]:
    if len(blob) < _PREFIX.size:
        raise CheckpointFormatError("file too short for a checkpoint header")
    magic, version, hlen = _PREFIX.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointFormatError(f"unsupported checkpoint version {version}")
    start = _PREFIX.size + hlen
    if len(blob) < start:
        raise CheckpointFormatError("truncated header")
    try:
        header = json.loads(blob[_PREFIX.size:start].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointFormatError(f"unreadable header: {exc}") from exc
    payload = memoryview(blob)[start:]
    tensors = {}
    for e in header["tensors"]:
        shape = tuple(e["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        if e["nbytes"] != 8 * count or e["offset"] + e["nbytes"] > len(payload):
            raise CheckpointFormatError(f"tensor {e['name']!r} does not fit the payload")
        arr = np.frombuffer(payload, dtype="<f8", count=count, offset=e["offset"])
        tensors[e["name"]] = arr.astype(np.float64).reshape(shape)
    return tensors, header.get("meta", {})


def save(path, tensors: dict, meta: dict | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode(tensors, meta))


def load(path) -> tuple[dict, dict]:
    path = Path(path)
    if not path.is_file():
        raise MissingCheckpoint(f"no checkpoint at {path}")
    return decode(path.read_bytes())


def digest(tensors: dict) -> str:
    """SHA-256 over names, shapes and raw values; used to tell models apart."""
    h = hashlib.sha256()
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f8")
        h.update(name.encode())
        h.update(repr(arr.shape).encode())
        h.update(arr.tobytes())
    return h.hexdigest()
