"""Versioned binary container for named float64 tensors plus a JSON config block.

Layout: magic "TNCK" | uint32 version | uint64 header length | header JSON |
concatenated little-endian float64 payloads. Round-trips are bit-exact.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError, IntegrityError

MAGIC = b"TNCK"
VERSION = 1


def _encode(config: dict, tensors: dict, meta: dict) -> bytes:
    entries = []
    payload = bytearray()
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(np.asarray(arr, dtype="<f8"))
        entries.append({"name": name, "shape": list(arr.shape), "offset": len(payload)})
        payload += arr.tobytes()
    header = json.dumps({
        "config": config,
        "meta": meta,
        "tensors": entries,
    }, sort_keys=True).encode("utf-8")
    return MAGIC + struct.pack("<IQ", VERSION, len(header)) + header + bytes(payload)


def save_container(path, config: dict, tensors: dict, meta: dict | None = None):
    Path(path).write_bytes(_encode(config, tensors, meta or {}))


def load_container(path):
    """Returns (config, tensors, meta); tensor insertion order matches the file."""
    blob = Path(path).read_bytes()
    if len(blob) < 16 or blob[:4] != MAGIC:
        raise FormatError(f"{path}: not a traitnet checkpoint container")
    version, header_len = struct.unpack("<IQ", blob[4:16])
    if version != VERSION:
        raise FormatError(f"{path}: unsupported container version {version}")
    header = json.loads(blob[16:16 + header_len].decode("utf-8"))
    payload = blob[16 + header_len:]
    tensors = {}
    for entry in header["tensors"]:
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        start = entry["offset"]
        if start + count * 8 > len(payload):
            raise IntegrityError(f"{path}: truncated payload for tensor {entry['name']!r}")
        arr = np.frombuffer(payload[start:start + count * 8], dtype="<f8").astype(np.float64)
        tensors[entry["name"]] = arr.reshape(entry["shape"])
    return header["config"], tensors, header["meta"]


def container_hash(config: dict, tensors: dict, meta: dict | None = None) -> str:
    return hashlib.sha256(_encode(config, tensors, meta or {})).hexdigest()


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
