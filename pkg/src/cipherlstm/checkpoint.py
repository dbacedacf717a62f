"""Binary checkpoint files.

Layout::

    b"CRNN" | version (1 byte) | header length (uint32 LE) | UTF-8 JSON header | payload

The header lists tensors in payload order with their shapes and CRC32; the
payload is each tensor as little-endian float32, back to back.
"""

from __future__ import annotations

import json
import os
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .lstm import AdamState, ModelParams

MAGIC = b"CRNN"
VERSION = 1
_PARAM_NAMES = ("W", "b_gate", "V", "b_out")


class CheckpointError(ValueError):
    pass


class CheckpointVersionError(CheckpointError):
    """Bad magic bytes or unsupported format version."""


class CheckpointIntegrityError(CheckpointError):
    """Truncated file or tensor checksum mismatch."""


@dataclass
class Checkpoint:
    config: dict
    params: ModelParams
    adam: AdamState
    step: int = 0
    rng_cursor: int = 0
    # run bookkeeping needed to resume bit-identically (interval accumulators, clock)
    state: dict = field(default_factory=dict)

    def tensors(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for prefix, group in (("", self.params), ("adam.m.", self.adam.m), ("adam.v.", self.adam.v)):
            out.extend((prefix + name, getattr(group, name)) for name in _PARAM_NAMES)
        return out


def to_bytes(ckpt: Checkpoint) -> bytes:
    entries, payloads = [], []
    for name, t in ckpt.tensors():
        raw = np.ascontiguousarray(t, dtype="<f4").tobytes()
        entries.append({"name": name, "shape": list(t.shape), "crc32": zlib.crc32(raw)})
        payloads.append(raw)
    header = {
        "config": ckpt.config,
        "tensors": entries,
        "step": ckpt.step,
        "rng_cursor": ckpt.rng_cursor,
        "adam_t": ckpt.adam.t,
        "state": ckpt.state,
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + bytes([VERSION]) + struct.pack("<I", len(hbytes)) + hbytes + b"".join(payloads)


def from_bytes(data: bytes, dtype=np.float32) -> Checkpoint:
    if len(data) < 9 or data[:4] != MAGIC:
        raise CheckpointVersionError("not a checkpoint file (bad magic bytes)")
    if data[4] != VERSION:
        raise CheckpointVersionError(f"unsupported checkpoint version {data[4]} (expected {VERSION})")
    (hlen,) = struct.unpack("<I", data[5:9])
    if 9 + hlen > len(data):
        raise CheckpointIntegrityError("truncated checkpoint header")
    try:
        header = json.loads(data[9 : 9 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointIntegrityError(f"corrupt checkpoint header: {exc}") from None

    offset = 9 + hlen
    tensors = {}
    for entry in header["tensors"]:
        count = int(np.prod(entry["shape"], dtype=np.int64))
        raw = data[offset : offset + 4 * count]
        if len(raw) != 4 * count:
            raise CheckpointIntegrityError(f"truncated payload for tensor {entry['name']}")
        if zlib.crc32(raw) != entry["crc32"]:
            raise CheckpointIntegrityError(f"checksum mismatch for tensor {entry['name']}")
        tensors[entry["name"]] = np.frombuffer(raw, dtype="<f4").reshape(entry["shape"]).astype(dtype)
        offset += 4 * count
    if offset != len(data):
        raise CheckpointIntegrityError("trailing bytes after last tensor")

    def group(prefix):
        return ModelParams(*(tensors[prefix + name] for name in _PARAM_NAMES))

    try:
        params, m, v = group(""), group("adam.m."), group("adam.v.")
    except KeyError as exc:
        raise CheckpointIntegrityError(f"missing tensor {exc.args[0]}") from None
    return Checkpoint(
        config=header["config"],
        params=params,
        adam=AdamState(m, v, header["adam_t"]),
        step=header["step"],
        rng_cursor=header["rng_cursor"],
        state=header.get("state", {}),
    )


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(to_bytes(ckpt))
    os.replace(tmp, path)


def load_checkpoint(path, dtype=np.float32) -> Checkpoint:
    return from_bytes(Path(path).read_bytes(), dtype=dtype)
