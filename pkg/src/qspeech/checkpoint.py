"""Binary checkpoint files with integrity checking.

Layout: magic, format version, sha256 of the remainder, a
length-prefixed JSON header (epoch, config text and hash, symbols, rng
state, array manifest), then the raw little-endian float64 buffers in
manifest order. The JSON is dumped with sorted keys and fixed separators,
so save -> load -> save is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import DataError

__all__ = ["save_checkpoint", "load_checkpoint"]

MAGIC = b"QCKPT\n"
VERSION = 1


def save_checkpoint(path: str | Path, *, params: dict[str, np.ndarray],
                    optimizer: dict, epoch: int, phase: str,
                    config_text: str, config_hash: str,
                    symbols: list[str], rng_state: dict,
                    best_metric: float | None = None) -> None:
    arrays: list[tuple[str, np.ndarray]] = []
    for name in sorted(params):
        arrays.append((f"param:{name}", params[name]))
    opt_meta = {k: v for k, v in optimizer.items() if k != "buffers"}
    for name in sorted(optimizer.get("buffers", {})):
        arrays.append((f"opt:{name}", optimizer["buffers"][name]))

    header = {
        "epoch": epoch,
        "phase": phase,
        "config_text": config_text,
        "config_hash": config_hash,
        "symbols": symbols,
        "rng_state": rng_state,
        "optimizer": opt_meta,
        "best_metric": best_metric,
        "arrays": [{"name": n, "shape": list(a.shape)} for n, a in arrays],
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = struct.pack("<I", len(header_bytes)) + header_bytes
    for _, a in arrays:
        body += np.ascontiguousarray(a, dtype="<f8").tobytes()
    digest = hashlib.sha256(body).digest()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(digest)
        f.write(body)


def load_checkpoint(path: str | Path) -> dict:
    """Read and verify a checkpoint; returns header fields plus ``params``
    and ``opt_buffers`` dicts of float64 arrays."""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise DataError(f"{path}: cannot read checkpoint ({e})") from None
    if raw[:len(MAGIC)] != MAGIC:
        raise DataError(f"{path}: bad magic, not a checkpoint")
    off = len(MAGIC)
    (version,) = struct.unpack_from("<I", raw, off)
    off += 4
    if version != VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")
    digest = raw[off:off + 32]
    off += 32
    body = raw[off:]
    if hashlib.sha256(body).digest() != digest:
        raise DataError(f"{path}: integrity check failed (corrupted checkpoint)")
    (hlen,) = struct.unpack_from("<I", body, 0)
    header = json.loads(body[4:4 + hlen].decode("utf-8"))
    pos = 4 + hlen
    params: dict[str, np.ndarray] = {}
    opt_buffers: dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(body, dtype="<f8", count=count, offset=pos).reshape(shape)
        pos += 8 * count
        name = entry["name"]
        if name.startswith("param:"):
            params[name[len("param:"):]] = arr.astype(np.float64)
        elif name.startswith("opt:"):
            opt_buffers[name[len("opt:"):]] = arr.astype(np.float64)
        else:
            raise DataError(f"{path}: unknown array kind {name!r}")
    if pos != len(body):
        raise DataError(f"{path}: payload size mismatch")
    out = {k: header[k] for k in ("epoch", "phase", "config_text", "config_hash",
                                  "symbols", "rng_state", "optimizer", "best_metric")}
    out["params"] = params
    out["opt_buffers"] = opt_buffers
    return out
