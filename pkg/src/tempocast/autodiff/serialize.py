"""Flat binary parameter files.

Layout: the 6-byte magic ``TCAST1`` followed by one record per parameter:
``u32 name_len | name (utf-8) | u32 rank | u32 dims[rank] | f64 data[prod(dims)]``,
all little-endian, data row-major. Records run to end of file.
"""

from __future__ import annotations

import hashlib
import io
import struct
from pathlib import Path

import numpy as np

from tempocast.autodiff.nn import ParameterSet
from tempocast.errors import ContractError

MAGIC = b"TCAST1"


def dumps(params: ParameterSet) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    for name, t in params:
        raw = name.encode("utf-8")
        buf.write(struct.pack("<I", len(raw)))
        buf.write(raw)
        buf.write(struct.pack("<I", t.ndim))
        buf.write(struct.pack(f"<{t.ndim}I", *t.shape))
        buf.write(np.ascontiguousarray(t.data, dtype="<f8").tobytes())
    return buf.getvalue()


def loads(blob: bytes) -> dict[str, np.ndarray]:
    if blob[: len(MAGIC)] != MAGIC:
        raise ContractError("not a tempocast parameter file (bad magic)")
    pos = len(MAGIC)
    out: dict[str, np.ndarray] = {}
    try:
        while pos < len(blob):
            (nlen,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            name = blob[pos : pos + nlen].decode("utf-8")
            pos += nlen
            (rank,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            dims = struct.unpack_from(f"<{rank}I", blob, pos)
            pos += 4 * rank
            count = int(np.prod(dims)) if rank else 1
            arr = np.frombuffer(blob, dtype="<f8", count=count, offset=pos).astype(np.float64)
            pos += 8 * count
            out[name] = arr.reshape(dims)
    except (struct.error, ValueError) as exc:
        raise ContractError(f"truncated parameter file at byte {pos}") from exc
    return out


def save_parameters(params: ParameterSet, path) -> None:
    Path(path).write_bytes(dumps(params))


def load_parameters(params: ParameterSet, path) -> None:
    """Copy stored arrays into ``params`` in place; names and shapes must match."""
    stored = loads(Path(path).read_bytes())
    missing = [n for n in params.names() if n not in stored]
    extra = [n for n in stored if n not in params.names()]
    if missing or extra:
        raise ContractError(f"parameter names disagree: missing={missing[:5]} unexpected={extra[:5]}")
    for name, t in params:
        if stored[name].shape != t.shape:
            raise ContractError(f"parameter {name!r}: stored shape {stored[name].shape} != {t.shape}")
        t.data[...] = stored[name]


def checksum(params: ParameterSet) -> str:
    return hashlib.sha256(dumps(params)).hexdigest()
