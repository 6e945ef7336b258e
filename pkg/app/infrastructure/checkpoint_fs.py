# app/infrastructure/checkpoint_fs.py
"""
Checkpoints binarios de parámetros (todo little-endian):

    magic     4 bytes  b"SRLC"
    version   uint32   = 1
    n_blocks  uint32
    por bloque:
        name_len  uint16, name (utf-8)
        n_dims    uint32, dims (uint32 x n_dims)   # anchos de capa o forma del vector
        n_values  uint64
        values    float64 x n_values
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import Dict, Tuple

import numpy as np

from app.domain.errors import ConfigError
from app.infrastructure.files import write_bytes

MAGIC = b"SRLC"
VERSION = 1

Block = Tuple[Tuple[int, ...], np.ndarray]


def encode_checkpoint(blocks: Dict[str, Block]) -> bytes:
    out = [MAGIC, struct.pack("<II", VERSION, len(blocks))]
    # orden alfabético: bytes estables
    for name in sorted(blocks):
        dims, values = blocks[name]
        raw = name.encode("utf-8")
        vals = np.ascontiguousarray(values, dtype="<f8").ravel()
        out.append(struct.pack("<H", len(raw)))
        out.append(raw)
        out.append(struct.pack(f"<I{len(dims)}I", len(dims), *[int(d) for d in dims]))
        out.append(struct.pack("<Q", vals.shape[0]))
        out.append(vals.tobytes())
    return b"".join(out)


def decode_checkpoint(data: bytes) -> Dict[str, Block]:
    if data[:4] != MAGIC:
        raise ConfigError("checkpoint: cabecera desconocida")
    try:
        version, n_blocks = struct.unpack_from("<II", data, 4)
        if version != VERSION:
            raise ConfigError(f"checkpoint: versión {version} no soportada")
        off = 12
        blocks: Dict[str, Block] = {}
        for _ in range(n_blocks):
            (name_len,) = struct.unpack_from("<H", data, off); off += 2
            name = data[off:off + name_len].decode("utf-8"); off += name_len
            (n_dims,) = struct.unpack_from("<I", data, off); off += 4
            dims = struct.unpack_from(f"<{n_dims}I", data, off); off += 4 * n_dims
            (n_values,) = struct.unpack_from("<Q", data, off); off += 8
            values = np.frombuffer(data, dtype="<f8", count=n_values, offset=off).astype(np.float64)
            off += 8 * n_values
            blocks[name] = (tuple(int(d) for d in dims), values)
    except (struct.error, ValueError) as exc:
        raise ConfigError("checkpoint truncado") from exc
    return blocks


def save_checkpoint(path: Path, blocks: Dict[str, Block]) -> Path:
    return write_bytes(path, encode_checkpoint(blocks))


def load_checkpoint(path: Path) -> Dict[str, Block]:
    if not path.exists():
        raise ConfigError(f"No existe el checkpoint: {path}")
    return decode_checkpoint(path.read_bytes())
