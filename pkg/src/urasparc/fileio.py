"""Binary codebook and received-block files.

Codebook file (little-endian)::

    16 bytes  magic b"URACODEBOOK" + NUL padding to 12 bytes, then uint32 version
    4 x u64   D, N, kind, seed
    D*N*2 f64 row-major entries, interleaved (re, im)

Block file (little-endian)::

    16 bytes  magic b"URABLOCK" + NUL padding to 12 bytes, then uint32 version
    u64 D, u64 M, f64 sigma2
    D*M*2 f64 row-major entries, interleaved (re, im)
"""
from __future__ import annotations

import struct

import numpy as np

from .channel import ReceivedBlock
from .codebook import Codebook, CodebookKind
from .errors import FormatError

VERSION = 1
_CB_MAGIC = b"URACODEBOOK".ljust(12, b"\0")
_BLK_MAGIC = b"URABLOCK".ljust(12, b"\0")


def _header(magic):
    return magic + struct.pack("<I", VERSION)


def _check_header(buf, magic, what):
    if len(buf) < 16 or buf[:12] != magic:
        raise FormatError(f"not a {what} file (bad magic)")
    (version,) = struct.unpack("<I", buf[12:16])
    if version != VERSION:
        raise FormatError(f"unsupported {what} file version {version}")


def _interleave(x) -> bytes:
    x = np.ascontiguousarray(x, dtype=np.complex128)
    return x.astype("<c16").tobytes(order="C")


def _deinterleave(buf, rows, cols, what):
    need = rows * cols * 16
    if len(buf) != need:
        raise FormatError(f"{what} payload has {len(buf)} bytes, expected {need}")
    return np.frombuffer(buf, dtype="<c16").reshape(rows, cols).astype(np.complex128)


def write_codebook(path, cb: Codebook):
    with open(path, "wb") as f:
        f.write(_header(_CB_MAGIC))
        f.write(struct.pack("<4Q", cb.num_rows, cb.num_cols, int(cb.kind), cb.seed & (2**64 - 1)))
        f.write(_interleave(cb.entries))


def read_codebook(path) -> Codebook:
    with open(path, "rb") as f:
        buf = f.read()
    _check_header(buf, _CB_MAGIC, "codebook")
    if len(buf) < 48:
        raise FormatError("truncated codebook header")
    D, N, kind, seed = struct.unpack("<4Q", buf[16:48])
    try:
        kind = CodebookKind(kind)
    except ValueError:
        raise FormatError(f"unknown codebook kind code {kind}") from None
    return Codebook(_deinterleave(buf[48:], D, N, "codebook"), kind, seed)


def write_block(path, blk: ReceivedBlock):
    with open(path, "wb") as f:
        f.write(_header(_BLK_MAGIC))
        f.write(struct.pack("<QQd", blk.D, blk.M, blk.sigma2))
        f.write(_interleave(blk.Y))


def read_block(path) -> ReceivedBlock:
    with open(path, "rb") as f:
        buf = f.read()
    _check_header(buf, _BLK_MAGIC, "block")
    if len(buf) < 40:
        raise FormatError("truncated block header")
    D, M, sigma2 = struct.unpack("<QQd", buf[16:40])
    return ReceivedBlock(_deinterleave(buf[40:], D, M, "block"), sigma2)
