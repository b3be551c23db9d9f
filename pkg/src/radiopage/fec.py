"""Concatenated integrity layering: CRC32 -> Reed-Solomon -> convolutional.

Transmit: append CRC32 (big-endian), Reed-Solomon encode in shortened
blocks of at most 223 data bytes, then convolutionally encode the whole
RS stream with an 8-bit tail flush.  Receive reverses the order and only
releases data whose CRC verifies; anything else is a lost frame from the
caller's point of view.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import convcode, rs

CRC_LEN = 4


@dataclass(frozen=True)
class CodecConfig:
    crc_poly: int = 0x04C11DB7          # IEEE 802.3, reflected convention
    conv_rate: tuple[int, int] = (1, 2)
    conv_constraint: int = convcode.CONSTRAINT
    conv_polys: tuple[int, int] = (convcode.G0, convcode.G1)
    rs_params: tuple[int, int] = (rs.BLOCK_N, rs.BLOCK_K)

    @property
    def rs_data_per_block(self) -> int:
        return self.rs_params[1]

    @property
    def rs_parity(self) -> int:
        return self.rs_params[0] - self.rs_params[1]


DEFAULT_CONFIG = CodecConfig()


@dataclass
class EncodedBlock:
    data: bytes
    plaintext_len: int
    trace: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.data)


@dataclass
class DecodeResult:
    data: bytes
    conv_corrected: int
    rs_corrected: int


def crc32(data: bytes) -> int:
    """Standard CRC-32 (reflected 0x04C11DB7, init/xorout 0xFFFFFFFF)."""
    return zlib.crc32(data) & 0xFFFFFFFF


def _rs_block_sizes(msg_len: int, cfg: CodecConfig) -> list[int]:
    k = cfg.rs_data_per_block
    nblocks = math.ceil(msg_len / k)
    sizes = [k] * (nblocks - 1)
    sizes.append(msg_len - k * (nblocks - 1))
    return sizes


def coded_len(plaintext_len: int, cfg: CodecConfig = DEFAULT_CONFIG) -> int:
    """Deterministic coded size for a given plaintext size."""
    msg = plaintext_len + CRC_LEN
    nblocks = math.ceil(msg / cfg.rs_data_per_block)
    rs_bytes = msg + cfg.rs_parity * nblocks
    return 2 * (rs_bytes + 1)  # rate 1/2 plus one byte of tail


def plaintext_len_for_coded(coded: int, cfg: CodecConfig = DEFAULT_CONFIG) -> int:
    """Invert coded_len; raises ValueError if no plaintext length matches."""
    for nblocks in range(1, 300):
        p = coded // 2 - 1 - cfg.rs_parity * nblocks - CRC_LEN
        if p >= 1 and math.ceil((p + CRC_LEN) / cfg.rs_data_per_block) == nblocks \
                and coded_len(p, cfg) == coded:
            return p
    raise ValueError(f"no plaintext length yields coded size {coded}")


def encode_batch(blocks: np.ndarray, cfg: CodecConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Encode (B, P) equal-length plaintext rows -> (B, coded_len(P)) bytes."""
    blocks = np.atleast_2d(np.asarray(blocks, dtype=np.uint8))
    nrows, plen = blocks.shape
    if plen == 0:
        raise ValueError("empty plaintext")
    crcs = np.empty((nrows, CRC_LEN), dtype=np.uint8)
    for i in range(nrows):
        crcs[i] = np.frombuffer(crc32(blocks[i].tobytes()).to_bytes(4, "big"), np.uint8)
    msg = np.concatenate([blocks, crcs], axis=1)

    parts = []
    off = 0
    for size in _rs_block_sizes(msg.shape[1], cfg):
        parts.append(rs.encode_batch(msg[:, off:off + size]))
        off += size
    rs_stream = np.concatenate(parts, axis=1)

    bits = np.unpackbits(rs_stream, axis=1)
    coded_bits = convcode.encode_batch(bits)
    return np.packbits(coded_bits, axis=1)


def encode(data: bytes, cfg: CodecConfig = DEFAULT_CONFIG) -> EncodedBlock:
    if not data:
        raise ValueError("empty plaintext")
    coded = encode_batch(np.frombuffer(data, np.uint8)[None, :], cfg)[0]
    return EncodedBlock(coded.tobytes(), len(data))


def decode_batch(coded: np.ndarray, plaintext_len: int,
                 cfg: CodecConfig = DEFAULT_CONFIG) -> list[DecodeResult | None]:
    """Decode (B, C) coded rows; None entries mark integrity failures."""
    coded = np.atleast_2d(np.asarray(coded, dtype=np.uint8))
    nrows = coded.shape[0]
    if coded.shape[1] != coded_len(plaintext_len, cfg):
        raise ValueError("coded length inconsistent with config")
    msg_len = plaintext_len + CRC_LEN
    sizes = _rs_block_sizes(msg_len, cfg)
    rs_bytes = msg_len + cfg.rs_parity * len(sizes)

    coded_bits = np.unpackbits(coded, axis=1)
    bits = convcode.viterbi_decode_batch(coded_bits, 8 * rs_bytes)
    rs_stream = np.packbits(bits, axis=1)

    # corrections applied by the inner decoder = distance to re-encoded stream
    reenc = np.packbits(convcode.encode_batch(bits), axis=1)
    conv_fixed = np.unpackbits(reenc ^ coded, axis=1).sum(axis=1)

    msg = np.empty((nrows, msg_len), dtype=np.uint8)
    rs_ok = np.ones(nrows, dtype=bool)
    rs_fixed = np.zeros(nrows, dtype=np.int64)
    off_in = off_out = 0
    for size in sizes:
        block = rs_stream[:, off_in:off_in + size + cfg.rs_parity]
        synd = rs.syndromes_batch(block)
        dirty = np.flatnonzero(synd.any(axis=1))
        msg[:, off_out:off_out + size] = block[:, :size]
        for i in dirty:
            try:
                fixed, nerr = rs.decode_block(block[i], synd[i])
            except rs.RSDecodeError:
                rs_ok[i] = False
                continue
            msg[i, off_out:off_out + size] = fixed[:size]
            rs_fixed[i] += nerr
        off_in += size + cfg.rs_parity
        off_out += size

    results: list[DecodeResult | None] = []
    for i in range(nrows):
        if not rs_ok[i]:
            results.append(None)
            continue
        data = msg[i, :plaintext_len].tobytes()
        want = int.from_bytes(msg[i, plaintext_len:].tobytes(), "big")
        if crc32(data) != want:
            results.append(None)
        else:
            results.append(DecodeResult(data, int(conv_fixed[i]), int(rs_fixed[i])))
    return results


def decode(block: EncodedBlock, cfg: CodecConfig = DEFAULT_CONFIG) -> DecodeResult | None:
    arr = np.frombuffer(block.data, np.uint8)[None, :]
    return decode_batch(arr, block.plaintext_len, cfg)[0]
